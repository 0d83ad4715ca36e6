#pragma once

// Flat `section.key = value` experiment files. `#` starts a comment, blank
// lines are ignored, unknown or repeated keys are errors.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trackgp/asymptotic.hpp"
#include "trackgp/kernels.hpp"
#include "trackgp/mpc.hpp"
#include "trackgp/periodic.hpp"
#include "trackgp/reachability.hpp"

namespace trackgp::cli {

enum class TrainMode { Asymptotic, Periodic, Unconstrained };

std::string_view to_string(TrainMode mode);

enum class GeneratorKind { Transient, PeriodicExample };

struct GeneratorConfig {
  GeneratorKind kind = GeneratorKind::Transient;
  int n = 12;
  double t_start = 0.0;
  double t_end = 0.55;
  /// Include t_end itself in the sample times.
  bool endpoint = true;
  double noise_std = 0.0;
  // transient: y = -amplitude * exp(-t / decay) * cos(frequency * t)
  double amplitude = 1.0;
  double decay = 0.1;
  double frequency = 6.0;
};

struct ExperimentConfig {
  LinearSystem1D system;
  KernelFamily family = KernelFamily::SquaredExponential;
  double mean_constant = 0.0;
  TrainMode mode = TrainMode::Unconstrained;

  int k_init = 70;
  int k_max = 400;
  int k_stride = 1;
  int followup_multistart = -1;

  int k_bar = 0;
  int eta = 16;
  double delta = 0.0;

  OptimizerConfig optimizer;
  std::uint64_t seed = 1;
  std::string output_dir = "out";

  /// Prediction length in samples; unset picks a mode-dependent default.
  std::optional<int> horizon_steps;

  GeneratorConfig generate;

  int simulate_steps = 500;
  /// Initial plant state; unset starts on the reference.
  std::optional<double> simulate_x0;
  MPCConfig mpc;

  AsymptoticTrainConfig asymptotic_config() const;
  PeriodicTrainConfig periodic_config() const;
};

/// Throws ParseError (with line number) or ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace trackgp::cli
