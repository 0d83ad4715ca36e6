#pragma once

// Command implementations behind the `trackgp` executable. Each returns the
// process exit code; library errors propagate as exceptions and `run` maps
// them to kExitError.

#include <iosfwd>
#include <string>
#include <vector>

#include "trackgp/cli/config.hpp"
#include "trackgp/gp.hpp"

namespace trackgp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitUntrackable = 3;

/// data.csv
int cmd_generate(const ExperimentConfig& config, const std::string& out_dir);

/// outcome.json, prediction.csv, plus trace.csv (asymptotic) or
/// intervals.csv (periodic).
int cmd_train(const ExperimentConfig& config, const Dataset& data, const std::string& out_dir);

/// prediction.csv from a previously written outcome.json.
int cmd_predict(const ExperimentConfig& config, const Dataset& data,
                const std::string& outcome_path, const std::string& out_dir);

/// check.json; kExitUntrackable when the replay fails.
int cmd_check(const ExperimentConfig& config, const std::vector<double>& reference,
              const std::string& out_dir);

/// simulation.csv; the outcome must be certified.
int cmd_simulate(const ExperimentConfig& config, const Dataset& data,
                 const std::string& outcome_path, const std::string& out_dir);

int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace trackgp::cli
