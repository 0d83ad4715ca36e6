#include "trackgp/cli/commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "trackgp/asymptotic.hpp"
#include "trackgp/cli/io.hpp"
#include "trackgp/errors.hpp"
#include "trackgp/hyperopt.hpp"
#include "trackgp/mpc.hpp"
#include "trackgp/periodic.hpp"

namespace trackgp::cli {

namespace {

using Json = nlohmann::ordered_json;

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) { std::filesystem::create_directories(dir); }

std::string csv_row(std::initializer_list<double> xs) {
  std::string line;
  bool first = true;
  for (double x : xs) {
    if (!first) line += ',';
    line += format_number(x);
    first = false;
  }
  return line + '\n';
}

Json theta_json(const Hyperparameters& theta) {
  Json values = Json::array();
  for (Eigen::Index i = 0; i < theta.values.size(); ++i) values.push_back(theta.values(i));
  return values;
}

Json outcome_header(const ExperimentConfig& config, const TrainOutcome& outcome) {
  Json j;
  j["mode"] = std::string(to_string(config.mode));
  j["kernel"] = std::string(to_string(config.family));
  j["theta"] = theta_json(outcome.theta);
  j["noise_variance"] = outcome.theta.noise_variance;
  j["mean_constant"] = config.mean_constant;
  j["nlml"] = outcome.nlml_value;
  j["feasible"] = outcome.feasible;
  j["max_violation"] = outcome.max_violation;
  j["start_index"] = outcome.start_index;
  j["evaluations"] = outcome.evaluations;
  j["seed"] = config.seed;
  return j;
}

struct StoredOutcome {
  TrainMode mode = TrainMode::Unconstrained;
  KernelFamily family = KernelFamily::SquaredExponential;
  Hyperparameters theta;
  bool certified = false;
  int k_final = 0;
};

StoredOutcome load_outcome(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    throw ParseError("outcome file " + path + ": " + e.what());
  }
  StoredOutcome s;
  try {
    const std::string mode = j.at("mode").get<std::string>();
    s.mode = mode == "asymptotic" ? TrainMode::Asymptotic
             : mode == "periodic" ? TrainMode::Periodic
                                  : TrainMode::Unconstrained;
    s.family = parse_kernel_family(j.at("kernel").get<std::string>());
    const auto values = j.at("theta").get<std::vector<double>>();
    s.theta.values = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    s.theta.noise_variance = j.at("noise_variance").get<double>();
    s.certified = j.at("certified").get<bool>();
    if (j.contains("k_final")) s.k_final = j.at("k_final").get<int>();
  } catch (const Json::exception& e) {
    throw ParseError("outcome file " + path + ": " + e.what());
  }
  validate(KernelSpec{s.family}, s.theta);
  return s;
}

int default_horizon(const ExperimentConfig& config, const StoredOutcome& s) {
  if (config.horizon_steps) return *config.horizon_steps;
  if (s.mode == TrainMode::Asymptotic && s.k_final > 0) return 10 * s.k_final;
  if (s.family == KernelFamily::Periodic) {
    return static_cast<int>(std::ceil(5.0 * s.theta.period() / config.system.sampling_time));
  }
  return 500;
}

// Samples t = T_s k; the tube columns give the one-step reachable set from the
// previous sample (X itself at k = 0).
void write_prediction(const LinearSystem1D& sys, const GPPosterior& posterior, int horizon,
                      const std::string& path) {
  std::string out = "t,mean,variance,mean_bound,deriv_bound,tube_lower,tube_upper\n";
  double previous = 0.0;
  for (int k = 0; k <= horizon; ++k) {
    const PredictionRecord r = posterior.predict(sys.sampling_time * k);
    const Interval tube = k == 0 ? sys.state_box : one_step_reachable(sys, previous);
    out += csv_row({r.t, r.mean, r.variance, r.mean_bound, r.derivative_bound, tube.lo, tube.hi});
    previous = r.mean;
  }
  write_file(path, out);
}

std::string trace_csv(const std::vector<AsymptoticIteration>& trace) {
  std::string out =
      "k_bar,theta1,theta2,nlml,mean,mean_bound,derivative,derivative_bound,tau_lower,tau_upper,"
      "lag_check,state_check,tube_nonempty,derivative_check\n";
  for (const auto& it : trace) {
    std::string row = std::to_string(it.k_bar);
    for (double x : {it.theta.values(0), it.theta.values(1), it.nlml, it.mean, it.mean_bound,
                     it.derivative, it.derivative_bound}) {
      row += ',' + format_number(x);
    }
    if (it.tube) {
      row += ',' + format_number(it.tube->lower_rate) + ',' + format_number(it.tube->upper_rate);
    } else {
      row += ",,";
    }
    for (bool b : {it.lag_check, it.state_check, it.tube_nonempty, it.derivative_check}) {
      row += b ? ",1" : ",0";
    }
    out += row + '\n';
  }
  return out;
}

std::string intervals_csv(const IntervalBounds& bounds) {
  std::string out = "i,t_start,t_end,mean_min,mean_max,deriv_min,deriv_max,tau_lower,tau_upper,violation\n";
  for (const auto& r : bounds.intervals) {
    std::string row = std::to_string(r.index) + ',' +
                      csv_row({r.t_start, r.t_end, r.mean.lower, r.mean.upper, r.derivative.lower,
                               r.derivative.upper});
    row.pop_back();
    // An empty tube column means the interval's mean range misses X entirely.
    row += r.has_tube ? ',' + format_number(r.tube.lower_rate) + ',' + format_number(r.tube.upper_rate)
                      : std::string(",,");
    out += row + ',' + format_number(r.violation) + '\n';
  }
  return out;
}

Json iteration_json(const AsymptoticIteration& it) {
  Json j;
  j["k_bar"] = it.k_bar;
  j["mean"] = it.mean;
  j["mean_bound"] = it.mean_bound;
  j["derivative_bound"] = it.derivative_bound;
  j["lag_check"] = it.lag_check;
  j["state_check"] = it.state_check;
  j["tube_nonempty"] = it.tube_nonempty;
  j["derivative_check"] = it.derivative_check;
  return j;
}

int train_asymptotic_mode(const ExperimentConfig& config, const Dataset& data,
                          const std::string& out_dir, Json& j, StoredOutcome& stored) {
  try {
    const AsymptoticCertificate cert = train_asymptotic(config.system, data, config.asymptotic_config());
    j = outcome_header(config, cert.outcome);
    j["certified"] = true;
    j["status"] = "certified";
    j["k_final"] = cert.k_final;
    j["certificate"] = {{"mean_at_k", cert.mean_at_k},
                        {"mean_bound_at_k", cert.mean_bound_at_k},
                        {"derivative_bound_at_k", cert.derivative_bound_at_k},
                        {"tau_lower", cert.tube.lower_rate},
                        {"tau_upper", cert.tube.upper_rate}};
    write_file(join_path(out_dir, "trace.csv"), trace_csv(cert.trace));
    stored.theta = cert.theta;
    stored.certified = true;
    stored.k_final = cert.k_final;
    return kExitOk;
  } catch (const InfeasibleError& e) {
    j = outcome_header(config, e.outcome());
    j["certified"] = false;
    j["status"] = "infeasible";
    j["k_bar"] = e.k_bar();
    j["message"] = e.what();
    write_file(join_path(out_dir, "trace.csv"), trace_csv(e.trace()));
    stored.theta = e.outcome().theta;
  } catch (const NonTerminationError& e) {
    TrainOutcome shown;
    if (!e.trace().empty()) {
      shown.theta = e.trace().back().theta;
      shown.nlml_value = e.trace().back().nlml;
      shown.feasible = true;
    }
    j = outcome_header(config, shown);
    j["certified"] = false;
    j["status"] = "non_termination";
    j["message"] = e.what();
    if (!e.trace().empty()) j["last_iteration"] = iteration_json(e.trace().back());
    write_file(join_path(out_dir, "trace.csv"), trace_csv(e.trace()));
    if (e.trace().empty()) return kExitInfeasible;
    stored.theta = shown.theta;
  }
  return kExitInfeasible;
}

}  // namespace

int cmd_generate(const ExperimentConfig& config, const std::string& out_dir) {
  ensure_dir(out_dir);
  std::string out = "t,y\n";
  for (const auto& p : generate_data(config.generate, config.seed)) out += csv_row({p.t, p.y});
  write_file(join_path(out_dir, "data.csv"), out);
  return kExitOk;
}

int cmd_train(const ExperimentConfig& config, const Dataset& data, const std::string& out_dir) {
  ensure_dir(out_dir);
  const KernelSpec spec{config.family};
  const MeanSpec mean{config.mean_constant};
  Json j;
  StoredOutcome stored;
  stored.mode = config.mode;
  stored.family = config.family;
  int code = kExitOk;

  switch (config.mode) {
    case TrainMode::Asymptotic:
      code = train_asymptotic_mode(config, data, out_dir, j, stored);
      break;
    case TrainMode::Periodic: {
      const PeriodicOutcome result = train_periodic(config.system, data, config.periodic_config());
      const bool certified = result.outcome.feasible && result.bounds.certified;
      j = outcome_header(config, result.outcome);
      j["certified"] = certified;
      j["status"] = certified ? "certified" : "infeasible";
      j["k_bar"] = config.k_bar;
      j["eta"] = config.eta;
      j["delta"] = config.periodic_config().grid_spacing(config.system);
      j["bounds"] = {{"mean_lower", result.bounds.mean.lower},
                     {"mean_upper", result.bounds.mean.upper},
                     {"certification_slack", result.bounds.certification_slack},
                     {"violation", result.bounds.violation}};
      write_file(join_path(out_dir, "intervals.csv"), intervals_csv(result.bounds));
      stored.theta = result.outcome.theta;
      stored.certified = certified;
      code = certified ? kExitOk : kExitInfeasible;
      break;
    }
    case TrainMode::Unconstrained: {
      OptimizerConfig opt = config.optimizer;
      opt.rng_seed = config.seed;
      const TrainOutcome outcome = minimize_nlml(spec, mean, data, opt);
      j = outcome_header(config, outcome);
      j["certified"] = false;
      j["status"] = "unconstrained";
      stored.theta = outcome.theta;
      break;
    }
  }
  write_file(join_path(out_dir, "outcome.json"), j.dump(2) + '\n');
  if (stored.theta.values.size() == parameter_count(config.family)) {
    const GPPosterior posterior(spec, mean, stored.theta, data);
    write_prediction(config.system, posterior, default_horizon(config, stored),
                     join_path(out_dir, "prediction.csv"));
  }
  return code;
}

int cmd_predict(const ExperimentConfig& config, const Dataset& data,
                const std::string& outcome_path, const std::string& out_dir) {
  ensure_dir(out_dir);
  const StoredOutcome stored = load_outcome(outcome_path);
  const GPPosterior posterior(KernelSpec{stored.family}, MeanSpec{config.mean_constant}, stored.theta, data);
  write_prediction(config.system, posterior, default_horizon(config, stored),
                   join_path(out_dir, "prediction.csv"));
  return kExitOk;
}

int cmd_check(const ExperimentConfig& config, const std::vector<double>& reference,
              const std::string& out_dir) {
  ensure_dir(out_dir);
  const TrackabilityReport report = check_trackable(config.system, reference);
  Json j;
  j["trackable"] = report.trackable;
  j["samples"] = reference.size();
  j["first_violation_index"] =
      report.first_violation_index ? Json(*report.first_violation_index) : Json(nullptr);
  j["violation_kind"] = report.violation_kind
                            ? Json(std::string(to_string(*report.violation_kind)))
                            : Json(nullptr);
  j["max_violation"] = reference_violation(config.system, reference);
  write_file(join_path(out_dir, "check.json"), j.dump(2) + '\n');
  return report.trackable ? kExitOk : kExitUntrackable;
}

int cmd_simulate(const ExperimentConfig& config, const Dataset& data,
                 const std::string& outcome_path, const std::string& out_dir) {
  ensure_dir(out_dir);
  const StoredOutcome stored = load_outcome(outcome_path);
  if (!stored.certified) {
    throw PreconditionViolation("simulation needs a certified outcome (" + outcome_path + ")");
  }
  const GPPosterior posterior(KernelSpec{stored.family}, MeanSpec{config.mean_constant}, stored.theta, data);
  const double x0 = config.simulate_x0.value_or(posterior.mean(0.0));
  const ClosedLoopTrace trace =
      simulate_closed_loop(config.system, posterior, x0, config.simulate_steps, config.mpc);
  std::string out = "k,t,x,u,x_ref,u_ref,error,feasible\n";
  for (const auto& s : trace.steps) {
    std::string row = csv_row({s.t, s.x, s.u, s.x_ref, s.u_ref, s.error});
    row.back() = ',';
    out += std::to_string(s.k) + ',' + row + (s.feasible ? "1\n" : "0\n");
  }
  write_file(join_path(out_dir, "simulation.csv"), out);
  return trace.completed ? kExitOk : kExitInfeasible;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"GP reference generation with trackability guarantees"};
  app.require_subcommand(1);
  std::string config_path;
  std::string data_path;
  std::string out_dir;
  std::string outcome_path;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* cmd, bool needs_data) {
    cmd->add_option("--config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
    auto* d = cmd->add_option("--data", data_path, "data or reference CSV");
    if (needs_data) d->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out_dir, "output directory (overrides output.dir)");
    cmd->add_option("--seed", seed, "overrides the config seed");
  };
  auto* generate = app.add_subcommand("generate", "write synthetic data.csv");
  add_common(generate, false);
  auto* train = app.add_subcommand("train", "fit hyperparameters");
  add_common(train, true);
  auto* predict = app.add_subcommand("predict", "posterior prediction from an outcome");
  add_common(predict, true);
  predict->add_option("--outcome", outcome_path, "outcome.json from train")->required()->check(CLI::ExistingFile);
  auto* check = app.add_subcommand("check", "replay a reference against the system");
  add_common(check, true);
  auto* simulate = app.add_subcommand("simulate", "closed-loop MPC on a certified reference");
  add_common(simulate, true);
  simulate->add_option("--outcome", outcome_path, "outcome.json from train")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    ExperimentConfig config = load_config(config_path);
    if (app.get_subcommands().front()->count("--seed") > 0) config.seed = seed;
    const std::string dir = out_dir.empty() ? config.output_dir : out_dir;
    int code = kExitOk;
    if (generate->parsed()) {
      code = cmd_generate(config, dir);
    } else if (train->parsed()) {
      code = cmd_train(config, ingest_csv(data_path), dir);
    } else if (predict->parsed()) {
      code = cmd_predict(config, ingest_csv(data_path), outcome_path, dir);
    } else if (check->parsed()) {
      code = cmd_check(config, read_reference_csv(data_path), dir);
    } else {
      code = cmd_simulate(config, ingest_csv(data_path), outcome_path, dir);
    }
    out << app.get_subcommands().front()->get_name() << ": exit " << code << " (" << dir << ")\n";
    return code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace trackgp::cli
