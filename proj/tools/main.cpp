#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "rankverify/dataset.hpp"
#include "rankverify/report.hpp"

namespace rv = rankverify;

namespace {

struct UsageError {
  std::string message;
};

struct CommonArgs {
  std::string family = "multinomial";
  std::string data;
  double alpha = 0.05;
  bool adjusted = false;
  bool randomized = false;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string tie_mode = "lowest-index";
  long trials_per_arm = 0;
  long obs_per_group = 0;
  std::string method;
  std::string out;
};

void add_common_options(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--family", a.family, "data model")
      ->check(CLI::IsMember(
          {"multinomial", "independent_binomial", "normal_variance", "bradley_terry"}))
      ->capture_default_str();
  cmd->add_option("--data", a.data, "dataset file (.csv or .json)")->required();
  cmd->add_option("--alpha", a.alpha, "error budget")->capture_default_str();
  cmd->add_flag("--randomized", a.randomized, "atom-splitting randomized p-values");
  cmd->add_option("--seed", a.seed, "seed for any randomness");
  cmd->add_option("--tie-mode", a.tie_mode, "how observed ties become a recorded order")
      ->check(CLI::IsMember({"lowest-index", "random"}))
      ->capture_default_str();
  cmd->add_option("--trials-per-arm", a.trials_per_arm,
                  "trials per arm (independent_binomial only)");
  cmd->add_option("--obs-per-group", a.obs_per_group,
                  "observations per group (normal_variance only)");
  cmd->add_option("--out", a.out, "write the JSON report here instead of stdout");
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw UsageError{"--alpha must lie strictly between 0 and 1"};
}

rv::TestOptions options_for(const CommonArgs& a) {
  check_alpha(a.alpha);
  bool needs_seed = a.randomized || a.tie_mode == "random";
  if (needs_seed && !a.seed_given)
    throw UsageError{"--seed is required when randomness is requested "
                     "(--randomized or --tie-mode random)"};
  rv::TestOptions opts;
  opts.alpha = a.alpha;
  opts.adjusted = a.adjusted;
  opts.randomized = a.randomized;
  if (a.seed_given) opts.seed = a.seed;
  return opts;
}

rv::TieMode tie_mode_of(const CommonArgs& a) {
  return a.tie_mode == "random" ? rv::TieMode::random : rv::TieMode::lowest_index;
}

rv::FamilySpec spec_for(const CommonArgs& a, const rv::Observation& obs) {
  int n = static_cast<int>(obs.values.size());
  if (a.family == "multinomial") {
    double total = std::accumulate(obs.values.begin(), obs.values.end(), 0.0);
    return rv::multinomial_spec(n, std::lround(total));
  }
  if (a.family == "independent_binomial") {
    if (a.trials_per_arm < 1)
      throw UsageError{"--trials-per-arm is required for independent_binomial data"};
    return rv::independent_binomial_spec(n, a.trials_per_arm);
  }
  if (a.family == "normal_variance") {
    if (a.obs_per_group < 1)
      throw UsageError{"--obs-per-group is required for normal_variance data"};
    return rv::normal_variance_spec(n, a.obs_per_group);
  }
  return rv::bradley_terry_spec(n);
}

void tie_warnings(const rv::OrderedView& ordered, const CommonArgs& a,
                  std::vector<std::string>& warnings) {
  if (!ordered.tie_groups.empty() && a.tie_mode == "lowest-index")
    warnings.push_back("observed ties were broken by lowest index; "
                       "use --tie-mode random with --seed for an exchangeable order");
}

void emit_report(const nlohmann::json& doc, const std::string& out) {
  std::string text = rv::render_report(doc);
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw rv::dataset_error("cannot write " + out);
  f << text;
}

std::vector<double> parse_theta(const std::string& text) {
  std::vector<double> theta;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    std::string token = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    const char* begin = token.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (token.empty() || end != begin + token.size())
      throw UsageError{"--theta expects a comma-separated list of numbers"};
    theta.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return theta;
}

int run_verify(const CommonArgs& a) {
  rv::TestOptions opts = options_for(a);
  rv::Observation obs = rv::to_observation(rv::load_dataset(a.data));
  rv::FamilySpec spec = spec_for(a, obs);
  rv::TestOutcome outcome = rv::verify_winner(spec, obs, tie_mode_of(a), opts);
  std::vector<std::string> warnings;
  tie_warnings(outcome.ordered, a, warnings);
  emit_report(rv::report_document("verify", spec, a.alpha, opts.seed, rv::to_json(outcome),
                                  warnings),
              a.out);
  return 0;
}

int run_bound(const CommonArgs& a) {
  rv::TestOptions opts = options_for(a);
  rv::BoundMethod method =
      a.method == "2" ? rv::BoundMethod::unadjusted : rv::BoundMethod::selective;
  rv::Observation obs = rv::to_observation(rv::load_dataset(a.data));
  rv::FamilySpec spec = spec_for(a, obs);
  rv::BoundOutcome outcome = rv::winner_gap_bound(spec, obs, tie_mode_of(a), method, opts);
  std::vector<std::string> warnings;
  tie_warnings(outcome.ordered, a, warnings);
  emit_report(rv::report_document("bound", spec, a.alpha, opts.seed, rv::to_json(outcome),
                                  warnings),
              a.out);
  return 0;
}

int run_ranks(const CommonArgs& a) {
  rv::TestOptions opts = options_for(a);
  rv::RankMethod method =
      a.method == "3prime" ? rv::RankMethod::stepwise_windowed : rv::RankMethod::stepwise;
  rv::Observation obs = rv::to_observation(rv::load_dataset(a.data));
  rv::FamilySpec spec = spec_for(a, obs);
  rv::RankReport report = rv::verify_ranks(spec, obs, tie_mode_of(a), method, opts);
  std::vector<std::string> warnings;
  tie_warnings(report.ordered, a, warnings);
  emit_report(rv::report_document("ranks", spec, a.alpha, opts.seed, rv::to_json(report),
                                  warnings),
              a.out);
  return 0;
}

struct CurveArgs {
  long m = 0;
  int n = 0;
  double alpha = 0.05;
  long trials = 10000;
  std::uint64_t seed = 0;
  double delta_min = 0.0, delta_max = 3.0;
  int delta_steps = 13;
  int jobs = 1;
  std::string out;
};

std::vector<double> grid_of(const CurveArgs& c) {
  if (c.delta_steps < 1) throw UsageError{"--delta-steps must be at least 1"};
  if (c.delta_max < c.delta_min) throw UsageError{"--delta-max must not be below --delta-min"};
  std::vector<double> grid;
  for (int i = 0; i < c.delta_steps; ++i)
    grid.push_back(c.delta_steps == 1 ? c.delta_min
                                      : c.delta_min + (c.delta_max - c.delta_min) * i /
                                                          (c.delta_steps - 1));
  return grid;
}

int run_power(const CurveArgs& c) {
  check_alpha(c.alpha);
  std::vector<rv::PowerPoint> rows =
      rv::power_curve(c.m, c.n, grid_of(c), c.alpha, c.trials, c.seed, c.jobs);
  if (!c.out.empty()) {
    std::ofstream f(c.out, std::ios::binary);
    if (!f) throw rv::dataset_error("cannot write " + c.out);
    rv::write_power_csv(f, rows);
  }
  nlohmann::json payload;
  payload["experiment"] = "power";
  payload["points"] = rv::to_json(rows);
  emit_report(rv::report_document("power", rv::multinomial_spec(c.n, c.m), c.alpha, c.seed,
                                  std::move(payload), {}),
              "");
  return 0;
}

struct SimArgs {
  std::string experiment;
  std::string family = "multinomial";
  std::string theta;
  long m = 0;
  int n = 0;
  double alpha = 0.05;
  long trials = 10000;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool marginal = false;
  bool adjusted = false;
  bool randomized = true;
  std::string method;
  std::string out;
  CurveArgs curve;
};

rv::FamilySpec sim_spec(const SimArgs& s, int n) {
  if (s.family == "bradley_terry") return rv::bradley_terry_spec(n);
  if (s.m < 1) throw UsageError{"--m is required for this family"};
  if (s.family == "multinomial") return rv::multinomial_spec(n, s.m);
  if (s.family == "independent_binomial") return rv::independent_binomial_spec(n, s.m);
  return rv::normal_variance_spec(n, s.m);
}

int run_sim(const SimArgs& s) {
  check_alpha(s.alpha);
  if (s.experiment == "power") {
    CurveArgs c = s.curve;
    c.m = s.m;
    c.n = s.n;
    c.alpha = s.alpha;
    c.trials = s.trials;
    c.seed = s.seed;
    c.jobs = s.jobs;
    c.out = s.out;
    if (c.n < 2) throw UsageError{"--n is required for the power experiment"};
    return run_power(c);
  }

  if (s.theta.empty()) throw UsageError{"--theta is required for this experiment"};
  rv::SimConfig config;
  config.theta = parse_theta(s.theta);
  config.spec = sim_spec(s, static_cast<int>(config.theta.size()));
  config.alpha = s.alpha;
  config.trials = s.trials;
  config.master_seed = s.seed;
  config.jobs = s.jobs;
  config.randomized = s.randomized;
  config.adjusted = s.adjusted;

  if (s.experiment == "error-rate") {
    config.experiment =
        s.marginal ? rv::Experiment::marginal_error : rv::Experiment::conditional_error;
    if (!s.method.empty()) throw UsageError{"--method does not apply to error-rate"};
  } else if (s.experiment == "fwer") {
    config.experiment = rv::Experiment::fwer;
    if (!s.method.empty() && s.method != "3" && s.method != "3prime")
      throw UsageError{"--method for fwer must be 3 or 3prime"};
    config.rank_method =
        s.method == "3prime" ? rv::RankMethod::stepwise_windowed : rv::RankMethod::stepwise;
  } else {
    config.experiment = rv::Experiment::coverage;
    if (!s.method.empty() && s.method != "2" && s.method != "2prime")
      throw UsageError{"--method for coverage must be 2 or 2prime"};
    config.bound_method =
        s.method == "2" ? rv::BoundMethod::unadjusted : rv::BoundMethod::selective;
  }

  rv::SimResult result = s.experiment == "coverage" ? rv::coverage_sim(config)
                                                    : rv::error_rate_sim(config);
  if (!s.out.empty()) {
    std::ofstream f(s.out, std::ios::binary);
    if (!f) throw rv::dataset_error("cannot write " + s.out);
    rv::write_sim_csv(f, s.experiment, result);
  }
  std::vector<std::string> warnings;
  if (result.low_precision)
    warnings.push_back("fewer than 100 contributing events; estimate is low-precision");
  nlohmann::json payload = rv::to_json(result);
  payload["experiment"] = s.experiment;
  emit_report(rv::report_document("sim", config.spec, s.alpha, s.seed, std::move(payload),
                                  warnings),
              "");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rank verification for exponential-family data"};
  app.require_subcommand(1);

  CommonArgs verify_args, bound_args, ranks_args;
  CLI::App* verify_cmd = app.add_subcommand("verify", "test whether the observed winner is best");
  add_common_options(verify_cmd, verify_args);
  verify_cmd->add_flag("--adjusted", verify_args.adjusted,
                       "run at level n/(n-1) alpha for a sharper marginal guarantee");

  CLI::App* bound_cmd =
      app.add_subcommand("bound", "lower confidence bound on the winner's parameter gap");
  add_common_options(bound_cmd, bound_args);
  bound_args.method = "2prime";
  bound_cmd->add_option("--method", bound_args.method, "2 = plain pair bound, 2prime = selective")
      ->check(CLI::IsMember({"2", "2prime"}))
      ->capture_default_str();

  CLI::App* ranks_cmd = app.add_subcommand("ranks", "verify leading ranks step by step");
  add_common_options(ranks_cmd, ranks_args);
  ranks_args.method = "3";
  ranks_cmd->add_option("--method", ranks_args.method,
                        "3 = stepwise, 3prime = stepwise with the extra upper window")
      ->check(CLI::IsMember({"3", "3prime"}))
      ->capture_default_str();

  CurveArgs power_args;
  CLI::App* power_cmd = app.add_subcommand("power", "power curve against the subset baseline");
  power_cmd->add_option("--m", power_args.m, "total count per trial")->required();
  power_cmd->add_option("--n", power_args.n, "number of populations")->required();
  power_cmd->add_option("--alpha", power_args.alpha)->capture_default_str();
  power_cmd->add_option("--trials", power_args.trials)->check(CLI::PositiveNumber)
      ->capture_default_str();
  power_cmd->add_option("--seed", power_args.seed, "master seed")->required();
  power_cmd->add_option("--delta-min", power_args.delta_min)->capture_default_str();
  power_cmd->add_option("--delta-max", power_args.delta_max)->capture_default_str();
  power_cmd->add_option("--delta-steps", power_args.delta_steps)->capture_default_str();
  power_cmd->add_option("--jobs", power_args.jobs, "worker threads")->capture_default_str();
  power_cmd->add_option("--out", power_args.out, "write the curve CSV here");

  SimArgs sim_args;
  CLI::App* sim_cmd = app.add_subcommand("sim", "error-rate, coverage, and FWER experiments");
  sim_cmd->add_option("--experiment", sim_args.experiment)
      ->check(CLI::IsMember({"power", "error-rate", "coverage", "fwer"}))
      ->required();
  sim_cmd->add_option("--family", sim_args.family)
      ->check(CLI::IsMember(
          {"multinomial", "independent_binomial", "normal_variance", "bradley_terry"}))
      ->capture_default_str();
  sim_cmd->add_option("--theta", sim_args.theta, "comma-separated natural parameters");
  sim_cmd->add_option("--m", sim_args.m, "family size parameter");
  sim_cmd->add_option("--n", sim_args.n, "populations (power experiment)");
  sim_cmd->add_option("--alpha", sim_args.alpha)->capture_default_str();
  sim_cmd->add_option("--trials", sim_args.trials)->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim_cmd->add_option("--seed", sim_args.seed, "master seed")->required();
  sim_cmd->add_option("--jobs", sim_args.jobs, "worker threads")->capture_default_str();
  sim_cmd->add_flag("--marginal", sim_args.marginal,
                    "error-rate: marginal false declarations instead of conditional");
  sim_cmd->add_flag("--adjusted", sim_args.adjusted, "run the winner test at n/(n-1) alpha");
  sim_cmd->add_flag("--randomized,!--no-randomized", sim_args.randomized,
                    "randomized p-values inside the simulated procedures");
  sim_cmd->add_option("--method", sim_args.method, "2 | 2prime (coverage), 3 | 3prime (fwer)");
  sim_cmd->add_option("--out", sim_args.out, "write the result CSV here");
  sim_cmd->add_option("--delta-min", sim_args.curve.delta_min)->capture_default_str();
  sim_cmd->add_option("--delta-max", sim_args.curve.delta_max)->capture_default_str();
  sim_cmd->add_option("--delta-steps", sim_args.curve.delta_steps)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  verify_args.seed_given = verify_cmd->count("--seed") > 0;
  bound_args.seed_given = bound_cmd->count("--seed") > 0;
  ranks_args.seed_given = ranks_cmd->count("--seed") > 0;

  try {
    if (*verify_cmd) return run_verify(verify_args);
    if (*bound_cmd) return run_bound(bound_args);
    if (*ranks_cmd) return run_ranks(ranks_args);
    if (*power_cmd) return run_power(power_args);
    return run_sim(sim_args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.message << "\n";
    return 1;
  } catch (const rv::dataset_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
