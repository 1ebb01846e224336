// Command-line front end: simulate, sweep, verify, fit-constants.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "lowdose/config.hpp"
#include "lowdose/harness.hpp"
#include "lowdose/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitOracle = 2;

constexpr std::uint64_t kDefaultVerifySeed = 20240229;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "YAML experiment config");
  if (config_required) opt->required();
  cmd->add_option("--seed", c.seed, "master seed (overrides the config file)");
  cmd->add_option("--out", c.out, "output path");
  cmd->add_option("--threads", c.threads, "worker threads, 0 = all cores (fallback: LOWDOSE_THREADS)")
      ->check(CLI::NonNegativeNumber);
}

lowdose::ExperimentConfig load(const Common& c) {
  auto cfg = lowdose::load_config(c.config);
  if (c.seed) cfg.master_seed = *c.seed;
  if (!c.out.empty()) cfg.output_path = c.out;
  return cfg;
}

std::string opt_str(const std::optional<double>& v) { return v ? fmt::format("{:.6g}", *v) : "-"; }

void print_record(const lowdose::ExperimentRecord& r) {
  fmt::print("trial {:>4}  rel_error {:<12.6g} lambda0 {:<12.6g} x'Yx/a {:<12} deviation {:<12} bound {:<12} iters {:>5}",
             r.trial, r.rel_error.value_or(0.0), r.lambda0.value_or(0.0), opt_str(r.signal_rayleigh),
             opt_str(r.deviation_norm), opt_str(r.theorem1_predicted), r.iterations);
  if (r.flags) fmt::print("  [{}]", lowdose::format_flags(r.flags));
  if (!r.reject_reason.empty()) fmt::print("  {}", r.reject_reason);
  fmt::print("\n");
}

int cmd_simulate(const Common& c, std::optional<std::string> model, std::optional<std::int64_t> n,
                 std::optional<std::int64_t> m, std::optional<double> alpha, std::optional<int> trials) {
  lowdose::ExperimentConfig cfg;
  if (!c.config.empty()) {
    cfg = load(c);
  } else {
    if (!model || !n || !m || !alpha) {
      throw lowdose::ConfigError("simulate: give --config or all of --model, --n, --m, --alpha");
    }
    cfg.models = {lowdose::parse_model(*model)};
    cfg.n_grid = {*n};
    cfg.m_grid = {*m};
    cfg.alpha_grid = {*alpha};
    if (c.seed) cfg.master_seed = *c.seed;
    cfg.output_path = c.out;
  }
  if (model) cfg.models = {lowdose::parse_model(*model)};
  if (n) cfg.n_grid = {*n};
  if (m) cfg.m_grid = {*m};
  if (alpha) cfg.alpha_grid = {*alpha};
  if (trials) cfg.trials = *trials;
  cfg.models.resize(1);
  cfg.n_grid.resize(1);
  cfg.m_grid.resize(1);
  cfg.alpha_grid.resize(1);
  cfg.measure_deviation = true;

  const auto result = lowdose::run_sweep(cfg, lowdose::resolve_threads(c.threads));
  const auto& cell = result.records.front().cell;
  fmt::print("{} n={} m={} alpha={} seed={}\n", lowdose::to_string(cell.model), cell.n, cell.m, cell.alpha,
             cfg.master_seed);
  for (const auto& r : result.records) print_record(r);
  lowdose::write_summary(std::cout, result.summary);
  return kExitOk;
}

int cmd_sweep(const Common& c) {
  const auto cfg = load(c);
  const auto result = lowdose::run_sweep(cfg, lowdose::resolve_threads(c.threads));
  if (cfg.output_path.empty()) {
    std::cout << lowdose::csv_header() << '\n';
    for (const auto& r : result.records) std::cout << lowdose::to_csv_row(r) << '\n';
  } else {
    fmt::print(stderr, "wrote {} records to {}\n", result.records.size(), cfg.output_path);
  }
  return kExitOk;
}

int cmd_verify(const Common& c) {
  std::uint64_t seed = kDefaultVerifySeed;
  if (!c.config.empty()) seed = load(c).master_seed;
  if (c.seed) seed = *c.seed;
  const auto results = lowdose::run_oracle_suite(seed);
  lowdose::write_report(std::cout, results);
  if (!c.out.empty()) {
    std::ofstream f(c.out);
    if (!f) throw std::runtime_error("cannot open " + c.out);
    lowdose::write_report(f, results);
  }
  for (const auto& r : results)
    if (!r.pass) return kExitOracle;
  return kExitOk;
}

int cmd_fit(const Common& c, lowdose::FitSpec spec) {
  if (!c.config.empty()) {
    const auto cfg = load(c);
    spec.master_seed = cfg.master_seed;
    spec.eigensolver = cfg.eigensolver;
    spec.memory_cap_bytes = cfg.memory_cap_bytes;
    spec.beta = cfg.constants.beta;
  }
  if (c.seed) spec.master_seed = *c.seed;
  if (spec.n < 2 || spec.m < 1 || !(spec.alpha > 0.0) || spec.trials < 1 || !(spec.quantile > 0.0) ||
      spec.quantile > 1.0) {
    throw lowdose::ConfigError("fit-constants: need n >= 2, m >= 1, alpha > 0, trials >= 1, 0 < quantile <= 1");
  }

  const auto fit = lowdose::fit_constants(spec, lowdose::resolve_threads(c.threads));
  fmt::print(stderr, "bernoulli q{:g} deviation {:.6g}", spec.quantile, fit.bernoulli_quantile);
  if (fit.poisson_quantile) fmt::print(stderr, ", poisson {:.6g}", *fit.poisson_quantile);
  fmt::print(stderr, "\n");

  const std::string text = lowdose::format_constants(fit.constants);
  if (c.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(c.out);
    if (!f) throw std::runtime_error("cannot open " + c.out);
    f << text;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral phase retrieval from low-dose photon counts"};
  app.require_subcommand(1);

  Common sim_opts, sweep_opts, verify_opts, fit_opts;

  auto* sim = app.add_subcommand("simulate", "run one cell and print every trial");
  add_common(sim, sim_opts, false);
  std::optional<std::string> sim_model;
  std::optional<std::int64_t> sim_n, sim_m;
  std::optional<double> sim_alpha;
  std::optional<int> sim_trials;
  sim->add_option("--model", sim_model, "poisson, bernoulli, noiseless or truncated");
  sim->add_option("--n", sim_n, "signal length");
  sim->add_option("--m", sim_m, "number of measurements");
  sim->add_option("--alpha", sim_alpha, "dose");
  sim->add_option("--trials", sim_trials, "trials");

  auto* sweep = app.add_subcommand("sweep", "run the full grid and write CSV plus summary");
  add_common(sweep, sweep_opts, true);

  auto* verify = app.add_subcommand("verify", "run the closed-form oracle checks");
  add_common(verify, verify_opts, false);

  auto* fit = app.add_subcommand("fit-constants", "calibrate bound constants from measured deviations");
  add_common(fit, fit_opts, false);
  lowdose::FitSpec spec;
  fit->add_option("--n", spec.n, "reference n")->capture_default_str();
  fit->add_option("--m", spec.m, "reference m")->capture_default_str();
  fit->add_option("--alpha", spec.alpha, "reference dose")->capture_default_str();
  fit->add_option("--trials", spec.trials, "trials per model")->capture_default_str();
  fit->add_option("--quantile", spec.quantile, "deviation quantile to cover")->capture_default_str();
  bool bernoulli_only = false;
  fit->add_flag("--bernoulli-only", bernoulli_only, "skip the Poisson calibration of C_hat_beta");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*sim) return cmd_simulate(sim_opts, sim_model, sim_n, sim_m, sim_alpha, sim_trials);
    if (*sweep) return cmd_sweep(sweep_opts);
    if (*verify) return cmd_verify(verify_opts);
    if (*fit) {
      spec.fit_poisson = !bernoulli_only;
      return cmd_fit(fit_opts, spec);
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitConfig;
  }
  return kExitOk;
}
