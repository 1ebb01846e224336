#include "lowdose/harness.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

#include "lowdose/spectral.hpp"

namespace lowdose {

std::uint64_t cell_key(const CellSpec& cell) {
  return derive_stream_id({static_cast<std::uint64_t>(cell.model), static_cast<std::uint64_t>(cell.n),
                           static_cast<std::uint64_t>(cell.m), std::bit_cast<std::uint64_t>(cell.alpha)});
}

std::vector<CellSpec> expand_grid(const ExperimentConfig& cfg) {
  std::vector<CellSpec> cells;
  for (Model model : cfg.models)
    for (auto n : cfg.n_grid)
      for (auto m : cfg.m_grid)
        for (double alpha : cfg.alpha_grid) cells.push_back({model, n, m, alpha});
  return cells;
}

TrialSettings TrialSettings::from_config(const ExperimentConfig& cfg) {
  TrialSettings s;
  s.eigensolver = cfg.eigensolver;
  s.truncation_t = cfg.truncation_t;
  s.constants = cfg.constants;
  s.memory_cap_bytes = cfg.memory_cap_bytes;
  s.measure_deviation = cfg.measure_deviation;
  s.record_timing = cfg.record_timing;
  return s;
}

std::string format_flags(unsigned bits) {
  static constexpr std::pair<unsigned, const char*> kNames[] = {
      {flags::below_mnlogn, "below_mnlogn"},
      {flags::no_eigenpair, "no_eigenpair"},
      {flags::not_converged, "not_converged"},
      {flags::rejected_memory_cap, "rejected_memory_cap"},
  };
  std::string out;
  for (const auto& [bit, name] : kNames) {
    if (bits & bit) {
      if (!out.empty()) out += ';';
      out += name;
    }
  }
  return out;
}

namespace {

ObservationVector observe(const CellSpec& cell, const SignalVector& x, const SensingEnsemble& ens,
                          RngStream& rng, const TrialSettings& settings) {
  switch (cell.model) {
    case Model::noiseless: return noiseless_intensities(x, ens);
    case Model::poisson: return observe_poisson(x, ens, rng);
    case Model::bernoulli: return observe_bernoulli(x, ens, rng);
    case Model::truncated: {
      const double t = settings.truncation_t.value_or(default_truncation_threshold(cell.alpha, cell.m));
      return truncate(observe_poisson(x, ens, rng), t);
    }
  }
  throw std::logic_error("observe: unknown model");
}

Matrix<double> expected_Y(NoiseModel model, const SignalVector& x) {
  return model == NoiseModel::poisson ? expected_Y_poisson(x) : expected_Y_bernoulli(x);
}

}  // namespace

ExperimentRecord run_trial(const CellSpec& cell, std::int64_t trial_index, std::uint64_t master_seed,
                           const TrialSettings& settings) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentRecord r;
  r.cell = cell;
  r.trial = trial_index;
  r.seed = master_seed;

  const std::uint64_t key = cell_key(cell);
  const auto trial = static_cast<std::uint64_t>(trial_index);
  auto stream = [&](Purpose p) { return RngStream(master_seed, derive_stream_id(key, trial, p)); };

  if (cell.n >= 2 && static_cast<double>(cell.m) < cell.n * std::log(static_cast<double>(cell.n))) {
    r.flags |= flags::below_mnlogn;
  }

  try {
    RngStream signal_rng = stream(Purpose::signal);
    const SignalVector x = make_signal(cell.n, cell.alpha, RandomUnit{}, signal_rng);
    RngStream ensemble_rng = stream(Purpose::ensemble);
    const SensingEnsemble ens = draw_ensemble(cell.m, cell.n, ensemble_rng, settings.memory_cap_bytes);
    RngStream obs_rng = stream(Purpose::observations);
    const ObservationVector y = observe(cell, x, ens, obs_rng, settings);

    r.signal_rayleigh = evaluate_objective(y, ens, x.x) / x.alpha;

    RngStream solver_rng = stream(Purpose::solver);
    try {
      const SpectralEstimate est = recover(y, ens, cell.alpha, settings.eigensolver, solver_rng);
      r.rel_error = relative_error(est, x);
      r.lambda0 = est.lambda0;
      r.iterations = est.solver.iterations;
      if (!est.solver.converged) r.flags |= flags::not_converged;
    } catch (const NoDominantEigenpair&) {
      r.rel_error = 2.0;
      r.lambda0 = 0.0;
      r.flags |= flags::no_eigenpair;
    }

    if ((cell.model == Model::poisson || cell.model == Model::bernoulli) && cell.n >= 2) {
      const NoiseModel nm = *theory_model(cell.model);
      r.theorem1_predicted = theorem1_bound(nm, cell.n, cell.m, cell.alpha, settings.constants).value;
    }

    if (settings.measure_deviation) {
      if (const auto nm = theory_model(cell.model)) {
        const auto deviation = difference(build_Y(y, ens), ExplicitOperator<double>(expected_Y(*nm, x)));
        RngStream oracle_rng = stream(Purpose::oracle);
        r.deviation_norm = spectral_norm_sym(deviation, settings.eigensolver, oracle_rng);
      }
    }
  } catch (const MemoryCapExceeded& e) {
    r.flags |= flags::rejected_memory_cap;
    r.reject_reason = e.what();
  }

  if (settings.record_timing) {
    r.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  return r;
}

std::string csv_header() {
  return "model,n,m,alpha,trial,seed,rel_error,lambda0,deviation_norm,theorem1_predicted,iterations,"
         "wall_time_ms,flags";
}

namespace {

std::string fmt_real(double v) { return fmt::format("{:.17g}", v); }

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_real(*v) : std::string(); }

}  // namespace

std::string to_csv_row(const ExperimentRecord& r) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}", to_string(r.cell.model), r.cell.n, r.cell.m,
                     fmt_real(r.cell.alpha), r.trial, r.seed, fmt_opt(r.rel_error), fmt_opt(r.lambda0),
                     fmt_opt(r.deviation_norm), fmt_opt(r.theorem1_predicted), r.iterations,
                     fmt_real(r.wall_time_ms), format_flags(r.flags));
}

// ---------------------------------------------------------------------------

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty input");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: x values are all equal");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    ss += e * e;
  }
  f.residual_rms = std::sqrt(ss / n);
  return f;
}

Summary summarize(const std::vector<ExperimentRecord>& records) {
  Summary s;
  std::vector<std::vector<const ExperimentRecord*>> groups;
  for (const auto& r : records) {
    auto it = std::find_if(s.cells.begin(), s.cells.end(), [&](const CellSummary& c) { return c.cell == r.cell; });
    if (it == s.cells.end()) {
      s.cells.push_back({});
      s.cells.back().cell = r.cell;
      groups.emplace_back();
      it = s.cells.end() - 1;
    }
    groups[static_cast<std::size_t>(it - s.cells.begin())].push_back(&r);
  }

  for (std::size_t c = 0; c < s.cells.size(); ++c) {
    CellSummary& cs = s.cells[c];
    std::vector<double> errs, devs;
    for (const auto* r : groups[c]) {
      ++cs.trials;
      if (r->flags & flags::rejected_memory_cap) ++cs.rejected;
      if (r->flags & flags::no_eigenpair) ++cs.failures;
      if (r->rel_error) errs.push_back(*r->rel_error);
      if (r->deviation_norm) devs.push_back(*r->deviation_norm);
      if (r->theorem1_predicted) cs.theorem1_predicted = r->theorem1_predicted;
    }
    if (!errs.empty()) {
      cs.median_rel_error = quantile(errs, 0.5);
      cs.q1_rel_error = quantile(errs, 0.25);
      cs.q3_rel_error = quantile(errs, 0.75);
    }
    if (!devs.empty()) cs.median_deviation_norm = quantile(devs, 0.5);
  }

  // One curve per (model, n, alpha), in order of first appearance.
  std::vector<SlopeSummary> curves;
  std::vector<std::pair<std::vector<double>, std::vector<double>>> points;
  for (const auto& cs : s.cells) {
    if (cs.rejected == cs.trials || !(cs.median_rel_error > 0.0)) continue;
    auto it = std::find_if(curves.begin(), curves.end(), [&](const SlopeSummary& c) {
      return c.model == cs.cell.model && c.n == cs.cell.n && c.alpha == cs.cell.alpha;
    });
    if (it == curves.end()) {
      curves.push_back({cs.cell.model, cs.cell.n, cs.cell.alpha, 0, {}});
      points.emplace_back();
      it = curves.end() - 1;
    }
    auto& [xs, ys] = points[static_cast<std::size_t>(it - curves.begin())];
    xs.push_back(std::log(static_cast<double>(cs.cell.m)));
    ys.push_back(std::log(cs.median_rel_error));
  }
  for (std::size_t i = 0; i < curves.size(); ++i) {
    auto& [xs, ys] = points[i];
    const bool distinct = std::adjacent_find(xs.begin(), xs.end(), std::not_equal_to<>()) != xs.end();
    if (xs.size() < 2 || !distinct) continue;
    curves[i].points = static_cast<int>(xs.size());
    curves[i].fit = fit_line(xs, ys);
    s.slopes.push_back(curves[i]);
  }
  return s;
}

void write_summary(std::ostream& out, const Summary& summary) {
  out << "# cells\n";
  out << "model,n,m,alpha,trials,failures,rejected,median_rel_error,q1_rel_error,q3_rel_error,iqr_rel_error,"
         "median_deviation_norm,theorem1_predicted\n";
  for (const auto& c : summary.cells) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", to_string(c.cell.model), c.cell.n, c.cell.m,
                       fmt_real(c.cell.alpha), c.trials, c.failures, c.rejected, fmt_real(c.median_rel_error),
                       fmt_real(c.q1_rel_error), fmt_real(c.q3_rel_error),
                       fmt_real(c.q3_rel_error - c.q1_rel_error), fmt_opt(c.median_deviation_norm),
                       fmt_opt(c.theorem1_predicted));
  }
  out << "# slopes: OLS of log(median rel_error) on log(m)\n";
  out << "model,n,alpha,points,slope,intercept,residual_rms\n";
  for (const auto& s : summary.slopes) {
    out << fmt::format("{},{},{},{},{},{},{}\n", to_string(s.model), s.n, fmt_real(s.alpha), s.points,
                       fmt_real(s.fit.slope), fmt_real(s.fit.intercept), fmt_real(s.fit.residual_rms));
  }
}

// ---------------------------------------------------------------------------

int resolve_threads(std::optional<int> requested) {
  int n = 1;
  if (requested) {
    n = *requested;
  } else if (const char* env = std::getenv("LOWDOSE_THREADS"); env && *env) {
    try {
      n = std::stoi(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("LOWDOSE_THREADS: not an integer: ") + env);
    }
  }
  if (n < 0) throw ConfigError("thread count must be >= 0");
  if (n == 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return n;
}

namespace {

struct Task {
  std::size_t cell_index;
  std::int64_t trial;
};

/// Runs tasks on `threads` workers and hands finished records to `sink` in task order.
void execute(const std::vector<CellSpec>& cells, const std::vector<Task>& tasks, std::uint64_t master_seed,
             const TrialSettings& settings, int threads,
             const std::function<void(std::size_t, ExperimentRecord&&)>& sink) {
  auto compute = [&](std::size_t k) {
    return run_trial(cells[tasks[k].cell_index], tasks[k].trial, master_seed, settings);
  };

  if (threads <= 1 || tasks.size() <= 1) {
    for (std::size_t k = 0; k < tasks.size(); ++k) sink(k, compute(k));
    return;
  }

  std::vector<std::optional<ExperimentRecord>> done(tasks.size());
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr error;

  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= tasks.size() || abort.load()) return;
      try {
        ExperimentRecord rec = compute(k);
        std::lock_guard lock(mu);
        done[k] = std::move(rec);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        abort = true;
      }
      cv.notify_one();
    }
  };

  {
    std::vector<std::jthread> pool;
    const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(threads), tasks.size());
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);

    for (std::size_t k = 0; k < tasks.size(); ++k) {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return done[k].has_value() || abort.load(); });
      if (abort) break;
      ExperimentRecord rec = std::move(*done[k]);
      done[k].reset();
      lock.unlock();
      sink(k, std::move(rec));
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

std::vector<ExperimentRecord> run_cell(const CellSpec& cell, int trials, std::uint64_t master_seed,
                                       const TrialSettings& settings, int threads) {
  std::vector<CellSpec> cells{cell};
  std::vector<Task> tasks;
  for (int t = 0; t < trials; ++t) tasks.push_back({0, t});
  std::vector<ExperimentRecord> out(tasks.size());
  execute(cells, tasks, master_seed, settings, threads,
          [&](std::size_t k, ExperimentRecord&& r) { out[k] = std::move(r); });
  return out;
}

SweepResult run_sweep(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  for (Model model : cfg.models) {
    if (model == Model::truncated && !cfg.truncation_t) {
      for (auto m : cfg.m_grid) {
        if (m < 2) throw ConfigError("config: truncated model with automatic threshold needs every m >= 2");
      }
    }
  }

  const auto cells = expand_grid(cfg);
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (int t = 0; t < cfg.trials; ++t) tasks.push_back({c, t});

  std::ofstream csv;
  if (!cfg.output_path.empty()) {
    csv.open(cfg.output_path, std::ios::out | std::ios::trunc | std::ios::binary);
    if (!csv) throw std::runtime_error("cannot open output file " + cfg.output_path);
    csv << csv_header() << '\n';
    csv.flush();
  }

  SweepResult result;
  result.records.resize(tasks.size());
  execute(cells, tasks, cfg.master_seed, TrialSettings::from_config(cfg), threads,
          [&](std::size_t k, ExperimentRecord&& r) {
            if (csv.is_open()) {
              csv << to_csv_row(r) << '\n';
              csv.flush();
            }
            result.records[k] = std::move(r);
          });

  result.summary = summarize(result.records);
  if (csv.is_open()) {
    std::ofstream summary_out(cfg.output_path + ".summary", std::ios::out | std::ios::trunc | std::ios::binary);
    if (!summary_out) throw std::runtime_error("cannot open summary file " + cfg.output_path + ".summary");
    write_summary(summary_out, result.summary);
  }
  return result;
}

// ---------------------------------------------------------------------------

FitResult fit_constants(const FitSpec& spec, int threads) {
  if (spec.trials < 1) throw std::invalid_argument("fit_constants: trials must be >= 1");
  if (spec.n < 2) throw std::invalid_argument("fit_constants: n must be >= 2");

  TrialSettings settings;
  settings.eigensolver = spec.eigensolver;
  settings.memory_cap_bytes = spec.memory_cap_bytes;
  settings.measure_deviation = true;
  settings.constants.beta = spec.beta;

  auto deviations = [](const std::vector<ExperimentRecord>& records) {
    std::vector<double> out;
    for (const auto& r : records) {
      if (r.flags & flags::rejected_memory_cap) throw MemoryCapExceeded(r.reject_reason);
      out.push_back(r.deviation_norm.value());
    }
    return out;
  };

  FitResult fit;
  fit.constants.beta = spec.beta;

  const BoundConstants unit{1.0, 1.0, spec.beta};
  fit.bernoulli_records =
      run_cell({Model::bernoulli, spec.n, spec.m, spec.alpha}, spec.trials, spec.master_seed, settings, threads);
  fit.bernoulli_quantile = quantile(deviations(fit.bernoulli_records), spec.quantile);
  const double bernoulli_rate = deviation_bound(NoiseModel::bernoulli, spec.n, spec.m, spec.alpha, unit).value;
  fit.constants.C_beta = fit.bernoulli_quantile / bernoulli_rate;

  if (spec.fit_poisson) {
    fit.poisson_records =
        run_cell({Model::poisson, spec.n, spec.m, spec.alpha}, spec.trials, spec.master_seed, settings, threads);
    fit.poisson_quantile = quantile(deviations(fit.poisson_records), spec.quantile);
    // Poisson bound is C_beta (alpha + C_hat) log m sqrt(log n) sqrt(n/m); alpha = 0 isolates the rate.
    const double poisson_rate = deviation_bound(NoiseModel::poisson, spec.n, spec.m, 0.0, unit).value;
    const double c_hat = *fit.poisson_quantile / (fit.constants.C_beta * poisson_rate) - spec.alpha;
    fit.constants.C_hat_beta = std::max(c_hat, kMinCHatBeta);
  }
  return fit;
}

}  // namespace lowdose
