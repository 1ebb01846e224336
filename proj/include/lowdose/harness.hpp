#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lowdose/config.hpp"

namespace lowdose {

/// One (model, n, m, alpha) grid point.
struct CellSpec {
  Model model = Model::poisson;
  std::int64_t n = 0;
  std::int64_t m = 0;
  double alpha = 0.0;

  bool operator==(const CellSpec&) const = default;
};

/// Stable hash of a cell; feeds per-trial stream derivation.
std::uint64_t cell_key(const CellSpec& cell);

/// Grid expansion in canonical order: model, then n, then m, then alpha.
std::vector<CellSpec> expand_grid(const ExperimentConfig& cfg);

struct TrialSettings {
  PowerOptions eigensolver;
  std::optional<double> truncation_t;
  BoundConstants constants;
  std::size_t memory_cap_bytes = kDefaultMemoryCap;
  bool measure_deviation = false;
  bool record_timing = false;

  static TrialSettings from_config(const ExperimentConfig& cfg);
};

namespace flags {
inline constexpr unsigned below_mnlogn = 1u << 0;
inline constexpr unsigned no_eigenpair = 1u << 1;
inline constexpr unsigned not_converged = 1u << 2;
inline constexpr unsigned rejected_memory_cap = 1u << 3;
}  // namespace flags

/// Semicolon-separated flag names, empty when none are set.
std::string format_flags(unsigned bits);

struct ExperimentRecord {
  CellSpec cell;
  std::int64_t trial = 0;
  std::uint64_t seed = 0;
  std::optional<double> rel_error;  ///< dist(x0, x)^2 / alpha; empty only for rejected trials
  std::optional<double> lambda0;
  std::optional<double> deviation_norm;  ///< ||Y - E[Y]||, when measured
  std::optional<double> theorem1_predicted;
  int iterations = 0;
  double wall_time_ms = 0.0;
  unsigned flags = 0;

  /// x^T Y x / ||x||^2; a lower bound on the top eigenvalue. Not serialized.
  std::optional<double> signal_rayleigh;
  std::string reject_reason;
};

/// Draws signal, ensemble and observations, recovers, and scores one trial.
/// The record is a pure function of (cell, trial_index, master_seed, settings), except
/// wall_time_ms when timing is enabled.
ExperimentRecord run_trial(const CellSpec& cell, std::int64_t trial_index, std::uint64_t master_seed,
                           const TrialSettings& settings);

std::string csv_header();
std::string to_csv_row(const ExperimentRecord& r);

// ---------------------------------------------------------------------------
// Summary statistics
// ---------------------------------------------------------------------------

/// Linear-interpolation quantile (type 7) of unsorted data; q in [0, 1].
double quantile(std::vector<double> values, double q);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct CellSummary {
  CellSpec cell;
  int trials = 0;
  int failures = 0;  ///< trials without a dominant eigenpair (scored as rel_error = 2)
  int rejected = 0;
  double median_rel_error = 0.0;
  double q1_rel_error = 0.0;
  double q3_rel_error = 0.0;
  std::optional<double> median_deviation_norm;
  std::optional<double> theorem1_predicted;
};

/// log(median rel_error) against log m within one (model, n, alpha) curve.
struct SlopeSummary {
  Model model = Model::poisson;
  std::int64_t n = 0;
  double alpha = 0.0;
  int points = 0;
  LineFit fit;
};

struct Summary {
  std::vector<CellSummary> cells;
  std::vector<SlopeSummary> slopes;
};

Summary summarize(const std::vector<ExperimentRecord>& records);
void write_summary(std::ostream& out, const Summary& summary);

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// Explicit count if given, else LOWDOSE_THREADS, else 1. Zero means hardware concurrency.
int resolve_threads(std::optional<int> requested);

struct SweepResult {
  std::vector<ExperimentRecord> records;  ///< canonical (cell, trial) order
  Summary summary;
};

/// Runs every (cell, trial) pair on `threads` workers. When cfg.output_path is set, records
/// are appended to the CSV in canonical order as soon as their predecessors are done, and
/// the summary goes to `<output>.summary`. Throws std::runtime_error if the output cannot
/// be opened.
SweepResult run_sweep(const ExperimentConfig& cfg, int threads);

/// Runs `trials` trials of one cell; the building block of run_sweep.
std::vector<ExperimentRecord> run_cell(const CellSpec& cell, int trials, std::uint64_t master_seed,
                                       const TrialSettings& settings, int threads);

// ---------------------------------------------------------------------------
// Bound-constant calibration
// ---------------------------------------------------------------------------

struct FitSpec {
  std::int64_t n = 32;
  std::int64_t m = 1 << 14;
  double alpha = 1.0;
  int trials = 200;
  double quantile = 0.95;
  double beta = 2.0;
  bool fit_poisson = true;
  std::uint64_t master_seed = 0;
  PowerOptions eigensolver;
  std::size_t memory_cap_bytes = kDefaultMemoryCap;
};

struct FitResult {
  BoundConstants constants;
  double bernoulli_quantile = 0.0;
  std::optional<double> poisson_quantile;
  std::vector<ExperimentRecord> bernoulli_records;
  std::vector<ExperimentRecord> poisson_records;
};

/// Smallest C_hat_beta fit-constants will emit; used when the Poisson bound already
/// covers the calibration quantile at C_hat_beta = 0.
inline constexpr double kMinCHatBeta = 1e-3;

/// C_beta is the `quantile` of measured ||Y - E[Y]|| over Bernoulli trials at the
/// reference cell divided by sqrt(log n) sqrt(n/m). C_hat_beta, when fit_poisson is
/// set, is the smallest value (floored at kMinCHatBeta) for which the Poisson bound
/// with that C_beta covers the same quantile of Poisson deviations.
FitResult fit_constants(const FitSpec& spec, int threads);

}  // namespace lowdose
