#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lowdose/linalg.hpp"
#include "lowdose/model.hpp"
#include "lowdose/theory.hpp"

namespace lowdose {

/// Observation model of one experiment cell. `truncated` is Poisson followed by truncation.
enum class Model { poisson, bernoulli, noiseless, truncated };

std::string to_string(Model model);
Model parse_model(const std::string& name);

/// The closed-form theory covering `model`, if any. Noiseless intensities share the
/// Poisson expectation; truncated observations have no closed form.
std::optional<NoiseModel> theory_model(Model model);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::vector<Model> models;
  std::vector<std::int64_t> n_grid;
  std::vector<std::int64_t> m_grid;
  std::vector<double> alpha_grid;
  int trials = 1;
  std::uint64_t master_seed = 0;
  PowerOptions eigensolver;
  std::optional<double> truncation_t;  ///< empty: 3 alpha log m per cell
  BoundConstants constants;
  std::string output_path;
  std::size_t memory_cap_bytes = kDefaultMemoryCap;
  bool measure_deviation = false;
  bool record_timing = false;

  /// Throws ConfigError on empty grids, trials < 1, tol <= 0 and similar.
  void validate() const;
};

/// Parses the YAML config schema documented in configs/README.md. Relative paths
/// (output, bound_constants_file) resolve against `base_dir`.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});

ExperimentConfig load_config(const std::filesystem::path& path);

/// YAML block `bound_constants: {C_beta, C_hat_beta, beta}` as written by fit-constants.
std::string format_constants(const BoundConstants& k);
BoundConstants load_constants(const std::filesystem::path& path);

}  // namespace lowdose
