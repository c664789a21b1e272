#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "infomaxda/experiments.hpp"
#include "infomaxda/trainer.hpp"

namespace infomaxda {

struct DataConfig {
  std::string kind = "two_moons";  // two_moons | blob_shift | csv
  std::size_t n = 1000;
  double noise = 0.1;
  std::uint64_t seed = 1;
  double source_rotation_deg = 0.0;
  double rotation_deg = 45.0;
  std::optional<double> third_rotation_deg;
  std::size_t dims = 2;
  std::size_t classes = 3;
  double shift = 2.0;
  std::string source_path;
  std::string target_path;
  std::string third_path;
};

struct MiConfig {
  double rho = 0.9;
  std::size_t dims = 1;
  std::size_t n = 100000;
};

struct RunConfig {
  std::string out_dir;
  std::size_t jobs = 1;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
};

struct SweepConfig {
  std::vector<double> alphas{0.01, 0.1, 1.0, 10.0, 100.0};
  std::vector<double> betas{1e-4, 1e-3, 1e-2, 0.1, 1.0};
};

struct OracleConfig {
  std::string suite = "all";  // elbo | infomax | dv | all
  std::size_t instances = 1000;
  std::uint64_t seed = 7;
};

struct GradcheckConfig {
  std::string loss = "cls";
  std::uint64_t seed = 1;
};

struct ResolvedConfig {
  TrainConfig train;
  DataConfig data;
  MiConfig mi;
  RunConfig run;
  SweepConfig sweep;
  OracleConfig oracle;
  GradcheckConfig gradcheck;

  /// Defaults for a subcommand: gaussian-mi trains critics with lr 5e-3,
  /// batch 256 and 14 epochs; cross-eval moves the target to 30 degrees and
  /// adds a third domain at 60 degrees.
  static ResolvedConfig defaults_for(std::string_view subcommand);

  // Throws ValidationError naming the offending key.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  static const std::vector<std::string>& keys();

  // Every key in table order with its current value.
  std::vector<std::pair<std::string, std::string>> entries() const;
  // `key = value` lines that parse back to an identical config.
  std::string to_text() const;
};

/// Reads `key = value` lines; `#` starts a comment, blank lines are skipped.
/// IoError when the file cannot be opened, ValidationError (with line number)
/// for malformed lines or unknown keys.
void apply_config_file(ResolvedConfig& config, const std::filesystem::path& path);

/// Applies `--key value` / `--key=value` pairs left over by the flag parser.
void apply_overrides(ResolvedConfig& config, const std::vector<std::string>& args);

// Round-trip decimal text for a double ("%.17g"; nan / inf / -inf).
std::string format_double(double v);

ExperimentData build_experiment_data(const DataConfig& data);

}  // namespace infomaxda
