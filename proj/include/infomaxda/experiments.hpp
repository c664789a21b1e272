#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "infomaxda/synthdata.hpp"
#include "infomaxda/trainer.hpp"

namespace infomaxda {

// Inputs shared by every run of an experiment. Labels in target_eval and extra
// are used for scoring only.
struct ExperimentData {
  LabeledSet source;
  UnlabeledSet target;
  std::optional<LabeledSet> target_eval;
  std::vector<LabeledSet> extra;

  EvaluationSets evaluation_sets() const { return EvaluationSets{target_eval, extra}; }
};

struct RunOutcome {
  TrainConfig config;
  std::vector<MetricsRecord> history;
  std::vector<std::vector<double>> extra_accuracy;
  // Last-epoch target accuracy, or the initialization-level accuracy for a
  // zero-epoch run. NaN without target labels.
  double final_target_acc = 0.0;
};

RunOutcome run_once(const TrainConfig& config, const ExperimentData& data);

/// Runs `count` independent tasks on up to `jobs` threads. Results are stored
/// by index, so the output does not depend on scheduling. The first exception
/// (lowest index) is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& task);

struct GroupSummary {
  std::string name;
  std::vector<double> accuracies;  // one per seed
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single seed
};

GroupSummary summarize(std::string name, std::vector<double> accuracies);

struct AblationResult {
  std::vector<std::uint64_t> seeds;
  std::vector<GroupSummary> modes;  // none, k, m, km
  // runs[mode * seeds.size() + s]
  std::vector<RunOutcome> runs;
};

AblationResult ablation_run(const TrainConfig& config, const ExperimentData& data, std::span<const std::uint64_t> seeds,
                            std::size_t jobs = 1);

struct SweepResult {
  std::vector<double> alphas;
  std::vector<double> betas;
  Tensor2D accuracy;  // alphas x betas
  // runs[i * betas.size() + j]
  std::vector<RunOutcome> runs;
};

// Full alpha x beta cross product at the config's seed and ablation mode.
SweepResult sensitivity_sweep(const TrainConfig& config, const ExperimentData& data, std::span<const double> alphas,
                              std::span<const double> betas, std::size_t jobs = 1);

struct ComparisonResult {
  std::vector<std::uint64_t> seeds;
  std::vector<GroupSummary> arms;  // two_critic, mine_single, autoencoder
  std::vector<RunOutcome> runs;    // runs[arm * seeds.size() + s]
};

ComparisonResult estimator_comparison(const TrainConfig& config, const ExperimentData& data,
                                      std::span<const std::uint64_t> seeds, std::size_t jobs = 1);

struct CrossEvalResult {
  double third_acc = 0.0;
  std::optional<double> pearson_r;
  std::string pearson_reason;  // why pearson_r is absent
};

/// Scores the trained model on an unseen domain and correlates the per-epoch
/// adaptation-target and third-domain accuracy curves.
CrossEvalResult cross_eval(const TrainedModel& model, const LabeledSet& third, std::span<const double> target_curve,
                           std::span<const double> third_curve);

}  // namespace infomaxda
