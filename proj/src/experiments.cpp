#include "infomaxda/experiments.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include "infomaxda/errors.hpp"
#include "infomaxda/oracle.hpp"

namespace infomaxda {

namespace {

bool constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

}  // namespace

RunOutcome run_once(const TrainConfig& config, const ExperimentData& data) {
  TrainedModel model = train_dpn(config, data.source, data.target, data.evaluation_sets());
  RunOutcome out;
  out.config = config;
  out.final_target_acc = data.target_eval ? evaluate(model, *data.target_eval) : std::numeric_limits<double>::quiet_NaN();
  out.history = std::move(model.history);
  out.extra_accuracy = std::move(model.extra_accuracy);
  return out;
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& task) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
  std::vector<std::exception_ptr> errors(count);
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < count && !failed; i = next++) {
          try {
            task(i);
          } catch (...) {
            errors[i] = std::current_exception();
            failed = true;
          }
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

GroupSummary summarize(std::string name, std::vector<double> accuracies) {
  GroupSummary g{std::move(name), std::move(accuracies), 0.0, 0.0};
  const double n = static_cast<double>(g.accuracies.size());
  if (g.accuracies.empty()) return g;
  g.mean = std::accumulate(g.accuracies.begin(), g.accuracies.end(), 0.0) / n;
  if (g.accuracies.size() > 1) {
    double ss = 0.0;
    for (double a : g.accuracies) ss += (a - g.mean) * (a - g.mean);
    g.std = std::sqrt(ss / (n - 1.0));
  }
  return g;
}

AblationResult ablation_run(const TrainConfig& config, const ExperimentData& data, std::span<const std::uint64_t> seeds,
                            std::size_t jobs) {
  if (seeds.empty()) throw ValidationError("ablation_run: need at least one seed");
  constexpr std::array modes{Ablation::none, Ablation::k, Ablation::m, Ablation::km};
  AblationResult result;
  result.seeds.assign(seeds.begin(), seeds.end());
  result.runs.resize(modes.size() * seeds.size());
  parallel_for(result.runs.size(), jobs, [&](std::size_t i) {
    TrainConfig c = config;
    c.ablation = modes[i / seeds.size()];
    c.seed = seeds[i % seeds.size()];
    result.runs[i] = run_once(c, data);
  });
  for (std::size_t m = 0; m < modes.size(); ++m) {
    std::vector<double> acc;
    for (std::size_t s = 0; s < seeds.size(); ++s) acc.push_back(result.runs[m * seeds.size() + s].final_target_acc);
    result.modes.push_back(summarize(std::string(to_string(modes[m])), std::move(acc)));
  }
  return result;
}

SweepResult sensitivity_sweep(const TrainConfig& config, const ExperimentData& data, std::span<const double> alphas,
                              std::span<const double> betas, std::size_t jobs) {
  if (alphas.empty() || betas.empty()) throw ValidationError("sensitivity_sweep: grids must be non-empty");
  SweepResult result;
  result.alphas.assign(alphas.begin(), alphas.end());
  result.betas.assign(betas.begin(), betas.end());
  result.accuracy = Tensor2D(alphas.size(), betas.size());
  result.runs.resize(alphas.size() * betas.size());
  parallel_for(result.runs.size(), jobs, [&](std::size_t i) {
    TrainConfig c = config;
    c.alpha = alphas[i / betas.size()];
    c.beta = betas[i % betas.size()];
    result.runs[i] = run_once(c, data);
  });
  for (std::size_t i = 0; i < result.runs.size(); ++i) {
    result.accuracy(i / betas.size(), i % betas.size()) = result.runs[i].final_target_acc;
  }
  return result;
}

ComparisonResult estimator_comparison(const TrainConfig& config, const ExperimentData& data,
                                      std::span<const std::uint64_t> seeds, std::size_t jobs) {
  if (seeds.empty()) throw ValidationError("estimator_comparison: need at least one seed");
  constexpr std::array arms{Estimator::two_critic, Estimator::mine_single, Estimator::autoencoder};
  ComparisonResult result;
  result.seeds.assign(seeds.begin(), seeds.end());
  result.runs.resize(arms.size() * seeds.size());
  parallel_for(result.runs.size(), jobs, [&](std::size_t i) {
    TrainConfig c = config;
    c.estimator = arms[i / seeds.size()];
    c.seed = seeds[i % seeds.size()];
    result.runs[i] = run_once(c, data);
  });
  for (std::size_t a = 0; a < arms.size(); ++a) {
    std::vector<double> acc;
    for (std::size_t s = 0; s < seeds.size(); ++s) acc.push_back(result.runs[a * seeds.size() + s].final_target_acc);
    result.arms.push_back(summarize(std::string(to_string(arms[a])), std::move(acc)));
  }
  return result;
}

CrossEvalResult cross_eval(const TrainedModel& model, const LabeledSet& third, std::span<const double> target_curve,
                           std::span<const double> third_curve) {
  if (third.x.cols() != model.encoder.input_dim()) {
    throw ValidationError("cross_eval: third domain has " + std::to_string(third.x.cols()) +
                          " features, model expects " + std::to_string(model.encoder.input_dim()));
  }
  if (target_curve.size() != third_curve.size()) throw ValidationError("cross_eval: curve lengths differ");
  CrossEvalResult r;
  r.third_acc = evaluate(model, third);
  if (target_curve.size() < 2) {
    r.pearson_reason = "fewer than 2 epochs";
  } else if (constant(target_curve) || constant(third_curve)) {
    r.pearson_reason = "zero variance";
  } else {
    r.pearson_r = oracle::pearson_corr(target_curve, third_curve);
  }
  return r;
}

}  // namespace infomaxda
