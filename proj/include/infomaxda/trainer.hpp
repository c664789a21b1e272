#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "infomaxda/dense_net.hpp"
#include "infomaxda/losses.hpp"
#include "infomaxda/synthdata.hpp"

namespace infomaxda {

// Which alignment terms a run keeps: none is source-only, k keeps the latent KL,
// m keeps the MI term, km keeps both.
enum class Ablation { none, k, m, km };
enum class Estimator { two_critic, mine_single, autoencoder };

std::string_view to_string(Ablation a);
std::string_view to_string(Estimator e);
Ablation parse_ablation(std::string_view name);
Estimator parse_estimator(std::string_view name);

struct Architecture {
  std::vector<std::size_t> encoder_hidden{32};
  std::size_t latent_dim = 8;
  std::vector<std::size_t> classifier_hidden{};
  std::vector<std::size_t> critic_hidden{32};
  std::vector<std::size_t> decoder_hidden{32};
  Activation encoder_activation = Activation::tanh;
  Activation classifier_activation = Activation::tanh;
  Activation critic_activation = Activation::elu;
  Activation decoder_activation = Activation::tanh;
};

struct TrainConfig {
  double alpha = 1.0;
  double beta = 0.01;
  double gamma = 0.1;
  double lr = 1e-3;
  double momentum = 0.0;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 200;
  std::size_t critic_steps = 1;
  std::uint64_t seed = 1;
  Ablation ablation = Ablation::km;
  Estimator estimator = Estimator::two_critic;
  double hinge_lambda = 2.0;
  std::optional<double> ema_rate;
  double clip_norm = 0.0;  // global critic-gradient norm cap, 0 = off
  // Global G/F gradient norm cap, 0 = off. Collapsing target-latent variances
  // make the KL gradient spike by orders of magnitude.
  double model_clip_norm = 5.0;
  bool entropy = true;
  double heldout_fraction = 0.1;
  // Checksums the frozen nets around every critic and model step and throws
  // std::logic_error if one of them moved.
  bool verify_phase_isolation = false;
  Architecture arch;

  void validate() const;
  double effective_alpha() const;
  double effective_beta() const;
  double effective_gamma() const;
};

struct MetricsRecord {
  std::size_t epoch = 0;
  double l_cls = 0.0;
  double l_kld = 0.0;
  double l_mi = 0.0;
  double l_ent = 0.0;
  double mi_estimate = 0.0;
  double constraint_gap = 0.0;
  double source_acc = 0.0;
  double target_acc = 0.0;  // NaN when no target labels were supplied

  bool operator==(const MetricsRecord&) const = default;
};

// Labeled sets used for scoring only. Nothing here reaches a gradient.
struct EvaluationSets {
  std::optional<LabeledSet> target;
  std::vector<LabeledSet> extra;
};

struct TrainedModel {
  DenseNet encoder;
  DenseNet classifier;
  DenseNet critic_joint;     // M1, also the single critic for mine_single
  DenseNet critic_marginal;  // M2
  std::optional<DenseNet> decoder;
  TrainConfig config;
  std::vector<MetricsRecord> history;
  // extra_accuracy[epoch][k] scores EvaluationSets::extra[k].
  std::vector<std::vector<double>> extra_accuracy;
  std::size_t phase_checks = 0;
};

/// Alternating critic / model training.
///
/// Per batch pair: the target batch is encoded with the current G and its latent
/// rows permuted to form the marginal batch. The critics (or the decoder) take
/// `critic_steps` SGD steps with G and F held fixed. Then G and F take one SGD
/// step on L_cls + alpha L_kld + beta L_mi + gamma L_ent, recomputed with fresh
/// forward passes, with the critics held fixed. Source and target batches are
/// drawn in lockstep; an epoch is as long as the longer of the two streams.
/// A seeded slice of the target (heldout_fraction) is reserved for mi_estimate.
TrainedModel train_dpn(const TrainConfig& config, const LabeledSet& source, const UnlabeledSet& target,
                       const EvaluationSets& eval = {});

// Fraction of rows whose argmax logit (lowest index on ties) matches the label.
double evaluate(const TrainedModel& model, const LabeledSet& data);
double evaluate(const DenseNet& encoder, const DenseNet& classifier, const LabeledSet& data);

struct MiCurvePoint {
  std::size_t epoch = 0;
  double estimate = 0.0;
  double constraint_gap = 0.0;
};

struct MiCurve {
  std::vector<MiCurvePoint> points;
  std::size_t critic_steps = 0;
};

/// Trains critics alone on exogenous (x, z) pairs and records the held-out bound
/// after every epoch: -L_mi for two_critic, the single-critic DV bound for
/// mine_single.
MiCurve estimate_mi_run(const TrainConfig& config, const PairedSamples& paired);

}  // namespace infomaxda
