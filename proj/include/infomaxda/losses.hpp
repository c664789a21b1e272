#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "infomaxda/dense_net.hpp"
#include "infomaxda/rng.hpp"
#include "infomaxda/tensor.hpp"

namespace infomaxda {

// A loss value together with its gradient w.r.t. the tensor it was computed from.
struct LossValue {
  double value = 0.0;
  Tensor2D grad;
};

// Mean softmax cross-entropy. grad = (softmax - onehot) / N.
LossValue classification_loss(const Tensor2D& logits, std::span<const std::size_t> labels);

// Mean Shannon entropy of the row-wise softmax, in [0, ln C].
LossValue entropy_penalty(const Tensor2D& logits);

struct KldValue {
  double value = 0.0;
  Tensor2D grad_source;
  Tensor2D grad_target;
};

inline constexpr double kVarianceFloor = 1e-6;

/// KL(N_source || N_target) between diagonal Gaussians fitted to the two batches.
///
/// Per dimension the fit uses the sample mean and the unbiased sample variance
/// (divisor n - 1), floored at kVarianceFloor. A floored variance contributes no
/// gradient. Both batches need at least two rows.
KldValue latent_kld(const Tensor2D& z_source, const Tensor2D& z_target);

/// Joint pairs (x_i, z_i) plus a marginal batch built by permuting the latent rows:
/// z_marginal.row(i) == z_joint.row(marginal_index[i]).
struct MiBatch {
  Tensor2D x_joint;
  Tensor2D z_joint;
  Tensor2D z_marginal;
  std::vector<std::size_t> marginal_index;

  static MiBatch from_permutation(Tensor2D x, Tensor2D z, std::vector<std::size_t> index);
  static MiBatch resampled(Tensor2D x, Tensor2D z, Rng& rng);

  std::size_t size() const { return x_joint.rows(); }
  Tensor2D joint_input() const { return concat_cols(x_joint, z_joint); }
  Tensor2D marginal_input() const { return concat_cols(x_joint, z_marginal); }
  // Throws ValidationError on row-count mismatch, n < 2, or a bad index.
  void validate() const;
};

// Fisher-Yates row permutation of `z` driven by `rng`. Needs at least two rows.
Tensor2D resample_marginal(const Tensor2D& z, Rng& rng);

// Running estimate of log E[e^M] used to de-bias the log-mean-exp gradient.
struct LogMeanExpEma {
  double rate = 0.01;
  std::optional<double> log_value;

  // Folds in the batch log-mean-exp and returns the updated running value.
  double update(double batch_log_mean_exp);
};

struct CriticOptions {
  // When non-zero, scale * d(value + hinge penalty) is accumulated into the
  // critics' gradients. Zero evaluates without touching the nets.
  double backprop_scale = 0.0;
  double hinge_lambda = 0.0;
  LogMeanExpEma* ema = nullptr;
};

struct CriticResult {
  double value = 0.0;
  // mean M1(joint) - mean M2(joint). Always 0 for the single-critic bound.
  double constraint_gap = 0.0;
  double hinge_penalty = 0.0;
  // scale * d(value + penalty)/dz; empty when backprop_scale == 0.
  Tensor2D grad_z_joint;
  Tensor2D grad_z_marginal;
};

/// Single-critic Donsker-Varadhan bound:
/// mean T(x, z) - log mean exp T(x, z_marginal).
CriticResult dv_bound_single(DenseNet& critic, const MiBatch& batch, const CriticOptions& options = {});

/// Two-critic MI loss:
/// -[mean M1(x, z) - log mean exp M2(x, z_marginal)].
/// M2 is also evaluated on the joint rows to report constraint_gap; with
/// hinge_lambda > 0 the penalty lambda * max(0, gap) joins the gradient.
CriticResult mi_loss(DenseNet& m1, DenseNet& m2, const MiBatch& batch, const CriticOptions& options = {});

// mean M1(joint) - mean M2(joint); positive means E_joint[M2] >= E_joint[M1] fails.
double constraint_gap(const DenseNet& m1, const DenseNet& m2, const MiBatch& batch);

/// Autoencoder stand-in for the MI term: mean over rows of ||decoder(z) - x||^2.
/// With backprop_scale != 0 the decoder accumulates scale * gradient and the
/// returned grad is scale * d(value)/dz.
LossValue recon_mi_baseline(DenseNet& decoder, const Tensor2D& x, const Tensor2D& z, double backprop_scale = 0.0);

struct LossBreakdown {
  double l_cls = 0.0;
  double l_kld = 0.0;
  double l_mi = 0.0;
  double l_ent = 0.0;
  double total = 0.0;

  static LossBreakdown combine(double l_cls, double l_kld, double l_mi, double l_ent, double alpha, double beta,
                               double gamma);
};

}  // namespace infomaxda
