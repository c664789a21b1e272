#include "infomaxda/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "infomaxda/errors.hpp"
#include "infomaxda/stable_math.hpp"

namespace infomaxda {

namespace {

std::vector<double> column(const Tensor2D& t, std::size_t begin, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = t(begin + i, 0);
  return out;
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void check_critic(const DenseNet& critic, const MiBatch& batch, const char* who) {
  const std::size_t want = batch.x_joint.cols() + batch.z_joint.cols();
  if (critic.input_dim() != want || critic.output_dim() != 1) {
    throw ValidationError(std::string(who) + ": critic maps " + std::to_string(critic.input_dim()) + " -> " +
                          std::to_string(critic.output_dim()) + ", batch needs " + std::to_string(want) + " -> 1");
  }
}

// Weights d(log mean exp b)/db_i: softmax(b), or e^{b_i} / (n * ema) when de-biased.
std::vector<double> log_mean_exp_weights(std::span<const double> b, double lme, LogMeanExpEma* ema) {
  const double n = static_cast<double>(b.size());
  const double denom = ema != nullptr ? std::log(n) + ema->update(lme) : std::log(n) + lme;
  std::vector<double> w(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) w[i] = std::exp(b[i] - denom);
  return w;
}

}  // namespace

LossValue classification_loss(const Tensor2D& logits, std::span<const std::size_t> labels) {
  if (logits.rows() != labels.size()) {
    throw ValidationError("classification_loss: " + std::to_string(logits.rows()) + " rows vs " +
                          std::to_string(labels.size()) + " labels");
  }
  if (logits.rows() == 0) throw ValidationError("classification_loss: empty batch");
  const Tensor2D p = softmax(logits);
  const double n = static_cast<double>(logits.rows());
  LossValue out{0.0, Tensor2D(logits.rows(), logits.cols())};
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    if (labels[r] >= logits.cols()) {
      throw ValidationError("classification_loss: label " + std::to_string(labels[r]) + " out of range for " +
                            std::to_string(logits.cols()) + " classes");
    }
    out.value += log_sum_exp(logits.row(r)) - logits(r, labels[r]);
    for (std::size_t c = 0; c < logits.cols(); ++c) {
      out.grad(r, c) = (p(r, c) - (c == labels[r] ? 1.0 : 0.0)) / n;
    }
  }
  out.value /= n;
  return out;
}

LossValue entropy_penalty(const Tensor2D& logits) {
  if (logits.rows() == 0) throw ValidationError("entropy_penalty: empty batch");
  const Tensor2D p = softmax(logits);
  const double n = static_cast<double>(logits.rows());
  LossValue out{0.0, Tensor2D(logits.rows(), logits.cols())};
  std::vector<double> log_p(logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const double lse = log_sum_exp(logits.row(r));
    double h = 0.0;
    for (std::size_t c = 0; c < logits.cols(); ++c) {
      log_p[c] = logits(r, c) - lse;
      h -= p(r, c) * log_p[c];
    }
    out.value += h;
    // dH/dx_k = -p_k (log p_k + H)
    for (std::size_t c = 0; c < logits.cols(); ++c) out.grad(r, c) = -p(r, c) * (log_p[c] + h) / n;
  }
  out.value /= n;
  return out;
}

KldValue latent_kld(const Tensor2D& z_source, const Tensor2D& z_target) {
  if (z_source.rows() < 2 || z_target.rows() < 2) {
    throw ValidationError("latent_kld: each batch needs at least 2 rows");
  }
  if (z_source.cols() != z_target.cols()) {
    throw ValidationError("latent_kld: latent widths differ (" + std::to_string(z_source.cols()) + " vs " +
                          std::to_string(z_target.cols()) + ")");
  }
  z_source.require_finite("latent_kld source");
  z_target.require_finite("latent_kld target");
  const std::size_t d = z_source.cols();
  const double ns = static_cast<double>(z_source.rows());
  const double nt = static_cast<double>(z_target.rows());

  auto moments = [d](const Tensor2D& z) {
    std::vector<double> mu(d, 0.0), var(d, 0.0);
    const double n = static_cast<double>(z.rows());
    for (std::size_t r = 0; r < z.rows(); ++r) {
      for (std::size_t j = 0; j < d; ++j) mu[j] += z(r, j);
    }
    for (double& m : mu) m /= n;
    for (std::size_t r = 0; r < z.rows(); ++r) {
      for (std::size_t j = 0; j < d; ++j) {
        const double c = z(r, j) - mu[j];
        var[j] += c * c;
      }
    }
    for (double& v : var) v /= n - 1.0;
    return std::pair{mu, var};
  };
  const auto [mu_s, raw_var_s] = moments(z_source);
  const auto [mu_t, raw_var_t] = moments(z_target);

  KldValue out{0.0, Tensor2D(z_source.rows(), d), Tensor2D(z_target.rows(), d)};
  std::vector<double> dmu_s(d), dvar_s(d), dmu_t(d), dvar_t(d);
  for (std::size_t j = 0; j < d; ++j) {
    const bool floored_s = raw_var_s[j] < kVarianceFloor;
    const bool floored_t = raw_var_t[j] < kVarianceFloor;
    const double vs = floored_s ? kVarianceFloor : raw_var_s[j];
    const double vt = floored_t ? kVarianceFloor : raw_var_t[j];
    const double diff = mu_s[j] - mu_t[j];
    out.value += 0.5 * (std::log(vt / vs) + (vs + diff * diff) / vt - 1.0);
    dmu_s[j] = diff / vt;
    dmu_t[j] = -diff / vt;
    dvar_s[j] = floored_s ? 0.0 : 0.5 * (1.0 / vt - 1.0 / vs);
    dvar_t[j] = floored_t ? 0.0 : 0.5 * (1.0 / vt - (vs + diff * diff) / (vt * vt));
  }
  for (std::size_t r = 0; r < z_source.rows(); ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      out.grad_source(r, j) = dmu_s[j] / ns + dvar_s[j] * 2.0 * (z_source(r, j) - mu_s[j]) / (ns - 1.0);
    }
  }
  for (std::size_t r = 0; r < z_target.rows(); ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      out.grad_target(r, j) = dmu_t[j] / nt + dvar_t[j] * 2.0 * (z_target(r, j) - mu_t[j]) / (nt - 1.0);
    }
  }
  return out;
}

MiBatch MiBatch::from_permutation(Tensor2D x, Tensor2D z, std::vector<std::size_t> index) {
  MiBatch b;
  b.z_marginal = gather_rows(z, index);
  b.x_joint = std::move(x);
  b.z_joint = std::move(z);
  b.marginal_index = std::move(index);
  b.validate();
  return b;
}

MiBatch MiBatch::resampled(Tensor2D x, Tensor2D z, Rng& rng) {
  if (z.rows() < 2) throw ValidationError("MiBatch: need at least 2 rows to resample");
  auto index = rng.permutation(z.rows());
  return from_permutation(std::move(x), std::move(z), std::move(index));
}

void MiBatch::validate() const {
  const std::size_t n = x_joint.rows();
  if (n < 2) throw ValidationError("MiBatch: need at least 2 rows");
  if (z_joint.rows() != n || z_marginal.rows() != n || marginal_index.size() != n) {
    throw ValidationError("MiBatch: row counts differ");
  }
  if (z_marginal.cols() != z_joint.cols()) throw ValidationError("MiBatch: latent widths differ");
  std::vector<bool> seen(n, false);
  for (std::size_t i : marginal_index) {
    if (i >= n || seen[i]) throw ValidationError("MiBatch: marginal_index is not a permutation");
    seen[i] = true;
  }
}

Tensor2D resample_marginal(const Tensor2D& z, Rng& rng) {
  if (z.rows() < 2) throw ValidationError("resample_marginal: need at least 2 rows");
  const auto perm = rng.permutation(z.rows());
  return gather_rows(z, perm);
}

double LogMeanExpEma::update(double batch_log_mean_exp) {
  if (!log_value) {
    log_value = batch_log_mean_exp;
  } else {
    // log((1 - r) e^a + r e^b)
    const double a = std::log1p(-rate) + *log_value;
    const double b = std::log(rate) + batch_log_mean_exp;
    const double hi = std::max(a, b);
    log_value = hi + std::log(std::exp(a - hi) + std::exp(b - hi));
  }
  return *log_value;
}

CriticResult dv_bound_single(DenseNet& critic, const MiBatch& batch, const CriticOptions& options) {
  batch.validate();
  check_critic(critic, batch, "dv_bound_single");
  const std::size_t n = batch.size();
  const std::size_t dx = batch.x_joint.cols();
  const std::size_t dz = batch.z_joint.cols();
  const Tensor2D input = concat_rows(batch.joint_input(), batch.marginal_input());
  const bool backprop = options.backprop_scale != 0.0;
  const Tensor2D scores = backprop ? critic.forward(input) : critic.predict(input);

  const auto joint = column(scores, 0, n);
  const auto marginal = column(scores, n, n);
  const double lme = log_mean_exp(marginal);
  CriticResult out;
  out.value = mean(joint) - lme;
  if (!backprop) return out;

  const double s = options.backprop_scale;
  const auto w = log_mean_exp_weights(marginal, lme, options.ema);
  Tensor2D grad(2 * n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    grad(i, 0) = s / static_cast<double>(n);
    grad(n + i, 0) = -s * w[i];
  }
  const Tensor2D input_grad = critic.backward(grad);
  out.grad_z_joint = slice_cols(slice_rows(input_grad, 0, n), dx, dz);
  out.grad_z_marginal = slice_cols(slice_rows(input_grad, n, n), dx, dz);
  return out;
}

CriticResult mi_loss(DenseNet& m1, DenseNet& m2, const MiBatch& batch, const CriticOptions& options) {
  batch.validate();
  check_critic(m1, batch, "mi_loss (M1)");
  check_critic(m2, batch, "mi_loss (M2)");
  const std::size_t n = batch.size();
  const std::size_t dx = batch.x_joint.cols();
  const std::size_t dz = batch.z_joint.cols();
  const double nd = static_cast<double>(n);
  const Tensor2D joint_in = batch.joint_input();
  const Tensor2D m2_in = concat_rows(joint_in, batch.marginal_input());
  const bool backprop = options.backprop_scale != 0.0;
  const Tensor2D m1_out = backprop ? m1.forward(joint_in) : m1.predict(joint_in);
  const Tensor2D m2_out = backprop ? m2.forward(m2_in) : m2.predict(m2_in);

  const auto a = column(m1_out, 0, n);
  const auto c = column(m2_out, 0, n);
  const auto b = column(m2_out, n, n);
  const double lme = log_mean_exp(b);
  CriticResult out;
  out.value = -(mean(a) - lme);
  out.constraint_gap = mean(a) - mean(c);
  const bool hinge_active = options.hinge_lambda > 0.0 && out.constraint_gap > 0.0;
  out.hinge_penalty = hinge_active ? options.hinge_lambda * out.constraint_gap : 0.0;
  if (!backprop) return out;

  const double s = options.backprop_scale;
  const double hinge = hinge_active ? options.hinge_lambda : 0.0;
  const auto w = log_mean_exp_weights(b, lme, options.ema);
  Tensor2D g1(n, 1);
  Tensor2D g2(2 * n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    g1(i, 0) = s * (-1.0 + hinge) / nd;
    g2(i, 0) = -s * hinge / nd;
    g2(n + i, 0) = s * w[i];
  }
  const Tensor2D in1 = m1.backward(g1);
  const Tensor2D in2 = m2.backward(g2);
  out.grad_z_joint = slice_cols(in1, dx, dz);
  const Tensor2D m2_joint = slice_cols(slice_rows(in2, 0, n), dx, dz);
  for (std::size_t i = 0; i < out.grad_z_joint.size(); ++i) {
    out.grad_z_joint.values()[i] += m2_joint.values()[i];
  }
  out.grad_z_marginal = slice_cols(slice_rows(in2, n, n), dx, dz);
  return out;
}

double constraint_gap(const DenseNet& m1, const DenseNet& m2, const MiBatch& batch) {
  batch.validate();
  check_critic(m1, batch, "constraint_gap (M1)");
  check_critic(m2, batch, "constraint_gap (M2)");
  const Tensor2D joint_in = batch.joint_input();
  const auto a = column(m1.predict(joint_in), 0, batch.size());
  const auto c = column(m2.predict(joint_in), 0, batch.size());
  return mean(a) - mean(c);
}

LossValue recon_mi_baseline(DenseNet& decoder, const Tensor2D& x, const Tensor2D& z, double backprop_scale) {
  if (decoder.input_dim() != z.cols() || decoder.output_dim() != x.cols()) {
    throw ValidationError("recon_mi_baseline: decoder maps " + std::to_string(decoder.input_dim()) + " -> " +
                          std::to_string(decoder.output_dim()) + ", data needs " + std::to_string(z.cols()) +
                          " -> " + std::to_string(x.cols()));
  }
  if (x.rows() != z.rows() || x.rows() == 0) throw ValidationError("recon_mi_baseline: row counts differ or empty");
  const bool backprop = backprop_scale != 0.0;
  const Tensor2D recon = backprop ? decoder.forward(z) : decoder.predict(z);
  const double n = static_cast<double>(x.rows());
  LossValue out;
  Tensor2D grad(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double e = recon(r, c) - x(r, c);
      out.value += e * e;
      grad(r, c) = backprop_scale * 2.0 * e / n;
    }
  }
  out.value /= n;
  if (backprop) out.grad = decoder.backward(grad);
  return out;
}

LossBreakdown LossBreakdown::combine(double l_cls, double l_kld, double l_mi, double l_ent, double alpha, double beta,
                                     double gamma) {
  return {l_cls, l_kld, l_mi, l_ent, l_cls + alpha * l_kld + beta * l_mi + gamma * l_ent};
}

}  // namespace infomaxda
