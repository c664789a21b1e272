#include "infomaxda/trainer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "infomaxda/errors.hpp"

namespace infomaxda {

namespace {

// Stream indices for derive_seed; fixed so that runs differing only in
// ablation or estimator share initial weights and batch order.
enum Stream : std::uint64_t {
  kSourceBatches = 1,
  kTargetBatches = 2,
  kMarginal = 3,
  kHeldout = 4,
  kEncoderInit = 10,
  kClassifierInit = 11,
  kCriticJointInit = 12,
  kCriticMarginalInit = 13,
  kDecoderInit = 14,
};

std::vector<std::size_t> sizes(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

DenseNet make_net(std::vector<std::size_t> layer_sizes, Activation act, std::uint64_t seed, Stream stream) {
  Rng rng(derive_seed(seed, stream));
  return DenseNet(std::move(layer_sizes), act, rng);
}

std::vector<std::size_t> gather(const std::vector<std::size_t>& v, std::span<const std::size_t> index) {
  std::vector<std::size_t> out(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) out[i] = v[index[i]];
  return out;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalError(std::string(what) + " is non-finite");
}

std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c) {
    if (row[c] > row[best]) best = c;
  }
  return best;
}

struct HeldoutSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> heldout;
};

HeldoutSplit split_heldout(std::size_t n, double fraction, Rng& rng) {
  const auto perm = rng.permutation(n);
  std::size_t h = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  h = std::clamp<std::size_t>(h, 2, n >= 4 ? n - 2 : 2);
  if (n < 4) throw ValidationError("held-out split needs at least 4 target rows");
  HeldoutSplit s;
  s.heldout.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(h));
  s.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(h), perm.end());
  std::sort(s.heldout.begin(), s.heldout.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

void clip_and_step(std::span<DenseNet* const> nets, const TrainConfig& config) {
  if (config.clip_norm > 0.0) clip_global_grad_norm(nets, config.clip_norm);
  for (DenseNet* n : nets) n->sgd_step(config.lr, config.momentum);
}

class PhaseGuard {
 public:
  PhaseGuard(bool enabled, std::initializer_list<const DenseNet*> frozen, const char* phase)
      : enabled_(enabled), phase_(phase) {
    if (!enabled_) return;
    for (const DenseNet* n : frozen) {
      nets_.push_back(n);
      sums_.push_back(n->checksum());
    }
  }

  // Returns 1 when a check ran.
  std::size_t verify() const {
    if (!enabled_) return 0;
    for (std::size_t i = 0; i < nets_.size(); ++i) {
      if (nets_[i]->checksum() != sums_[i]) {
        throw std::logic_error(std::string(phase_) + " phase modified a frozen net");
      }
    }
    return 1;
  }

 private:
  bool enabled_;
  const char* phase_;
  std::vector<const DenseNet*> nets_;
  std::vector<std::uint64_t> sums_;
};

struct MiTerm {
  double l_mi = 0.0;
  double gap = 0.0;
  Tensor2D grad_z;  // w.r.t. z_joint rows, marginal contribution scattered back
};

// L_mi for the configured estimator; backprop_scale weights the gradient that
// flows back into z (the critics' own accumulators are left for the caller).
MiTerm mi_term(TrainedModel& m, Estimator estimator, const MiBatch& batch, double backprop_scale,
               double hinge_lambda, LogMeanExpEma* ema) {
  MiTerm t;
  Tensor2D grad_joint, grad_marginal;
  switch (estimator) {
    case Estimator::two_critic: {
      auto r = mi_loss(m.critic_joint, m.critic_marginal, batch, {backprop_scale, hinge_lambda, ema});
      t.l_mi = r.value;
      t.gap = r.constraint_gap;
      grad_joint = std::move(r.grad_z_joint);
      grad_marginal = std::move(r.grad_z_marginal);
      break;
    }
    case Estimator::mine_single: {
      auto r = dv_bound_single(m.critic_joint, batch, {-backprop_scale, 0.0, ema});
      t.l_mi = -r.value;
      grad_joint = std::move(r.grad_z_joint);
      grad_marginal = std::move(r.grad_z_marginal);
      break;
    }
    case Estimator::autoencoder: {
      auto r = recon_mi_baseline(*m.decoder, batch.x_joint, batch.z_joint, backprop_scale);
      t.l_mi = r.value;
      grad_joint = std::move(r.grad);
      break;
    }
  }
  if (backprop_scale != 0.0) {
    t.grad_z = std::move(grad_joint);
    if (!grad_marginal.empty()) {
      for (std::size_t i = 0; i < batch.size(); ++i) {
        auto src = grad_marginal.row(i);
        auto dst = t.grad_z.row(batch.marginal_index[i]);
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
      }
    }
  }
  return t;
}

std::vector<DenseNet*> critic_nets(TrainedModel& m) {
  switch (m.config.estimator) {
    case Estimator::two_critic:
      return {&m.critic_joint, &m.critic_marginal};
    case Estimator::mine_single:
      return {&m.critic_joint};
    case Estimator::autoencoder:
      return {&*m.decoder};
  }
  return {};
}

}  // namespace

std::string_view to_string(Ablation a) {
  switch (a) {
    case Ablation::none:
      return "none";
    case Ablation::k:
      return "k";
    case Ablation::m:
      return "m";
    case Ablation::km:
      return "km";
  }
  return "km";
}

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::two_critic:
      return "two_critic";
    case Estimator::mine_single:
      return "mine_single";
    case Estimator::autoencoder:
      return "autoencoder";
  }
  return "two_critic";
}

Ablation parse_ablation(std::string_view name) {
  if (name == "none") return Ablation::none;
  if (name == "k") return Ablation::k;
  if (name == "m") return Ablation::m;
  if (name == "km") return Ablation::km;
  throw ValidationError("unknown ablation mode '" + std::string(name) + "' (none, k, m, km)");
}

Estimator parse_estimator(std::string_view name) {
  if (name == "two_critic") return Estimator::two_critic;
  if (name == "mine_single") return Estimator::mine_single;
  if (name == "autoencoder") return Estimator::autoencoder;
  throw ValidationError("unknown estimator '" + std::string(name) + "' (two_critic, mine_single, autoencoder)");
}

void TrainConfig::validate() const {
  auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!finite_nonneg(alpha)) throw ValidationError("train.alpha must be >= 0");
  if (!finite_nonneg(beta)) throw ValidationError("train.beta must be >= 0");
  if (!finite_nonneg(gamma)) throw ValidationError("train.gamma must be >= 0");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ValidationError("train.lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("train.momentum must lie in [0, 1)");
  if (batch_size < 2) throw ValidationError("train.batch_size must be >= 2");
  if (critic_steps < 1) throw ValidationError("train.critic_steps must be >= 1");
  if (!finite_nonneg(hinge_lambda)) throw ValidationError("train.hinge_lambda must be >= 0");
  if (ema_rate && !(*ema_rate > 0.0 && *ema_rate < 1.0)) throw ValidationError("train.ema_rate must lie in (0, 1)");
  if (!finite_nonneg(clip_norm)) throw ValidationError("train.clip_norm must be >= 0");
  if (!finite_nonneg(model_clip_norm)) throw ValidationError("train.model_clip_norm must be >= 0");
  if (!(heldout_fraction > 0.0 && heldout_fraction < 1.0)) {
    throw ValidationError("train.heldout_fraction must lie in (0, 1)");
  }
  if (arch.latent_dim == 0) throw ValidationError("arch.latent_dim must be >= 1");
}

double TrainConfig::effective_alpha() const {
  return ablation == Ablation::k || ablation == Ablation::km ? alpha : 0.0;
}

double TrainConfig::effective_beta() const {
  return ablation == Ablation::m || ablation == Ablation::km ? beta : 0.0;
}

double TrainConfig::effective_gamma() const { return ablation == Ablation::none || !entropy ? 0.0 : gamma; }

TrainedModel train_dpn(const TrainConfig& config, const LabeledSet& source, const UnlabeledSet& target,
                       const EvaluationSets& eval) {
  config.validate();
  source.validate();
  const std::size_t dx = source.x.cols();
  if (target.x.cols() != dx) {
    throw ValidationError("source has " + std::to_string(dx) + " features, target has " +
                          std::to_string(target.x.cols()));
  }
  if (config.batch_size > std::min(source.size(), target.size())) {
    throw ValidationError("train.batch_size exceeds the smaller domain (" +
                          std::to_string(std::min(source.size(), target.size())) + " rows)");
  }
  if (eval.target && eval.target->x.rows() != target.x.rows()) {
    throw ValidationError("target evaluation labels do not match the target set");
  }

  const std::uint64_t seed = config.seed;
  const Architecture& arch = config.arch;
  const std::size_t dz = arch.latent_dim;
  TrainedModel m{
      make_net(sizes(dx, arch.encoder_hidden, dz), arch.encoder_activation, seed, kEncoderInit),
      make_net(sizes(dz, arch.classifier_hidden, source.class_count), arch.classifier_activation, seed,
               kClassifierInit),
      make_net(sizes(dx + dz, arch.critic_hidden, 1), arch.critic_activation, seed, kCriticJointInit),
      make_net(sizes(dx + dz, arch.critic_hidden, 1), arch.critic_activation, seed, kCriticMarginalInit),
      std::nullopt,
      config,
      {},
      {},
      0};
  if (config.estimator == Estimator::autoencoder) {
    m.decoder = make_net(sizes(dz, arch.decoder_hidden, dx), arch.decoder_activation, seed, kDecoderInit);
  }

  Rng heldout_rng(derive_seed(seed, kHeldout));
  const HeldoutSplit split = split_heldout(target.size(), config.heldout_fraction, heldout_rng);
  const Tensor2D target_train = gather_rows(target.x, split.train);
  const Tensor2D heldout_x = gather_rows(target.x, split.heldout);
  const auto heldout_perm = heldout_rng.permutation(heldout_x.rows());

  BatchStream source_stream(source.size(), config.batch_size, Rng(derive_seed(seed, kSourceBatches)));
  BatchStream target_stream(target_train.rows(), config.batch_size, Rng(derive_seed(seed, kTargetBatches)));
  Rng marginal_rng(derive_seed(seed, kMarginal));
  const std::size_t batches = std::max(source_stream.batches_per_epoch(), target_stream.batches_per_epoch());

  const double alpha = config.effective_alpha();
  const double beta = config.effective_beta();
  const double gamma = config.effective_gamma();
  std::optional<LogMeanExpEma> ema;
  if (config.ema_rate) ema = LogMeanExpEma{*config.ema_rate, std::nullopt};
  const auto critics = critic_nets(m);

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    double sum_cls = 0.0, sum_kld = 0.0, sum_mi = 0.0, sum_ent = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      try {
        const auto& sb = source_stream.next();
        const auto& tb = target_stream.next();
        const Tensor2D xs = gather_rows(source.x, sb);
        const auto ys = gather(source.y, sb);
        const Tensor2D xt = gather_rows(target_train, tb);
        const std::size_t ns = xs.rows();
        const std::size_t nt = xt.rows();
        std::vector<std::size_t> perm = marginal_rng.permutation(nt);

        // Critic phase: G and F fixed.
        for (std::size_t step = 0; step < config.critic_steps; ++step) {
          if (step > 0) perm = marginal_rng.permutation(nt);
          PhaseGuard guard(config.verify_phase_isolation, {&m.encoder, &m.classifier}, "critic");
          const auto batch = MiBatch::from_permutation(xt, m.encoder.predict(xt), perm);
          // Critic objective: L_mi (+ hinge) for the critics, reconstruction for the decoder.
          double critic_value = 0.0;
          switch (config.estimator) {
            case Estimator::two_critic:
              critic_value = mi_loss(m.critic_joint, m.critic_marginal, batch,
                                     {1.0, config.hinge_lambda, ema ? &*ema : nullptr})
                                 .value;
              break;
            case Estimator::mine_single:
              critic_value = dv_bound_single(m.critic_joint, batch, {-1.0, 0.0, ema ? &*ema : nullptr}).value;
              break;
            case Estimator::autoencoder:
              critic_value = recon_mi_baseline(*m.decoder, batch.x_joint, batch.z_joint, 1.0).value;
              break;
          }
          require_finite(critic_value, "critic-phase L_mi");
          clip_and_step(critics, config);
          m.phase_checks += guard.verify();
        }

        // Model phase: critics fixed, fresh forward passes.
        PhaseGuard guard(config.verify_phase_isolation,
                         {&m.critic_joint, &m.critic_marginal, m.decoder ? &*m.decoder : &m.critic_joint}, "model");
        const Tensor2D z_all = m.encoder.forward(concat_rows(xs, xt));
        const Tensor2D logits = m.classifier.forward(z_all);
        const Tensor2D zs = slice_rows(z_all, 0, ns);
        const Tensor2D zt = slice_rows(z_all, ns, nt);
        const LossValue cls = classification_loss(slice_rows(logits, 0, ns), ys);
        const LossValue ent = entropy_penalty(slice_rows(logits, ns, nt));
        const KldValue kld = latent_kld(zs, zt);
        const auto batch = MiBatch::from_permutation(xt, zt, perm);
        MiTerm mi = mi_term(m, config.estimator, batch, beta, 0.0, nullptr);
        for (DenseNet* c : critics) c->zero_grad();
        require_finite(cls.value, "L_cls");
        require_finite(kld.value, "L_kld");
        require_finite(mi.l_mi, "L_mi");
        require_finite(ent.value, "L_ent");

        Tensor2D logit_grad(ns + nt, logits.cols());
        for (std::size_t r = 0; r < ns; ++r) {
          std::copy(cls.grad.row(r).begin(), cls.grad.row(r).end(), logit_grad.row(r).begin());
        }
        if (gamma != 0.0) {
          for (std::size_t r = 0; r < nt; ++r) {
            for (std::size_t c = 0; c < logits.cols(); ++c) logit_grad(ns + r, c) = gamma * ent.grad(r, c);
          }
        }
        Tensor2D z_grad = m.classifier.backward(logit_grad);
        if (alpha != 0.0) {
          for (std::size_t r = 0; r < ns; ++r) {
            for (std::size_t j = 0; j < dz; ++j) z_grad(r, j) += alpha * kld.grad_source(r, j);
          }
          for (std::size_t r = 0; r < nt; ++r) {
            for (std::size_t j = 0; j < dz; ++j) z_grad(ns + r, j) += alpha * kld.grad_target(r, j);
          }
        }
        if (beta != 0.0) {
          for (std::size_t r = 0; r < nt; ++r) {
            for (std::size_t j = 0; j < dz; ++j) z_grad(ns + r, j) += mi.grad_z(r, j);
          }
        }
        m.encoder.backward(z_grad);
        const std::array<DenseNet*, 2> model_nets{&m.encoder, &m.classifier};
        if (config.model_clip_norm > 0.0) clip_global_grad_norm(model_nets, config.model_clip_norm);
        for (DenseNet* n : model_nets) n->sgd_step(config.lr, config.momentum);
        m.phase_checks += guard.verify();

        sum_cls += cls.value;
        sum_kld += kld.value;
        sum_mi += mi.l_mi;
        sum_ent += ent.value;
      } catch (const NumericalError& e) {
        throw NumericalError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(b + 1) + ": " +
                             e.what());
      }
    }

    MetricsRecord rec;
    rec.epoch = epoch;
    const double nb = static_cast<double>(batches);
    rec.l_cls = sum_cls / nb;
    rec.l_kld = sum_kld / nb;
    rec.l_mi = sum_mi / nb;
    rec.l_ent = sum_ent / nb;
    const auto held = MiBatch::from_permutation(heldout_x, m.encoder.predict(heldout_x), heldout_perm);
    const MiTerm h = mi_term(m, config.estimator, held, 0.0, 0.0, nullptr);
    rec.mi_estimate = -h.l_mi;
    rec.constraint_gap = h.gap;
    rec.source_acc = evaluate(m, source);
    rec.target_acc = eval.target ? evaluate(m, *eval.target) : std::numeric_limits<double>::quiet_NaN();
    m.history.push_back(rec);
    std::vector<double> extra;
    for (const auto& set : eval.extra) extra.push_back(evaluate(m, set));
    m.extra_accuracy.push_back(std::move(extra));
  }
  return m;
}

double evaluate(const DenseNet& encoder, const DenseNet& classifier, const LabeledSet& data) {
  data.validate();
  if (data.x.cols() != encoder.input_dim()) {
    throw ValidationError("evaluate: data has " + std::to_string(data.x.cols()) + " features, model expects " +
                          std::to_string(encoder.input_dim()));
  }
  const Tensor2D logits = classifier.predict(encoder.predict(data.x));
  std::size_t correct = 0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    if (argmax(logits.row(r)) == data.y[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

double evaluate(const TrainedModel& model, const LabeledSet& data) {
  return evaluate(model.encoder, model.classifier, data);
}

MiCurve estimate_mi_run(const TrainConfig& config, const PairedSamples& paired) {
  config.validate();
  if (config.estimator == Estimator::autoencoder) {
    throw ValidationError("estimate_mi_run: estimator must be two_critic or mine_single");
  }
  if (paired.x.rows() != paired.z.rows()) throw ValidationError("estimate_mi_run: x and z row counts differ");
  const std::size_t dx = paired.x.cols();
  const std::size_t dz = paired.z.cols();
  const auto critic_sizes = sizes(dx + dz, config.arch.critic_hidden, 1);
  DenseNet m1 = make_net(critic_sizes, config.arch.critic_activation, config.seed, kCriticJointInit);
  DenseNet m2 = make_net(critic_sizes, config.arch.critic_activation, config.seed, kCriticMarginalInit);
  const bool two = config.estimator == Estimator::two_critic;
  std::vector<DenseNet*> nets{&m1};
  if (two) nets.push_back(&m2);

  Rng heldout_rng(derive_seed(config.seed, kHeldout));
  const HeldoutSplit split = split_heldout(paired.x.rows(), config.heldout_fraction, heldout_rng);
  const Tensor2D train_x = gather_rows(paired.x, split.train);
  const Tensor2D train_z = gather_rows(paired.z, split.train);
  const auto held = MiBatch::resampled(gather_rows(paired.x, split.heldout), gather_rows(paired.z, split.heldout),
                                       heldout_rng);
  if (config.batch_size > train_x.rows()) throw ValidationError("train.batch_size exceeds the training split");

  Rng batch_rng(derive_seed(config.seed, kTargetBatches));
  Rng marginal_rng(derive_seed(config.seed, kMarginal));
  std::optional<LogMeanExpEma> ema;
  if (config.ema_rate) ema = LogMeanExpEma{*config.ema_rate, std::nullopt};

  MiCurve curve;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (const auto& idx : batch_iterator(train_x.rows(), config.batch_size, batch_rng)) {
      try {
        const auto batch = MiBatch::resampled(gather_rows(train_x, idx), gather_rows(train_z, idx), marginal_rng);
        if (two) {
          mi_loss(m1, m2, batch, {1.0, config.hinge_lambda, ema ? &*ema : nullptr});
        } else {
          dv_bound_single(m1, batch, {-1.0, 0.0, ema ? &*ema : nullptr});
        }
        clip_and_step(nets, config);
        ++curve.critic_steps;
      } catch (const NumericalError& e) {
        throw NumericalError("epoch " + std::to_string(epoch) + ", step " + std::to_string(curve.critic_steps + 1) +
                             ": " + e.what());
      }
    }
    MiCurvePoint p;
    p.epoch = epoch;
    if (two) {
      const auto r = mi_loss(m1, m2, held);
      p.estimate = -r.value;
      p.constraint_gap = r.constraint_gap;
    } else {
      p.estimate = dv_bound_single(m1, held).value;
    }
    if (!std::isfinite(p.estimate)) {
      throw NumericalError("epoch " + std::to_string(epoch) + ": held-out estimate is non-finite");
    }
    curve.points.push_back(p);
  }
  return curve;
}

}  // namespace infomaxda
