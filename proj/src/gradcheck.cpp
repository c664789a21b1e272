#include "infomaxda/gradcheck.hpp"

#include <string>
#include <vector>

#include "infomaxda/errors.hpp"
#include "infomaxda/losses.hpp"

namespace infomaxda {

namespace {

constexpr std::size_t kRows = 12;
constexpr std::size_t kInput = 3;
constexpr std::size_t kLatent = 4;

Tensor2D random_tensor(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor2D t(rows, cols);
  for (double& v : t.values()) v = rng.normal();
  return t;
}

// Adds the marginal-row gradient back onto the joint rows it was permuted from.
Tensor2D scatter(const MiBatch& batch, Tensor2D grad_joint, const Tensor2D& grad_marginal) {
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t j = 0; j < grad_marginal.cols(); ++j) {
      grad_joint(batch.marginal_index[i], j) += grad_marginal(i, j);
    }
  }
  return grad_joint;
}

oracle::CheckReport check(std::vector<DenseNet*> nets, const oracle::LossEvaluator& f, double tolerance) {
  return oracle::finite_diff_gradcheck(nets, f, 1e-5, tolerance);
}

}  // namespace

oracle::CheckReport run_loss_gradcheck(std::string_view loss, std::uint64_t seed, double tolerance) {
  Rng rng(seed);
  const Tensor2D x = random_tensor(kRows, kInput, rng);
  const Tensor2D x2 = random_tensor(kRows, kInput, rng);
  std::vector<std::size_t> labels(kRows);
  for (std::size_t& l : labels) l = rng.uniform_index(3);
  const auto perm = rng.permutation(kRows);
  DenseNet encoder({kInput, 6, kLatent}, Activation::tanh, rng);

  oracle::CheckReport report;
  if (loss == "cls" || loss == "ent") {
    DenseNet classifier({kLatent, 5, 3}, Activation::elu, rng);
    const bool cls = loss == "cls";
    report = check({&encoder, &classifier},
                   [&](bool backprop) {
                     if (!backprop) {
                       const Tensor2D logits = classifier.predict(encoder.predict(x));
                       return cls ? classification_loss(logits, labels).value : entropy_penalty(logits).value;
                     }
                     const Tensor2D logits = classifier.forward(encoder.forward(x));
                     const LossValue v = cls ? classification_loss(logits, labels) : entropy_penalty(logits);
                     encoder.backward(classifier.backward(v.grad));
                     return v.value;
                   },
                   tolerance);
  } else if (loss == "kld") {
    DenseNet target_encoder({kInput, 6, kLatent}, Activation::elu, rng);
    report = check({&encoder, &target_encoder},
                   [&](bool backprop) {
                     if (!backprop) return latent_kld(encoder.predict(x), target_encoder.predict(x2)).value;
                     const KldValue v = latent_kld(encoder.forward(x), target_encoder.forward(x2));
                     encoder.backward(v.grad_source);
                     target_encoder.backward(v.grad_target);
                     return v.value;
                   },
                   tolerance);
  } else if (loss == "mi" || loss == "dv_single") {
    DenseNet m1({kInput + kLatent, 8, 1}, Activation::elu, rng);
    DenseNet m2({kInput + kLatent, 8, 1}, Activation::elu, rng);
    const bool two = loss == "mi";
    std::vector<DenseNet*> nets{&encoder, &m1};
    if (two) nets.push_back(&m2);
    const CriticOptions predict_only{0.0, two ? 0.5 : 0.0, nullptr};
    const CriticOptions train{1.0, two ? 0.5 : 0.0, nullptr};
    report = check(nets,
                   [&](bool backprop) {
                     const Tensor2D z = backprop ? encoder.forward(x) : encoder.predict(x);
                     const auto batch = MiBatch::from_permutation(x, z, perm);
                     const CriticOptions& opt = backprop ? train : predict_only;
                     CriticResult r = two ? mi_loss(m1, m2, batch, opt) : dv_bound_single(m1, batch, opt);
                     if (backprop) encoder.backward(scatter(batch, std::move(r.grad_z_joint), r.grad_z_marginal));
                     return r.value + r.hinge_penalty;
                   },
                   tolerance);
  } else if (loss == "recon") {
    DenseNet decoder({kLatent, 6, kInput}, Activation::tanh, rng);
    report = check({&encoder, &decoder},
                   [&](bool backprop) {
                     if (!backprop) return recon_mi_baseline(decoder, x, encoder.predict(x)).value;
                     const LossValue v = recon_mi_baseline(decoder, x, encoder.forward(x), 1.0);
                     encoder.backward(v.grad);
                     return v.value;
                   },
                   tolerance);
  } else {
    throw ValidationError("unknown loss '" + std::string(loss) + "' (cls, kld, ent, mi, dv_single, recon)");
  }
  report.name = "gradcheck:" + std::string(loss);
  return report;
}

}  // namespace infomaxda
