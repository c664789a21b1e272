#include "infomaxda/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

#include "infomaxda/errors.hpp"

namespace infomaxda::oracle {

namespace {

constexpr double kNormTolerance = 1e-12;

double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

std::vector<double> exponential_weights(std::size_t n, Rng& rng) {
  std::vector<double> w(n);
  double sum = 0.0;
  for (double& v : w) {
    v = -std::log(1.0 - rng.uniform());
    sum += v;
  }
  for (double& v : w) v /= sum;
  return w;
}

std::string format_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

void CheckReport::finalize() { passed = !skipped && max_abs_violation <= tolerance; }

void CheckReport::absorb(double violation, std::uint64_t seed) {
  if (instances_run == 0 || violation > max_abs_violation) {
    max_abs_violation = violation;
    worst_case_seed = seed;
  }
  ++instances_run;
}

DiscreteJoint::DiscreteJoint(Tensor2D probs) : probs_(std::move(probs)) {
  if (probs_.rows() < 2 || probs_.rows() > 16 || probs_.cols() < 2 || probs_.cols() > 16) {
    throw ValidationError("DiscreteJoint: support sizes must lie in [2, 16]");
  }
  double sum = 0.0;
  for (double p : probs_.values()) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("DiscreteJoint: negative or non-finite probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kNormTolerance) throw ValidationError("DiscreteJoint: probabilities do not sum to 1");
}

DiscreteJoint DiscreteJoint::random(std::size_t nx, std::size_t nz, Rng& rng) {
  return DiscreteJoint(Tensor2D(nx, nz, exponential_weights(nx * nz, rng)));
}

DiscreteJoint DiscreteJoint::product(std::span<const double> px, std::span<const double> pz) {
  Tensor2D t(px.size(), pz.size());
  for (std::size_t x = 0; x < px.size(); ++x) {
    for (std::size_t z = 0; z < pz.size(); ++z) t(x, z) = px[x] * pz[z];
  }
  return DiscreteJoint(std::move(t));
}

std::vector<double> DiscreteJoint::marginal_x() const {
  std::vector<double> m(x_size(), 0.0);
  for (std::size_t x = 0; x < x_size(); ++x) {
    for (std::size_t z = 0; z < z_size(); ++z) m[x] += probs_(x, z);
  }
  return m;
}

std::vector<double> DiscreteJoint::marginal_z() const {
  std::vector<double> m(z_size(), 0.0);
  for (std::size_t x = 0; x < x_size(); ++x) {
    for (std::size_t z = 0; z < z_size(); ++z) m[z] += probs_(x, z);
  }
  return m;
}

DiscreteDist::DiscreteDist(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.size() < 2) throw ValidationError("DiscreteDist: support size must be at least 2");
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("DiscreteDist: negative or non-finite probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kNormTolerance) throw ValidationError("DiscreteDist: probabilities do not sum to 1");
}

DiscreteDist DiscreteDist::random(std::size_t n, Rng& rng) { return DiscreteDist(exponential_weights(n, rng)); }

DiscreteDist DiscreteDist::point_mass(std::size_t n, std::size_t at) {
  std::vector<double> p(n, 0.0);
  p.at(at) = 1.0;
  return DiscreteDist(std::move(p));
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) h -= xlogy(p, p);
  return h;
}

double gaussian_mi(double rho, std::size_t dims) {
  if (!(std::abs(rho) < 1.0)) throw ValidationError("gaussian_mi: |rho| must be < 1");
  if (dims == 0) throw ValidationError("gaussian_mi: dims must be >= 1");
  return -0.5 * static_cast<double>(dims) * std::log1p(-rho * rho);
}

double gaussian_kld(std::span<const double> mu1, std::span<const double> var1, std::span<const double> mu2,
                    std::span<const double> var2) {
  const std::size_t d = mu1.size();
  if (var1.size() != d || mu2.size() != d || var2.size() != d) {
    throw ValidationError("gaussian_kld: parameter lengths differ");
  }
  double kl = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    if (!(var1[j] > 0.0) || !(var2[j] > 0.0)) throw ValidationError("gaussian_kld: variances must be positive");
    const double diff = mu1[j] - mu2[j];
    kl += 0.5 * (std::log(var2[j] / var1[j]) + (var1[j] + diff * diff) / var2[j] - 1.0);
  }
  return kl;
}

double discrete_mi(const DiscreteJoint& joint) {
  const auto px = joint.marginal_x();
  const auto pz = joint.marginal_z();
  double mi = 0.0;
  for (std::size_t x = 0; x < joint.x_size(); ++x) {
    for (std::size_t z = 0; z < joint.z_size(); ++z) {
      const double p = joint(x, z);
      if (p > 0.0) mi += p * std::log(p / (px[x] * pz[z]));
    }
  }
  const double h_x_given_z = entropy(joint.probs().values()) - entropy(pz);
  const double via_entropies = entropy(px) - h_x_given_z;
  if (std::abs(mi - via_entropies) > 1e-12) {
    throw std::logic_error("discrete_mi: KL form " + format_g(mi) + " disagrees with H(X) - H(X|Z) " +
                           format_g(via_entropies));
  }
  return mi;
}

CheckReport elbo_identity_check(const DiscreteDist& q, const DiscreteJoint& joint, std::size_t x_index,
                                double tolerance) {
  if (q.size() != joint.z_size()) throw ValidationError("elbo_identity_check: q support differs from |Z|");
  if (x_index >= joint.x_size()) throw ValidationError("elbo_identity_check: x_index out of range");
  const double px = joint.marginal_x()[x_index];
  if (!(px > 0.0)) throw ValidationError("elbo_identity_check: p(x) is zero");

  double kl = 0.0;
  double expected_log_joint = 0.0;
  double expected_log_q = 0.0;
  for (std::size_t z = 0; z < q.size(); ++z) {
    if (q[z] == 0.0) continue;
    const double pxz = joint(x_index, z);
    if (!(pxz > 0.0)) throw ValidationError("elbo_identity_check: q is not absolutely continuous w.r.t. p(z|x)");
    kl += q[z] * std::log(q[z] / (pxz / px));
    expected_log_joint += q[z] * std::log(pxz);
    expected_log_q += q[z] * std::log(q[z]);
  }
  const double elbo = expected_log_joint - expected_log_q;
  CheckReport r;
  r.name = "elbo_identity";
  r.tolerance = tolerance;
  r.absorb(std::abs(kl - (-elbo + std::log(px))), 0);
  r.finalize();
  return r;
}

CheckReport infomax_identity_check(const DiscreteJoint& joint, double tolerance) {
  const auto px = joint.marginal_x();
  const auto pz = joint.marginal_z();
  double expected_log_cond = 0.0;
  for (std::size_t x = 0; x < joint.x_size(); ++x) {
    for (std::size_t z = 0; z < joint.z_size(); ++z) {
      const double p = joint(x, z);
      if (p > 0.0) expected_log_cond += p * std::log(p / pz[z]);
    }
  }
  const double h_x_given_z = entropy(joint.probs().values()) - entropy(pz);
  const double h_x = entropy(px);
  const double mi = discrete_mi(joint);
  CheckReport r;
  r.name = "infomax_identity";
  r.tolerance = tolerance;
  const double v1 = std::abs(expected_log_cond + h_x_given_z);
  const double v2 = std::abs((h_x - h_x_given_z) - mi);
  const double v3 = std::abs(h_x + expected_log_cond - mi);
  r.absorb(std::max({v1, v2, v3}), 0);
  r.finalize();
  return r;
}

double joint_expectation(const DiscreteJoint& joint, const Tensor2D& table) {
  double e = 0.0;
  for (std::size_t x = 0; x < joint.x_size(); ++x) {
    for (std::size_t z = 0; z < joint.z_size(); ++z) {
      if (joint(x, z) > 0.0) e += joint(x, z) * table(x, z);
    }
  }
  return e;
}

namespace {

double log_product_expectation_exp(const DiscreteJoint& joint, const Tensor2D& table) {
  const auto px = joint.marginal_x();
  const auto pz = joint.marginal_z();
  std::vector<double> terms;
  for (std::size_t x = 0; x < joint.x_size(); ++x) {
    for (std::size_t z = 0; z < joint.z_size(); ++z) {
      const double w = px[x] * pz[z];
      if (w > 0.0 && table(x, z) != -std::numeric_limits<double>::infinity()) {
        terms.push_back(std::log(w) + table(x, z));
      }
    }
  }
  if (terms.empty()) return -std::numeric_limits<double>::infinity();
  const double hi = *std::max_element(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += std::exp(t - hi);
  return hi + std::log(s);
}

void check_table(const DiscreteJoint& joint, const Tensor2D& t) {
  if (t.rows() != joint.x_size() || t.cols() != joint.z_size()) {
    throw ValidationError("critic table shape does not match the joint");
  }
}

Tensor2D random_table(std::size_t nx, std::size_t nz, Rng& rng) {
  Tensor2D t(nx, nz);
  for (double& v : t.values()) v = rng.uniform(-3.0, 3.0);
  return t;
}

}  // namespace

double dv_bound(const DiscreteJoint& joint, const Tensor2D& critic) {
  check_table(joint, critic);
  return joint_expectation(joint, critic) - log_product_expectation_exp(joint, critic);
}

double two_critic_bound(const DiscreteJoint& joint, const Tensor2D& m1, const Tensor2D& m2) {
  check_table(joint, m1);
  check_table(joint, m2);
  return 0.5 * (joint_expectation(joint, m1) - log_product_expectation_exp(joint, m2));
}

Tensor2D optimal_critic(const DiscreteJoint& joint) {
  const auto px = joint.marginal_x();
  const auto pz = joint.marginal_z();
  Tensor2D t(joint.x_size(), joint.z_size());
  for (std::size_t x = 0; x < joint.x_size(); ++x) {
    for (std::size_t z = 0; z < joint.z_size(); ++z) {
      const double p = joint(x, z);
      t(x, z) = p > 0.0 ? std::log(p / (px[x] * pz[z])) : -std::numeric_limits<double>::infinity();
    }
  }
  return t;
}

CheckReport dv_inequality_check(const DiscreteJoint& joint, std::size_t n_critics, Rng& rng, double tolerance) {
  if (n_critics == 0) throw ValidationError("dv_inequality_check: n_critics must be >= 1");
  const double mi = discrete_mi(joint);
  const std::size_t nx = joint.x_size();
  const std::size_t nz = joint.z_size();
  CheckReport r;
  r.name = "dv_inequality";
  r.tolerance = tolerance;
  double tightest = std::numeric_limits<double>::infinity();
  auto record = [&](double bound) {
    tightest = std::min(tightest, mi - bound);
    r.absorb(std::max(0.0, bound - mi), 0);
  };
  for (std::size_t k = 0; k < n_critics; ++k) {
    record(dv_bound(joint, random_table(nx, nz, rng)));
    Tensor2D m1 = random_table(nx, nz, rng);
    Tensor2D m2 = random_table(nx, nz, rng);
    if (joint_expectation(joint, m2) < joint_expectation(joint, m1)) std::swap(m1, m2);
    record(two_critic_bound(joint, m1, m2));
  }
  r.tightest_slack = tightest;
  r.finalize();
  return r;
}

CheckReport run_elbo_suite(std::size_t instances, std::uint64_t base_seed, double tolerance) {
  CheckReport r;
  r.name = "elbo";
  r.tolerance = tolerance;
  for (std::size_t i = 0; i < instances; ++i) {
    const std::uint64_t seed = base_seed + i;
    Rng rng(seed);
    const std::size_t nx = 2 + rng.uniform_index(7);
    const std::size_t nz = 2 + rng.uniform_index(7);
    const auto joint = DiscreteJoint::random(nx, nz, rng);
    const std::size_t x = rng.uniform_index(nx);
    // every fifth instance uses a point-mass q
    const auto q = i % 5 == 4 ? DiscreteDist::point_mass(nz, rng.uniform_index(nz)) : DiscreteDist::random(nz, rng);
    r.absorb(elbo_identity_check(q, joint, x, tolerance).max_abs_violation, seed);
  }
  r.finalize();
  return r;
}

CheckReport run_infomax_suite(std::size_t instances, std::uint64_t base_seed, double tolerance) {
  CheckReport r;
  r.name = "infomax";
  r.tolerance = tolerance;
  for (std::size_t i = 0; i < instances; ++i) {
    const std::uint64_t seed = base_seed + i;
    Rng rng(seed);
    const auto joint = DiscreteJoint::random(2 + rng.uniform_index(7), 2 + rng.uniform_index(7), rng);
    r.absorb(infomax_identity_check(joint, tolerance).max_abs_violation, seed);
  }
  r.finalize();
  return r;
}

CheckReport run_dv_suite(std::size_t instances, std::uint64_t base_seed, double tolerance) {
  CheckReport r;
  r.name = "dv";
  r.tolerance = tolerance;
  double tightest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < instances; ++i) {
    const std::uint64_t seed = base_seed + i;
    Rng rng(seed);
    const auto joint = DiscreteJoint::random(2 + rng.uniform_index(7), 2 + rng.uniform_index(7), rng);
    const auto inner = dv_inequality_check(joint, 1, rng, tolerance);
    r.absorb(inner.max_abs_violation, seed);
    tightest = std::min(tightest, *inner.tightest_slack);
  }
  r.tightest_slack = tightest;
  r.finalize();
  return r;
}

CheckReport run_dv_optimal_suite(std::size_t instances, std::uint64_t base_seed, double tolerance) {
  CheckReport r;
  r.name = "dv_optimal_critic";
  r.tolerance = tolerance;
  for (std::size_t i = 0; i < instances; ++i) {
    const std::uint64_t seed = base_seed + i;
    Rng rng(seed);
    const auto joint = DiscreteJoint::random(2 + rng.uniform_index(7), 2 + rng.uniform_index(7), rng);
    r.absorb(std::abs(dv_bound(joint, optimal_critic(joint)) - discrete_mi(joint)), seed);
  }
  r.finalize();
  return r;
}

CheckReport finite_diff_gradcheck(std::span<DenseNet* const> nets, const LossEvaluator& evaluate, double h,
                                  double tolerance) {
  CheckReport r;
  r.name = "gradcheck";
  r.tolerance = tolerance;
  for (const DenseNet* net : nets) {
    if (net->uses_activation(Activation::relu)) {
      r.skipped = true;
      r.max_abs_violation = std::numeric_limits<double>::quiet_NaN();
      r.detail = "kink-unsafe: relu activation";
      r.finalize();
      return r;
    }
  }
  if (!(h >= 1e-7 && h <= 1e-3)) throw ValidationError("finite_diff_gradcheck: h must lie in [1e-7, 1e-3]");

  for (DenseNet* net : nets) net->zero_grad();
  const double base = evaluate(true);
  if (!std::isfinite(base)) throw NumericalError("finite_diff_gradcheck: loss is non-finite");

  for (std::size_t k = 0; k < nets.size(); ++k) {
    DenseNet& net = *nets[k];
    for (std::size_t i = 0; i < net.parameter_count(); ++i) {
      const double analytic = net.gradient(i);
      const double saved = net.parameter(i);
      net.parameter(i) = saved + h;
      const double up = evaluate(false);
      net.parameter(i) = saved - h;
      const double down = evaluate(false);
      net.parameter(i) = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericalError("finite_diff_gradcheck: loss non-finite at perturbed point (net " + std::to_string(k) +
                             ", parameter " + std::to_string(i) + ")");
      }
      const double numeric = (up - down) / (2.0 * h);
      const double rel = std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      if (r.instances_run == 0 || rel > r.max_abs_violation) {
        r.detail = "net " + std::to_string(k) + " parameter " + std::to_string(i) + ": analytic " +
                   format_g(analytic) + ", numeric " + format_g(numeric);
      }
      r.absorb(rel, i);
    }
  }
  for (DenseNet* net : nets) net->zero_grad();
  r.finalize();
  return r;
}

double pearson_corr(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("pearson_corr: series lengths differ");
  if (a.size() < 2) throw ValidationError("pearson_corr: need at least 2 points");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw ValidationError("pearson_corr: zero variance");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace infomaxda::oracle
