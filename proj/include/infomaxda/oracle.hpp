#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "infomaxda/dense_net.hpp"
#include "infomaxda/rng.hpp"
#include "infomaxda/tensor.hpp"

// Exact reference computations. Nothing in here calls into the loss or
// trainer code; the checks only compare against them.
namespace infomaxda::oracle {

/// Outcome of a numeric check. passed <=> max_abs_violation <= tolerance, so a
/// skipped check carries a NaN violation and passed == false.
struct CheckReport {
  std::string name;
  std::size_t instances_run = 0;
  double max_abs_violation = 0.0;
  std::uint64_t worst_case_seed = 0;
  double tolerance = 0.0;
  bool passed = false;
  bool skipped = false;
  std::string detail;
  // Bound checks only: min over instances of (MI - bound).
  std::optional<double> tightest_slack;

  void finalize();
  // Keeps the larger violation and its seed.
  void absorb(double violation, std::uint64_t seed);
};

// Finite distribution over |X| x |Z| cells, 2 <= |X|, |Z| <= 16.
class DiscreteJoint {
 public:
  explicit DiscreteJoint(Tensor2D probs);

  static DiscreteJoint random(std::size_t nx, std::size_t nz, Rng& rng);
  static DiscreteJoint product(std::span<const double> px, std::span<const double> pz);

  std::size_t x_size() const { return probs_.rows(); }
  std::size_t z_size() const { return probs_.cols(); }
  double operator()(std::size_t x, std::size_t z) const { return probs_(x, z); }
  const Tensor2D& probs() const { return probs_; }
  std::vector<double> marginal_x() const;
  std::vector<double> marginal_z() const;

 private:
  Tensor2D probs_;
};

// Probability vector over at least two outcomes.
class DiscreteDist {
 public:
  explicit DiscreteDist(std::vector<double> probs);
  static DiscreteDist random(std::size_t n, Rng& rng);
  static DiscreteDist point_mass(std::size_t n, std::size_t at);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

// Shannon entropy in nats, 0 log 0 = 0.
double entropy(std::span<const double> probs);

// -(dims / 2) ln(1 - rho^2).
double gaussian_mi(double rho, std::size_t dims);

// KL(N(mu1, diag var1) || N(mu2, diag var2)).
double gaussian_kld(std::span<const double> mu1, std::span<const double> var1, std::span<const double> mu2,
                    std::span<const double> var2);

/// sum p(x,z) log[p(x,z) / (p(x) p(z))]. Also evaluates H(X) - H(X|Z) through
/// H(X,Z) - H(Z) and throws std::logic_error if the two disagree beyond 1e-12.
double discrete_mi(const DiscreteJoint& joint);

/// KL(q(z) || p(z|x)) against -B + log p(x), B = E_q[log p(x,z)] - E_q[log q(z)].
CheckReport elbo_identity_check(const DiscreteDist& q, const DiscreteJoint& joint, std::size_t x_index,
                                double tolerance = 1e-9);

/// E[log p(x|z)] = -H(X|Z) and H(X) + E[log p(x|z)] = I(X;Z).
CheckReport infomax_identity_check(const DiscreteJoint& joint, double tolerance = 1e-12);

// E_joint[M] - log E_{p(x)p(z)}[e^M] for a tabulated critic.
double dv_bound(const DiscreteJoint& joint, const Tensor2D& critic);
// 0.5 (E_joint[M1] - log E_{p(x)p(z)}[e^{M2}]).
double two_critic_bound(const DiscreteJoint& joint, const Tensor2D& m1, const Tensor2D& m2);
double joint_expectation(const DiscreteJoint& joint, const Tensor2D& table);
// log p(x,z) / (p(x) p(z)); -inf where p(x,z) == 0.
Tensor2D optimal_critic(const DiscreteJoint& joint);

/// Draws n_critics tables M in [-3, 3] and as many (M1, M2) pairs ordered so
/// that E_joint[M2] >= E_joint[M1], and checks both bounds against the exact
/// MI. The violation is max(0, bound - MI).
CheckReport dv_inequality_check(const DiscreteJoint& joint, std::size_t n_critics, Rng& rng,
                                double tolerance = 1e-12);

// Suites over seeded random instances; instance i uses seed base_seed + i.
CheckReport run_elbo_suite(std::size_t instances, std::uint64_t base_seed, double tolerance = 1e-9);
CheckReport run_infomax_suite(std::size_t instances, std::uint64_t base_seed, double tolerance = 1e-12);
// Each instance: a random joint up to 8x8, one random critic and one
// constraint-satisfying pair.
CheckReport run_dv_suite(std::size_t instances, std::uint64_t base_seed, double tolerance = 1e-12);
// |dv_bound(optimal_critic) - MI| on the same random joints.
CheckReport run_dv_optimal_suite(std::size_t instances, std::uint64_t base_seed, double tolerance = 1e-10);

using LossEvaluator = std::function<double(bool backprop)>;

/// Central-difference gradient check over every parameter of `nets`.
///
/// `evaluate(true)` must run the loss and accumulate analytic gradients into
/// the nets (they are zeroed first); `evaluate(false)` must only return the
/// loss. Reports max |g_a - g_n| / max(1e-8, |g_a| + |g_n|). Nets using relu
/// are skipped with a "kink-unsafe" status.
CheckReport finite_diff_gradcheck(std::span<DenseNet* const> nets, const LossEvaluator& evaluate, double h = 1e-5,
                                  double tolerance = 1e-4);

// Sample Pearson r. Throws ValidationError on length mismatch, n < 2 or a
// zero-variance series.
double pearson_corr(std::span<const double> a, std::span<const double> b);

}  // namespace infomaxda::oracle
