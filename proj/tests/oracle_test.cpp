#include <doctest.h>

#include <cmath>
#include <limits>

#include "infomaxda/errors.hpp"
#include "infomaxda/gradcheck.hpp"
#include "infomaxda/oracle.hpp"

using namespace infomaxda;
using namespace infomaxda::oracle;

TEST_CASE("closed-form reference values") {
  CHECK(gaussian_mi(0.9, 1) == doctest::Approx(0.83036560341082545401).epsilon(1e-15));
  CHECK(gaussian_mi(0.5, 4) == doctest::Approx(0.57536414490356185488).epsilon(1e-15));
  CHECK(gaussian_mi(0.0, 3) == 0.0);
  const std::vector<double> m{0.0}, v2{2.0}, v1{1.0};
  CHECK(gaussian_kld(m, v2, m, v1) == doctest::Approx(0.15342640972002734529).epsilon(1e-15));
  CHECK(gaussian_kld(m, v1, m, v1) == 0.0);
  const std::vector<double> p{0.5, 0.5};
  CHECK(entropy(p) == doctest::Approx(std::log(2.0)));
  const std::vector<double> q{1.0, 0.0};
  CHECK(entropy(q) == 0.0);
}

TEST_CASE("gaussian mi grows with |rho|") {
  double prev = -1.0;
  for (int i = 0; i <= 19; ++i) {
    const double mi = gaussian_mi(i / 20.0, 2);
    CHECK(mi > prev);
    CHECK(gaussian_mi(-i / 20.0, 2) == mi);
    prev = mi;
  }
}

TEST_CASE("discrete mi") {
  const std::vector<double> px{0.3, 0.7}, pz{0.2, 0.5, 0.3};
  CHECK(std::abs(discrete_mi(DiscreteJoint::product(px, pz))) < 1e-15);
  // Perfectly coupled fair bit.
  const DiscreteJoint copy(Tensor2D::from_rows({{0.5, 0.0}, {0.0, 0.5}}));
  CHECK(discrete_mi(copy) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    const auto j = DiscreteJoint::random(2 + i % 5, 2 + i % 7, rng);
    const double mi = discrete_mi(j);
    CHECK(mi >= -1e-15);
    CHECK(mi <= entropy(j.marginal_x()) + 1e-12);
    CHECK(mi <= entropy(j.marginal_z()) + 1e-12);
  }
  CHECK_THROWS_AS(DiscreteJoint(Tensor2D::from_rows({{0.5, 0.6}, {0.0, 0.0}})), ValidationError);
  CHECK_THROWS_AS(DiscreteJoint(Tensor2D(1, 3, 1.0 / 3.0)), ValidationError);
}

TEST_CASE("donsker-varadhan bounds") {
  const DiscreteJoint j(Tensor2D::from_rows({{0.4, 0.1}, {0.1, 0.4}}));
  CHECK(dv_bound(j, optimal_critic(j)) == doctest::Approx(discrete_mi(j)).epsilon(1e-14));
  CHECK(dv_bound(j, Tensor2D(2, 2, 0.0)) == doctest::Approx(0.0).epsilon(1e-15));
  // Adding a constant to the critic leaves the bound unchanged.
  const auto m = Tensor2D::from_rows({{1.0, -0.5}, {0.2, 0.7}});
  Tensor2D shifted = m;
  for (double& v : shifted.values()) v += 3.0;
  CHECK(dv_bound(j, shifted) == doctest::Approx(dv_bound(j, m)).epsilon(1e-14));
  CHECK(two_critic_bound(j, m, m) == doctest::Approx(0.5 * dv_bound(j, m)).epsilon(1e-14));
  // A zero cell gives a -inf optimal critic entry.
  const DiscreteJoint sparse(Tensor2D::from_rows({{0.5, 0.0}, {0.25, 0.25}}));
  CHECK(optimal_critic(sparse)(0, 1) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("identity and bound suites") {
  for (const CheckReport& r : {run_elbo_suite(200, 7), run_infomax_suite(200, 7), run_dv_suite(200, 7),
                               run_dv_optimal_suite(200, 7)}) {
    INFO(r.name << " " << r.detail);
    CHECK(r.passed);
    CHECK(r.instances_run >= 200);
    CHECK(r.max_abs_violation <= r.tolerance);
  }
  const CheckReport dv = run_dv_suite(50, 3);
  REQUIRE(dv.tightest_slack.has_value());
  CHECK(*dv.tightest_slack >= -1e-12);
  // A negative tolerance can never be met.
  CHECK_FALSE(run_infomax_suite(5, 1, -1.0).passed);
}

TEST_CASE("single-instance checks") {
  Rng rng(2);
  const auto joint = DiscreteJoint::random(3, 4, rng);
  const auto q = DiscreteDist::random(4, rng);
  CHECK(elbo_identity_check(q, joint, 1).passed);
  CHECK(infomax_identity_check(joint).passed);
  CHECK(dv_inequality_check(joint, 10, rng).passed);
  CHECK_THROWS_AS(elbo_identity_check(q, joint, 3), ValidationError);
}

TEST_CASE("pearson correlation") {
  const std::vector<double> a{1, 2, 3, 4}, b{1, 3, 2, 4};
  CHECK(pearson_corr(a, b) == doctest::Approx(0.8).epsilon(1e-15));
  const std::vector<double> neg{4, 3, 2, 1};
  CHECK(pearson_corr(a, neg) == doctest::Approx(-1.0).epsilon(1e-15));
  const std::vector<double> flat{2, 2, 2, 2};
  CHECK_THROWS_AS(pearson_corr(a, flat), ValidationError);
  CHECK_THROWS_AS(pearson_corr(std::vector<double>{1}, std::vector<double>{2}), ValidationError);
  CHECK_THROWS_AS(pearson_corr(a, std::vector<double>{1, 2}), ValidationError);
}

TEST_CASE("finite difference gradcheck on a linear net") {
  Rng rng(9);
  DenseNet net({3, 2}, Activation::identity, rng);
  const auto x = Tensor2D::from_rows({{1, -2, 0.5}, {0.3, 0.1, -1}});
  DenseNet* nets[] = {&net};
  const auto c = Tensor2D::from_rows({{0.7, -1.3}, {2.0, 0.4}});
  // Linear loss on a linear net: central differences are exact up to round-off.
  const auto report = finite_diff_gradcheck(nets, [&](bool backprop) {
    const Tensor2D y = backprop ? net.forward(x) : net.predict(x);
    double loss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) loss += c.values()[i] * y.values()[i];
    if (backprop) net.backward(c);
    return loss;
  });
  CHECK(report.passed);
  CHECK(report.max_abs_violation <= 1e-10);
  CHECK(report.instances_run == net.parameter_count());

  DenseNet bad({3, 4, 1}, Activation::relu, rng);
  DenseNet* relu_nets[] = {&bad};
  const auto skipped = finite_diff_gradcheck(relu_nets, [](bool) { return 0.0; });
  CHECK(skipped.skipped);
  CHECK_FALSE(skipped.passed);
  CHECK(std::isnan(skipped.max_abs_violation));
  CHECK(skipped.detail.starts_with("kink-unsafe"));
}

TEST_CASE("loss gradchecks") {
  for (std::string_view loss : kGradcheckLosses) {
    const auto r = run_loss_gradcheck(loss, 1);
    INFO(r.name << " " << r.detail);
    CHECK(r.name == "gradcheck:" + std::string(loss));
    CHECK(r.passed);
  }
  CHECK_THROWS_AS(run_loss_gradcheck("nope", 1), ValidationError);
}

TEST_CASE("dv_single gradcheck breaches sit on the critic output bias") {
  // The single-critic DV value does not depend on the critic's output bias, so
  // its analytic gradient there is round-off and the relative error can blow
  // up. Every other parameter stays within tolerance.
  const std::uint64_t output_bias = 7 * 8 + 8 + 8 * 1 + 1 - 1;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto r = run_loss_gradcheck("dv_single", seed);
    if (r.passed) continue;
    INFO("seed " << seed << ": " << r.detail);
    CHECK(r.detail.starts_with("net 1 parameter " + std::to_string(output_bias) + ":"));
    CHECK(r.worst_case_seed == output_bias);
  }
}
