#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "infomaxda/errors.hpp"
#include "infomaxda/experiments.hpp"
#include "infomaxda/oracle.hpp"
#include "infomaxda/trainer.hpp"

using namespace infomaxda;

namespace {

ExperimentData moons(std::size_t n, double angle, std::uint64_t seed) {
  ExperimentData d;
  d.source = gen_two_moons(n, 0.1, seed);
  const LabeledSet t = rotate(gen_two_moons(n, 0.1, derive_seed(seed, 1)), angle);
  d.target = strip_labels(t);
  d.target_eval = t;
  return d;
}

TrainConfig small_config(std::size_t epochs) {
  TrainConfig c;
  c.max_epochs = epochs;
  c.arch.encoder_hidden = {16};
  c.arch.latent_dim = 4;
  c.arch.critic_hidden = {16};
  return c;
}

void check_bit_identical(const std::vector<MetricsRecord>& a, const std::vector<MetricsRecord>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].l_cls == b[i].l_cls);
    CHECK(a[i].l_kld == b[i].l_kld);
    CHECK(a[i].l_mi == b[i].l_mi);
    CHECK(a[i].l_ent == b[i].l_ent);
    CHECK(a[i].mi_estimate == b[i].mi_estimate);
    CHECK(a[i].constraint_gap == b[i].constraint_gap);
    CHECK(a[i].source_acc == b[i].source_acc);
  }
}

}  // namespace

TEST_CASE("config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  for (auto mutate : std::vector<void (*)(TrainConfig&)>{
           [](TrainConfig& t) { t.alpha = -1; }, [](TrainConfig& t) { t.beta = -0.1; },
           [](TrainConfig& t) { t.gamma = -0.1; }, [](TrainConfig& t) { t.lr = 0; },
           [](TrainConfig& t) { t.batch_size = 1; }, [](TrainConfig& t) { t.critic_steps = 0; },
           [](TrainConfig& t) { t.heldout_fraction = 1.0; }, [](TrainConfig& t) { t.model_clip_norm = -1; }}) {
    TrainConfig bad;
    mutate(bad);
    CHECK_THROWS_AS(bad.validate(), ValidationError);
  }
  CHECK(parse_ablation(to_string(Ablation::km)) == Ablation::km);
  CHECK(parse_estimator("mine_single") == Estimator::mine_single);
  CHECK_THROWS_AS(parse_ablation("kk"), ValidationError);
}

TEST_CASE("effective weights per ablation mode") {
  TrainConfig c;
  c.ablation = Ablation::none;
  CHECK(c.effective_alpha() == 0.0);
  CHECK(c.effective_beta() == 0.0);
  CHECK(c.effective_gamma() == 0.0);
  c.ablation = Ablation::k;
  CHECK(c.effective_alpha() == c.alpha);
  CHECK(c.effective_beta() == 0.0);
  c.ablation = Ablation::m;
  CHECK(c.effective_alpha() == 0.0);
  CHECK(c.effective_beta() == c.beta);
  c.ablation = Ablation::km;
  c.entropy = false;
  CHECK(c.effective_gamma() == 0.0);
}

TEST_CASE("zero epochs leaves initialization-only nets") {
  const auto d = moons(100, 45, 1);
  TrainConfig c = small_config(0);
  c.ablation = Ablation::none;
  const TrainedModel m = train_dpn(c, d.source, d.target);
  CHECK(m.history.empty());
  CHECK(m.encoder.layer_sizes() == std::vector<std::size_t>{2, 16, 4});
  CHECK(m.classifier.layer_sizes() == std::vector<std::size_t>{4, 2});
  const TrainedModel again = train_dpn(c, d.source, d.target);
  CHECK(m.encoder.checksum() == again.encoder.checksum());
}

TEST_CASE("fixed seed replays bit-identically") {
  const auto d = moons(400, 45, 2);
  const TrainConfig c = small_config(2);
  const TrainedModel a = train_dpn(c, d.source, d.target, d.evaluation_sets());
  const TrainedModel b = train_dpn(c, d.source, d.target, d.evaluation_sets());
  REQUIRE(a.history.size() == 2);
  CHECK(a.history == b.history);
  CHECK(a.history[0].epoch == 1);
  CHECK(a.history[1].epoch == 2);
  for (const auto& r : a.history) {
    CHECK(r.source_acc >= 0.0);
    CHECK(r.source_acc <= 1.0);
    CHECK(r.target_acc >= 0.0);
    CHECK(r.target_acc <= 1.0);
  }
  TrainConfig other = c;
  other.seed = 3;
  CHECK_FALSE(train_dpn(other, d.source, d.target).history == a.history);
  CHECK(std::isnan(train_dpn(c, d.source, d.target).history[0].target_acc));
}

TEST_CASE("phase isolation and hidden-label canary") {
  const auto d = moons(300, 45, 4);
  TrainConfig c = small_config(2);
  c.verify_phase_isolation = true;
  for (Estimator e : {Estimator::two_critic, Estimator::mine_single, Estimator::autoencoder}) {
    c.estimator = e;
    const TrainedModel m = train_dpn(c, d.source, d.target, d.evaluation_sets());
    // Two checks per batch: critic phase and model phase.
    const std::size_t batches = (300 - 30) / c.batch_size + 1;
    CHECK(m.phase_checks >= 2 * 2 * batches);
  }
  c.estimator = Estimator::two_critic;

  LabeledSet shuffled = *d.target_eval;
  Rng rng(99);
  const auto perm = rng.permutation(shuffled.size());
  for (std::size_t i = 0; i < perm.size(); ++i) shuffled.y[i] = d.target_eval->y[perm[i]];
  const TrainedModel a = train_dpn(c, d.source, d.target, EvaluationSets{d.target_eval, {}});
  const TrainedModel b = train_dpn(c, d.source, d.target, EvaluationSets{shuffled, {}});
  check_bit_identical(a.history, b.history);
  CHECK(a.encoder.checksum() == b.encoder.checksum());
}

TEST_CASE("ablation m with beta 0 equals source-only") {
  const auto d = moons(300, 45, 5);
  TrainConfig c = small_config(2);
  c.entropy = false;
  c.beta = 0.0;
  c.ablation = Ablation::m;
  const TrainedModel m = train_dpn(c, d.source, d.target);
  c.ablation = Ablation::none;
  const TrainedModel none = train_dpn(c, d.source, d.target);
  check_bit_identical(m.history, none.history);
  CHECK(m.encoder.checksum() == none.encoder.checksum());
}

TEST_CASE("zero shift keeps target accuracy near source accuracy") {
  const std::vector<double> shift{0.0, 0.0};
  for (std::uint64_t seed : {1, 2, 3}) {
    const DomainPair p = gen_blob_shift(600, 2, 3, shift, seed);
    TrainConfig c = small_config(10);
    c.ablation = Ablation::none;
    c.seed = seed;
    const TrainedModel m = train_dpn(c, p.source, p.target);
    const double gap = std::abs(evaluate(m, p.source) - evaluate(m, p.target_for_evaluation()));
    INFO("seed " << seed);
    CHECK(gap <= 0.05);
  }
}

TEST_CASE("evaluation") {
  // Zero nets give equal logits; ties go to class 0.
  const DenseNet enc = DenseNet::zeros({2, 3}, Activation::identity);
  const DenseNet cls = DenseNet::zeros({3, 2}, Activation::identity);
  LabeledSet balanced{Tensor2D::from_rows({{1, 2}, {3, 4}, {5, 6}, {7, 8}}), {0, 1, 0, 1}, 2};
  CHECK(evaluate(enc, cls, balanced) == 0.5);
  LabeledSet wrong_dims{Tensor2D(2, 3), {0, 1}, 2};
  CHECK_THROWS_AS(evaluate(enc, cls, wrong_dims), ValidationError);

  // Unit-variance blobs centered at (-3, -3) and (3, 3), seed 12.
  Rng rng(12);
  LabeledSet blobs{Tensor2D(400, 2), std::vector<std::size_t>(400), 2};
  for (std::size_t r = 0; r < 400; ++r) {
    blobs.y[r] = r % 2;
    for (std::size_t j = 0; j < 2; ++j) blobs.x(r, j) = (r % 2 == 0 ? -3.0 : 3.0) + rng.normal();
  }
  TrainConfig c = small_config(10);
  c.ablation = Ablation::none;
  const TrainedModel m = train_dpn(c, blobs, strip_labels(blobs));
  CHECK(evaluate(m, blobs) >= 0.95);
}

TEST_CASE("mi estimation run structure") {
  const PairedSamples s = gen_correlated_gaussians(2000, 1, 0.9, 8);
  TrainConfig c;
  c.max_epochs = 3;
  c.batch_size = 64;
  const MiCurve curve = estimate_mi_run(c, s);
  REQUIRE(curve.points.size() == 3);
  CHECK(curve.points[2].epoch == 3);
  // 1800 training rows in batches of 64: 28 full batches and one of 8.
  CHECK(curve.critic_steps == 3 * 29);
  for (const auto& p : curve.points) CHECK(std::isfinite(p.estimate));
  const MiCurve again = estimate_mi_run(c, s);
  CHECK(again.points.back().estimate == curve.points.back().estimate);
  c.estimator = Estimator::autoencoder;
  CHECK_THROWS_AS(estimate_mi_run(c, s), ValidationError);
}

TEST_CASE("parallel_for") {
  std::vector<int> out(20, 0);
  parallel_for(20, 4, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
  for (std::size_t i = 0; i < 20; ++i) CHECK(out[i] == static_cast<int>(i * i));
  CHECK_THROWS_WITH(parallel_for(10, 3,
                                 [](std::size_t i) {
                                   if (i == 4 || i == 7) throw std::runtime_error("task " + std::to_string(i));
                                 }),
                    "task 4");
  const GroupSummary g = summarize("x", {0.5, 0.7});
  CHECK(g.mean == doctest::Approx(0.6));
  CHECK(g.std == doctest::Approx(std::sqrt(0.02)));
  CHECK(summarize("y", {0.4}).std == 0.0);
}

TEST_CASE("experiments at zero epochs") {
  const auto d = moons(200, 45, 6);
  const TrainConfig c = small_config(0);
  const std::vector<std::uint64_t> seeds{3};
  const AblationResult ab = ablation_run(c, d, seeds, 2);
  REQUIRE(ab.modes.size() == 4);
  for (const auto& g : ab.modes) CHECK(g.accuracies[0] == ab.modes[0].accuracies[0]);
  CHECK(ab.modes[3].name == "km");

  const ComparisonResult cmp = estimator_comparison(c, d, seeds, 2);
  REQUIRE(cmp.arms.size() == 3);
  for (const auto& g : cmp.arms) CHECK(g.accuracies[0] == cmp.arms[0].accuracies[0]);
  CHECK(cmp.arms[0].accuracies[0] == ab.modes[0].accuracies[0]);
}

TEST_CASE("one-cell sweep equals a direct run") {
  const auto d = moons(200, 45, 7);
  TrainConfig c = small_config(2);
  const std::vector<double> alphas{0.1}, betas{1e-3};
  const SweepResult s = sensitivity_sweep(c, d, alphas, betas);
  c.alpha = 0.1;
  c.beta = 1e-3;
  const RunOutcome direct = run_once(c, d);
  CHECK(s.accuracy.rows() == 1);
  CHECK(s.accuracy(0, 0) == direct.final_target_acc);
  CHECK(s.runs[0].history == direct.history);
}

TEST_CASE("cross evaluation") {
  const auto d = moons(200, 30, 8);
  const TrainedModel m = train_dpn(small_config(3), d.source, d.target);
  const std::vector<double> curve{0.5, 0.6, 0.7};
  const CrossEvalResult same = cross_eval(m, *d.target_eval, curve, curve);
  CHECK(same.third_acc == evaluate(m, *d.target_eval));
  REQUIRE(same.pearson_r.has_value());
  CHECK(*same.pearson_r == doctest::Approx(1.0));

  const std::vector<double> flat{0.5, 0.5, 0.5};
  const CrossEvalResult degenerate = cross_eval(m, *d.target_eval, flat, curve);
  CHECK_FALSE(degenerate.pearson_r.has_value());
  CHECK(degenerate.pearson_reason == "zero variance");
  const std::vector<double> one{0.5};
  CHECK(cross_eval(m, *d.target_eval, one, one).pearson_reason == "fewer than 2 epochs");

  // Third domain equal to the target: the per-epoch curves coincide.
  ExperimentData same_third = d;
  same_third.extra.push_back(*d.target_eval);
  const RunOutcome r = run_once(small_config(2), same_third);
  REQUIRE(r.extra_accuracy.size() == 2);
  for (std::size_t e = 0; e < 2; ++e) CHECK(r.extra_accuracy[e][0] == r.history[e].target_acc);
}
