#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "infomaxda/errors.hpp"
#include "infomaxda/synthdata.hpp"

using namespace infomaxda;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("infomaxda_synth_" + name);
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST_CASE("two moons reference draw") {
  const LabeledSet s = gen_two_moons(4, 0.0, 3);
  const double expected[4][2] = {{0.93715379326455592, 0.34891656276229418},
                                 {-0.58853099698867216, 0.80847465364321692},
                                 {1.3475157581643409, -0.43767414266762383},
                                 {0.026087413659550307, 0.27307650150842438}};
  REQUIRE(s.size() == 4);
  for (std::size_t r = 0; r < 4; ++r) {
    CHECK(s.x(r, 0) == doctest::Approx(expected[r][0]).epsilon(1e-15));
    CHECK(s.x(r, 1) == doctest::Approx(expected[r][1]).epsilon(1e-15));
  }
  CHECK(s.y == std::vector<std::size_t>{0, 0, 1, 1});
  CHECK(s.class_count == 2);
}

TEST_CASE("two moons shape") {
  const LabeledSet s = gen_two_moons(101, 0.0, 8);
  CHECK(std::count(s.y.begin(), s.y.end(), 0u) == 51);
  for (std::size_t r = 0; r < s.size(); ++r) {
    const double cx = s.y[r] == 0 ? 0.0 : 1.0;
    const double cy = s.y[r] == 0 ? 0.0 : 0.5;
    CHECK(std::hypot(s.x(r, 0) - cx, s.x(r, 1) - cy) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(gen_two_moons(50, 0.1, 4).x == gen_two_moons(50, 0.1, 4).x);
  CHECK_FALSE(gen_two_moons(50, 0.1, 4).x == gen_two_moons(50, 0.1, 5).x);
  CHECK_THROWS_AS(gen_two_moons(1, 0.1, 1), ValidationError);
  CHECK_THROWS_AS(gen_two_moons(10, -0.1, 1), ValidationError);
}

TEST_CASE("rotation") {
  LabeledSet s{Tensor2D::from_rows({{1, 0}, {0, 2}}), {0, 1}, 2};
  const LabeledSet r = rotate(s, 90.0);
  CHECK(r.x(0, 0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(r.x(0, 1) == doctest::Approx(1.0));
  CHECK(r.x(1, 0) == doctest::Approx(-2.0));
  CHECK(r.y == s.y);
  CHECK(rotate(s, 0.0).x == s.x);
  const LabeledSet back = rotate(rotate(s, 37.0), -37.0);
  for (std::size_t i = 0; i < 4; ++i) CHECK(back.x.values()[i] == doctest::Approx(s.x.values()[i]));
  LabeledSet three{Tensor2D(2, 3), {0, 1}, 2};
  CHECK_THROWS_AS(rotate(three, 10.0), ValidationError);
}

TEST_CASE("blob shift") {
  const std::vector<double> shift{2.0, -1.0};
  const DomainPair p = gen_blob_shift(3000, 2, 3, shift, 5);
  CHECK(p.source.size() == 3000);
  CHECK(p.target.size() == 3000);
  CHECK(p.target_labels.size() == 3000);
  CHECK(p.source.y[0] == 0);
  CHECK(p.source.y[4] == 1);
  double ds[2] = {0, 0}, dt[2] = {0, 0};
  for (std::size_t r = 0; r < 3000; ++r) {
    for (std::size_t j = 0; j < 2; ++j) {
      ds[j] += p.source.x(r, j);
      dt[j] += p.target.x(r, j);
    }
  }
  // Equal class mix in both domains, so the mean moves by the shift.
  CHECK((dt[0] - ds[0]) / 3000 == doctest::Approx(2.0).epsilon(0.05));
  CHECK((dt[1] - ds[1]) / 3000 == doctest::Approx(-1.0).epsilon(0.1));
  const LabeledSet eval = p.target_for_evaluation();
  CHECK(eval.x == p.target.x);
  CHECK(eval.y == p.target_labels);
  CHECK_THROWS_AS(gen_blob_shift(10, 3, 2, shift, 1), ValidationError);
}

TEST_CASE("correlated gaussians") {
  const PairedSamples s = gen_correlated_gaussians(20000, 2, 0.6, 3);
  double sxz = 0, sxx = 0, szz = 0;
  for (std::size_t r = 0; r < 20000; ++r) {
    sxz += s.x(r, 1) * s.z(r, 1);
    sxx += s.x(r, 1) * s.x(r, 1);
    szz += s.z(r, 1) * s.z(r, 1);
  }
  CHECK(sxz / std::sqrt(sxx * szz) == doctest::Approx(0.6).epsilon(0.05));
  CHECK(szz / 20000 == doctest::Approx(1.0).epsilon(0.05));
  CHECK_THROWS_AS(gen_correlated_gaussians(10, 1, 1.0, 3), ValidationError);
}

TEST_CASE("csv loading") {
  const auto labeled = load_csv(write_temp("a.csv", "f0,f1,label\n0.5,1,0\n-2,3e-1,2\n"));
  REQUIRE(std::holds_alternative<LabeledSet>(labeled));
  const auto& set = std::get<LabeledSet>(labeled);
  CHECK(set.x == Tensor2D::from_rows({{0.5, 1}, {-2, 0.3}}));
  CHECK(set.y == std::vector<std::size_t>{0, 2});
  CHECK(set.class_count == 3);

  const auto plain = load_csv(write_temp("b.csv", "f0\n1\n2\n"));
  REQUIRE(std::holds_alternative<UnlabeledSet>(plain));
  CHECK(std::get<UnlabeledSet>(plain).size() == 2);

  CHECK_THROWS_AS(load_csv("/nonexistent/infomaxda.csv"), IoError);
  CHECK_THROWS_AS(load_csv(write_temp("c.csv", "f0,f1\n1\n")), ValidationError);
  CHECK_THROWS_AS(load_csv(write_temp("d.csv", "f0,label\n1,x\n")), ValidationError);
  CHECK_THROWS_AS(load_csv(write_temp("e.csv", "f0,label\n1,-1\n")), ValidationError);
  CHECK_THROWS_AS(load_csv(write_temp("f.csv", "g0\n1\n")), ValidationError);
  CHECK_THROWS_AS(load_csv(write_temp("g.csv", "f0\n")), ValidationError);
  try {
    load_csv(write_temp("h.csv", "f0,f1\n1,2\n1,abc\n"));
    FAIL("expected a ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("batch iterator") {
  Rng rng(1);
  const auto batches = batch_iterator(10, 4, rng);
  REQUIRE(batches.size() == 3);
  CHECK(batches[2].size() == 2);
  std::set<std::size_t> seen;
  for (const auto& b : batches) seen.insert(b.begin(), b.end());
  CHECK(seen.size() == 10);
  // A single leftover row is dropped.
  Rng rng2(1);
  const auto dropped = batch_iterator(9, 4, rng2);
  CHECK(dropped.size() == 2);
  Rng rng3(1);
  CHECK(batch_iterator(3, 8, rng3).size() == 1);
  Rng rng4(1);
  CHECK_THROWS_AS(batch_iterator(10, 0, rng4), ValidationError);

  BatchStream stream(5, 2, Rng(4));
  CHECK(stream.batches_per_epoch() == 2);
  std::set<std::size_t> epoch;
  for (int i = 0; i < 2; ++i) {
    const auto& b = stream.next();
    epoch.insert(b.begin(), b.end());
  }
  CHECK(epoch.size() == 4);
  CHECK(stream.next().size() == 2);
}
