#include "doctest.h"
#include "helpers.hpp"

#include "disco/affinity.hpp"

#include <cmath>

using namespace disco;
using testing::random_mat;

TEST_CASE("affinity matrix") {
  SUBCASE("identical rows give all ones") {
    Mat z = Mat::Constant(4, 3, 0.7);
    CHECK((affinity_matrix(z, 0.5).array() == 1.0).all());
  }
  SUBCASE("3-4-5 triangle") {
    Mat z(2, 2);
    z << 0, 0, 3, 4;
    Mat r = affinity_matrix(z, 2.0);
    CHECK(r(0, 1) == doctest::Approx(std::exp(-2.5)).epsilon(1e-14));
    CHECK(r(1, 0) == r(0, 1));
    CHECK(r(0, 0) == 1.0);
  }
  SUBCASE("entries grow with the bandwidth") {
    Rng rng(1);
    Mat z = random_mat(5, 3, rng);
    Mat prev = affinity_matrix(z, 0.1);
    for (double tau : {0.5, 2.0, 10.0, 1e6}) {
      Mat cur = affinity_matrix(z, tau);
      CHECK((cur.array() >= prev.array()).all());
      prev = cur;
    }
    CHECK((prev.array() > 0.9999).all());
  }
  SUBCASE("bad bandwidth") {
    CHECK_THROWS_AS(affinity_matrix(Mat::Zero(2, 2), 0.0), Error);
  }
}

TEST_CASE("walk targets") {
  Rng rng(2);
  Mat r = affinity_matrix(random_mat(6, 4, rng), 0.7);
  SUBCASE("alpha = 1 gives the identity") {
    for (int d : {1, 3, 5}) CHECK((walk_targets(r, 1.0, d).T - Mat::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("2 x 2 closed form") {
    Mat r2(2, 2);
    r2 << 1, std::exp(-2.5), std::exp(-2.5), 1;
    Mat t = walk_targets(r2, 0.5, 1).T;
    CHECK(t(0, 0) == doctest::Approx(0.5 + 0.5 / (1 + std::exp(-2.5))).epsilon(1e-14));
    CHECK(t(0, 0) == doctest::Approx(0.9621).epsilon(1e-4));
    CHECK(t(0, 1) == doctest::Approx(0.0379).epsilon(1e-3));
  }
  SUBCASE("three steps equal repeated products") {
    Mat rn = r;
    for (Index i = 0; i < 6; ++i) rn.row(i) /= rn.row(i).sum();
    Mat expect = 0.3 * Mat::Identity(6, 6) + 0.7 * (rn * rn * rn);
    CHECK((walk_targets(r, 0.3, 3).T - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("rows are stochastic") {
    Mat t = walk_targets(r, 0.5, 4).T;
    for (Index i = 0; i < 6; ++i) CHECK(t.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((t.array() >= 0).all());
  }
  SUBCASE("identity walk drops the affinity term") {
    Mat t = walk_targets(r, 0.5, 4, true).T;
    CHECK((t - Mat::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("invalid arguments") {
    CHECK_THROWS_AS(walk_targets(r, 1.5, 1), Error);
    CHECK_THROWS_AS(walk_targets(r, 0.5, 0), Error);
  }
}

TEST_CASE("mean intent similarity") {
  const int b = 4;
  WalkTargets a{Mat::Identity(b, b)}, u{Mat::Constant(b, b, 1.0 / b)};
  std::vector<WalkTargets> one{a};
  CHECK((mean_intent_similarity(one) - a.T).cwiseAbs().maxCoeff() == 0.0);
  std::vector<WalkTargets> two{a, u};
  Mat m = mean_intent_similarity(two);
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < b; ++j) CHECK(m(i, j) == doctest::Approx((i == j ? 0.5 : 0.0) + 0.5 / b));
  for (int i = 0; i < b; ++i) CHECK(m.row(i).sum() == doctest::Approx(1.0));
}

TEST_CASE("per-channel walk targets use only their column block") {
  Rng rng(3);
  Mat z = random_mat(5, 6, rng);
  auto per = intent_walk_targets(z, 3, 0.5, 0.5, 2);
  REQUIRE(per.size() == 3);
  for (int k = 0; k < 3; ++k) {
    Mat expect = walk_targets(affinity_matrix(z.middleCols(2 * k, 2), 0.5), 0.5, 2).T;
    CHECK((per[k].T - expect).cwiseAbs().maxCoeff() == 0.0);
  }
}
