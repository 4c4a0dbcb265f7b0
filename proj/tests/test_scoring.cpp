#include "doctest.h"
#include "helpers.hpp"

#include "disco/scoring.hpp"

#include <cmath>
#include <numeric>

using namespace disco;
using testing::random_mat;

TEST_CASE("intent-weighted score") {
  SUBCASE("opposite channels cancel") {
    ScoreRequest r{Mat(2, 1), Mat(2, 1), Vec(2)};
    r.user_channels << 2, -2;
    r.item_channels << 1, 1;
    r.intent_weights << 0.5, 0.5;
    CHECK(score(r) == 0.0);
  }
  SUBCASE("single channel dot product") {
    ScoreRequest r{Mat::Ones(1, 2), Mat::Ones(1, 2), Vec::Ones(1)};
    CHECK(score(r) == 2.0);
  }
  SUBCASE("one-hot weights select a channel") {
    Rng rng(1);
    ScoreRequest r{random_mat(3, 4, rng), random_mat(3, 4, rng), Vec::Zero(3)};
    r.intent_weights(1) = 1.0;
    CHECK(score(r) == doctest::Approx(r.user_channels.row(1).dot(r.item_channels.row(1))));
  }
  SUBCASE("bilinear in user and item") {
    Rng rng(2);
    Mat u1 = random_mat(2, 3, rng), u2 = random_mat(2, 3, rng), v = random_mat(2, 3, rng);
    Vec w(2);
    w << 0.3, 0.7;
    double a = score({u1, v, w}), b = score({u2, v, w}), c = score({2 * u1 - u2, v, w});
    CHECK(c == doctest::Approx(2 * a - b));
  }
}

TEST_CASE("logistic probability") {
  CHECK(probability(0.0) == 0.5);
  CHECK(probability(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-15));
  double prev = 0.0;
  for (double r = -800; r <= 800; r += 0.5) {
    double p = probability(r);
    CHECK(p >= prev);
    CHECK(std::isfinite(p));
    prev = p;
  }
  CHECK(probability(40.0) > 1 - 1e-15);
}

TEST_CASE("recommendation loss") {
  std::vector<double> half{0.5};
  CHECK(rec_loss(half, half) == doctest::Approx(2 * std::log(2.0)));
  std::vector<double> p{0.9}, n{0.2};
  CHECK(rec_loss(p, n) == doctest::Approx(0.3285).epsilon(1e-4));
  std::vector<double> pp{1 - 1e-15}, nn{1e-15};
  CHECK(rec_loss(pp, nn) < 1e-11);
  CHECK_THROWS_AS(rec_loss(std::vector<double>{}, n), Error);

  ag::Tape t;
  Mat sp(2, 1), sn(2, 1);
  sp << 0.4, -1.2;
  sn << 2.0, 0.1;
  std::vector<double> yp{probability(0.4), probability(-1.2)}, yn{probability(2.0), probability(0.1)};
  CHECK(rec_loss(t.constant(sp), t.constant(sn)).scalar() == doctest::Approx(rec_loss(yp, yn)).epsilon(1e-12));
}

TEST_CASE("batched preference scores") {
  Rng rng(3);
  ag::Parameter u("u", random_mat(4, 6, rng)), v("v", random_mat(4, 6, rng)), w("w", testing::random_stochastic(4, 3, rng));
  ag::Tape t(false);
  Mat s = preference_scores(t.view(u.value), t.view(v.value), t.view(w.value), 3).value();
  for (Index i = 0; i < 4; ++i) {
    ScoreRequest r{Eigen::Map<const Mat>(u.value.row(i).data(), 3, 2), Eigen::Map<const Mat>(v.value.row(i).data(), 3, 2),
                   w.value.row(i).transpose()};
    CHECK(s(i, 0) == doctest::Approx(score(r)).epsilon(1e-12));
  }
  auto res = testing::check_gradients({&u, &v, &w}, [&](ag::Tape& tt) {
    auto sc = preference_scores(tt.param(u), tt.param(v), tt.param(w), 3);
    return rec_loss(ag::slice_rows(sc, 0, 2), ag::slice_rows(sc, 2, 2));
  });
  CHECK_MESSAGE(res.ok, res.worst);
}

TEST_CASE("cold-start scores") {
  Rng rng(4);
  const int k = 2, dc = 3;
  Decoder dec = Decoder::init(k, dc, 4, false, 0.05, rng, "d");
  Mat users = random_mat(3, k * dc, rng), items = random_mat(5, k * dc, rng), protos = random_mat(k, dc, rng);

  SUBCASE("matches the per-pair definition") {
    Mat all = cold_start_scores(users, dec, items, protos, k, Similarity::kCosine);
    Mat e = decode(users, dec);
    Mat w = intent_prior(e, protos, k, Similarity::kCosine);
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j < 5; ++j) {
        ScoreRequest r{Eigen::Map<const Mat>(e.row(i).data(), k, dc), Eigen::Map<const Mat>(items.row(j).data(), k, dc),
                       w.row(i).transpose()};
        CHECK(all(i, j) == doctest::Approx(score(r)).epsilon(1e-12));
        Mat uc = Eigen::Map<const Mat>(users.row(i).data(), k, dc);
        Mat ic = Eigen::Map<const Mat>(items.row(j).data(), k, dc);
        CHECK(cold_start_score(uc, dec, ic, protos, Similarity::kCosine) == doctest::Approx(all(i, j)).epsilon(1e-12));
      }
  }
  SUBCASE("decoder ablation scores raw source channels") {
    Mat all = cold_start_scores(users, dec, items, protos, k, Similarity::kCosine, true);
    Mat w = intent_prior(users, protos, k, Similarity::kCosine);
    Mat q = intent_queries(users, w, k);
    CHECK((all - q * items.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("uniform-prior ablation weights channels equally") {
    Mat all = cold_start_scores(users, dec, items, protos, k, Similarity::kCosine, false, true);
    Mat e = decode(users, dec);
    CHECK((all - 0.5 * e * items.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("zero items score zero") {
    Mat all = cold_start_scores(users, dec, Mat::Zero(2, k * dc), protos, k, Similarity::kCosine);
    CHECK((all.array() == 0.0).all());
  }
  SUBCASE("ranking by batch scores equals ranking by single scores") {
    Mat all = cold_start_scores(users, dec, items, protos, k, Similarity::kDot);
    std::vector<int> a(5), b(5);
    std::iota(a.begin(), a.end(), 0);
    b = a;
    std::vector<double> single(5);
    for (int j = 0; j < 5; ++j)
      single[j] = cold_start_score(Eigen::Map<const Mat>(users.row(0).data(), k, dc), dec,
                                   Eigen::Map<const Mat>(items.row(j).data(), k, dc), protos, Similarity::kDot);
    std::sort(a.begin(), a.end(), [&](int x, int y) { return all(0, x) > all(0, y); });
    std::sort(b.begin(), b.end(), [&](int x, int y) { return single[x] > single[y]; });
    CHECK(a == b);
  }
}
