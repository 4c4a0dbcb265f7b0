#include "doctest.h"
#include "helpers.hpp"

#include "disco/intra_contrast.hpp"

#include <cmath>

using namespace disco;
using testing::random_mat;
using testing::random_stochastic;

TEST_CASE("pairwise softmax") {
  SUBCASE("equal similarities give uniform rows") {
    Mat z = Mat::Constant(3, 2, 1.0);
    Mat rho = pairwise_softmax(z, z, {0.5, Similarity::kCosine});
    CHECK((rho.array() - 1.0 / 3).abs().maxCoeff() < 1e-15);
  }
  SUBCASE("two-column example") {
    Mat z(2, 2), zh(2, 2);
    z << 1, 0, 0, 1;
    zh << 1, 0, 0, 1;
    Mat rho = pairwise_softmax(z, zh, {1.0, Similarity::kDot});
    CHECK(rho(0, 0) == doctest::Approx(0.7311).epsilon(1e-4));
    CHECK(rho(0, 1) == doctest::Approx(0.2689).epsilon(1e-4));
  }
  SUBCASE("small temperature picks the argmax") {
    Rng rng(1);
    Mat z = random_mat(4, 3, rng), zh = random_mat(4, 3, rng);
    Mat rho = pairwise_softmax(z, zh, {1e-4, Similarity::kCosine});
    Mat sim = pairwise_softmax(z, zh, {1.0, Similarity::kCosine});
    for (Index i = 0; i < 4; ++i) {
      Index a, b;
      rho.row(i).maxCoeff(&a);
      sim.row(i).maxCoeff(&b);
      CHECK(a == b);
      CHECK(rho(i, a) > 0.99);
    }
  }
}

TEST_CASE("intra loss on explicit matrices") {
  SUBCASE("hand cross-entropy") {
    Mat t = Mat::Identity(2, 2);
    Mat rho(2, 2);
    rho << 0.9, 0.1, 0.1, 0.9;
    std::vector<Mat> ts{t}, rs{rho};
    CHECK(intra_loss(ts, rs) == doctest::Approx(-2 * std::log(0.9)).epsilon(1e-12));
    CHECK(intra_loss(ts, rs) == doctest::Approx(0.2107).epsilon(1e-3));
  }
  SUBCASE("minimum at rho = T equals the row entropies") {
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
      Mat t = random_stochastic(5, 5, rng);
      double entropy = -(t.array() * t.array().log()).sum();
      std::vector<Mat> ts{t}, same{t};
      CHECK(intra_loss(ts, same) == doctest::Approx(entropy).epsilon(1e-12));
      std::vector<Mat> other{random_stochastic(5, 5, rng)};
      CHECK(intra_loss(ts, other) >= entropy);
    }
  }
  SUBCASE("sums over intents") {
    Rng rng(3);
    Mat t = random_stochastic(3, 3, rng), r = random_stochastic(3, 3, rng);
    std::vector<Mat> t1{t}, r1{r}, t2{t, t}, r2{r, r};
    CHECK(intra_loss(t2, r2) == doctest::Approx(2 * intra_loss(t1, r1)));
  }
}

TEST_CASE("differentiable intra loss agrees with the matrix form") {
  Rng rng(4);
  Mat z = random_mat(5, 6, rng), zh = random_mat(5, 6, rng);
  SimilarityConfig cfg{0.5, Similarity::kCosine};
  std::vector<Mat> ts, rs;
  for (int k = 0; k < 2; ++k) {
    ts.push_back(random_stochastic(5, 5, rng));
    rs.push_back(pairwise_softmax(z.middleCols(3 * k, 3), zh.middleCols(3 * k, 3), cfg));
  }
  ag::Tape t(false);
  CHECK(intra_loss(ts, t.view(z), t.view(zh), 2, cfg).scalar() == doctest::Approx(intra_loss(ts, rs)).epsilon(1e-12));
}

TEST_CASE("intra loss gradients") {
  Rng rng(5);
  ag::Parameter z("z", random_mat(4, 4, rng)), zh("zh", random_mat(4, 4, rng));
  std::vector<Mat> ts{random_stochastic(4, 4, rng), random_stochastic(4, 4, rng)};
  for (auto phi : {Similarity::kCosine, Similarity::kDot}) {
    auto r = testing::check_gradients({&z, &zh}, [&](ag::Tape& t) {
      return intra_loss(ts, t.param(z), t.param(zh), 2, {0.5, phi});
    });
    CHECK_MESSAGE(r.ok, r.worst);
  }
}

TEST_CASE("orthogonality penalty") {
  SUBCASE("orthonormal channels give zero") {
    Mat z(2, 4);
    z << 1, 0, 0, 1, 0, 2, 3, 0;
    CHECK(orthogonality_loss(z, z, 2) == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("identical channels give 2 per user per encoder") {
    Mat z(3, 4);
    z << 1, 0, 1, 0, 0.6, 0.8, 0.6, 0.8, 0, 1, 0, 1;
    ag::Tape t(false);
    CHECK(orthogonality_penalty(t.view(z), 2).scalar() == doctest::Approx(2.0));
    CHECK(orthogonality_loss(z, z, 2) == doctest::Approx(4.0));
  }
  SUBCASE("single channel is always zero") {
    Rng rng(6);
    Mat z = random_mat(5, 3, rng);
    CHECK(orthogonality_loss(z, z, 1) == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("invariant to channel scale") {
    Rng rng(7);
    Mat z = random_mat(4, 6, rng);
    Mat s = z;
    s.middleCols(2, 2) *= 5.0;
    CHECK(orthogonality_loss(s, s, 3) == doctest::Approx(orthogonality_loss(z, z, 3)).epsilon(1e-12));
  }
  SUBCASE("gradient") {
    Rng rng(8);
    ag::Parameter z("z", random_mat(3, 6, rng));
    for (auto form : {OrthForm::kChannelGram, OrthForm::kLiteral}) {
      auto r = testing::check_gradients({&z}, [&](ag::Tape& t) { return orthogonality_penalty(t.param(z), 3, form); });
      CHECK_MESSAGE(r.ok, r.worst);
    }
  }
}
