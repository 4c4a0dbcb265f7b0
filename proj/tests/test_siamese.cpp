#include "doctest.h"
#include "helpers.hpp"

#include "disco/siamese.hpp"

using namespace disco;

namespace {

SiamesePair make_pair(double m) {
  Rng rng(3);
  return SiamesePair::from_online(EncoderParams::init({3, 3, 4, 2, 1, 0.05}, rng), m);
}

}  // namespace

TEST_CASE("target starts as a copy and carries no gradient state") {
  auto pair = make_pair(0.9);
  auto on = pair.online.parameters();
  auto tg = pair.target.parameters();
  for (std::size_t i = 0; i < on.size(); ++i) {
    CHECK((on[i]->value.array() == tg[i]->value.array()).all());
    CHECK(tg[i]->grad.size() == 0);
    CHECK(tg[i]->name == "target." + on[i]->name);
  }
}

TEST_CASE("EMA endpoints and arithmetic") {
  SUBCASE("m = 0 copies online") {
    auto pair = make_pair(0.0);
    for (auto* p : pair.online.parameters()) p->value.array() += 1.0;
    ema_update(pair);
    auto on = pair.online.parameters();
    auto tg = pair.target.parameters();
    for (std::size_t i = 0; i < on.size(); ++i) CHECK((on[i]->value.array() == tg[i]->value.array()).all());
  }
  SUBCASE("m = 1 leaves target unchanged") {
    auto pair = make_pair(1.0);
    Mat before = pair.target.user_table.value;
    pair.online.user_table.value.array() += 1.0;
    ema_update(pair);
    CHECK((pair.target.user_table.value.array() == before.array()).all());
  }
  SUBCASE("scalar example and exactness") {
    auto pair = make_pair(0.9);
    pair.target.user_table.value.setConstant(1.0);
    pair.online.user_table.value.setZero();
    ema_update(pair);
    CHECK(pair.target.user_table.value(0, 0) == doctest::Approx(0.9).epsilon(1e-15));

    Rng rng(8);
    for (auto* p : pair.online.parameters()) p->value = testing::random_mat(p->value.rows(), p->value.cols(), rng);
    std::vector<Mat> old;
    for (auto* p : pair.target.parameters()) old.push_back(p->value);
    ema_update(pair);
    auto on = pair.online.parameters();
    auto tg = pair.target.parameters();
    for (std::size_t i = 0; i < on.size(); ++i) {
      Mat expect = 0.9 * old[i] + (1.0 - 0.9) * on[i]->value;
      CHECK((tg[i]->value - expect).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("target encoding follows the mode") {
  auto g = build_bipartite_graph(3, 3, {{0, 0}, {1, 1}, {2, 2}, {0, 1}});
  auto pair = make_pair(0.0);
  ema_update(pair);
  auto online = encode_domain(g, pair.online);
  CHECK((target_encode(pair, g).users.array() == online.users.array()).all());

  pair.online.user_table.value.array() += 0.5;  // stands in for an optimizer step
  auto stale = target_encode(pair, g);
  CHECK((stale.users.array() == online.users.array()).all());
  auto shared = target_encode(pair, g, TargetMode::kSharedTarget);
  CHECK((shared.users.array() == encode_domain(g, pair.online).users.array()).all());
}
