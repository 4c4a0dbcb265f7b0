#include "doctest.h"
#include "helpers.hpp"

#include "disco/baselines.hpp"
#include "disco/evaluator.hpp"

#include <cmath>

using namespace disco;

TEST_CASE("pessimistic rank") {
  std::vector<double> s(1000);
  for (int i = 0; i < 1000; ++i) s[i] = i * 0.001;
  CHECK(rank_candidates(s, 999) == 1);
  CHECK(rank_candidates(s, 0) == 1000);
  std::vector<double> tie{0.5, 0.9, 0.9, 0.1, 0.9, 0.9};
  CHECK(rank_candidates(tie, 1) == 4);
  CHECK(rank_candidates(tie, 0) == 5);
  CHECK_THROWS_AS(rank_candidates(tie, 6), Error);
}

TEST_CASE("ranking metrics") {
  std::vector<int> one{1}, ten{10}, eleven{11};
  CHECK(ranking_metrics(one, 10).hr_at_k == 1.0);
  CHECK(ranking_metrics(one, 10).ndcg_at_k == 1.0);
  CHECK(ranking_metrics(ten, 10).hr_at_k == 1.0);
  CHECK(ranking_metrics(ten, 10).ndcg_at_k == doctest::Approx(0.28906).epsilon(1e-5));
  CHECK(ranking_metrics(eleven, 10).hr_at_k == 0.0);
  CHECK(ranking_metrics(eleven, 10).ndcg_at_k == 0.0);
  CHECK_THROWS_AS(ranking_metrics(std::vector<int>{}, 10), Error);

  Rng rng(1);
  std::vector<int> ranks;
  for (int i = 0; i < 300; ++i) ranks.push_back(1 + static_cast<int>(uniform_index(rng, 50)));
  double prev_hr = 0, prev_ndcg = 0;
  for (int k = 1; k <= 50; ++k) {
    auto m = ranking_metrics(ranks, k);
    CHECK(m.hr_at_k >= prev_hr);
    CHECK(m.ndcg_at_k >= prev_ndcg);
    CHECK(m.ndcg_at_k <= m.hr_at_k + 1e-15);
    prev_hr = m.hr_at_k;
    prev_ndcg = m.ndcg_at_k;
  }
  CHECK(prev_hr == 1.0);
}

TEST_CASE("cold-start evaluation") {
  auto prep = testing::small_prepared();
  const auto& split = prep.split;
  EvalProtocol p{Direction::kSourceToTarget, false, 10, 49, 3};

  SUBCASE("constant scores rank every positive last") {
    auto r = evaluate_cold_start(split, p, [](int, std::span<const int>, std::span<double> out) {
      std::fill(out.begin(), out.end(), 1.0);
    });
    CHECK(r.hr_at_k == 0.0);
    for (int rank : r.per_user_ranks) CHECK(rank == 50);
    CHECK(r.n_users == static_cast<int>(split.s2t.test_users.size()));
  }
  SUBCASE("random scores sit at k / (negatives + 1)") {
    double hr = 0;
    int lists = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      auto r = baseline_score(BaselineKind::kRandom, split, {Direction::kSourceToTarget, false, 10, 49, seed});
      hr += r.hr_at_k * r.per_user_ranks.size();
      lists += static_cast<int>(r.per_user_ranks.size());
    }
    hr /= lists;
    const double se = std::sqrt(0.2 * 0.8 / lists);
    CHECK(std::abs(hr - 0.2) < 4 * se);
  }
  SUBCASE("candidates exclude everything the user is known to like") {
    auto known = split.known_items(kTarget);
    std::map<int, int> to_target;
    for (const auto& o : split.overlap) to_target[o.source] = o.target;
    auto r = evaluate_cold_start(split, p, [&](int user, std::span<const int> items, std::span<double> out) {
      const auto& kn = known[static_cast<std::size_t>(to_target.at(user))];
      for (std::size_t i = 1; i < items.size(); ++i) CHECK(std::find(kn.begin(), kn.end(), items[i]) == kn.end());
      std::fill(out.begin(), out.end(), 0.0);
    });
    CHECK(!r.per_user_ranks.empty());
  }
  SUBCASE("deterministic and order independent") {
    auto fresh = [&] { return baseline_scorer(BaselineKind::kRandom, split, Direction::kSourceToTarget, 5); };
    auto a = evaluate_cold_start(split, p, fresh());
    auto b = evaluate_cold_start(split, p, fresh());
    CHECK(a.per_user_ranks == b.per_user_ranks);
    CHECK(a.hr_at_k == b.hr_at_k);
  }
}

TEST_CASE("popularity baseline") {
  auto prep = testing::small_prepared();
  auto split = prep.split;
  // make every held-out item the most popular one in training
  auto& cold = split.s2t;
  int hot = cold.held_out.begin()->second.front();
  for (auto& [u, items] : cold.held_out) items = {hot};
  for (int u = 0; u < split.n_users[1]; ++u) {
    bool has = false;
    for (const auto& e : split.train[1]) has = has || (e.user == u && e.item == hot);
    if (!has) split.train[1].push_back({u, hot});
  }
  auto r = baseline_score(BaselineKind::kPopularity, split, {Direction::kSourceToTarget, false, 10, 49, 1});
  CHECK(r.hr_at_k == 1.0);
  CHECK_THROWS_AS(parse_baseline("oracle"), Error);
}
