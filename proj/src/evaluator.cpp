#include "disco/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace disco {

int rank_candidates(std::span<const double> scores, int positive_index) {
  if (positive_index < 0 || static_cast<std::size_t>(positive_index) >= scores.size()) {
    throw Error("rank_candidates: positive index " + std::to_string(positive_index) + " out of range");
  }
  const double pos = scores[static_cast<std::size_t>(positive_index)];
  if (!std::isfinite(pos)) throw Error("rank_candidates: non-finite positive score");
  int rank = 1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (static_cast<int>(i) != positive_index && scores[i] >= pos) ++rank;
  }
  return rank;
}

EvalResult ranking_metrics(std::span<const int> ranks, int k) {
  if (k < 1) throw Error("ranking_metrics: k must be >= 1");
  if (ranks.empty()) throw Error("ranking_metrics: empty rank list");
  EvalResult r;
  r.k = k;
  double hits = 0.0, gain = 0.0;
  for (int rank : ranks) {
    if (rank < 1) throw Error("ranking_metrics: ranks start at 1");
    if (rank <= k) {
      hits += 1.0;
      gain += 1.0 / std::log2(static_cast<double>(rank) + 1.0);
    }
  }
  const auto n = static_cast<double>(ranks.size());
  r.hr_at_k = hits / n;
  r.ndcg_at_k = gain / n;
  r.per_user_ranks.assign(ranks.begin(), ranks.end());
  r.n_users = static_cast<int>(ranks.size());
  return r;
}

EvalResult evaluate_cold_start(const ColdStartSplit& split, const EvalProtocol& protocol, const ListScorer& scorer) {
  const ColdDirection& cold = split.cold(protocol.direction);
  const std::vector<int>& users = protocol.validation ? cold.valid_users : cold.test_users;
  if (users.empty()) {
    throw Error(std::string("no cold ") + (protocol.validation ? "validation" : "test") + " users for " +
                to_string(protocol.direction));
  }
  const Domain to = to_domain(protocol.direction);
  const auto known = split.known_items(to);
  std::unordered_map<int, int> to_index;
  for (const auto& o : split.overlap) {
    if (protocol.direction == Direction::kSourceToTarget) to_index[o.source] = o.target;
    else to_index[o.target] = o.source;
  }
  const int n_items = split.n_items[to];

  std::vector<int> ranks;
  std::vector<double> scores;
  for (int u : users) {
    auto held = cold.held_out.find(u);
    if (held == cold.held_out.end()) continue;
    const auto& user_known = known.at(static_cast<std::size_t>(to_index.at(u)));
    Rng rng(derive_seed(protocol.seed, static_cast<std::uint64_t>(protocol.direction), static_cast<std::uint64_t>(u)));
    for (int gt : held->second) {
      CandidateList c = make_eval_candidates(gt, n_items, user_known, protocol.negatives, rng);
      scores.assign(c.items.size(), 0.0);
      scorer(u, c.items, scores);
      ranks.push_back(rank_candidates(scores, c.positive_index));
    }
  }
  EvalResult r = ranking_metrics(ranks, protocol.k);
  r.n_users = static_cast<int>(users.size());
  return r;
}

nlohmann::ordered_json to_json(const EvalResult& r, bool with_ranks) {
  nlohmann::ordered_json j;
  j["k"] = r.k;
  j["hr_at_k"] = r.hr_at_k;
  j["ndcg_at_k"] = r.ndcg_at_k;
  j["n_users"] = r.n_users;
  j["n_lists"] = r.per_user_ranks.size();
  if (with_ranks) j["per_user_ranks"] = r.per_user_ranks;
  return j;
}

}  // namespace disco
