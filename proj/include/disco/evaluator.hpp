#pragma once

// Cold-start ranking evaluation: every held-out item of every cold user is
// ranked against sampled negatives from the user's unseen items.

#include "disco/dataset.hpp"

#include "json.hpp"

#include <functional>
#include <span>
#include <vector>

namespace disco {

struct EvalResult {
  double hr_at_k = 0.0;
  double ndcg_at_k = 0.0;
  int k = 10;
  int n_users = 0;
  /// One rank per candidate list (user, held-out item), in evaluation order.
  std::vector<int> per_user_ranks;
};

/// 1 + #{candidates scoring >= the positive}, excluding the positive itself.
int rank_candidates(std::span<const double> scores, int positive_index);

/// HR@k and NDCG@k averaged over `ranks`.
EvalResult ranking_metrics(std::span<const int> ranks, int k);

/// Writes scores of `items` for a user (indexed in the direction's source
/// domain) into `out`.
using ListScorer = std::function<void(int user, std::span<const int> items, std::span<double> out)>;

struct EvalProtocol {
  Direction direction = Direction::kSourceToTarget;
  bool validation = false;  // evaluate the validation users instead of test
  int k = 10;
  int negatives = 999;
  std::uint64_t seed = 0;
};

/// Candidate lists are seeded per (seed, direction, user), so results do not
/// depend on user order.
EvalResult evaluate_cold_start(const ColdStartSplit& split, const EvalProtocol& protocol, const ListScorer& scorer);

nlohmann::ordered_json to_json(const EvalResult& r, bool with_ranks = true);

}  // namespace disco
