#include "disco/baselines.hpp"

#include <memory>
#include <unordered_map>

namespace disco {

std::string to_string(BaselineKind k) { return k == BaselineKind::kRandom ? "random" : "popularity"; }

BaselineKind parse_baseline(const std::string& s) {
  if (s == "random") return BaselineKind::kRandom;
  if (s == "popularity") return BaselineKind::kPopularity;
  throw Error("unknown baseline '" + s + "' (expected random or popularity)");
}

ListScorer baseline_scorer(BaselineKind kind, const ColdStartSplit& split, Direction dir, std::uint64_t seed) {
  if (kind == BaselineKind::kPopularity) {
    const Domain to = to_domain(dir);
    auto counts = std::make_shared<std::vector<double>>(static_cast<std::size_t>(split.n_items[to]), 0.0);
    for (const Edge& e : split.train[to]) (*counts)[static_cast<std::size_t>(e.item)] += 1.0;
    return [counts](int, std::span<const int> items, std::span<double> out) {
      for (std::size_t i = 0; i < items.size(); ++i) out[i] = (*counts)[static_cast<std::size_t>(items[i])];
    };
  }
  // one stream per (user, list number) keeps scores independent of user order
  auto lists = std::make_shared<std::unordered_map<int, std::uint64_t>>();
  return [lists, seed](int user, std::span<const int> items, std::span<double> out) {
    const std::uint64_t n = (*lists)[user]++;
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(user), n));
    for (std::size_t i = 0; i < items.size(); ++i) out[i] = uniform_unit(rng);
  };
}

EvalResult baseline_score(BaselineKind kind, const ColdStartSplit& split, const EvalProtocol& protocol) {
  return evaluate_cold_start(split, protocol, baseline_scorer(kind, split, protocol.direction, protocol.seed));
}

}  // namespace disco
