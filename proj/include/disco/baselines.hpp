#pragma once

// Trivial reference scorers run through the cold-start evaluator.

#include "disco/evaluator.hpp"

#include <string>

namespace disco {

enum class BaselineKind { kRandom, kPopularity };

std::string to_string(BaselineKind k);
BaselineKind parse_baseline(const std::string& s);

/// random: seeded uniform scores; popularity: training interaction count
/// of the item in the destination domain.
ListScorer baseline_scorer(BaselineKind kind, const ColdStartSplit& split, Direction dir, std::uint64_t seed);
EvalResult baseline_score(BaselineKind kind, const ColdStartSplit& split, const EvalProtocol& protocol);

}  // namespace disco
