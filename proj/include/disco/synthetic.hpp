#pragma once

#include "disco/common.hpp"
#include "disco/dataset.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace disco {

struct SyntheticSpec {
  int n_users = 2000;
  int n_items_per_domain = 500;
  int k_true = 2;
  /// Weight of the source mixture inside each user's target mixture.
  double consistency = 0.9;
  /// Fraction of a domain's items each user interacts with.
  double density = 0.02;
  std::uint64_t seed = 7;
  /// Symmetric Dirichlet concentration of the per-user intent mixtures.
  double concentration = 0.5;
};

struct SyntheticData {
  RawInteractions source;
  RawInteractions target;
  /// n_users x k_true intent mixtures per domain (rows on the simplex).
  Mat source_mixture;
  Mat target_mixture;
  /// Dominant intent of every item, per domain.
  std::array<std::vector<int>, 2> item_intent;
};

/// Planted-intent two-domain generator. Every user appears in both domains;
/// an item's interaction probability for a user is proportional to the
/// user's weight on the item's intent, uniform among items of that intent.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace disco
