#include "disco/synthetic.hpp"

#include "disco/random.hpp"

#include <cmath>
#include <random>

namespace disco {

namespace {

constexpr int kMinUser = 5;
constexpr int kMinItem = 10;

Vec draw_dirichlet(int k, double concentration, Rng& rng) {
  std::gamma_distribution<double> gamma(concentration, 1.0);
  Vec w(k);
  double total = 0.0;
  do {
    for (int i = 0; i < k; ++i) w(i) = gamma(rng);
    total = w.sum();
  } while (!(total > 0.0));
  return w / total;
}

RawInteractions sample_domain(const Mat& mixture, const std::vector<int>& intent_of, int per_user,
                              const std::string& item_prefix, Rng& rng) {
  const int k = static_cast<int>(mixture.cols());
  std::vector<std::vector<int>> by_intent(static_cast<std::size_t>(k));
  for (std::size_t v = 0; v < intent_of.size(); ++v) by_intent[static_cast<std::size_t>(intent_of[v])].push_back(static_cast<int>(v));

  RawInteractions raw;
  std::int64_t clock = 0;
  std::vector<char> taken(intent_of.size());
  for (Index u = 0; u < mixture.rows(); ++u) {
    std::fill(taken.begin(), taken.end(), 0);
    std::vector<int> left(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) left[static_cast<std::size_t>(c)] = static_cast<int>(by_intent[static_cast<std::size_t>(c)].size());
    for (int n = 0; n < per_user; ++n) {
      // successive sampling: intent by mixture weight among intents that
      // still have untaken items, then a uniform untaken item of it
      double mass = 0.0;
      for (int c = 0; c < k; ++c) if (left[static_cast<std::size_t>(c)] > 0) mass += mixture(u, c);
      int intent = -1;
      if (mass > 0.0) {
        double r = uniform_unit(rng) * mass;
        for (int c = 0; c < k; ++c) {
          if (left[static_cast<std::size_t>(c)] == 0) continue;
          intent = c;
          r -= mixture(u, c);
          if (r < 0.0) break;
        }
      } else {
        for (int c = 0; c < k; ++c) if (left[static_cast<std::size_t>(c)] > 0) { intent = c; break; }
      }
      const auto& pool = by_intent[static_cast<std::size_t>(intent)];
      int v;
      do {
        v = pool[uniform_index(rng, pool.size())];
      } while (taken[static_cast<std::size_t>(v)]);
      taken[static_cast<std::size_t>(v)] = 1;
      --left[static_cast<std::size_t>(intent)];
      raw.records.push_back({"u" + std::to_string(u), item_prefix + std::to_string(v), 1.0, clock++});
    }
  }
  return raw;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.k_true < 1) throw Error("k_true must be >= 1");
  if (!(spec.consistency >= 0.0 && spec.consistency <= 1.0)) throw Error("consistency must lie in [0, 1]");
  if (spec.n_users < 1 || spec.n_items_per_domain < spec.k_true) {
    throw Error("need at least one user and k_true items per domain");
  }
  if (!(spec.density > 0.0 && spec.density <= 1.0)) throw Error("density must lie in (0, 1]");
  if (!(spec.concentration > 0.0)) throw Error("concentration must be > 0");

  const int per_user = static_cast<int>(std::lround(spec.density * spec.n_items_per_domain));
  const double mean_item_degree = static_cast<double>(spec.n_users) * per_user / spec.n_items_per_domain;
  if (per_user < kMinUser || mean_item_degree < kMinItem) {
    throw Error("density " + std::to_string(spec.density) + " gives " + std::to_string(per_user) +
                " interactions per user and mean item degree " + std::to_string(mean_item_degree) +
                "; raise the density so users keep >= 5 and items >= 10 interactions");
  }

  Rng rng(spec.seed);
  SyntheticData out;
  out.source_mixture.resize(spec.n_users, spec.k_true);
  out.target_mixture.resize(spec.n_users, spec.k_true);
  for (int u = 0; u < spec.n_users; ++u) {
    Vec ws = draw_dirichlet(spec.k_true, spec.concentration, rng);
    Vec fresh = draw_dirichlet(spec.k_true, spec.concentration, rng);
    Vec wt = spec.consistency * ws + (1.0 - spec.consistency) * fresh;
    wt /= wt.sum();
    out.source_mixture.row(u) = ws.transpose();
    out.target_mixture.row(u) = wt.transpose();
  }
  for (int d = 0; d < 2; ++d) {
    auto& intents = out.item_intent[static_cast<std::size_t>(d)];
    intents.resize(static_cast<std::size_t>(spec.n_items_per_domain));
    for (int v = 0; v < spec.n_items_per_domain; ++v) intents[static_cast<std::size_t>(v)] = v % spec.k_true;
  }
  Rng rs(derive_seed(spec.seed, 1));
  Rng rt(derive_seed(spec.seed, 2));
  out.source = sample_domain(out.source_mixture, out.item_intent[kSource], per_user, "s", rs);
  out.target = sample_domain(out.target_mixture, out.item_intent[kTarget], per_user, "t", rt);
  return out;
}

}  // namespace disco
