#pragma once

// Two-domain interaction ingestion: CSV parsing, sparse filtering, id
// remapping, cold-start splitting, bipartite graph construction and
// negative sampling.

#include "disco/autograd.hpp"
#include "disco/common.hpp"
#include "disco/random.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace disco {

enum Domain : int { kSource = 0, kTarget = 1 };

enum class Direction { kSourceToTarget, kTargetToSource };

inline Domain from_domain(Direction d) { return d == Direction::kSourceToTarget ? kSource : kTarget; }
inline Domain to_domain(Direction d) { return d == Direction::kSourceToTarget ? kTarget : kSource; }
std::string to_string(Direction d);
Direction parse_direction(const std::string& s);

struct Interaction {
  std::string user;
  std::string item;
  double rating = 0.0;
  std::int64_t timestamp = 0;

  bool operator==(const Interaction&) const = default;
};

struct RawInteractions {
  std::vector<Interaction> records;
};

/// Parses `user_id,item_id,rating,timestamp` lines. Duplicate (user, item)
/// pairs keep their first occurrence. `origin` names the stream in errors.
RawInteractions parse_interactions(std::istream& in, bool has_header, const std::string& origin);
RawInteractions load_interactions(const std::filesystem::path& path, bool has_header = false);
void write_interactions(const std::filesystem::path& path, const RawInteractions& raw);

/// Items below `min_item` go first, then users below `min_user` among the
/// survivors. With `iterate` the two passes repeat until nothing changes.
RawInteractions filter_sparse(const RawInteractions& raw, int min_user, int min_item,
                              bool iterate = false);

class Vocabulary {
 public:
  int add(const std::string& id);
  int find(const std::string& id) const;  // -1 when absent
  const std::string& id(int index) const { return ids_.at(static_cast<std::size_t>(index)); }
  int size() const { return static_cast<int>(ids_.size()); }
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, int> index_;
};

struct Edge {
  int user = 0;
  int item = 0;
  bool operator==(const Edge&) const = default;
  auto operator<=>(const Edge&) const = default;
};

struct DomainDataset {
  Vocabulary users;
  Vocabulary items;
  std::vector<Edge> interactions;
};

/// A user present in both domains: its index in each vocabulary.
struct OverlapUser {
  int source = 0;
  int target = 0;
  bool operator==(const OverlapUser&) const = default;
};

struct DomainPair {
  DomainDataset source;
  DomainDataset target;
  std::vector<OverlapUser> overlap;
};

DomainPair build_domain_pair(const RawInteractions& raw_source, const RawInteractions& raw_target);

struct BipartiteGraph {
  int n_users = 0;
  int n_items = 0;
  std::vector<Edge> edges;
  std::vector<int> user_degrees;
  std::vector<int> item_degrees;
  /// 1 / sqrt(deg(u) deg(v)) per edge, aligned with `edges`.
  std::vector<double> norm_coefficients;
  /// Symmetric (|U|+|V|) x (|U|+|V|) normalised adjacency, users first.
  ag::SparseOperator propagation;
};

BipartiteGraph build_bipartite_graph(int n_users, int n_items, const std::vector<Edge>& edges);
BipartiteGraph build_bipartite_graph(const DomainDataset& dataset);

/// Cold users of one transfer direction. User indices refer to the domain
/// the embeddings come from; held-out items belong to the other domain.
struct ColdDirection {
  std::vector<int> test_users;
  std::vector<int> valid_users;
  std::map<int, std::vector<int>> held_out;
};

struct ColdStartSplit {
  std::array<std::vector<Edge>, 2> train;
  std::array<int, 2> n_users{};
  std::array<int, 2> n_items{};
  std::vector<OverlapUser> overlap;
  std::vector<OverlapUser> train_overlap;
  ColdDirection s2t;
  ColdDirection t2s;
  double cold_ratio = 0.0;
  std::uint64_t seed = 0;

  const ColdDirection& cold(Direction d) const { return d == Direction::kSourceToTarget ? s2t : t2s; }
  /// Every item a user of `domain` is known to have interacted with
  /// (training edges plus held-out items).
  std::vector<std::vector<int>> known_items(Domain domain) const;
};

/// Picks floor(cold_ratio * |overlap|) overlap users; the first half is cold
/// for s2t, the rest for t2s, and each half splits into test then validation.
ColdStartSplit split_cold_start(const DomainPair& pair, double cold_ratio, std::uint64_t seed);

/// Uniform negatives over items a user has no training interaction with.
class NegativeSampler {
 public:
  NegativeSampler(int n_users, int n_items, const std::vector<Edge>& train);

  int sample(int user, Rng& rng) const;
  std::vector<Edge> sample(std::span<const Edge> positives, int count_per_positive, Rng& rng) const;
  bool interacted(int user, int item) const;

 private:
  int n_items_;
  std::vector<std::unordered_set<int>> seen_;
};

std::vector<Edge> sample_negatives(const ColdStartSplit& split, Domain domain, int count_per_positive,
                                   Rng& rng);

struct CandidateList {
  std::vector<int> items;
  int positive_index = 0;
};

/// Ground truth first, then `negative_count` distinct items drawn without
/// replacement from [0, n_items) minus `known` (which must be sorted).
CandidateList make_eval_candidates(int ground_truth, int n_items, std::span<const int> known,
                                   int negative_count, Rng& rng);

/// Everything written by `disco prepare`.
struct PreparedData {
  std::array<Vocabulary, 2> users;
  std::array<Vocabulary, 2> items;
  ColdStartSplit split;
  int min_user = 0;
  int min_item = 0;
  bool iterate_filter = false;
};

PreparedData prepare_data(const RawInteractions& raw_source, const RawInteractions& raw_target,
                          int min_user, int min_item, bool iterate_filter, double cold_ratio,
                          std::uint64_t seed);
void save_prepared(const std::filesystem::path& dir, const PreparedData& data);
PreparedData load_prepared(const std::filesystem::path& dir);

}  // namespace disco
