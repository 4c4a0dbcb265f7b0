#include "disco/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace disco {

std::string to_string(Direction d) { return d == Direction::kSourceToTarget ? "s2t" : "t2s"; }

Direction parse_direction(const std::string& s) {
  if (s == "s2t") return Direction::kSourceToTarget;
  if (s == "t2s") return Direction::kTargetToSource;
  throw Error("unknown direction '" + s + "' (expected s2t or t2s)");
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

std::string& chomp(std::string& s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
  return s;
}

struct PairHash {
  std::size_t operator()(const std::pair<std::string, std::string>& p) const {
    return std::hash<std::string>()(p.first) * 31 + std::hash<std::string>()(p.second);
  }
};

}  // namespace

RawInteractions parse_interactions(std::istream& in, bool has_header, const std::string& origin) {
  RawInteractions raw;
  std::unordered_set<std::pair<std::string, std::string>, PairHash> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    chomp(line);
    if (has_header && line_no == 1) continue;
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != 4 || fields[0].empty() || fields[1].empty()) {
      throw Error(origin + ":" + std::to_string(line_no) +
                  ": expected user_id,item_id,rating,timestamp");
    }
    Interaction rec;
    rec.user = fields[0];
    rec.item = fields[1];
    if (!parse_number(fields[2], rec.rating) || !std::isfinite(rec.rating)) {
      throw Error(origin + ":" + std::to_string(line_no) + ": bad rating '" + fields[2] + "'");
    }
    if (!parse_number(fields[3], rec.timestamp)) {
      throw Error(origin + ":" + std::to_string(line_no) + ": bad timestamp '" + fields[3] + "'");
    }
    if (seen.emplace(rec.user, rec.item).second) raw.records.push_back(std::move(rec));
  }
  if (raw.records.empty()) throw Error(origin + ": empty input");
  return raw;
}

RawInteractions load_interactions(const std::filesystem::path& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parse_interactions(in, has_header, path.string());
}

void write_interactions(const std::filesystem::path& path, const RawInteractions& raw) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  char buf[64];
  for (const auto& r : raw.records) {
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, r.rating);
    out << r.user << ',' << r.item << ',' << std::string_view(buf, static_cast<std::size_t>(p - buf)) << ','
        << r.timestamp << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

RawInteractions filter_sparse(const RawInteractions& raw, int min_user, int min_item, bool iterate) {
  if (min_user < 1 || min_item < 1) throw Error("filter thresholds must be >= 1");
  RawInteractions cur = raw;
  while (true) {
    const std::size_t before = cur.records.size();
    std::unordered_map<std::string, int> item_count;
    for (const auto& r : cur.records) ++item_count[r.item];
    std::vector<Interaction> kept;
    for (const auto& r : cur.records) {
      if (item_count[r.item] >= min_item) kept.push_back(r);
    }
    std::unordered_map<std::string, int> user_count;
    for (const auto& r : kept) ++user_count[r.user];
    cur.records.clear();
    for (auto& r : kept) {
      if (user_count[r.user] >= min_user) cur.records.push_back(std::move(r));
    }
    if (!iterate || cur.records.size() == before || cur.records.empty()) break;
  }
  if (cur.records.empty()) throw Error("dataset empty after filtering");
  return cur;
}

int Vocabulary::add(const std::string& id) {
  auto [it, inserted] = index_.emplace(id, static_cast<int>(ids_.size()));
  if (inserted) ids_.push_back(id);
  return it->second;
}

int Vocabulary::find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? -1 : it->second;
}

namespace {

DomainDataset remap(const RawInteractions& raw) {
  DomainDataset d;
  d.interactions.reserve(raw.records.size());
  for (const auto& r : raw.records) {
    const int u = d.users.add(r.user);
    const int v = d.items.add(r.item);
    d.interactions.push_back({u, v});
  }
  return d;
}

}  // namespace

DomainPair build_domain_pair(const RawInteractions& raw_source, const RawInteractions& raw_target) {
  if (raw_source.records.empty() || raw_target.records.empty()) {
    throw Error("both domains need at least one interaction");
  }
  DomainPair pair;
  pair.source = remap(raw_source);
  pair.target = remap(raw_target);
  for (int u = 0; u < pair.source.users.size(); ++u) {
    const int t = pair.target.users.find(pair.source.users.id(u));
    if (t >= 0) pair.overlap.push_back({u, t});
  }
  if (pair.overlap.empty()) throw Error("no overlapping users between the two domains");
  return pair;
}

BipartiteGraph build_bipartite_graph(int n_users, int n_items, const std::vector<Edge>& edges) {
  if (n_users <= 0 || n_items <= 0) throw Error("graph needs at least one user and one item");
  BipartiteGraph g;
  g.n_users = n_users;
  g.n_items = n_items;
  g.edges = edges;
  g.user_degrees.assign(static_cast<std::size_t>(n_users), 0);
  g.item_degrees.assign(static_cast<std::size_t>(n_items), 0);
  for (const Edge& e : edges) {
    if (e.user < 0 || e.user >= n_users || e.item < 0 || e.item >= n_items) {
      throw Error("edge index out of range");
    }
    ++g.user_degrees[static_cast<std::size_t>(e.user)];
    ++g.item_degrees[static_cast<std::size_t>(e.item)];
  }
  g.norm_coefficients.reserve(edges.size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(2 * edges.size());
  for (const Edge& e : edges) {
    const double c = 1.0 / std::sqrt(static_cast<double>(g.user_degrees[static_cast<std::size_t>(e.user)]) *
                                     static_cast<double>(g.item_degrees[static_cast<std::size_t>(e.item)]));
    g.norm_coefficients.push_back(c);
    trip.emplace_back(e.user, n_users + e.item, c);
    trip.emplace_back(n_users + e.item, e.user, c);
  }
  SpMat a(n_users + n_items, n_users + n_items);
  a.setFromTriplets(trip.begin(), trip.end());
  g.propagation = ag::SparseOperator(std::move(a));
  return g;
}

BipartiteGraph build_bipartite_graph(const DomainDataset& dataset) {
  if (dataset.interactions.empty()) throw Error("cannot build a graph from an empty dataset");
  return build_bipartite_graph(dataset.users.size(), dataset.items.size(), dataset.interactions);
}

std::vector<std::vector<int>> ColdStartSplit::known_items(Domain domain) const {
  std::vector<std::vector<int>> known(static_cast<std::size_t>(n_users[domain]));
  for (const Edge& e : train[domain]) known[static_cast<std::size_t>(e.user)].push_back(e.item);
  // users cold for the direction pointing into `domain` are indexed in the
  // other domain; translate through the overlap table
  const ColdDirection& into = domain == kTarget ? s2t : t2s;
  std::unordered_map<int, int> to_here;
  for (const auto& o : overlap) {
    if (domain == kTarget) to_here[o.source] = o.target;
    else to_here[o.target] = o.source;
  }
  for (const auto& [u, items] : into.held_out) {
    auto& dst = known[static_cast<std::size_t>(to_here.at(u))];
    dst.insert(dst.end(), items.begin(), items.end());
  }
  for (auto& k : known) {
    std::sort(k.begin(), k.end());
    k.erase(std::unique(k.begin(), k.end()), k.end());
  }
  return known;
}

ColdStartSplit split_cold_start(const DomainPair& pair, double cold_ratio, std::uint64_t seed) {
  if (!(cold_ratio > 0.0 && cold_ratio < 1.0)) throw Error("cold_ratio must lie in (0, 1)");
  const std::size_t n_overlap = pair.overlap.size();
  if (n_overlap < 2) throw Error("cold-start split needs at least 2 overlapping users");
  const auto n_cold = static_cast<std::size_t>(std::floor(cold_ratio * static_cast<double>(n_overlap) + 1e-9));
  if (n_cold == 0) throw Error("cold_ratio selects no users from " + std::to_string(n_overlap) + " overlapping users");
  if (n_cold >= n_overlap) throw Error("cold_ratio leaves no overlapping users for training");

  Rng rng(seed);
  std::vector<std::size_t> order(n_overlap);
  for (std::size_t i = 0; i < n_overlap; ++i) order[i] = i;
  shuffle(order, rng);

  ColdStartSplit split;
  split.cold_ratio = cold_ratio;
  split.seed = seed;
  split.overlap = pair.overlap;
  split.n_users = {pair.source.users.size(), pair.target.users.size()};
  split.n_items = {pair.source.items.size(), pair.target.items.size()};

  const std::size_t n_s2t = (n_cold + 1) / 2;
  std::set<int> cold_source;  // source index of s2t cold users
  std::set<int> cold_target;  // target index of t2s cold users
  auto assign = [](ColdDirection& dir, const std::vector<int>& users) {
    const std::size_t n_test = (users.size() + 1) / 2;
    dir.test_users.assign(users.begin(), users.begin() + static_cast<std::ptrdiff_t>(n_test));
    dir.valid_users.assign(users.begin() + static_cast<std::ptrdiff_t>(n_test), users.end());
    std::sort(dir.test_users.begin(), dir.test_users.end());
    std::sort(dir.valid_users.begin(), dir.valid_users.end());
  };
  std::vector<int> s2t_users, t2s_users;
  for (std::size_t i = 0; i < n_cold; ++i) {
    const OverlapUser& o = pair.overlap[order[i]];
    if (i < n_s2t) {
      s2t_users.push_back(o.source);
      cold_source.insert(o.source);
    } else {
      t2s_users.push_back(o.target);
      cold_target.insert(o.target);
    }
  }
  assign(split.s2t, s2t_users);
  assign(split.t2s, t2s_users);

  std::unordered_map<int, int> target_to_source;
  for (const auto& o : pair.overlap) target_to_source[o.target] = o.source;
  std::unordered_map<int, int> source_to_target;
  for (const auto& o : pair.overlap) source_to_target[o.source] = o.target;

  // s2t cold users lose their target edges, t2s cold users their source edges
  for (const Edge& e : pair.target.interactions) {
    auto it = target_to_source.find(e.user);
    if (it != target_to_source.end() && cold_source.count(it->second)) {
      split.s2t.held_out[it->second].push_back(e.item);
    } else {
      split.train[kTarget].push_back(e);
    }
  }
  for (const Edge& e : pair.source.interactions) {
    auto it = source_to_target.find(e.user);
    if (it != source_to_target.end() && cold_target.count(it->second)) {
      split.t2s.held_out[it->second].push_back(e.item);
    } else {
      split.train[kSource].push_back(e);
    }
  }
  for (const auto& o : pair.overlap) {
    if (!cold_source.count(o.source) && !cold_target.count(o.target)) split.train_overlap.push_back(o);
  }
  return split;
}

NegativeSampler::NegativeSampler(int n_users, int n_items, const std::vector<Edge>& train)
    : n_items_(n_items), seen_(static_cast<std::size_t>(n_users)) {
  for (const Edge& e : train) seen_[static_cast<std::size_t>(e.user)].insert(e.item);
}

bool NegativeSampler::interacted(int user, int item) const {
  return seen_[static_cast<std::size_t>(user)].count(item) > 0;
}

int NegativeSampler::sample(int user, Rng& rng) const {
  const auto& s = seen_.at(static_cast<std::size_t>(user));
  if (static_cast<int>(s.size()) >= n_items_) {
    throw Error("user " + std::to_string(user) + " has interacted with every item; no negative exists");
  }
  while (true) {
    const int v = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n_items_)));
    if (!s.count(v)) return v;
  }
}

std::vector<Edge> NegativeSampler::sample(std::span<const Edge> positives, int count_per_positive,
                                          Rng& rng) const {
  if (count_per_positive < 1) throw Error("count_per_positive must be >= 1");
  std::vector<Edge> out;
  out.reserve(positives.size() * static_cast<std::size_t>(count_per_positive));
  for (const Edge& p : positives) {
    for (int c = 0; c < count_per_positive; ++c) out.push_back({p.user, sample(p.user, rng)});
  }
  return out;
}

std::vector<Edge> sample_negatives(const ColdStartSplit& split, Domain domain, int count_per_positive,
                                   Rng& rng) {
  NegativeSampler sampler(split.n_users[domain], split.n_items[domain], split.train[domain]);
  return sampler.sample(split.train[domain], count_per_positive, rng);
}

CandidateList make_eval_candidates(int ground_truth, int n_items, std::span<const int> known,
                                   int negative_count, Rng& rng) {
  if (negative_count < 0) throw Error("negative_count must be >= 0");
  std::vector<int> eligible;
  eligible.reserve(static_cast<std::size_t>(n_items));
  auto it = known.begin();
  for (int v = 0; v < n_items; ++v) {
    while (it != known.end() && *it < v) ++it;
    if (v == ground_truth || (it != known.end() && *it == v)) continue;
    eligible.push_back(v);
  }
  if (static_cast<int>(eligible.size()) < negative_count) {
    throw Error("only " + std::to_string(eligible.size()) + " eligible negatives, " +
                std::to_string(negative_count) + " requested");
  }
  CandidateList out;
  out.items.reserve(static_cast<std::size_t>(negative_count) + 1);
  out.items.push_back(ground_truth);
  for (int i = 0; i < negative_count; ++i) {
    const std::size_t j = static_cast<std::size_t>(i) +
                          uniform_index(rng, eligible.size() - static_cast<std::size_t>(i));
    std::swap(eligible[static_cast<std::size_t>(i)], eligible[j]);
    out.items.push_back(eligible[static_cast<std::size_t>(i)]);
  }
  return out;
}

PreparedData prepare_data(const RawInteractions& raw_source, const RawInteractions& raw_target,
                          int min_user, int min_item, bool iterate_filter, double cold_ratio,
                          std::uint64_t seed) {
  const RawInteractions fs = filter_sparse(raw_source, min_user, min_item, iterate_filter);
  const RawInteractions ft = filter_sparse(raw_target, min_user, min_item, iterate_filter);
  DomainPair pair = build_domain_pair(fs, ft);
  PreparedData data;
  data.split = split_cold_start(pair, cold_ratio, seed);
  data.users = {std::move(pair.source.users), std::move(pair.target.users)};
  data.items = {std::move(pair.source.items), std::move(pair.target.items)};
  data.min_user = min_user;
  data.min_item = min_item;
  data.iterate_filter = iterate_filter;
  return data;
}

namespace {

const char* suffix(Domain d) { return d == kSource ? "s" : "t"; }

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("missing file " + p.string());
  return in;
}

void write_vocab(const std::filesystem::path& p, const Vocabulary& v) {
  auto out = open_out(p);
  for (int i = 0; i < v.size(); ++i) out << v.id(i) << '\t' << i << '\n';
}

Vocabulary read_vocab(const std::filesystem::path& p) {
  auto in = open_in(p);
  Vocabulary v;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    chomp(line);
    if (line.empty()) continue;
    auto f = split(line, '\t');
    int idx = -1;
    if (f.size() != 2 || !parse_number(f[1], idx) || idx != v.size()) {
      throw Error(p.string() + ":" + std::to_string(line_no) + ": expected '<id>\\t<dense index>'");
    }
    v.add(f[0]);
  }
  return v;
}

int read_int(const std::string& s, const std::filesystem::path& p, int line_no) {
  int x = 0;
  if (!parse_number(s, x)) throw Error(p.string() + ":" + std::to_string(line_no) + ": bad integer '" + s + "'");
  return x;
}

void write_cold(const std::filesystem::path& p, const std::vector<int>& users,
                const std::map<int, std::vector<int>>& held_out) {
  auto out = open_out(p);
  for (int u : users) {
    out << u << '\t';
    const auto& items = held_out.at(u);
    for (std::size_t i = 0; i < items.size(); ++i) out << (i ? "," : "") << items[i];
    out << '\n';
  }
}

std::vector<int> read_cold(const std::filesystem::path& p, std::map<int, std::vector<int>>& held_out) {
  auto in = open_in(p);
  std::vector<int> users;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    chomp(line);
    if (line.empty()) continue;
    auto f = split(line, '\t');
    if (f.size() != 2) throw Error(p.string() + ":" + std::to_string(line_no) + ": expected '<user>\\t<items>'");
    const int u = read_int(f[0], p, line_no);
    std::vector<int> items;
    for (const auto& s : split(f[1], ',')) items.push_back(read_int(s, p, line_no));
    users.push_back(u);
    held_out[u] = std::move(items);
  }
  return users;
}

}  // namespace

void save_prepared(const std::filesystem::path& dir, const PreparedData& data) {
  std::filesystem::create_directories(dir);
  const auto& sp = data.split;
  for (Domain d : {kSource, kTarget}) {
    write_vocab(dir / (std::string("users_") + suffix(d) + ".tsv"), data.users[d]);
    write_vocab(dir / (std::string("items_") + suffix(d) + ".tsv"), data.items[d]);
    auto out = open_out(dir / (std::string("train_") + suffix(d) + ".tsv"));
    for (const Edge& e : sp.train[d]) out << e.user << '\t' << e.item << '\n';
  }
  {
    auto out = open_out(dir / "overlap.tsv");
    for (const auto& o : sp.overlap) out << o.source << '\t' << o.target << '\n';
  }
  write_cold(dir / "cold_test_s2t.tsv", sp.s2t.test_users, sp.s2t.held_out);
  write_cold(dir / "cold_valid_s2t.tsv", sp.s2t.valid_users, sp.s2t.held_out);
  write_cold(dir / "cold_test_t2s.tsv", sp.t2s.test_users, sp.t2s.held_out);
  write_cold(dir / "cold_valid_t2s.tsv", sp.t2s.valid_users, sp.t2s.held_out);

  nlohmann::ordered_json meta;
  meta["n_users"] = {{"s", sp.n_users[kSource]}, {"t", sp.n_users[kTarget]}};
  meta["n_items"] = {{"s", sp.n_items[kSource]}, {"t", sp.n_items[kTarget]}};
  meta["n_train"] = {{"s", sp.train[kSource].size()}, {"t", sp.train[kTarget].size()}};
  meta["n_overlap"] = sp.overlap.size();
  meta["n_train_overlap"] = sp.train_overlap.size();
  meta["n_cold"] = {{"s2t", {{"test", sp.s2t.test_users.size()}, {"valid", sp.s2t.valid_users.size()}}},
                    {"t2s", {{"test", sp.t2s.test_users.size()}, {"valid", sp.t2s.valid_users.size()}}}};
  meta["seed"] = sp.seed;
  meta["cold_ratio"] = sp.cold_ratio;
  meta["min_user_interactions"] = data.min_user;
  meta["min_item_interactions"] = data.min_item;
  meta["iterate_filter"] = data.iterate_filter;
  auto out = open_out(dir / "meta.json");
  out << meta.dump(2) << '\n';
}

PreparedData load_prepared(const std::filesystem::path& dir) {
  PreparedData data;
  auto& sp = data.split;
  nlohmann::json meta;
  try {
    auto in = open_in(dir / "meta.json");
    meta = nlohmann::json::parse(in);
    sp.seed = meta.at("seed").get<std::uint64_t>();
    sp.cold_ratio = meta.at("cold_ratio").get<double>();
    data.min_user = meta.at("min_user_interactions").get<int>();
    data.min_item = meta.at("min_item_interactions").get<int>();
    data.iterate_filter = meta.value("iterate_filter", false);
  } catch (const nlohmann::json::exception& e) {
    throw Error((dir / "meta.json").string() + ": " + e.what());
  }
  for (Domain d : {kSource, kTarget}) {
    data.users[d] = read_vocab(dir / (std::string("users_") + suffix(d) + ".tsv"));
    data.items[d] = read_vocab(dir / (std::string("items_") + suffix(d) + ".tsv"));
    sp.n_users[d] = data.users[d].size();
    sp.n_items[d] = data.items[d].size();
    const auto p = dir / (std::string("train_") + suffix(d) + ".tsv");
    auto in = open_in(p);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      chomp(line);
      if (line.empty()) continue;
      auto f = split(line, '\t');
      if (f.size() != 2) throw Error(p.string() + ":" + std::to_string(line_no) + ": expected '<user>\\t<item>'");
      Edge e{read_int(f[0], p, line_no), read_int(f[1], p, line_no)};
      if (e.user < 0 || e.user >= sp.n_users[d] || e.item < 0 || e.item >= sp.n_items[d]) {
        throw Error(p.string() + ":" + std::to_string(line_no) + ": index out of range");
      }
      sp.train[d].push_back(e);
    }
  }
  {
    const auto p = dir / "overlap.tsv";
    auto in = open_in(p);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      chomp(line);
      if (line.empty()) continue;
      auto f = split(line, '\t');
      if (f.size() != 2) throw Error(p.string() + ":" + std::to_string(line_no) + ": expected '<source>\\t<target>'");
      sp.overlap.push_back({read_int(f[0], p, line_no), read_int(f[1], p, line_no)});
    }
  }
  sp.s2t.test_users = read_cold(dir / "cold_test_s2t.tsv", sp.s2t.held_out);
  sp.s2t.valid_users = read_cold(dir / "cold_valid_s2t.tsv", sp.s2t.held_out);
  sp.t2s.test_users = read_cold(dir / "cold_test_t2s.tsv", sp.t2s.held_out);
  sp.t2s.valid_users = read_cold(dir / "cold_valid_t2s.tsv", sp.t2s.held_out);
  std::set<int> cs, ct;
  for (const auto& [u, _] : sp.s2t.held_out) cs.insert(u);
  for (const auto& [u, _] : sp.t2s.held_out) ct.insert(u);
  for (const auto& o : sp.overlap) {
    if (!cs.count(o.source) && !ct.count(o.target)) sp.train_overlap.push_back(o);
  }
  return data;
}

}  // namespace disco
