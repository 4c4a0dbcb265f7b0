#include "disco/trainer.hpp"

#include "disco/affinity.hpp"
#include "disco/intra_contrast.hpp"
#include "disco/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace disco {

using json = nlohmann::ordered_json;

double total_loss(const LossComponents& c, double beta, double gamma, double lambda) {
  const double parts[] = {c.rec_source, c.rec_target, c.intra, c.orth, c.inter};
  for (double p : parts) {
    if (!std::isfinite(p)) throw Error("non-finite loss component");
  }
  const double contra = beta * c.inter + (1.0 - beta) * (c.intra + gamma * c.orth);
  const double rec = c.rec_source + c.rec_target;
  return lambda * contra + (1.0 - lambda) * rec;
}

ag::Var total_loss(const ag::Var& rec_source, const ag::Var& rec_target, const ag::Var& intra, const ag::Var& orth,
                   const ag::Var& inter, double beta, double gamma, double lambda) {
  ag::Var contra = ag::add(ag::scale(inter, beta), ag::scale(ag::add(intra, ag::scale(orth, gamma)), 1.0 - beta));
  ag::Var rec = ag::add(rec_source, rec_target);
  return ag::add(ag::scale(contra, lambda), ag::scale(rec, 1.0 - lambda));
}

Adam::Adam(std::vector<ag::Parameter*> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
  for (auto* p : params_) {
    m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Mat& g = params_[i]->grad;
    m_[i] = b1_ * m_[i] + (1.0 - b1_) * g;
    v_[i] = b2_ * v_[i] + (1.0 - b2_) * g.cwiseProduct(g);
    params_[i]->value.array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

namespace {

constexpr std::uint64_t kPlanStream = 1;
constexpr std::uint64_t kDropoutStream = 2;

std::vector<int> sample_distinct(const std::vector<int>& pool, std::size_t m, Rng& rng) {
  std::vector<int> v = pool;
  m = std::min(m, v.size());
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t j = i + uniform_index(rng, v.size() - i);
    std::swap(v[i], v[j]);
  }
  v.resize(m);
  return v;
}

std::vector<int> users_of(std::span<const Edge> edges) {
  std::vector<int> u;
  for (const Edge& e : edges) u.push_back(e.user);
  return u;
}

std::vector<int> items_of(std::span<const Edge> edges) {
  std::vector<int> v;
  for (const Edge& e : edges) v.push_back(e.item);
  return v;
}

std::vector<Mat> channel_targets(const Mat& zhat, const TrainConfig& cfg) {
  std::vector<Mat> out;
  for (auto& w : intent_walk_targets(zhat, cfg.channels, cfg.kernel_tau(), cfg.alpha, cfg.walk_steps,
                                     cfg.has(Ablation::kIdentityWalk))) {
    out.push_back(std::move(w.T));
  }
  return out;
}

LossComponents mean_of(const std::vector<LossComponents>& steps) {
  LossComponents m;
  if (steps.empty()) return m;
  for (const auto& s : steps) {
    m.rec_source += s.rec_source;
    m.rec_target += s.rec_target;
    m.intra += s.intra;
    m.orth += s.orth;
    m.inter += s.inter;
    m.total += s.total;
  }
  const auto n = static_cast<double>(steps.size());
  m.rec_source /= n;
  m.rec_target /= n;
  m.intra /= n;
  m.orth /= n;
  m.inter /= n;
  m.total /= n;
  return m;
}

}  // namespace

Trainer::Trainer(ColdStartSplit split, TrainConfig cfg) : split_(std::move(split)), cfg_(std::move(cfg)) {
  cfg_.validate();
  for (int d = 0; d < 2; ++d) {
    if (split_.train[d].empty()) throw Error("no training interactions in domain " + std::to_string(d));
    graphs_[d] = build_bipartite_graph(split_.n_users[d], split_.n_items[d], split_.train[d]);
    samplers_.emplace_back(split_.n_users[d], split_.n_items[d], split_.train[d]);
    for (int u = 0; u < split_.n_users[d]; ++u) {
      if (graphs_[d].user_degrees[static_cast<std::size_t>(u)] > 0) active_users_[d].push_back(u);
    }
  }
  if (split_.train_overlap.empty()) throw Error("no overlapping training users; inter-domain contrast impossible");
  model_ = std::make_unique<Model>(Model::init(cfg_, split_.n_users, split_.n_items));
  adam_ = Adam(model_->trainable(), cfg_.lr, cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_eps);
}

int Trainer::steps_per_epoch() const {
  const std::size_t n = std::max(split_.train[0].size(), split_.train[1].size());
  return static_cast<int>((n + static_cast<std::size_t>(cfg_.batch_size) - 1) / static_cast<std::size_t>(cfg_.batch_size));
}

std::array<std::vector<int>, 2> Trainer::plan_epoch(Rng& rng) const {
  std::array<std::vector<int>, 2> plan;
  for (int d = 0; d < 2; ++d) {
    plan[d].resize(split_.train[d].size());
    std::iota(plan[d].begin(), plan[d].end(), 0);
    shuffle(plan[d], rng);
  }
  return plan;
}

Batch Trainer::make_batch(const std::array<std::vector<int>, 2>& plan, int step, Rng& rng) const {
  Batch b;
  for (int d = 0; d < 2; ++d) {
    const auto& order = plan[d];
    const std::size_t n = order.size();
    const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(cfg_.batch_size), n);
    const std::size_t start = static_cast<std::size_t>(step) * static_cast<std::size_t>(cfg_.batch_size);
    for (std::size_t i = 0; i < count; ++i) {
      b.positives[d].push_back(split_.train[d][static_cast<std::size_t>(order[(start + i) % n])]);
    }
    b.negatives[d] = samplers_[static_cast<std::size_t>(d)].sample(b.positives[d], cfg_.neg_per_pos, rng);
    b.intra_users[d] = sample_distinct(active_users_[d], static_cast<std::size_t>(cfg_.contrast_batch), rng);
  }
  std::vector<int> idx(split_.train_overlap.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (int i : sample_distinct(idx, static_cast<std::size_t>(cfg_.contrast_batch), rng)) {
    b.overlap.push_back(split_.train_overlap[static_cast<std::size_t>(i)]);
  }
  return b;
}

Trainer::Losses Trainer::forward(ag::Tape& tape, const Batch& batch, Rng* dropout_rng, Constants* constants) {
  Model& m = *model_;
  const int k = cfg_.channels;
  const TargetMode mode = cfg_.target_mode();
  const SimilarityConfig sim{cfg_.tau, cfg_.phi};
  const bool uniform = cfg_.has(Ablation::kUniformPrior);

  Constants local;
  Constants& cst = constants ? *constants : local;
  const bool reuse = cst.filled;
  std::array<EncodedVars, 2> online;
  std::array<Mat, 2>& target_users = cst.target_users;
  for (int d = 0; d < 2; ++d) {
    online[d] = encode(tape, graphs_[d], m.encoders[d].online, cfg_.dropout, dropout_rng);
    if (mode != TargetMode::kSharedTarget && !reuse) {
      target_users[d] = target_encode(m.encoders[d], graphs_[d], mode).users;
    }
  }
  auto target_rows = [&](int d, std::span<const int> rows) -> ag::Var {
    if (mode == TargetMode::kSharedTarget) return ag::gather_rows(online[d].users, rows);
    Mat out(static_cast<Index>(rows.size()), target_users[d].cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = target_users[d].row(rows[i]);
    return tape.constant(std::move(out));
  };

  Losses out;
  // intra-domain contrast and orthogonality
  for (int d = 0; d < 2; ++d) {
    const auto& users = batch.intra_users[d];
    ag::Var z = ag::gather_rows(online[d].users, users);
    ag::Var zhat = target_rows(d, users);
    if (!reuse) cst.intra_targets[d] = channel_targets(zhat.value(), cfg_);
    ag::Var intra = ag::scale(intra_loss(cst.intra_targets[d], z, zhat, k, sim), 1.0 / static_cast<double>(users.size()));
    ag::Var orth = ag::add(orthogonality_penalty(z, k, cfg_.orth_form), orthogonality_penalty(zhat, k, cfg_.orth_form));
    out.intra = out.intra.valid() ? ag::add(out.intra, intra) : intra;
    out.orth = out.orth.valid() ? ag::add(out.orth, orth) : orth;
  }

  // inter-domain contrast per trained direction
  std::vector<int> overlap_idx[2];
  for (const auto& o : batch.overlap) {
    overlap_idx[kSource].push_back(o.source);
    overlap_idx[kTarget].push_back(o.target);
  }
  for (Direction dir : directions(cfg_.direction)) {
    const Domain from = from_domain(dir), to = to_domain(dir);
    ag::Var z = ag::gather_rows(online[from].users, overlap_idx[from]);
    ag::Var e = decode(tape, z, m.bridge(dir), cfg_.has(Ablation::kDecoder));
    ag::Var log_prior = intent_log_prior(e, tape.param(m.prototypes[to]), k, cfg_.phi, uniform);
    ag::Var zhat = target_rows(to, overlap_idx[to]);
    std::vector<ag::Var> log_phat = batch_intent_log_similarity(e, zhat, k, cfg_.phi);
    Mat& t = cst.inter_targets[static_cast<int>(dir)];
    if (!reuse) {
      t = mean_intent_similarity(intent_walk_targets(zhat.value(), k, cfg_.kernel_tau(), cfg_.alpha, cfg_.walk_steps,
                                                     cfg_.has(Ablation::kIdentityWalk)));
    }
    ag::Var inter = ag::scale(inter_loss(t, log_prior, log_phat), 1.0 / static_cast<double>(batch.overlap.size()));
    out.inter = out.inter.valid() ? ag::add(out.inter, inter) : inter;
  }

  cst.filled = true;

  // recommendation losses
  for (int d = 0; d < 2; ++d) {
    std::vector<Edge> all = batch.positives[d];
    all.insert(all.end(), batch.negatives[d].begin(), batch.negatives[d].end());
    ag::Var zu = ag::gather_rows(online[d].users, users_of(all));
    ag::Var zi = ag::gather_rows(online[d].items, items_of(all));
    ag::Var w = uniform ? tape.constant(Mat::Constant(zu.rows(), k, 1.0 / k))
                        : ag::softmax_rows(intent_logits(zu, tape.param(m.prototypes[d]), k, cfg_.phi));
    ag::Var s = preference_scores(zu, zi, w, k);
    const auto n_pos = static_cast<Index>(batch.positives[d].size());
    ag::Var loss = rec_loss(ag::slice_rows(s, 0, n_pos), ag::slice_rows(s, n_pos, s.rows() - n_pos));
    out.rec[d] = ag::scale(loss, 1.0 / static_cast<double>(n_pos));
  }

  out.values.rec_source = out.rec[0].scalar();
  out.values.rec_target = out.rec[1].scalar();
  out.values.intra = out.intra.scalar();
  out.values.orth = out.orth.scalar();
  out.values.inter = out.inter.scalar();
  const double gamma = cfg_.effective_gamma();
  try {
    out.values.total = total_loss(out.values, cfg_.beta, gamma, cfg_.lambda);
  } catch (const Error&) {
    const auto& v = out.values;
    throw Error("non-finite loss: rec_source=" + std::to_string(v.rec_source) + " rec_target=" +
                std::to_string(v.rec_target) + " intra=" + std::to_string(v.intra) + " orth=" +
                std::to_string(v.orth) + " inter=" + std::to_string(v.inter));
  }
  out.total = total_loss(out.rec[0], out.rec[1], out.intra, out.orth, out.inter, cfg_.beta, gamma, cfg_.lambda);
  return out;
}

LossComponents Trainer::train_step(const Batch& batch, Rng& dropout_rng) {
  ag::Tape tape;
  Losses l = forward(tape, batch, &dropout_rng);
  for (auto* p : adam_.params()) p->zero_grad();
  tape.backward(l.total);
  adam_.step();
  if (cfg_.target_mode() == TargetMode::kEma) {
    for (auto& pair : model_->encoders) ema_update(pair);
  }
  return l.values;
}

EpochRecord Trainer::run_epoch(int epoch) {
  Rng rng(derive_seed(cfg_.seed, kPlanStream, static_cast<std::uint64_t>(epoch)));
  Rng drop(derive_seed(cfg_.seed, kDropoutStream, static_cast<std::uint64_t>(epoch)));
  auto plan = plan_epoch(rng);
  EpochRecord rec;
  rec.epoch = epoch;
  const int steps = steps_per_epoch();
  for (int s = 0; s < steps; ++s) rec.steps.push_back(train_step(make_batch(plan, s, rng), drop));
  rec.mean = mean_of(rec.steps);
  return rec;
}

ListScorer Trainer::scorer(Direction dir) const {
  const Model& m = *model_;
  const Domain from = from_domain(dir), to = to_domain(dir);
  DisentangledEmbeddings src = encode_domain(graphs_[from], m.encoders[from].online);
  DisentangledEmbeddings dst = encode_domain(graphs_[to], m.encoders[to].online);
  Mat e = decode(src.users, m.bridge(dir), cfg_.has(Ablation::kDecoder));
  Mat w = intent_prior(e, m.prototypes[to].value, cfg_.channels, cfg_.phi, cfg_.has(Ablation::kUniformPrior));
  auto queries = std::make_shared<Mat>(intent_queries(e, w, cfg_.channels));
  auto items = std::make_shared<Mat>(std::move(dst.items));
  return [queries, items](int user, std::span<const int> cand, std::span<double> out) {
    for (std::size_t i = 0; i < cand.size(); ++i) out[i] = queries->row(user).dot(items->row(cand[i]));
  };
}

EvalResult Trainer::evaluate(Direction dir, bool validation, int negatives, int k, std::uint64_t seed) const {
  EvalProtocol p{dir, validation, k, negatives, seed};
  return evaluate_cold_start(split_, p, scorer(dir));
}

std::pair<double, double> Trainer::validate() const {
  double hr = 0.0, ndcg = 0.0;
  const auto dirs = directions(cfg_.direction);
  for (Direction d : dirs) {
    EvalResult r = evaluate(d, true, cfg_.eval_negatives, cfg_.eval_k, cfg_.seed);
    hr += r.hr_at_k;
    ndcg += r.ndcg_at_k;
  }
  return {hr / static_cast<double>(dirs.size()), ndcg / static_cast<double>(dirs.size())};
}

Checkpoint Trainer::checkpoint(bool with_optimizer) const {
  Checkpoint c;
  auto* self = const_cast<Trainer*>(this);
  for (auto* p : self->model_->all_parameters()) c.add(p->name, p->value);
  if (with_optimizer) {
    const auto& ps = adam_.params();
    for (std::size_t i = 0; i < ps.size(); ++i) {
      c.add("adam.m." + ps[i]->name, self->adam_.first_moments()[i]);
      c.add("adam.v." + ps[i]->name, self->adam_.second_moments()[i]);
    }
    c.meta["adam_steps"] = adam_.steps();
  }
  c.meta["config"] = to_json(cfg_);
  c.meta["rng"] = {{"generator", "mt19937_64"},
                   {"epoch_streams", "derive_seed(seed, stream, epoch)"},
                   {"seed", cfg_.seed}};
  return c;
}

void Trainer::restore(const Checkpoint& ckpt, bool with_optimizer) {
  for (auto* p : model_->all_parameters()) {
    const Mat& v = ckpt.get(p->name);
    if (v.rows() != p->value.rows() || v.cols() != p->value.cols()) {
      throw Error("checkpoint array '" + p->name + "' has the wrong shape");
    }
    p->value = v;
  }
  if (with_optimizer) {
    const auto& ps = adam_.params();
    for (std::size_t i = 0; i < ps.size(); ++i) {
      adam_.first_moments()[i] = ckpt.get("adam.m." + ps[i]->name);
      adam_.second_moments()[i] = ckpt.get("adam.v." + ps[i]->name);
    }
    adam_.set_steps(ckpt.meta.at("adam_steps").get<long>());
  }
}

json to_json(const LossComponents& c) {
  return json{{"rec_source", c.rec_source}, {"rec_target", c.rec_target}, {"intra", c.intra},
              {"orth", c.orth},             {"inter", c.inter},           {"total", c.total}};
}

namespace {

LossComponents components_from_json(const json& j) {
  return {j.at("rec_source").get<double>(), j.at("rec_target").get<double>(), j.at("intra").get<double>(),
          j.at("orth").get<double>(),       j.at("inter").get<double>(),      j.at("total").get<double>()};
}

}  // namespace

json to_json(const TrainReport& r) {
  json j;
  j["best_epoch"] = r.best_epoch;
  j["best_valid_hr"] = r.best_valid_hr;
  j["since_best"] = r.since_best;
  j["early_stopped"] = r.early_stopped;
  j["completed"] = r.completed;
  json epochs = json::array();
  for (const auto& e : r.epochs) {
    json je;
    je["epoch"] = e.epoch;
    je["loss"] = to_json(e.mean);
    je["valid_hr"] = e.valid_hr;
    je["valid_ndcg"] = e.valid_ndcg;
    json steps = json::array();
    for (const auto& s : e.steps) steps.push_back(to_json(s));
    je["steps"] = steps;
    epochs.push_back(je);
  }
  j["epochs"] = epochs;
  return j;
}

TrainReport report_from_json(const json& j) {
  TrainReport r;
  r.best_epoch = j.at("best_epoch").get<int>();
  r.best_valid_hr = j.at("best_valid_hr").get<double>();
  r.since_best = j.at("since_best").get<int>();
  r.early_stopped = j.at("early_stopped").get<bool>();
  r.completed = j.at("completed").get<bool>();
  for (const auto& je : j.at("epochs")) {
    EpochRecord e;
    e.epoch = je.at("epoch").get<int>();
    e.mean = components_from_json(je.at("loss"));
    e.valid_hr = je.at("valid_hr").get<double>();
    e.valid_ndcg = je.at("valid_ndcg").get<double>();
    for (const auto& s : je.at("steps")) e.steps.push_back(components_from_json(s));
    r.epochs.push_back(std::move(e));
  }
  return r;
}

namespace {

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw Error("cannot write " + path.string());
}

}  // namespace

TrainReport Trainer::fit(const FitOptions& opts) {
  const bool persist = !opts.out_dir.empty();
  if (persist) std::filesystem::create_directories(opts.out_dir);
  const auto resume_dir = opts.out_dir / "resume";

  TrainReport report;
  int start = 0;
  if (opts.resume) {
    if (!persist) throw Error("resume needs an output directory");
    Checkpoint state = load_checkpoint(resume_dir);
    if (state.meta.at("config") != to_json(cfg_)) throw Error("resume state was written with a different config");
    restore(state, true);
    report = report_from_json(state.meta.at("report"));
    start = state.meta.at("next_epoch").get<int>();
  }
  std::vector<Mat> best;
  auto snapshot = [&] {
    best.clear();
    for (auto* p : model_->all_parameters()) best.push_back(p->value);
  };
  auto write_report = [&] {
    if (!persist) return;
    json j;
    j["config"] = to_json(cfg_);
    j["report"] = to_json(report);
    write_json(opts.out_dir / "report.json", j);
  };

  if (cfg_.epochs == 0) {
    report.completed = true;
    if (persist) save_checkpoint(opts.out_dir, checkpoint(false));
    write_report();
    return report;
  }

  int ran = 0;
  bool interrupted = false;
  for (int epoch = start; epoch < cfg_.epochs && !report.early_stopped; ++epoch) {
    if (opts.max_epochs_this_call >= 0 && ran >= opts.max_epochs_this_call) {
      interrupted = true;
      break;
    }
    EpochRecord rec = run_epoch(epoch);
    std::tie(rec.valid_hr, rec.valid_ndcg) = validate();
    if (opts.verbose) {
      std::clog << "epoch " << epoch << " loss " << rec.mean.total << " (rec " << rec.mean.rec_source << "/"
                << rec.mean.rec_target << " intra " << rec.mean.intra << " orth " << rec.mean.orth << " inter "
                << rec.mean.inter << ") valid HR@" << cfg_.eval_k << " " << rec.valid_hr << '\n';
    }
    if (rec.valid_hr > report.best_valid_hr) {
      report.best_valid_hr = rec.valid_hr;
      report.best_epoch = epoch;
      report.since_best = 0;
      snapshot();
      if (persist) {
        Checkpoint c = checkpoint(false);
        c.meta["epoch"] = epoch;
        save_checkpoint(opts.out_dir, c);
      }
    } else {
      ++report.since_best;
    }
    report.epochs.push_back(std::move(rec));
    if (report.since_best >= cfg_.patience) report.early_stopped = true;
    ++ran;
    if (persist) {
      Checkpoint state = checkpoint(true);
      state.meta["next_epoch"] = epoch + 1;
      state.meta["report"] = to_json(report);
      save_checkpoint(resume_dir, state);
    }
  }
  if (interrupted) return report;
  report.completed = true;
  if (best.empty() && opts.resume && persist) {
    // best weights live on disk when the improving epoch ran in an earlier call
    Checkpoint c = load_checkpoint(opts.out_dir);
    restore(c, false);
  } else if (!best.empty()) {
    auto params = model_->all_parameters();
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
  }
  write_report();
  return report;
}

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

std::unique_ptr<Trainer> trainer_from_checkpoint(const ColdStartSplit& split, const Checkpoint& ckpt) {
  if (!ckpt.meta.contains("config")) throw Error("checkpoint carries no config");
  TrainConfig cfg = config_from_json(ckpt.meta.at("config"));
  auto t = std::make_unique<Trainer>(split, cfg);
  t->restore(ckpt, false);
  return t;
}

}  // namespace disco
