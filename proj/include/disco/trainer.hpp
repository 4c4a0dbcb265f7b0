#pragma once

// Training: total objective, mini-batch assembly, Adam, EMA, validation
// with early stopping, checkpointing and exact resume.

#include "disco/checkpoint.hpp"
#include "disco/config.hpp"
#include "disco/evaluator.hpp"
#include "disco/model.hpp"

#include <array>
#include <filesystem>
#include <memory>
#include <vector>

namespace disco {

struct LossComponents {
  double rec_source = 0.0;
  double rec_target = 0.0;
  double intra = 0.0;
  double orth = 0.0;
  double inter = 0.0;
  double total = 0.0;
};

/// lambda (beta inter + (1 - beta)(intra + gamma orth)) + (1 - lambda)(rec_s + rec_t).
/// Throws on a non-finite component.
double total_loss(const LossComponents& c, double beta, double gamma, double lambda);
ag::Var total_loss(const ag::Var& rec_source, const ag::Var& rec_target, const ag::Var& intra, const ag::Var& orth,
                   const ag::Var& inter, double beta, double gamma, double lambda);

class Adam {
 public:
  Adam() = default;
  Adam(std::vector<ag::Parameter*> params, double lr, double beta1, double beta2, double eps);

  /// One update from the gradients currently stored in the parameters.
  void step();

  long steps() const { return t_; }
  void set_steps(long t) { t_ = t; }
  const std::vector<ag::Parameter*>& params() const { return params_; }
  std::vector<Mat>& first_moments() { return m_; }
  std::vector<Mat>& second_moments() { return v_; }

 private:
  std::vector<ag::Parameter*> params_;
  std::vector<Mat> m_, v_;
  double lr_ = 0.0, b1_ = 0.9, b2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
};

/// Everything one training step consumes.
struct Batch {
  std::array<std::vector<Edge>, 2> positives;
  std::array<std::vector<Edge>, 2> negatives;
  std::array<std::vector<int>, 2> intra_users;
  std::vector<OverlapUser> overlap;
};

struct EpochRecord {
  int epoch = 0;
  LossComponents mean;
  std::vector<LossComponents> steps;
  double valid_hr = 0.0;
  double valid_ndcg = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  double best_valid_hr = -1.0;
  int since_best = 0;
  bool early_stopped = false;
  bool completed = false;
};

nlohmann::ordered_json to_json(const LossComponents& c);
nlohmann::ordered_json to_json(const TrainReport& r);
TrainReport report_from_json(const nlohmann::ordered_json& j);

struct FitOptions {
  /// Best checkpoint, resume state and report.json go here; empty keeps
  /// everything in memory.
  std::filesystem::path out_dir;
  /// Continue from out_dir/resume.
  bool resume = false;
  /// Return after this many epochs in this call (simulated interruption).
  int max_epochs_this_call = -1;
  bool verbose = false;
};

class Trainer {
 public:
  Trainer(ColdStartSplit split, TrainConfig cfg);
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  const TrainConfig& config() const { return cfg_; }
  const ColdStartSplit& split() const { return split_; }
  const BipartiteGraph& graph(Domain d) const { return graphs_[d]; }
  Model& model() { return *model_; }
  const Model& model() const { return *model_; }
  Adam& optimizer() { return adam_; }

  int steps_per_epoch() const;
  /// Per-domain permutation of training edges for one epoch.
  std::array<std::vector<int>, 2> plan_epoch(Rng& rng) const;
  Batch make_batch(const std::array<std::vector<int>, 2>& plan, int step, Rng& rng) const;

  /// Quantities the objective treats as constants: detached target
  /// embeddings and walk pseudo-labels. When passed to forward() empty it
  /// is filled; when filled it is reused, which lets finite differences
  /// hold the same constants fixed.
  struct Constants {
    bool filled = false;
    std::array<Mat, 2> target_users;
    std::array<std::vector<Mat>, 2> intra_targets;
    std::array<Mat, 2> inter_targets;  // per Direction
  };

  struct Losses {
    std::array<ag::Var, 2> rec;
    ag::Var intra, orth, inter, total;
    LossComponents values;
  };
  /// Records the whole objective on `tape`; dropout is active when
  /// `dropout_rng` is set.
  Losses forward(ag::Tape& tape, const Batch& batch, Rng* dropout_rng, Constants* constants = nullptr);

  /// forward, backward, Adam update, then EMA.
  LossComponents train_step(const Batch& batch, Rng& dropout_rng);
  /// One pass over the epoch's batches; no validation.
  EpochRecord run_epoch(int epoch);

  /// Scorer for cold users of `dir` from the current online parameters.
  ListScorer scorer(Direction dir) const;
  EvalResult evaluate(Direction dir, bool validation, int negatives, int k, std::uint64_t seed) const;
  /// Mean validation HR / NDCG over the trained directions.
  std::pair<double, double> validate() const;

  TrainReport fit(const FitOptions& opts = {});

  Checkpoint checkpoint(bool with_optimizer) const;
  void restore(const Checkpoint& ckpt, bool with_optimizer);

 private:
  ColdStartSplit split_;
  TrainConfig cfg_;
  std::array<BipartiteGraph, 2> graphs_;
  std::vector<NegativeSampler> samplers_;
  std::array<std::vector<int>, 2> active_users_;
  std::unique_ptr<Model> model_;
  Adam adam_;
};

/// Keeps large matrix buffers on the heap instead of fresh mmap/munmap
/// pairs per operation (glibc only; no-op elsewhere). Process-wide, so left
/// to executables to call.
void tune_allocator();

/// Rebuilds a model from a checkpoint written by Trainer (config from its
/// metadata) for scoring.
std::unique_ptr<Trainer> trainer_from_checkpoint(const ColdStartSplit& split, const Checkpoint& ckpt);

}  // namespace disco
