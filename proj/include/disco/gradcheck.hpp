#pragma once

// Central finite-difference check of the whole training objective on a
// micro instance.

#include "disco/config.hpp"
#include "disco/trainer.hpp"

#include <set>
#include <string>
#include <vector>

namespace disco {

struct GradCheckOptions {
  double h = 1e-5;
  double rel_tol = 1e-4;
  double abs_tol = 1e-7;
  std::set<Ablation> ablations;
  std::uint64_t seed = 11;
};

struct GradCheckEntry {
  std::string param;
  Index row = 0, col = 0;
  double analytic = 0.0, numeric = 0.0;
  double abs_err = 0.0, rel_err = 0.0;
  bool pass = true;
};

struct GradCheckResult {
  std::vector<GradCheckEntry> entries;
  int n_params = 0;
  int n_failed = 0;
  double max_rel_err = 0.0;
  bool pass() const { return n_failed == 0; }
};

/// Six users and seven items per domain, all users shared; K=2, L=1, D=4,
/// B=4, dropout 0, both directions.
ColdStartSplit micro_split();
TrainConfig micro_config(const GradCheckOptions& opts);

/// Compares backprop against (f(x+h) - f(x-h)) / 2h for every scalar of
/// every trainable parameter. `pass` when abs_err <= abs_tol or
/// rel_err <= rel_tol. Walk pseudo-labels and detached target
/// embeddings stay at their unperturbed values during the differences.
GradCheckResult gradcheck_micro(const GradCheckOptions& opts = {});

}  // namespace disco
