#pragma once

// Batch-level affinity graphs over target-encoder embeddings and the
// multi-step random-walk similarity used as contrastive pseudo-labels.

#include "disco/common.hpp"

#include <span>
#include <vector>

namespace disco {

struct WalkTargets {
  Mat T;  // B x B, row-stochastic
  double alpha = 0.5;
  int steps = 4;
  double tau_r = 0.5;
};

/// R_ij = exp(-||z_i - z_j|| / tau_r) over the rows of `batch`.
Mat affinity_matrix(const Mat& batch, double tau_r);

/// Row-normalised transition matrix of R.
Mat transition_matrix(const Mat& R);

/// T = alpha I + (1 - alpha) Rn^d with Rn = transition_matrix(R). With
/// `identity_walk` the walk term Rn^d is replaced by I.
WalkTargets walk_targets(const Mat& R, double alpha, int steps, bool identity_walk = false);

/// Walk targets for every channel of a B x (K Dc) batch.
std::vector<WalkTargets> intent_walk_targets(const Mat& batch, int channels, double tau_r, double alpha,
                                             int steps, bool identity_walk = false);

/// Elementwise mean over intents.
Mat mean_intent_similarity(std::span<const WalkTargets> per_intent);

}  // namespace disco
