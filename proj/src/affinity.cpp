#include "disco/affinity.hpp"

#include <cmath>

namespace disco {

Mat affinity_matrix(const Mat& batch, double tau_r) {
  if (!(tau_r > 0.0)) throw Error("affinity temperature must be > 0");
  if (batch.rows() < 1) throw Error("affinity batch is empty");
  if (!batch.allFinite()) throw Error("non-finite embeddings in affinity batch");
  const Index b = batch.rows();
  Mat r(b, b);
  for (Index i = 0; i < b; ++i) {
    r(i, i) = 1.0;
    for (Index j = i + 1; j < b; ++j) {
      const double v = std::exp(-(batch.row(i) - batch.row(j)).norm() / tau_r);
      r(i, j) = v;
      r(j, i) = v;
    }
  }
  return r;
}

Mat transition_matrix(const Mat& R) {
  if (R.rows() != R.cols()) throw Error("affinity matrix must be square");
  if ((R.array() < 0.0).any()) throw Error("affinity matrix has negative entries");
  Vec rs = R.rowwise().sum();
  for (Index i = 0; i < rs.size(); ++i) {
    if (!(rs(i) > 0.0)) throw Error("affinity row " + std::to_string(i) + " sums to zero");
  }
  return rs.cwiseInverse().asDiagonal() * R;
}

WalkTargets walk_targets(const Mat& R, double alpha, int steps, bool identity_walk) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("alpha must lie in [0, 1]");
  if (steps < 1) throw Error("random-walk steps must be >= 1");
  const Index b = R.rows();
  WalkTargets w;
  w.alpha = alpha;
  w.steps = steps;
  Mat walk;
  if (identity_walk) {
    if (R.rows() != R.cols()) throw Error("affinity matrix must be square");
    walk = Mat::Identity(b, b);
  } else {
    const Mat rn = transition_matrix(R);
    walk = rn;
    for (int s = 1; s < steps; ++s) walk = (walk * rn).eval();
  }
  w.T = (1.0 - alpha) * walk;
  w.T.diagonal().array() += alpha;
  return w;
}

std::vector<WalkTargets> intent_walk_targets(const Mat& batch, int channels, double tau_r, double alpha,
                                             int steps, bool identity_walk) {
  if (channels < 1 || batch.cols() % channels != 0) throw Error("batch width not divisible by K");
  const Index dc = batch.cols() / channels;
  std::vector<WalkTargets> out;
  out.reserve(static_cast<std::size_t>(channels));
  for (int k = 0; k < channels; ++k) {
    Mat slice = batch.middleCols(k * dc, dc);
    Mat R = identity_walk ? Mat::Ones(batch.rows(), batch.rows()) : affinity_matrix(slice, tau_r);
    WalkTargets w = walk_targets(R, alpha, steps, identity_walk);
    w.tau_r = tau_r;
    out.push_back(std::move(w));
  }
  return out;
}

Mat mean_intent_similarity(std::span<const WalkTargets> per_intent) {
  if (per_intent.empty()) throw Error("no intent similarity matrices");
  Mat acc = per_intent[0].T;
  for (std::size_t k = 1; k < per_intent.size(); ++k) {
    if (per_intent[k].T.rows() != acc.rows() || per_intent[k].T.cols() != acc.cols()) {
      throw Error("intent similarity matrices differ in shape");
    }
    acc += per_intent[k].T;
  }
  return acc / static_cast<double>(per_intent.size());
}

}  // namespace disco
