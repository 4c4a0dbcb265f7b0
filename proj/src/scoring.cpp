#include "disco/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace disco {

double score(const ScoreRequest& req) {
  const Index k = req.user_channels.rows();
  if (req.item_channels.rows() != k || req.item_channels.cols() != req.user_channels.cols() ||
      req.intent_weights.size() != k) {
    throw Error("score: shape mismatch");
  }
  double r = 0.0;
  for (Index c = 0; c < k; ++c) r += req.intent_weights(c) * req.user_channels.row(c).dot(req.item_channels.row(c));
  return r;
}

double probability(double r) {
  if (r >= 0) return 1.0 / (1.0 + std::exp(-r));
  const double e = std::exp(r);
  return e / (1.0 + e);
}

double rec_loss(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty()) throw Error("rec_loss: empty positive set");
  auto clamp = [](double p) { return std::clamp(p, kLogClamp, 1.0 - kLogClamp); };
  double loss = 0.0;
  for (double p : positives) loss -= std::log(clamp(p));
  for (double p : negatives) loss -= std::log(1.0 - clamp(p));
  return loss;
}

ag::Var preference_scores(const ag::Var& users, const ag::Var& items, const ag::Var& weights, int channels) {
  if (users.rows() != items.rows() || users.cols() != items.cols()) throw Error("scores: user/item shape mismatch");
  if (weights.rows() != users.rows() || weights.cols() != channels) throw Error("scores: weights must be n x K");
  const Index dc = users.cols() / channels;
  ag::Var total;
  for (int k = 0; k < channels; ++k) {
    ag::Var dots = ag::rowwise_dot(ag::slice_cols(users, k * dc, dc), ag::slice_cols(items, k * dc, dc));
    ag::Var term = ag::mul(dots, ag::slice_cols(weights, k, 1));
    total = total.valid() ? ag::add(total, term) : term;
  }
  return total;
}

ag::Var rec_loss(const ag::Var& positive_scores, const ag::Var& negative_scores) {
  if (positive_scores.rows() == 0) throw Error("rec_loss: empty positive set");
  std::vector<double> labels(static_cast<std::size_t>(positive_scores.rows() + negative_scores.rows()), 0.0);
  std::fill(labels.begin(), labels.begin() + positive_scores.rows(), 1.0);
  return ag::bce_with_logits(ag::concat_rows(positive_scores, negative_scores), labels);
}

Mat intent_queries(const Mat& e, const Mat& weights, int channels) {
  if (weights.rows() != e.rows() || weights.cols() != channels) throw Error("queries: weights must be n x K");
  const Index dc = e.cols() / channels;
  Mat q(e.rows(), e.cols());
  for (int k = 0; k < channels; ++k) {
    q.middleCols(k * dc, dc) = weights.col(k).asDiagonal() * e.middleCols(k * dc, dc);
  }
  return q;
}

Mat cold_start_scores(const Mat& user_source, const Decoder& decoder, const Mat& target_items,
                      const Mat& prototypes, int channels, Similarity phi, bool bypass_decoder,
                      bool uniform_prior) {
  if (user_source.cols() != target_items.cols()) throw Error("cold-start scores: embedding widths differ");
  Mat e = decode(user_source, decoder, bypass_decoder);
  Mat w = intent_prior(e, prototypes, channels, phi, uniform_prior);
  return intent_queries(e, w, channels) * target_items.transpose();
}

double cold_start_score(const Mat& user_source_channels, const Decoder& decoder, const Mat& item_target_channels,
                        const Mat& prototypes, Similarity phi, bool bypass_decoder, bool uniform_prior) {
  const Index k = user_source_channels.rows();
  if (item_target_channels.rows() != k || item_target_channels.cols() != user_source_channels.cols()) {
    throw Error("cold-start score: shape mismatch");
  }
  Mat u = Eigen::Map<const Mat>(user_source_channels.data(), 1, user_source_channels.size());
  Mat v = Eigen::Map<const Mat>(item_target_channels.data(), 1, item_target_channels.size());
  return cold_start_scores(u, decoder, v, prototypes, static_cast<int>(k), phi, bypass_decoder, uniform_prior)(0, 0);
}

}  // namespace disco
