#pragma once

// Intent-weighted preference scores, logistic squashing and the BCE
// recommendation loss.

#include "disco/autograd.hpp"
#include "disco/inter_bridge.hpp"

#include <span>

namespace disco {

struct ScoreRequest {
  Mat user_channels;   // K x Dc
  Mat item_channels;   // K x Dc
  Vec intent_weights;  // K, on the simplex
};

/// r = sum_k w_k <z_uk, z_vk>.
double score(const ScoreRequest& req);

/// Increasing logistic 1 / (1 + exp(-r)).
double probability(double r);

/// -sum log y_pos - sum log(1 - y_neg), probabilities clamped to
/// [1e-12, 1 - 1e-12].
double rec_loss(std::span<const double> positives, std::span<const double> negatives);

/// Scores for aligned rows: users, items n x (K Dc), weights n x K.
ag::Var preference_scores(const ag::Var& users, const ag::Var& items, const ag::Var& weights, int channels);

/// BCE over logits with labels 1 for `positive_scores` and 0 for
/// `negative_scores`; both n x 1.
ag::Var rec_loss(const ag::Var& positive_scores, const ag::Var& negative_scores);

/// Per-user query vector q = [w_1 e_1, ..., w_K e_K] so that the score of
/// item v is <q, z_v>. Rows of `e` are decoded (or native) channels.
Mat intent_queries(const Mat& e, const Mat& weights, int channels);

/// Cold-start scores of every row of `user_source` (n x D) against every
/// row of `target_items` (m x D): n x m.
Mat cold_start_scores(const Mat& user_source, const Decoder& decoder, const Mat& target_items,
                      const Mat& prototypes, int channels, Similarity phi, bool bypass_decoder = false,
                      bool uniform_prior = false);

/// Single-pair form of the above.
double cold_start_score(const Mat& user_source_channels, const Decoder& decoder, const Mat& item_target_channels,
                        const Mat& prototypes, Similarity phi, bool bypass_decoder = false,
                        bool uniform_prior = false);

}  // namespace disco
