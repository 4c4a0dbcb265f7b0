#pragma once

// Inter-domain contrast. Source channels are decoded into the target space,
// scored against K intent prototypes (prior) and against the target batch
// (per-intent likelihood); the variational posterior q is the exact Bayes
// posterior of those two and is held constant while the negative ELBO,
// weighted by the target-domain walk similarity, is minimised.

#include "disco/autograd.hpp"
#include "disco/intra_contrast.hpp"
#include "disco/random.hpp"

#include <span>
#include <vector>

namespace disco {

struct ChannelMlp {
  ag::Parameter w_in;   // Dc x h
  ag::Parameter b_in;   // 1 x h
  ag::Parameter w_out;  // h x Dc
  ag::Parameter b_out;  // 1 x Dc
};

/// Per-channel two-layer MLP  e = W_out act(W_in z + b_in) + b_out. With
/// `shared` a single MLP serves every channel.
struct Decoder {
  std::vector<ChannelMlp> mlps;
  int channels = 1;
  bool shared = false;
  double leaky_slope = 0.05;

  static Decoder init(int channels, int channel_dim, int hidden, bool shared, double slope, Rng& rng,
                      const std::string& prefix);
  /// MLP with identity weights and zero biases (hidden = channel_dim).
  static Decoder identity(int channels, int channel_dim, double slope);

  const ChannelMlp& mlp(int k) const { return mlps[shared ? 0 : static_cast<std::size_t>(k)]; }
  ChannelMlp& mlp(int k) { return mlps[shared ? 0 : static_cast<std::size_t>(k)]; }
  std::vector<ag::Parameter*> parameters();
};

/// Channel-wise decoding of B x (K Dc) source embeddings. `bypass` returns
/// the input unchanged (no-decoder ablation).
ag::Var decode(ag::Tape& tape, const ag::Var& z_source, Decoder& decoder, bool bypass = false);
Mat decode(const Mat& z_source, const Decoder& decoder, bool bypass = false);

/// Logits phi(e_ik, c_k): B x K.
ag::Var intent_logits(const ag::Var& e, const ag::Var& prototypes, int channels, Similarity phi);
/// log p(k | u_i) as B x K; `uniform` gives log(1/K) everywhere.
ag::Var intent_log_prior(const ag::Var& e, const ag::Var& prototypes, int channels, Similarity phi,
                         bool uniform = false);
Mat intent_prior(const Mat& e, const Mat& prototypes, int channels, Similarity phi, bool uniform = false);

/// log phat(u_j | u_i, k) per intent: softmax over the batch of
/// phi(e_ik, zhat_jk) with no temperature. zhat is a constant.
std::vector<ag::Var> batch_intent_log_similarity(const ag::Var& e, const ag::Var& zhat, int channels,
                                                 Similarity phi);
std::vector<Mat> batch_intent_similarity(const Mat& e, const Mat& zhat, int channels, Similarity phi);

/// B x K prior plus K matrices (B x B) for phat and q.
struct IntentDistributions {
  Mat prior;
  std::vector<Mat> phat;
  std::vector<Mat> q;
};

/// q(k | i, j) = prior_ik phat_k,ij / sum_k' prior_ik' phat_k',ij.
std::vector<Mat> variational_posterior(const Mat& prior, std::span<const Mat> phat);

/// ELBO(i, j) = sum_k q log phat - KL(q(.|i,j) || prior(i, .)); logs clamped.
Mat elbo(std::span<const Mat> q, const Mat& prior, std::span<const Mat> phat);

/// log sum_k prior_ik phat_k,ij, the quantity the ELBO bounds.
Mat log_marginal(const Mat& prior, std::span<const Mat> phat);

/// -sum_ij T_ij ELBO(i, j).
double inter_loss(const Mat& walk_similarity, const Mat& elbo_matrix);

/// Differentiable inter loss. q is computed from the current values of the
/// prior and likelihood and enters as a constant (E-step); gradients reach
/// the prior and likelihood only (M-step).
ag::Var inter_loss(const Mat& walk_similarity, const ag::Var& log_prior, std::span<const ag::Var> log_phat,
                   IntentDistributions* record = nullptr);

}  // namespace disco
