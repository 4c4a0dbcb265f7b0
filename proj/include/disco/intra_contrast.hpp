#pragma once

// Intra-domain contrast: cross-entropy between walk targets and the
// temperature softmax of online-vs-target similarities, plus the channel
// orthogonality penalty.

#include "disco/affinity.hpp"
#include "disco/autograd.hpp"

#include <span>
#include <string>
#include <vector>

namespace disco {

enum class Similarity { kCosine, kDot };
enum class OrthForm { kChannelGram, kLiteral };

std::string to_string(Similarity s);
Similarity parse_similarity(const std::string& s);
std::string to_string(OrthForm f);
OrthForm parse_orth_form(const std::string& s);

struct SimilarityConfig {
  double tau = 0.5;
  Similarity phi = Similarity::kCosine;
};

/// phi(a_i, b_j) for all row pairs: n_a x n_b.
ag::Var pairwise_similarity(const ag::Var& a, const ag::Var& b, Similarity phi);

/// rho_ij = softmax_j(phi(z_i, zhat_j) / tau).
Mat pairwise_softmax(const Mat& z, const Mat& zhat, const SimilarityConfig& cfg);

/// -sum_k sum_ij T_k,ij log rho_k,ij on explicit probability matrices.
double intra_loss(std::span<const Mat> targets, std::span<const Mat> rho);

/// Differentiable form over B x (K Dc) online and target batches; one
/// target matrix per channel.
ag::Var intra_loss(std::span<const Mat> targets, const ag::Var& z, const ag::Var& zhat, int channels,
                   const SimilarityConfig& cfg);

/// Penalty for one encoder output (B x (K Dc)). kChannelGram: mean over
/// rows of ||G_i - I||_1 with G_i the Gram matrix of the row's unit-normed
/// channels. kLiteral: sum over channels of ||Z_k^T Z_k - I||_1.
ag::Var orthogonality_penalty(const ag::Var& z, int channels, OrthForm form = OrthForm::kChannelGram);

/// Online plus target penalty.
double orthogonality_loss(const Mat& z, const Mat& zhat, int channels, OrthForm form = OrthForm::kChannelGram);

}  // namespace disco
