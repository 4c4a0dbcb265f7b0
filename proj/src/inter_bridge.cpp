#include "disco/inter_bridge.hpp"

#include <cmath>
#include <iostream>

namespace disco {

namespace {

Mat xavier(Index rows, Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Mat m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = (2.0 * uniform_unit(rng) - 1.0) * limit;
  return m;
}

}  // namespace

Decoder Decoder::init(int channels, int channel_dim, int hidden, bool shared, double slope, Rng& rng,
                      const std::string& prefix) {
  if (channels < 1 || channel_dim < 1 || hidden < 1) throw Error("decoder dimensions must be positive");
  Decoder d;
  d.channels = channels;
  d.shared = shared;
  d.leaky_slope = slope;
  const int n = shared ? 1 : channels;
  for (int k = 0; k < n; ++k) {
    const std::string p = prefix + (shared ? "" : "ch" + std::to_string(k) + ".");
    ChannelMlp m;
    m.w_in = ag::Parameter(p + "w_in", xavier(channel_dim, hidden, rng));
    m.b_in = ag::Parameter(p + "b_in", Mat::Zero(1, hidden));
    m.w_out = ag::Parameter(p + "w_out", xavier(hidden, channel_dim, rng));
    m.b_out = ag::Parameter(p + "b_out", Mat::Zero(1, channel_dim));
    d.mlps.push_back(std::move(m));
  }
  return d;
}

Decoder Decoder::identity(int channels, int channel_dim, double slope) {
  Decoder d;
  d.channels = channels;
  d.leaky_slope = slope;
  for (int k = 0; k < channels; ++k) {
    ChannelMlp m;
    m.w_in = ag::Parameter("w_in", Mat::Identity(channel_dim, channel_dim));
    m.b_in = ag::Parameter("b_in", Mat::Zero(1, channel_dim));
    m.w_out = ag::Parameter("w_out", Mat::Identity(channel_dim, channel_dim));
    m.b_out = ag::Parameter("b_out", Mat::Zero(1, channel_dim));
    d.mlps.push_back(std::move(m));
  }
  return d;
}

std::vector<ag::Parameter*> Decoder::parameters() {
  std::vector<ag::Parameter*> out;
  for (auto& m : mlps) {
    out.push_back(&m.w_in);
    out.push_back(&m.b_in);
    out.push_back(&m.w_out);
    out.push_back(&m.b_out);
  }
  return out;
}

ag::Var decode(ag::Tape& tape, const ag::Var& z_source, Decoder& decoder, bool bypass) {
  if (bypass) return z_source;
  const int k_count = decoder.channels;
  if (z_source.cols() % k_count != 0) throw Error("decode: width not divisible by K");
  const Index dc = z_source.cols() / k_count;
  if (decoder.mlp(0).w_in.value.rows() != dc) throw Error("decode: decoder input width differs from channel width");
  std::vector<ag::Var> parts;
  for (int k = 0; k < k_count; ++k) {
    ChannelMlp& m = decoder.mlp(k);
    ag::Var zk = ag::slice_cols(z_source, k * dc, dc);
    ag::Var h = ag::leaky_relu(ag::add_row(ag::matmul(zk, tape.param(m.w_in)), tape.param(m.b_in)),
                               decoder.leaky_slope);
    parts.push_back(ag::add_row(ag::matmul(h, tape.param(m.w_out)), tape.param(m.b_out)));
  }
  return ag::concat_cols(parts);
}

Mat decode(const Mat& z_source, const Decoder& decoder, bool bypass) {
  ag::Tape tape(false);
  return decode(tape, tape.view(z_source), const_cast<Decoder&>(decoder), bypass).value();
}

ag::Var intent_logits(const ag::Var& e, const ag::Var& prototypes, int channels, Similarity phi) {
  if (channels < 1 || e.cols() % channels != 0) throw Error("prior: width not divisible by K");
  const Index dc = e.cols() / channels;
  if (prototypes.rows() != channels || prototypes.cols() != dc) throw Error("prior: prototypes must be K x Dc");
  std::vector<ag::Var> cols;
  for (int k = 0; k < channels; ++k) {
    cols.push_back(pairwise_similarity(ag::slice_cols(e, k * dc, dc), ag::slice_rows(prototypes, k, 1), phi));
  }
  return ag::concat_cols(cols);
}

ag::Var intent_log_prior(const ag::Var& e, const ag::Var& prototypes, int channels, Similarity phi,
                         bool uniform) {
  if (uniform) {
    return e.tape()->constant(Mat::Constant(e.rows(), channels, -std::log(static_cast<double>(channels))));
  }
  return ag::log_softmax_rows(intent_logits(e, prototypes, channels, phi));
}

Mat intent_prior(const Mat& e, const Mat& prototypes, int channels, Similarity phi, bool uniform) {
  if (uniform) return Mat::Constant(e.rows(), channels, 1.0 / channels);
  ag::Tape tape(false);
  return ag::softmax_rows(intent_logits(tape.view(e), tape.view(prototypes), channels, phi)).value();
}

std::vector<ag::Var> batch_intent_log_similarity(const ag::Var& e, const ag::Var& zhat, int channels,
                                                 Similarity phi) {
  if (e.rows() != zhat.rows() || e.cols() != zhat.cols()) throw Error("batch similarity: shape mismatch");
  if (channels < 1 || e.cols() % channels != 0) throw Error("batch similarity: width not divisible by K");
  if (e.rows() == 1) std::clog << "warning: overlap batch of size 1; batch similarity is identically 1\n";
  const Index dc = e.cols() / channels;
  std::vector<ag::Var> out;
  for (int k = 0; k < channels; ++k) {
    out.push_back(ag::log_softmax_rows(
        pairwise_similarity(ag::slice_cols(e, k * dc, dc), ag::slice_cols(zhat, k * dc, dc), phi)));
  }
  return out;
}

std::vector<Mat> batch_intent_similarity(const Mat& e, const Mat& zhat, int channels, Similarity phi) {
  ag::Tape tape(false);
  std::vector<Mat> out;
  for (const ag::Var& lp : batch_intent_log_similarity(tape.view(e), tape.view(zhat), channels, phi)) {
    out.push_back(ag::softmax_rows(lp).value());
  }
  return out;
}

std::vector<Mat> variational_posterior(const Mat& prior, std::span<const Mat> phat) {
  const Index b = prior.rows();
  const auto k_count = static_cast<Index>(phat.size());
  if (prior.cols() != k_count) throw Error("posterior: prior has " + std::to_string(prior.cols()) +
                                           " intents, likelihood " + std::to_string(k_count));
  for (const Mat& p : phat) {
    if (p.rows() != b) throw Error("posterior: likelihood rows differ from prior rows");
  }
  const Index bj = k_count ? phat[0].cols() : 0;
  std::vector<Mat> q(static_cast<std::size_t>(k_count), Mat(b, bj));
  for (Index i = 0; i < b; ++i) {
    for (Index j = 0; j < bj; ++j) {
      double z = 0.0;
      for (Index k = 0; k < k_count; ++k) z += prior(i, k) * phat[static_cast<std::size_t>(k)](i, j);
      if (!(z > 0.0)) throw Error("posterior: zero evidence at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      for (Index k = 0; k < k_count; ++k) {
        q[static_cast<std::size_t>(k)](i, j) = prior(i, k) * phat[static_cast<std::size_t>(k)](i, j) / z;
      }
    }
  }
  return q;
}

namespace {

double clamped_log(double p) { return std::log(std::max(p, kLogClamp)); }

}  // namespace

Mat elbo(std::span<const Mat> q, const Mat& prior, std::span<const Mat> phat) {
  if (q.size() != phat.size() || static_cast<Index>(q.size()) != prior.cols()) {
    throw Error("elbo: intent counts differ");
  }
  const Index b = prior.rows();
  const Index bj = q.empty() ? 0 : q[0].cols();
  Mat out = Mat::Zero(b, bj);
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (q[k].rows() != b || phat[k].rows() != b || q[k].cols() != bj || phat[k].cols() != bj) {
      throw Error("elbo: shape mismatch");
    }
    for (Index i = 0; i < b; ++i) {
      const double lp = clamped_log(prior(i, static_cast<Index>(k)));
      for (Index j = 0; j < bj; ++j) {
        const double qq = q[k](i, j);
        if (qq == 0.0) continue;
        out(i, j) += qq * (clamped_log(phat[k](i, j)) - (clamped_log(qq) - lp));
      }
    }
  }
  return out;
}

Mat log_marginal(const Mat& prior, std::span<const Mat> phat) {
  if (static_cast<Index>(phat.size()) != prior.cols()) throw Error("log_marginal: intent counts differ");
  Mat acc = Mat::Zero(prior.rows(), phat.empty() ? 0 : phat[0].cols());
  for (std::size_t k = 0; k < phat.size(); ++k) acc += prior.col(static_cast<Index>(k)).asDiagonal() * phat[k];
  return acc.array().log();
}

double inter_loss(const Mat& walk_similarity, const Mat& elbo_matrix) {
  if (walk_similarity.rows() != elbo_matrix.rows() || walk_similarity.cols() != elbo_matrix.cols()) {
    throw Error("inter_loss: similarity and ELBO shapes differ");
  }
  return -(walk_similarity.array() * elbo_matrix.array()).sum();
}

ag::Var inter_loss(const Mat& walk_similarity, const ag::Var& log_prior, std::span<const ag::Var> log_phat,
                   IntentDistributions* record) {
  const auto k_count = static_cast<Index>(log_phat.size());
  const Index b = log_prior.rows();
  if (log_prior.cols() != k_count) throw Error("inter_loss: prior/likelihood intent counts differ");
  if (walk_similarity.rows() != b || walk_similarity.cols() != b) throw Error("inter_loss: similarity must be B x B");

  // E-step on detached values
  Mat prior = log_prior.value().array().exp();
  std::vector<Mat> phat;
  for (const auto& lp : log_phat) phat.push_back(lp.value().array().exp());
  std::vector<Mat> q = variational_posterior(prior, phat);

  Mat prior_weight = Mat::Zero(b, k_count);
  double entropy_term = 0.0;
  ag::Var total;
  for (Index k = 0; k < k_count; ++k) {
    const Mat& qk = q[static_cast<std::size_t>(k)];
    Mat w = walk_similarity.cwiseProduct(qk);
    prior_weight.col(k) = w.rowwise().sum();
    entropy_term += (w.array() * qk.array().max(kLogClamp).log()).sum();
    ag::Var term = ag::weighted_sum(log_phat[static_cast<std::size_t>(k)], w);
    total = total.valid() ? ag::add(total, term) : term;
  }
  total = ag::add(total, ag::weighted_sum(log_prior, prior_weight));
  ag::Var loss = ag::add_scalar(ag::scale(total, -1.0), entropy_term);
  if (record) {
    record->prior = std::move(prior);
    record->phat = std::move(phat);
    record->q = std::move(q);
  }
  return loss;
}

}  // namespace disco
