#include "disco/intra_contrast.hpp"

#include <cmath>

namespace disco {

std::string to_string(Similarity s) { return s == Similarity::kCosine ? "cosine" : "dot"; }

Similarity parse_similarity(const std::string& s) {
  if (s == "cosine") return Similarity::kCosine;
  if (s == "dot") return Similarity::kDot;
  throw Error("unknown similarity '" + s + "' (expected cosine or dot)");
}

std::string to_string(OrthForm f) { return f == OrthForm::kChannelGram ? "channel-gram" : "literal"; }

OrthForm parse_orth_form(const std::string& s) {
  if (s == "channel-gram") return OrthForm::kChannelGram;
  if (s == "literal") return OrthForm::kLiteral;
  throw Error("unknown orthogonality form '" + s + "' (expected channel-gram or literal)");
}

ag::Var pairwise_similarity(const ag::Var& a, const ag::Var& b, Similarity phi) {
  if (phi == Similarity::kCosine) return ag::matmul_nt(ag::row_normalize(a), ag::row_normalize(b));
  return ag::matmul_nt(a, b);
}

Mat pairwise_softmax(const Mat& z, const Mat& zhat, const SimilarityConfig& cfg) {
  if (!(cfg.tau > 0.0)) throw Error("temperature must be > 0");
  if (z.rows() != zhat.rows() || z.cols() != zhat.cols()) throw Error("pairwise_softmax: shape mismatch");
  ag::Tape tape(false);
  return ag::softmax_rows(ag::scale(pairwise_similarity(tape.view(z), tape.view(zhat), cfg.phi), 1.0 / cfg.tau))
      .value();
}

double intra_loss(std::span<const Mat> targets, std::span<const Mat> rho) {
  if (targets.size() != rho.size()) throw Error("intra_loss: intent counts differ");
  double total = 0.0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const Mat& t = targets[k];
    const Mat& r = rho[k];
    if (t.rows() != r.rows() || t.cols() != r.cols()) throw Error("intra_loss: shape mismatch");
    for (Index i = 0; i < r.rows(); ++i) {
      if (std::abs(r.row(i).sum() - 1.0) > 1e-6) {
        throw Error("intra_loss: similarity row " + std::to_string(i) + " is not normalised");
      }
    }
    total -= (t.array() * r.array().max(kLogClamp).log()).sum();
  }
  return total;
}

ag::Var intra_loss(std::span<const Mat> targets, const ag::Var& z, const ag::Var& zhat, int channels,
                   const SimilarityConfig& cfg) {
  if (!(cfg.tau > 0.0)) throw Error("temperature must be > 0");
  if (static_cast<int>(targets.size()) != channels) throw Error("intra_loss: one target matrix per channel");
  if (z.rows() != zhat.rows() || z.cols() != zhat.cols()) throw Error("intra_loss: shape mismatch");
  const Index dc = z.cols() / channels;
  ag::Var total;
  for (int k = 0; k < channels; ++k) {
    ag::Var s = pairwise_similarity(ag::slice_cols(z, k * dc, dc), ag::slice_cols(zhat, k * dc, dc), cfg.phi);
    ag::Var logrho = ag::log_softmax_rows(ag::scale(s, 1.0 / cfg.tau));
    ag::Var term = ag::scale(ag::weighted_sum(logrho, targets[static_cast<std::size_t>(k)]), -1.0);
    total = total.valid() ? ag::add(total, term) : term;
  }
  return total;
}

ag::Var orthogonality_penalty(const ag::Var& z, int channels, OrthForm form) {
  if (channels < 1 || z.cols() % channels != 0) throw Error("orthogonality: width not divisible by K");
  const Index dc = z.cols() / channels;
  ag::Tape& tape = *z.tape();
  if (form == OrthForm::kLiteral) {
    ag::Var total;
    for (int k = 0; k < channels; ++k) {
      ag::Var zk = ag::slice_cols(z, k * dc, dc);
      ag::Var g = ag::sub(ag::matmul_tn(zk, zk), tape.constant(Mat::Identity(dc, dc)));
      ag::Var term = ag::sum(ag::abs(g));
      total = total.valid() ? ag::add(total, term) : term;
    }
    return total;
  }
  if (channels == 1) return tape.constant(Mat::Zero(1, 1));
  std::vector<ag::Var> unit;
  for (int k = 0; k < channels; ++k) unit.push_back(ag::row_normalize(ag::slice_cols(z, k * dc, dc)));
  // ||G - I||_1 = 2 sum_{k<k'} |<n_k, n_k'>| since the diagonal is exactly 1
  std::vector<ag::Var> offdiag;
  for (int a = 0; a < channels; ++a) {
    for (int b = a + 1; b < channels; ++b) {
      offdiag.push_back(ag::abs(ag::rowwise_dot(unit[static_cast<std::size_t>(a)], unit[static_cast<std::size_t>(b)])));
    }
  }
  ag::Var per_row = ag::row_sum(ag::concat_cols(offdiag));
  return ag::scale(ag::mean(per_row), 2.0);
}

double orthogonality_loss(const Mat& z, const Mat& zhat, int channels, OrthForm form) {
  ag::Tape tape(false);
  return orthogonality_penalty(tape.view(z), channels, form).scalar() +
         orthogonality_penalty(tape.view(zhat), channels, form).scalar();
}

}  // namespace disco
