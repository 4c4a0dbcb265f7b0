#pragma once

// Disentangled graph encoder: L message-passing layers over the normalised
// user-item graph followed by one layer whose output columns are split into
// K intent channels of width D/K.
//
// Embeddings are row vectors and weights are stored input-major, so a layer
// computes  z' = act((z + h) W1 + (z .* h) W2)  with  h = A z , where A is
// the graph's normalised adjacency. Users and items share one stacked
// matrix, users first.

#include "disco/autograd.hpp"
#include "disco/common.hpp"
#include "disco/dataset.hpp"
#include "disco/random.hpp"

#include <vector>

namespace disco {

struct EncoderShape {
  int n_users = 0;
  int n_items = 0;
  int dim = 128;
  int channels = 4;
  int layers = 4;
  double leaky_slope = 0.05;
};

struct EncoderParams {
  ag::Parameter user_table;
  ag::Parameter item_table;
  std::vector<ag::Parameter> w1;
  std::vector<ag::Parameter> w2;
  /// D x D; column block k (width D/K) is channel k's projection.
  ag::Parameter channel_w1;
  ag::Parameter channel_w2;
  int channels = 1;
  double leaky_slope = 0.05;

  static EncoderParams init(const EncoderShape& shape, Rng& rng, const std::string& prefix = "");

  int dim() const { return static_cast<int>(user_table.value.cols()); }
  int channel_dim() const { return dim() / channels; }
  int layers() const { return static_cast<int>(w1.size()); }
  int n_users() const { return static_cast<int>(user_table.value.rows()); }
  int n_items() const { return static_cast<int>(item_table.value.rows()); }

  std::vector<ag::Parameter*> parameters();
  std::vector<const ag::Parameter*> parameters() const;
  /// Throws if shapes are inconsistent or any weight is non-finite.
  void validate() const;
};

struct DisentangledEmbeddings {
  Mat users;  // |U| x D, channel k in columns [k Dc, (k+1) Dc)
  Mat items;  // |V| x D
  int channels = 1;

  int channel_dim() const { return static_cast<int>(users.cols()) / channels; }
  auto user_channel(Index u, int k) const { return users.row(u).segment(k * channel_dim(), channel_dim()); }
  auto item_channel(Index v, int k) const { return items.row(v).segment(k * channel_dim(), channel_dim()); }
};

struct EncodedVars {
  ag::Var users;
  ag::Var items;
};

ag::Var message_passing_layer(const ag::Var& z, const BipartiteGraph& graph, const ag::Var& w1,
                              const ag::Var& w2, double slope);
Mat message_passing_layer(const Mat& z, const BipartiteGraph& graph, const Mat& w1, const Mat& w2,
                          double slope);

/// Same update rule as message_passing_layer with D x D projections whose
/// column blocks are the per-channel maps; the blocks never interact.
ag::Var disentangle_layer(const ag::Var& z, const BipartiteGraph& graph, const ag::Var& channel_w1,
                          const ag::Var& channel_w2, double slope);

/// Records a full encoder pass on `tape`. Dropout (rate > 0 and rng set)
/// is applied to the outputs of the L message-passing layers.
EncodedVars encode(ag::Tape& tape, const BipartiteGraph& graph, EncoderParams& params,
                   double dropout = 0.0, Rng* rng = nullptr);

/// Gradient-free, dropout-free encoder pass.
DisentangledEmbeddings encode_domain(const BipartiteGraph& graph, const EncoderParams& params);

}  // namespace disco
