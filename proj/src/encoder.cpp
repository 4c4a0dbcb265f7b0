#include "disco/encoder.hpp"

#include <cmath>

namespace disco {

namespace {

Mat xavier(Index rows, Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Mat m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = (2.0 * uniform_unit(rng) - 1.0) * limit;
  return m;
}

Mat channel_xavier(int dim, int channels, Rng& rng) {
  const int dc = dim / channels;
  Mat m(dim, dim);
  for (int k = 0; k < channels; ++k) m.middleCols(k * dc, dc) = xavier(dim, dc, rng);
  return m;
}

void check_finite(const ag::Parameter& p) {
  if (!p.value.allFinite()) throw Error("parameter " + p.name + " has non-finite entries");
}

}  // namespace

EncoderParams EncoderParams::init(const EncoderShape& shape, Rng& rng, const std::string& prefix) {
  if (shape.channels < 1 || shape.dim % shape.channels != 0) {
    throw Error("embedding dim " + std::to_string(shape.dim) + " is not divisible by K=" +
                std::to_string(shape.channels));
  }
  if (shape.layers < 0) throw Error("layer count must be >= 0");
  EncoderParams p;
  p.channels = shape.channels;
  p.leaky_slope = shape.leaky_slope;
  p.user_table = ag::Parameter(prefix + "user_table", xavier(shape.n_users, shape.dim, rng));
  p.item_table = ag::Parameter(prefix + "item_table", xavier(shape.n_items, shape.dim, rng));
  for (int l = 0; l < shape.layers; ++l) {
    p.w1.emplace_back(prefix + "layer" + std::to_string(l) + ".w1", xavier(shape.dim, shape.dim, rng));
    p.w2.emplace_back(prefix + "layer" + std::to_string(l) + ".w2", xavier(shape.dim, shape.dim, rng));
  }
  p.channel_w1 = ag::Parameter(prefix + "channel.w1", channel_xavier(shape.dim, shape.channels, rng));
  p.channel_w2 = ag::Parameter(prefix + "channel.w2", channel_xavier(shape.dim, shape.channels, rng));
  return p;
}

std::vector<ag::Parameter*> EncoderParams::parameters() {
  std::vector<ag::Parameter*> out{&user_table, &item_table};
  for (std::size_t l = 0; l < w1.size(); ++l) {
    out.push_back(&w1[l]);
    out.push_back(&w2[l]);
  }
  out.push_back(&channel_w1);
  out.push_back(&channel_w2);
  return out;
}

std::vector<const ag::Parameter*> EncoderParams::parameters() const {
  std::vector<const ag::Parameter*> out;
  for (auto* p : const_cast<EncoderParams*>(this)->parameters()) out.push_back(p);
  return out;
}

void EncoderParams::validate() const {
  const Index d = user_table.value.cols();
  if (channels < 1 || d % channels != 0) throw Error("embedding dim not divisible by channel count");
  if (item_table.value.cols() != d) throw Error("user and item tables differ in width");
  if (w1.size() != w2.size()) throw Error("layer weight lists differ in length");
  for (std::size_t l = 0; l < w1.size(); ++l) {
    if (w1[l].value.rows() != d || w1[l].value.cols() != d || w2[l].value.rows() != d ||
        w2[l].value.cols() != d) {
      throw Error("layer " + std::to_string(l) + " weights must be D x D");
    }
  }
  if (channel_w1.value.rows() != d || channel_w1.value.cols() != d || channel_w2.value.rows() != d ||
      channel_w2.value.cols() != d) {
    throw Error("channel projections must be D x D (K blocks of D x D/K)");
  }
  for (const auto* p : parameters()) check_finite(*p);
}

ag::Var message_passing_layer(const ag::Var& z, const BipartiteGraph& graph, const ag::Var& w1,
                              const ag::Var& w2, double slope) {
  if (z.rows() != graph.n_users + graph.n_items) {
    throw Error("embedding rows (" + std::to_string(z.rows()) + ") do not match graph size (" +
                std::to_string(graph.n_users + graph.n_items) + ")");
  }
  if (w1.rows() != z.cols() || w2.rows() != z.cols() || w1.cols() != w2.cols()) {
    throw Error("layer weights do not match embedding width");
  }
  ag::Var h = ag::spmm(graph.propagation, z);
  ag::Var self_and_neighbours = ag::matmul(ag::add(z, h), w1);
  ag::Var interaction = ag::matmul(ag::mul(z, h), w2);
  return ag::leaky_relu(ag::add(self_and_neighbours, interaction), slope);
}

Mat message_passing_layer(const Mat& z, const BipartiteGraph& graph, const Mat& w1, const Mat& w2,
                          double slope) {
  ag::Tape tape(false);
  return message_passing_layer(tape.view(z), graph, tape.view(w1), tape.view(w2), slope).value();
}

ag::Var disentangle_layer(const ag::Var& z, const BipartiteGraph& graph, const ag::Var& channel_w1,
                          const ag::Var& channel_w2, double slope) {
  return message_passing_layer(z, graph, channel_w1, channel_w2, slope);
}

EncodedVars encode(ag::Tape& tape, const BipartiteGraph& graph, EncoderParams& params, double dropout,
                   Rng* rng) {
  if (params.n_users() != graph.n_users || params.n_items() != graph.n_items) {
    throw Error("encoder tables do not match the graph's user/item counts");
  }
  ag::Var z = ag::concat_rows(tape.param(params.user_table), tape.param(params.item_table));
  for (int l = 0; l < params.layers(); ++l) {
    z = message_passing_layer(z, graph, tape.param(params.w1[static_cast<std::size_t>(l)]),
                              tape.param(params.w2[static_cast<std::size_t>(l)]), params.leaky_slope);
    if (dropout > 0.0 && rng) z = ag::dropout(z, dropout, *rng);
  }
  z = disentangle_layer(z, graph, tape.param(params.channel_w1), tape.param(params.channel_w2),
                        params.leaky_slope);
  return {ag::slice_rows(z, 0, graph.n_users), ag::slice_rows(z, graph.n_users, graph.n_items)};
}

DisentangledEmbeddings encode_domain(const BipartiteGraph& graph, const EncoderParams& params) {
  ag::Tape tape(false);
  auto out = encode(tape, graph, const_cast<EncoderParams&>(params));
  return {out.users.value(), out.items.value(), params.channels};
}

}  // namespace disco
