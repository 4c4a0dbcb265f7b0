#include "disco/model.hpp"

#include <cmath>

namespace disco {

namespace {

const char* kDomainPrefix[2] = {"s.", "t."};
const char* kDirectionPrefix[2] = {"s2t.", "t2s."};

}  // namespace

Model Model::init(const TrainConfig& cfg, std::array<int, 2> n_users, std::array<int, 2> n_items) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, 0x6d6f64656cULL));
  Model m;
  for (int d = 0; d < 2; ++d) {
    EncoderShape shape{n_users[d], n_items[d], cfg.dim, cfg.channels, cfg.layers, cfg.leaky_slope};
    m.encoders[d] = SiamesePair::from_online(EncoderParams::init(shape, rng, kDomainPrefix[d]), cfg.ema_momentum);
  }
  const int dc = cfg.channel_dim();
  const double limit = std::sqrt(6.0 / (cfg.channels + dc));
  for (int d = 0; d < 2; ++d) {
    Mat c(cfg.channels, dc);
    for (Index i = 0; i < c.size(); ++i) c.data()[i] = (2.0 * uniform_unit(rng) - 1.0) * limit;
    m.prototypes[d] = ag::Parameter(std::string(kDomainPrefix[d]) + "prototypes", c);
  }
  for (Direction dir : directions(cfg.direction)) {
    const int i = static_cast<int>(dir);
    m.bridges[i] = Decoder::init(cfg.channels, dc, cfg.hidden_width(), cfg.shared_decoder, cfg.leaky_slope, rng,
                                 std::string(kDirectionPrefix[i]) + "decoder.");
  }
  return m;
}

const Decoder& Model::bridge(Direction d) const {
  if (!has_bridge(d)) throw Error("model has no bridge for direction " + to_string(d));
  return *bridges[static_cast<int>(d)];
}

Decoder& Model::bridge(Direction d) {
  if (!has_bridge(d)) throw Error("model has no bridge for direction " + to_string(d));
  return *bridges[static_cast<int>(d)];
}

std::vector<ag::Parameter*> Model::trainable() {
  std::vector<ag::Parameter*> out;
  for (auto& e : encoders) {
    for (auto* p : e.online.parameters()) out.push_back(p);
  }
  for (auto& p : prototypes) out.push_back(&p);
  for (auto& b : bridges) {
    if (b) {
      for (auto* p : b->parameters()) out.push_back(p);
    }
  }
  return out;
}

std::vector<ag::Parameter*> Model::all_parameters() {
  std::vector<ag::Parameter*> out = trainable();
  for (auto& e : encoders) {
    for (auto* p : e.target.parameters()) out.push_back(p);
  }
  return out;
}

}  // namespace disco
