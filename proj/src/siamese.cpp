#include "disco/siamese.hpp"

namespace disco {

std::string to_string(TargetMode m) {
  switch (m) {
    case TargetMode::kEma: return "ema";
    case TargetMode::kSharedTarget: return "shared-target";
    case TargetMode::kStopGradOnly: return "stopgrad-only";
  }
  return "?";
}

SiamesePair SiamesePair::from_online(EncoderParams online, double momentum) {
  if (!(momentum >= 0.0 && momentum <= 1.0)) throw Error("EMA momentum must lie in [0, 1]");
  SiamesePair pair;
  pair.target = online;
  for (auto* p : pair.target.parameters()) {
    p->name = "target." + p->name;
    p->grad.resize(0, 0);
  }
  pair.online = std::move(online);
  pair.momentum = momentum;
  return pair;
}

void ema_update(SiamesePair& pair) {
  auto on = pair.online.parameters();
  auto tg = pair.target.parameters();
  if (on.size() != tg.size()) throw Error("online/target parameter lists differ");
  const double m = pair.momentum;
  for (std::size_t i = 0; i < on.size(); ++i) {
    Mat& t = tg[i]->value;
    const Mat& o = on[i]->value;
    if (t.rows() != o.rows() || t.cols() != o.cols()) throw Error("online/target shapes differ for " + on[i]->name);
    t = m * t + (1.0 - m) * o;
  }
}

DisentangledEmbeddings target_encode(const SiamesePair& pair, const BipartiteGraph& graph, TargetMode mode) {
  return encode_domain(graph, mode == TargetMode::kEma ? pair.target : pair.online);
}

}  // namespace disco
