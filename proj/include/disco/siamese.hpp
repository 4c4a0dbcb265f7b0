#pragma once

// Online/target encoder pair. The target follows the online encoder by an
// exponential moving average and never receives gradients.

#include "disco/encoder.hpp"

#include <string>

namespace disco {

/// How the target branch of the contrastive losses is produced.
enum class TargetMode {
  kEma,           // separate EMA encoder, outputs are constants
  kSharedTarget,  // online encoder, gradients flow through the target branch
  kStopGradOnly,  // online encoder, outputs detached
};

std::string to_string(TargetMode m);

struct SiamesePair {
  EncoderParams online;
  EncoderParams target;
  double momentum = 0.99;

  /// Target starts as an exact copy of the online parameters.
  static SiamesePair from_online(EncoderParams online, double momentum);
};

/// theta_target <- m * theta_target + (1 - m) * theta_online, elementwise.
void ema_update(SiamesePair& pair);

/// Dropout-free pass producing constant target embeddings. Under the two
/// shared-encoder modes this delegates to the online parameters.
DisentangledEmbeddings target_encode(const SiamesePair& pair, const BipartiteGraph& graph,
                                     TargetMode mode = TargetMode::kEma);

}  // namespace disco
