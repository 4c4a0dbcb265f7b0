#pragma once

// Training configuration, ablation switches and their JSON form.

#include "disco/dataset.hpp"
#include "disco/intra_contrast.hpp"
#include "disco/siamese.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

namespace disco {

enum class Ablation {
  kDecoder,        // e = z, no cross-domain decoder
  kUniformPrior,   // p(k|u) = 1/K
  kNoOrth,         // gamma forced to 0
  kIdentityWalk,   // walk term replaced by I
  kSharedTarget,   // online encoder as target, gradients flow
  kStopGradOnly,   // online encoder as target, gradients stopped
};

std::string to_string(Ablation a);
Ablation parse_ablation(const std::string& s);
const std::vector<Ablation>& all_ablations();

enum class DirectionSet { kS2T, kT2S, kBoth };
std::string to_string(DirectionSet d);
DirectionSet parse_direction_set(const std::string& s);
std::vector<Direction> directions(DirectionSet d);

struct TrainConfig {
  int dim = 128;
  int channels = 4;
  int layers = 4;
  double leaky_slope = 0.05;
  double dropout = 0.3;

  double tau = 0.5;
  /// Affinity-kernel temperature; unset shares tau.
  std::optional<double> tau_r;
  double alpha = 0.5;
  int walk_steps = 4;
  Similarity phi = Similarity::kCosine;
  OrthForm orth_form = OrthForm::kChannelGram;

  double beta = 0.3;
  double gamma = 1.0;
  double lambda = 0.3;

  int decoder_hidden = 0;  // 0: channel width
  bool shared_decoder = false;

  double lr = 0.004;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double ema_momentum = 0.99;

  int epochs = 200;
  int patience = 10;
  int batch_size = 1024;
  /// Rows of the B x B intra/inter contrast batches.
  int contrast_batch = 256;
  int neg_per_pos = 1;
  int eval_negatives = 999;
  int eval_k = 10;

  std::uint64_t seed = 2024;
  DirectionSet direction = DirectionSet::kBoth;
  std::set<Ablation> ablations;

  bool has(Ablation a) const { return ablations.count(a) != 0; }
  double kernel_tau() const { return tau_r.value_or(tau); }
  double effective_gamma() const { return has(Ablation::kNoOrth) ? 0.0 : gamma; }
  TargetMode target_mode() const;
  int channel_dim() const { return dim / channels; }
  int hidden_width() const { return decoder_hidden > 0 ? decoder_hidden : channel_dim(); }

  /// Throws Error naming the first offending field.
  void validate() const;
};

nlohmann::ordered_json to_json(const TrainConfig& c);
/// Unknown keys are rejected; missing keys keep their defaults.
TrainConfig config_from_json(const nlohmann::ordered_json& j);
TrainConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const TrainConfig& c);

}  // namespace disco
