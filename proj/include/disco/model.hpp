#pragma once

// Full model state: one online/target encoder pair per domain, intent
// prototypes per domain and one decoder per trained transfer direction.
// A direction's prototypes are those of the domain it transfers into.

#include "disco/config.hpp"
#include "disco/inter_bridge.hpp"
#include "disco/siamese.hpp"

#include <array>
#include <optional>

namespace disco {

struct Model {
  std::array<SiamesePair, 2> encoders;
  std::array<ag::Parameter, 2> prototypes;        // K x Dc, per domain
  std::array<std::optional<Decoder>, 2> bridges;  // per Direction

  static Model init(const TrainConfig& cfg, std::array<int, 2> n_users, std::array<int, 2> n_items);

  int channels() const { return encoders[0].online.channels; }
  bool has_bridge(Direction d) const { return bridges[static_cast<int>(d)].has_value(); }
  /// Throws if the direction was not trained.
  const Decoder& bridge(Direction d) const;
  Decoder& bridge(Direction d);

  /// Parameters the optimizer updates.
  std::vector<ag::Parameter*> trainable();
  /// Trainable plus target-encoder parameters, in checkpoint order.
  std::vector<ag::Parameter*> all_parameters();
};

}  // namespace disco
