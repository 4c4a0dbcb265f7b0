#include "disco/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace disco {

using json = nlohmann::ordered_json;

namespace {

struct AblationName {
  Ablation a;
  const char* name;
};

constexpr AblationName kAblationNames[] = {
    {Ablation::kDecoder, "decoder"},           {Ablation::kUniformPrior, "uniform-prior"},
    {Ablation::kNoOrth, "no-orth"},            {Ablation::kIdentityWalk, "identity-walk"},
    {Ablation::kSharedTarget, "shared-target"}, {Ablation::kStopGradOnly, "stopgrad-only"},
};

void require(bool ok, const std::string& what) {
  if (!ok) throw Error("invalid config: " + what);
}

}  // namespace

std::string to_string(Ablation a) {
  for (const auto& n : kAblationNames) {
    if (n.a == a) return n.name;
  }
  return "?";
}

Ablation parse_ablation(const std::string& s) {
  for (const auto& n : kAblationNames) {
    if (s == n.name) return n.a;
  }
  throw Error("unknown ablation '" + s +
              "' (expected decoder, uniform-prior, no-orth, identity-walk, shared-target, stopgrad-only)");
}

const std::vector<Ablation>& all_ablations() {
  static const std::vector<Ablation> all = [] {
    std::vector<Ablation> v;
    for (const auto& n : kAblationNames) v.push_back(n.a);
    return v;
  }();
  return all;
}

std::string to_string(DirectionSet d) {
  switch (d) {
    case DirectionSet::kS2T: return "s2t";
    case DirectionSet::kT2S: return "t2s";
    case DirectionSet::kBoth: return "both";
  }
  return "?";
}

DirectionSet parse_direction_set(const std::string& s) {
  if (s == "s2t") return DirectionSet::kS2T;
  if (s == "t2s") return DirectionSet::kT2S;
  if (s == "both") return DirectionSet::kBoth;
  throw Error("unknown direction '" + s + "' (expected s2t, t2s or both)");
}

std::vector<Direction> directions(DirectionSet d) {
  switch (d) {
    case DirectionSet::kS2T: return {Direction::kSourceToTarget};
    case DirectionSet::kT2S: return {Direction::kTargetToSource};
    case DirectionSet::kBoth: return {Direction::kSourceToTarget, Direction::kTargetToSource};
  }
  return {};
}

TargetMode TrainConfig::target_mode() const {
  if (has(Ablation::kSharedTarget)) return TargetMode::kSharedTarget;
  if (has(Ablation::kStopGradOnly)) return TargetMode::kStopGradOnly;
  return TargetMode::kEma;
}

void TrainConfig::validate() const {
  require(dim >= 1, "dim must be >= 1");
  require(channels >= 1 && channels <= 6, "channels must be in [1, 6]");
  require(dim % channels == 0, "dim must be divisible by channels");
  require(layers >= 1 && layers <= 6, "layers must be in [1, 6]");
  require(std::isfinite(leaky_slope) && leaky_slope >= 0.0, "leaky_slope must be >= 0");
  require(dropout >= 0.0 && dropout <= 0.5, "dropout must be in [0, 0.5]");
  require(tau > 0.0 && std::isfinite(tau), "tau must be > 0");
  require(!tau_r || (*tau_r > 0.0 && std::isfinite(*tau_r)), "tau_r must be > 0");
  require(alpha >= 0.0 && alpha <= 1.0, "alpha must be in [0, 1]");
  require(walk_steps >= 1 && walk_steps <= 6, "walk_steps must be in [1, 6]");
  require(beta >= 0.0 && beta <= 0.5, "beta must be in [0, 0.5]");
  require(gamma >= 0.0 && std::isfinite(gamma), "gamma must be >= 0");
  require(lambda >= 0.0 && lambda <= 0.5, "lambda must be in [0, 0.5]");
  require(decoder_hidden >= 0, "decoder_hidden must be >= 0");
  require(lr >= 0.0 && std::isfinite(lr), "lr must be >= 0");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "adam_beta1 must be in [0, 1)");
  require(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "adam_beta2 must be in [0, 1)");
  require(adam_eps > 0.0, "adam_eps must be > 0");
  require(ema_momentum >= 0.0 && ema_momentum <= 1.0, "ema_momentum must be in [0, 1]");
  require(epochs >= 0, "epochs must be >= 0");
  require(patience >= 1, "patience must be >= 1");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(contrast_batch >= 1, "contrast_batch must be >= 1");
  require(neg_per_pos >= 1, "neg_per_pos must be >= 1");
  require(eval_negatives >= 0, "eval_negatives must be >= 0");
  require(eval_k >= 1, "eval_k must be >= 1");
  require(!(has(Ablation::kSharedTarget) && has(Ablation::kStopGradOnly)),
          "shared-target and stopgrad-only are mutually exclusive");
}

json to_json(const TrainConfig& c) {
  json j;
  j["dim"] = c.dim;
  j["channels"] = c.channels;
  j["layers"] = c.layers;
  j["leaky_slope"] = c.leaky_slope;
  j["dropout"] = c.dropout;
  j["tau"] = c.tau;
  j["tau_r"] = c.tau_r ? json(*c.tau_r) : json(nullptr);
  j["alpha"] = c.alpha;
  j["walk_steps"] = c.walk_steps;
  j["phi"] = to_string(c.phi);
  j["orth_form"] = to_string(c.orth_form);
  j["beta"] = c.beta;
  j["gamma"] = c.gamma;
  j["lambda"] = c.lambda;
  j["decoder_hidden"] = c.decoder_hidden;
  j["shared_decoder"] = c.shared_decoder;
  j["lr"] = c.lr;
  j["adam_beta1"] = c.adam_beta1;
  j["adam_beta2"] = c.adam_beta2;
  j["adam_eps"] = c.adam_eps;
  j["ema_momentum"] = c.ema_momentum;
  j["epochs"] = c.epochs;
  j["patience"] = c.patience;
  j["batch_size"] = c.batch_size;
  j["contrast_batch"] = c.contrast_batch;
  j["neg_per_pos"] = c.neg_per_pos;
  j["eval_negatives"] = c.eval_negatives;
  j["eval_k"] = c.eval_k;
  j["seed"] = c.seed;
  j["direction"] = to_string(c.direction);
  json abl = json::array();
  for (Ablation a : c.ablations) abl.push_back(to_string(a));
  j["ablations"] = abl;
  return j;
}

TrainConfig config_from_json(const json& j) {
  if (!j.is_object()) throw Error("invalid config: expected a JSON object");
  TrainConfig c;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const json& v = it.value();
      if (k == "dim") c.dim = v.get<int>();
      else if (k == "channels") c.channels = v.get<int>();
      else if (k == "layers") c.layers = v.get<int>();
      else if (k == "leaky_slope") c.leaky_slope = v.get<double>();
      else if (k == "dropout") c.dropout = v.get<double>();
      else if (k == "tau") c.tau = v.get<double>();
      else if (k == "tau_r") c.tau_r = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
      else if (k == "alpha") c.alpha = v.get<double>();
      else if (k == "walk_steps") c.walk_steps = v.get<int>();
      else if (k == "phi") c.phi = parse_similarity(v.get<std::string>());
      else if (k == "orth_form") c.orth_form = parse_orth_form(v.get<std::string>());
      else if (k == "beta") c.beta = v.get<double>();
      else if (k == "gamma") c.gamma = v.get<double>();
      else if (k == "lambda") c.lambda = v.get<double>();
      else if (k == "decoder_hidden") c.decoder_hidden = v.get<int>();
      else if (k == "shared_decoder") c.shared_decoder = v.get<bool>();
      else if (k == "lr") c.lr = v.get<double>();
      else if (k == "adam_beta1") c.adam_beta1 = v.get<double>();
      else if (k == "adam_beta2") c.adam_beta2 = v.get<double>();
      else if (k == "adam_eps") c.adam_eps = v.get<double>();
      else if (k == "ema_momentum") c.ema_momentum = v.get<double>();
      else if (k == "epochs") c.epochs = v.get<int>();
      else if (k == "patience") c.patience = v.get<int>();
      else if (k == "batch_size") c.batch_size = v.get<int>();
      else if (k == "contrast_batch") c.contrast_batch = v.get<int>();
      else if (k == "neg_per_pos") c.neg_per_pos = v.get<int>();
      else if (k == "eval_negatives") c.eval_negatives = v.get<int>();
      else if (k == "eval_k") c.eval_k = v.get<int>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "direction") c.direction = parse_direction_set(v.get<std::string>());
      else if (k == "ablations") {
        c.ablations.clear();
        for (const auto& a : v) c.ablations.insert(parse_ablation(a.get<std::string>()));
      } else {
        throw Error("invalid config: unknown key '" + k + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(std::string("invalid config: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void save_config(const std::filesystem::path& path, const TrainConfig& c) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json(c).dump(2) << '\n';
}

}  // namespace disco
