// disco command-line tool: data preparation, synthetic data, training,
// evaluation, gradient checking and baselines.

#include "disco/baselines.hpp"
#include "disco/config.hpp"
#include "disco/dataset.hpp"
#include "disco/gradcheck.hpp"
#include "disco/synthetic.hpp"
#include "disco/trainer.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw disco::Error("cannot write " + path.string());
}

json protocol_json(const disco::EvalProtocol& p) {
  return json{{"direction", disco::to_string(p.direction)},
              {"split", p.validation ? "validation" : "test"},
              {"k", p.k},
              {"negatives", p.negatives},
              {"seed", p.seed}};
}

}  // namespace

int main(int argc, char** argv) {
  disco::tune_allocator();
  CLI::App app{"Disentangled intent contrastive learning for cold-start cross-domain recommendation"};
  app.require_subcommand(1);

  // prepare
  auto* prepare = app.add_subcommand("prepare", "ingest, filter and split two interaction logs");
  std::string src_csv, tgt_csv, prep_out;
  bool header = false, iterate = false;
  int min_user = 5, min_item = 10;
  double cold_ratio = 0.2;
  std::uint64_t prep_seed = 2024;
  prepare->add_option("--source", src_csv, "source-domain CSV")->required()->check(CLI::ExistingFile);
  prepare->add_option("--target", tgt_csv, "target-domain CSV")->required()->check(CLI::ExistingFile);
  prepare->add_option("--out", prep_out, "output directory")->required();
  prepare->add_flag("--header", header, "skip the first line of each CSV");
  prepare->add_option("--min-user", min_user, "minimum interactions per user")->capture_default_str();
  prepare->add_option("--min-item", min_item, "minimum interactions per item")->capture_default_str();
  prepare->add_flag("--iterate-filter", iterate, "repeat filtering to a fixpoint");
  prepare->add_option("--cold-ratio", cold_ratio, "fraction of overlapping users held out")->capture_default_str();
  prepare->add_option("--seed", prep_seed, "split seed")->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "generate a planted-intent two-domain dataset");
  disco::SyntheticSpec spec;
  std::string synth_out;
  synth->add_option("--out", synth_out, "output directory (source.csv, target.csv)")->required();
  synth->add_option("--users", spec.n_users)->capture_default_str();
  synth->add_option("--items", spec.n_items_per_domain, "items per domain")->capture_default_str();
  synth->add_option("--k-true", spec.k_true)->capture_default_str();
  synth->add_option("--consistency", spec.consistency)->capture_default_str();
  synth->add_option("--density", spec.density)->capture_default_str();
  synth->add_option("--concentration", spec.concentration)->capture_default_str();
  synth->add_option("--seed", spec.seed)->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "train a model");
  std::string cfg_path, data_dir, ckpt_out;
  std::vector<std::string> ablate;
  std::optional<std::uint64_t> train_seed;
  std::optional<int> train_epochs;
  std::optional<std::string> train_direction;
  bool resume = false, verbose = false;
  train->add_option("--config", cfg_path, "JSON config (defaults when omitted)")->check(CLI::ExistingFile);
  train->add_option("--data", data_dir, "prepared data directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--out", ckpt_out, "checkpoint directory")->required();
  train->add_option("--ablate", ablate, "decoder, uniform-prior, no-orth, identity-walk, shared-target, stopgrad-only");
  train->add_option("--seed", train_seed, "override the config seed");
  train->add_option("--epochs", train_epochs, "override the config epoch limit");
  train->add_option("--direction", train_direction, "s2t, t2s or both");
  train->add_flag("--resume", resume, "continue from <out>/resume");
  train->add_flag("-v,--verbose", verbose, "log every epoch");

  // eval
  auto* eval = app.add_subcommand("eval", "cold-start evaluation of a checkpoint");
  std::string eval_ckpt, eval_data, eval_dir = "s2t", eval_out;
  std::optional<int> eval_negatives, eval_k;
  std::optional<std::uint64_t> eval_seed;
  bool eval_valid = false;
  eval->add_option("--ckpt", eval_ckpt, "checkpoint directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--data", eval_data, "prepared data directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--direction", eval_dir, "s2t or t2s")->capture_default_str();
  eval->add_option("--negatives", eval_negatives, "negatives per list (config value by default)");
  eval->add_option("--k", eval_k, "cut-off (config value by default)");
  eval->add_option("--seed", eval_seed, "candidate seed (config seed by default)");
  eval->add_flag("--validation", eval_valid, "evaluate validation users");
  eval->add_option("--out", eval_out, "output path (default <ckpt>/eval.json)");

  // gradcheck
  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of the full objective on a micro instance");
  std::vector<std::string> grad_ablate;
  std::uint64_t grad_seed = 11;
  bool grad_verbose = false;
  grad->add_option("--ablate", grad_ablate, "ablations to enable");
  grad->add_option("--seed", grad_seed)->capture_default_str();
  grad->add_flag("-v,--verbose", grad_verbose, "print every entry");

  // baseline
  auto* base = app.add_subcommand("baseline", "random or popularity scoring through the evaluator");
  std::string base_kind, base_data, base_dir = "s2t", base_out;
  int base_negatives = 999, base_k = 10;
  std::uint64_t base_seed = 2024;
  bool base_valid = false;
  base->add_option("--kind", base_kind, "random or popularity")->required();
  base->add_option("--data", base_data, "prepared data directory")->required()->check(CLI::ExistingDirectory);
  base->add_option("--direction", base_dir, "s2t or t2s")->capture_default_str();
  base->add_option("--negatives", base_negatives)->capture_default_str();
  base->add_option("--k", base_k)->capture_default_str();
  base->add_option("--seed", base_seed)->capture_default_str();
  base->add_flag("--validation", base_valid, "evaluate validation users");
  base->add_option("--out", base_out, "output JSON path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*prepare) {
      auto raw_s = disco::load_interactions(src_csv, header);
      auto raw_t = disco::load_interactions(tgt_csv, header);
      auto data = disco::prepare_data(raw_s, raw_t, min_user, min_item, iterate, cold_ratio, prep_seed);
      disco::save_prepared(prep_out, data);
      std::cout << "prepared " << data.split.n_users[0] << "/" << data.split.n_users[1] << " users, "
                << data.split.n_items[0] << "/" << data.split.n_items[1] << " items, " << data.split.overlap.size()
                << " overlapping users -> " << prep_out << '\n';
    } else if (*synth) {
      auto data = disco::generate_synthetic(spec);
      fs::create_directories(synth_out);
      disco::write_interactions(fs::path(synth_out) / "source.csv", data.source);
      disco::write_interactions(fs::path(synth_out) / "target.csv", data.target);
      std::cout << data.source.records.size() << " source and " << data.target.records.size()
                << " target interactions -> " << synth_out << '\n';
    } else if (*train) {
      disco::TrainConfig cfg = cfg_path.empty() ? disco::TrainConfig{} : disco::load_config(cfg_path);
      for (const auto& a : ablate) cfg.ablations.insert(disco::parse_ablation(a));
      if (train_seed) cfg.seed = *train_seed;
      if (train_epochs) cfg.epochs = *train_epochs;
      if (train_direction) cfg.direction = disco::parse_direction_set(*train_direction);
      cfg.validate();
      auto data = disco::load_prepared(data_dir);
      disco::Trainer trainer(data.split, cfg);
      disco::FitOptions opts;
      opts.out_dir = ckpt_out;
      opts.resume = resume;
      opts.verbose = verbose;
      auto report = trainer.fit(opts);
      std::cout << "trained " << report.epochs.size() << " epochs, best epoch " << report.best_epoch
                << " (valid HR@" << cfg.eval_k << " " << report.best_valid_hr << ") -> " << ckpt_out << '\n';
    } else if (*eval) {
      auto data = disco::load_prepared(eval_data);
      auto ckpt = disco::load_checkpoint(eval_ckpt);
      auto trainer = disco::trainer_from_checkpoint(data.split, ckpt);
      const auto& cfg = trainer->config();
      disco::EvalProtocol p{disco::parse_direction(eval_dir), eval_valid, eval_k.value_or(cfg.eval_k),
                            eval_negatives.value_or(cfg.eval_negatives), eval_seed.value_or(cfg.seed)};
      auto result = disco::evaluate_cold_start(data.split, p, trainer->scorer(p.direction));
      json j;
      j["config"] = disco::to_json(cfg);
      j["protocol"] = protocol_json(p);
      j["result"] = disco::to_json(result);
      write_json(eval_out.empty() ? fs::path(eval_ckpt) / "eval.json" : fs::path(eval_out), j);
      std::cout << eval_dir << " HR@" << p.k << " " << result.hr_at_k << " NDCG@" << p.k << " " << result.ndcg_at_k
                << " over " << result.per_user_ranks.size() << " lists\n";
    } else if (*grad) {
      disco::GradCheckOptions opts;
      opts.seed = grad_seed;
      for (const auto& a : grad_ablate) opts.ablations.insert(disco::parse_ablation(a));
      auto res = disco::gradcheck_micro(opts);
      for (const auto& e : res.entries) {
        if (grad_verbose || !e.pass) {
          std::cout << (e.pass ? "ok   " : "FAIL ") << e.param << "[" << e.row << "," << e.col << "] analytic "
                    << e.analytic << " numeric " << e.numeric << " rel " << e.rel_err << '\n';
        }
      }
      std::cout << res.entries.size() << " entries over " << res.n_params << " parameters, " << res.n_failed
                << " failed, max rel err " << res.max_rel_err << '\n';
      return res.pass() ? 0 : 1;
    } else if (*base) {
      auto data = disco::load_prepared(base_data);
      disco::EvalProtocol p{disco::parse_direction(base_dir), base_valid, base_k, base_negatives, base_seed};
      auto kind = disco::parse_baseline(base_kind);
      auto result = disco::baseline_score(kind, data.split, p);
      json j;
      j["baseline"] = disco::to_string(kind);
      j["protocol"] = protocol_json(p);
      j["result"] = disco::to_json(result);
      if (!base_out.empty()) write_json(base_out, j);
      std::cout << base_kind << " " << base_dir << " HR@" << p.k << " " << result.hr_at_k << " NDCG@" << p.k << " "
                << result.ndcg_at_k << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
