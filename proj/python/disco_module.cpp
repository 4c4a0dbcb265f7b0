// Python bindings for the core operations and the train/eval workflow.

#include "disco/affinity.hpp"
#include "disco/baselines.hpp"
#include "disco/config.hpp"
#include "disco/dataset.hpp"
#include "disco/evaluator.hpp"
#include "disco/gradcheck.hpp"
#include "disco/inter_bridge.hpp"
#include "disco/intra_contrast.hpp"
#include "disco/scoring.hpp"
#include "disco/synthetic.hpp"
#include "disco/trainer.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace disco;
using json = nlohmann::ordered_json;

namespace {

py::dict eval_dict(const EvalResult& r) {
  py::dict d;
  d["hr_at_k"] = r.hr_at_k;
  d["ndcg_at_k"] = r.ndcg_at_k;
  d["k"] = r.k;
  d["n_users"] = r.n_users;
  d["per_user_ranks"] = r.per_user_ranks;
  return d;
}

TrainConfig config_from_string(const std::string& s) {
  return s.empty() ? TrainConfig{} : config_from_json(json::parse(s));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Disentangled intent contrastive cross-domain recommendation (C++ core)";
  py::register_exception<Error>(m, "DiscoError", PyExc_ValueError);

  // dataset
  m.def(
      "generate_synthetic",
      [](const std::string& out_dir, int n_users, int n_items, int k_true, double consistency, double density,
         std::uint64_t seed, double concentration) {
        SyntheticSpec spec{n_users, n_items, k_true, consistency, density, seed, concentration};
        auto data = generate_synthetic(spec);
        std::filesystem::create_directories(out_dir);
        write_interactions(std::filesystem::path(out_dir) / "source.csv", data.source);
        write_interactions(std::filesystem::path(out_dir) / "target.csv", data.target);
        return py::make_tuple(data.source.records.size(), data.target.records.size(), data.source_mixture,
                              data.target_mixture);
      },
      py::arg("out_dir"), py::arg("n_users") = 2000, py::arg("n_items") = 500, py::arg("k_true") = 2,
      py::arg("consistency") = 0.9, py::arg("density") = 0.02, py::arg("seed") = 7, py::arg("concentration") = 0.5,
      "Write source.csv/target.csv; returns (n_source, n_target, source_mixture, target_mixture).");
  m.def(
      "prepare",
      [](const std::string& source_csv, const std::string& target_csv, const std::string& out_dir, bool header,
         int min_user, int min_item, bool iterate_filter, double cold_ratio, std::uint64_t seed) {
        auto data = prepare_data(load_interactions(source_csv, header), load_interactions(target_csv, header), min_user,
                                 min_item, iterate_filter, cold_ratio, seed);
        save_prepared(out_dir, data);
        py::dict d;
        d["n_users"] = data.split.n_users;
        d["n_items"] = data.split.n_items;
        d["n_overlap"] = data.split.overlap.size();
        d["n_train"] = py::make_tuple(data.split.train[0].size(), data.split.train[1].size());
        return d;
      },
      py::arg("source_csv"), py::arg("target_csv"), py::arg("out_dir"), py::arg("header") = false,
      py::arg("min_user") = 5, py::arg("min_item") = 10, py::arg("iterate_filter") = false,
      py::arg("cold_ratio") = 0.2, py::arg("seed") = 2024);
  m.def("edge_coefficients", [](int n_users, int n_items, const std::vector<std::pair<int, int>>& edges) {
    std::vector<Edge> e;
    for (auto [u, v] : edges) e.push_back({u, v});
    return build_bipartite_graph(n_users, n_items, e).norm_coefficients;
  });

  // affinity and walks
  m.def("affinity_matrix", &affinity_matrix, py::arg("batch"), py::arg("tau_r"));
  m.def(
      "walk_targets",
      [](const Mat& r, double alpha, int steps, bool identity_walk) {
        return walk_targets(r, alpha, steps, identity_walk).T;
      },
      py::arg("R"), py::arg("alpha"), py::arg("steps"), py::arg("identity_walk") = false);

  // intra-domain
  m.def(
      "pairwise_softmax",
      [](const Mat& z, const Mat& zhat, double tau, const std::string& phi) {
        return pairwise_softmax(z, zhat, {tau, parse_similarity(phi)});
      },
      py::arg("z"), py::arg("zhat"), py::arg("tau") = 0.5, py::arg("phi") = "cosine");
  m.def(
      "intra_loss", [](const std::vector<Mat>& t, const std::vector<Mat>& rho) { return intra_loss(t, rho); },
      py::arg("targets"), py::arg("rho"));
  m.def(
      "orthogonality_loss",
      [](const Mat& z, const Mat& zhat, int k, const std::string& form) {
        return orthogonality_loss(z, zhat, k, parse_orth_form(form));
      },
      py::arg("z"), py::arg("zhat"), py::arg("channels"), py::arg("form") = "channel-gram");

  // inter-domain
  m.def(
      "intent_prior",
      [](const Mat& e, const Mat& protos, int k, const std::string& phi, bool uniform) {
        return intent_prior(e, protos, k, parse_similarity(phi), uniform);
      },
      py::arg("e"), py::arg("prototypes"), py::arg("channels"), py::arg("phi") = "cosine", py::arg("uniform") = false);
  m.def(
      "batch_intent_similarity",
      [](const Mat& e, const Mat& zhat, int k, const std::string& phi) {
        return batch_intent_similarity(e, zhat, k, parse_similarity(phi));
      },
      py::arg("e"), py::arg("zhat"), py::arg("channels"), py::arg("phi") = "cosine");
  m.def(
      "variational_posterior", [](const Mat& prior, const std::vector<Mat>& phat) {
        return variational_posterior(prior, phat);
      },
      py::arg("prior"), py::arg("phat"));
  m.def(
      "elbo",
      [](const std::vector<Mat>& q, const Mat& prior, const std::vector<Mat>& phat) { return elbo(q, prior, phat); },
      py::arg("q"), py::arg("prior"), py::arg("phat"));
  m.def(
      "log_marginal", [](const Mat& prior, const std::vector<Mat>& phat) { return log_marginal(prior, phat); },
      py::arg("prior"), py::arg("phat"));
  m.def(
      "inter_loss", [](const Mat& t, const Mat& e) { return inter_loss(t, e); }, py::arg("T"), py::arg("elbo"));

  // scoring
  m.def(
      "score",
      [](const Mat& u, const Mat& v, const Vec& w) {
        return score({u, v, w});
      },
      py::arg("user_channels"), py::arg("item_channels"), py::arg("intent_weights"));
  m.def("probability", py::vectorize(&probability), py::arg("r"));
  m.def(
      "rec_loss",
      [](const std::vector<double>& pos, const std::vector<double>& neg) { return rec_loss(pos, neg); },
      py::arg("positives"), py::arg("negatives"));
  m.def(
      "total_loss",
      [](double rec_s, double rec_t, double intra, double orth, double inter, double beta, double gamma,
         double lambda) {
        return total_loss({rec_s, rec_t, intra, orth, inter, 0.0}, beta, gamma, lambda);
      },
      py::arg("rec_source"), py::arg("rec_target"), py::arg("intra"), py::arg("orth"), py::arg("inter"),
      py::arg("beta"), py::arg("gamma"), py::arg("lambda_"));

  // evaluation
  m.def(
      "rank_candidates", [](const std::vector<double>& s, int pos) { return rank_candidates(s, pos); },
      py::arg("scores"), py::arg("positive_index"));
  m.def(
      "ranking_metrics", [](const std::vector<int>& ranks, int k) { return eval_dict(ranking_metrics(ranks, k)); },
      py::arg("ranks"), py::arg("k") = 10);

  // workflow
  m.def("default_config", [] { return to_json(TrainConfig{}).dump(); });
  m.def(
      "normalize_config", [](const std::string& s) { return to_json(config_from_string(s)).dump(); },
      py::arg("config_json"));
  m.def(
      "train",
      [](const std::string& config_json, const std::string& data_dir, const std::string& out_dir, bool resume) {
        TrainConfig cfg = config_from_string(config_json);
        auto data = load_prepared(data_dir);
        TrainReport report;
        {
          py::gil_scoped_release release;
          Trainer trainer(data.split, cfg);
          FitOptions opts;
          opts.out_dir = out_dir;
          opts.resume = resume;
          report = trainer.fit(opts);
        }
        return to_json(report).dump();
      },
      py::arg("config_json"), py::arg("data_dir"), py::arg("out_dir"), py::arg("resume") = false,
      "Train and write the checkpoint directory; returns the report as JSON text.");
  m.def(
      "evaluate",
      [](const std::string& ckpt_dir, const std::string& data_dir, const std::string& direction, int negatives, int k,
         bool validation) {
        auto data = load_prepared(data_dir);
        auto trainer = trainer_from_checkpoint(data.split, load_checkpoint(ckpt_dir));
        const auto& cfg = trainer->config();
        EvalProtocol p{parse_direction(direction), validation, k > 0 ? k : cfg.eval_k,
                       negatives >= 0 ? negatives : cfg.eval_negatives, cfg.seed};
        return eval_dict(evaluate_cold_start(data.split, p, trainer->scorer(p.direction)));
      },
      py::arg("ckpt_dir"), py::arg("data_dir"), py::arg("direction") = "s2t", py::arg("negatives") = -1,
      py::arg("k") = -1, py::arg("validation") = false);
  m.def(
      "baseline",
      [](const std::string& kind, const std::string& data_dir, const std::string& direction, int negatives, int k,
         std::uint64_t seed) {
        auto data = load_prepared(data_dir);
        EvalProtocol p{parse_direction(direction), false, k, negatives, seed};
        return eval_dict(baseline_score(parse_baseline(kind), data.split, p));
      },
      py::arg("kind"), py::arg("data_dir"), py::arg("direction") = "s2t", py::arg("negatives") = 999, py::arg("k") = 10,
      py::arg("seed") = 2024);
  m.def(
      "gradcheck",
      [](const std::vector<std::string>& ablations, std::uint64_t seed) {
        GradCheckOptions o;
        o.seed = seed;
        for (const auto& a : ablations) o.ablations.insert(parse_ablation(a));
        auto r = gradcheck_micro(o);
        return py::make_tuple(r.pass(), r.entries.size(), r.n_failed, r.max_rel_err);
      },
      py::arg("ablations") = std::vector<std::string>{}, py::arg("seed") = 11,
      "Returns (passed, n_entries, n_failed, max_rel_err).");
}
