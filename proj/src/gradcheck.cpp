#include "disco/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace disco {

ColdStartSplit micro_split() {
  ColdStartSplit s;
  s.n_users = {6, 6};
  s.n_items = {7, 7};
  for (int u = 0; u < 6; ++u) {
    for (int off : {0, 1, 3}) s.train[kSource].push_back({u, (u + off) % 7});
    for (int off : {0, 2}) s.train[kTarget].push_back({u, (2 * u + off) % 7});
    s.overlap.push_back({u, (u + 2) % 6});
  }
  s.train_overlap = s.overlap;
  s.cold_ratio = 0.0;
  return s;
}

TrainConfig micro_config(const GradCheckOptions& opts) {
  TrainConfig c;
  c.dim = 4;
  c.channels = 2;
  c.layers = 1;
  c.dropout = 0.0;
  c.batch_size = 4;
  c.contrast_batch = 4;
  c.beta = 0.4;
  c.lambda = 0.5;
  c.gamma = 1.0;
  c.seed = opts.seed;
  c.direction = DirectionSet::kBoth;
  c.ablations = opts.ablations;
  return c;
}

GradCheckResult gradcheck_micro(const GradCheckOptions& opts) {
  Trainer trainer(micro_split(), micro_config(opts));
  Rng rng(derive_seed(opts.seed, 3));
  auto plan = trainer.plan_epoch(rng);
  Batch batch = trainer.make_batch(plan, 0, rng);

  // move the target encoder off the online copy so both branches differ
  for (auto& pair : trainer.model().encoders) {
    for (auto* p : pair.target.parameters()) {
      for (Index i = 0; i < p->value.size(); ++i) p->value.data()[i] += 0.05 * (2.0 * uniform_unit(rng) - 1.0);
    }
  }

  auto params = trainer.model().trainable();
  for (auto* p : params) p->zero_grad();
  Trainer::Constants constants;
  {
    ag::Tape tape;
    auto l = trainer.forward(tape, batch, nullptr, &constants);
    tape.backward(l.total);
  }
  auto objective = [&] {
    ag::Tape tape(false);
    return trainer.forward(tape, batch, nullptr, &constants).values.total;
  };

  GradCheckResult res;
  res.n_params = static_cast<int>(params.size());
  for (auto* p : params) {
    for (Index r = 0; r < p->value.rows(); ++r) {
      for (Index c = 0; c < p->value.cols(); ++c) {
        double& x = p->value(r, c);
        const double x0 = x;
        x = x0 + opts.h;
        const double fp = objective();
        x = x0 - opts.h;
        const double fm = objective();
        x = x0;
        GradCheckEntry e;
        e.param = p->name;
        e.row = r;
        e.col = c;
        e.analytic = p->grad(r, c);
        e.numeric = (fp - fm) / (2.0 * opts.h);
        e.abs_err = std::abs(e.analytic - e.numeric);
        const double scale = std::max(std::abs(e.analytic), std::abs(e.numeric));
        e.rel_err = scale > 0.0 ? e.abs_err / scale : 0.0;
        e.pass = e.abs_err <= opts.abs_tol || e.rel_err <= opts.rel_tol;
        if (!e.pass) ++res.n_failed;
        if (e.abs_err > opts.abs_tol) res.max_rel_err = std::max(res.max_rel_err, e.rel_err);
        res.entries.push_back(std::move(e));
      }
    }
  }
  return res;
}

}  // namespace disco
