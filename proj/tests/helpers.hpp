#pragma once

#include "disco/autograd.hpp"
#include "disco/dataset.hpp"
#include "disco/synthetic.hpp"
#include "disco/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace testing {

using disco::Index;
using disco::Mat;

inline Mat random_mat(Index r, Index c, disco::Rng& rng, double scale = 1.0) {
  Mat m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = scale * (2.0 * disco::uniform_unit(rng) - 1.0);
  return m;
}

/// Random row-stochastic matrix with strictly positive entries.
inline Mat random_stochastic(Index r, Index c, disco::Rng& rng) {
  Mat m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = 0.05 + disco::uniform_unit(rng);
  for (Index i = 0; i < r; ++i) m.row(i) /= m.row(i).sum();
  return m;
}

struct GradCheck {
  bool ok = true;
  double worst_rel = 0.0;
  std::string worst;
};

/// Central differences of `f` over every entry of `params` against backprop.
inline GradCheck check_gradients(const std::vector<disco::ag::Parameter*>& params,
                                 const std::function<disco::ag::Var(disco::ag::Tape&)>& f, double h = 1e-5,
                                 double rel_tol = 1e-4, double abs_tol = 1e-7) {
  for (auto* p : params) p->zero_grad();
  {
    disco::ag::Tape tape;
    tape.backward(f(tape));
  }
  GradCheck out;
  for (auto* p : params) {
    for (Index i = 0; i < p->value.size(); ++i) {
      double& x = p->value.data()[i];
      const double x0 = x;
      x = x0 + h;
      double fp, fm;
      {
        disco::ag::Tape t(false);
        fp = f(t).scalar();
      }
      x = x0 - h;
      {
        disco::ag::Tape t(false);
        fm = f(t).scalar();
      }
      x = x0;
      const double num = (fp - fm) / (2 * h);
      const double ana = p->grad.data()[i];
      const double err = std::abs(num - ana);
      const double rel = err / std::max({std::abs(num), std::abs(ana), 1e-300});
      if (err > abs_tol && rel > rel_tol) {
        out.ok = false;
        if (rel > out.worst_rel) {
          out.worst_rel = rel;
          out.worst = p->name + "[" + std::to_string(i) + "] analytic " + std::to_string(ana) + " numeric " +
                      std::to_string(num);
        }
      }
    }
  }
  return out;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("disco_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// Small planted-intent dataset split for fast trainer tests.
inline disco::PreparedData small_prepared(std::uint64_t seed = 5) {
  disco::SyntheticSpec spec;
  spec.n_users = 200;
  spec.n_items_per_domain = 100;
  spec.density = 0.1;
  spec.seed = seed;
  auto syn = disco::generate_synthetic(spec);
  return disco::prepare_data(syn.source, syn.target, 5, 10, false, 0.2, seed);
}

inline disco::TrainConfig small_config() {
  disco::TrainConfig c;
  c.dim = 16;
  c.channels = 2;
  c.layers = 2;
  c.batch_size = 256;
  c.contrast_batch = 32;
  c.eval_negatives = 49;
  c.epochs = 3;
  c.patience = 2;
  c.seed = 3;
  return c;
}

}  // namespace testing
