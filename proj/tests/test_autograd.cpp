#include "doctest.h"
#include "helpers.hpp"

using namespace disco;
using testing::check_gradients;
using testing::random_mat;

namespace {

struct Fixture {
  Rng rng{42};
  ag::Parameter a{"a", random_mat(3, 4, rng)};
  ag::Parameter b{"b", random_mat(4, 3, rng)};
  ag::Parameter c{"c", random_mat(3, 4, rng)};
  ag::Parameter row{"row", random_mat(1, 4, rng)};
  ag::Parameter col{"col", random_mat(3, 1, rng)};
  std::vector<ag::Parameter*> all() { return {&a, &b, &c, &row, &col}; }
  /// Fixed weights so every op feeds a non-trivial scalar.
  Mat w(Index r, Index cc) {
    Rng g(7);
    return random_mat(r, cc, g);
  }
};

}  // namespace

TEST_CASE("elementwise and matrix ops match finite differences") {
  Fixture f;
  const std::vector<std::pair<const char*, std::function<ag::Var(ag::Tape&)>>> cases = {
      {"matmul", [&](ag::Tape& t) { return ag::weighted_sum(ag::matmul(t.param(f.a), t.param(f.b)), f.w(3, 3)); }},
      {"matmul_nt", [&](ag::Tape& t) { return ag::weighted_sum(ag::matmul_nt(t.param(f.a), t.param(f.c)), f.w(3, 3)); }},
      {"matmul_tn", [&](ag::Tape& t) { return ag::weighted_sum(ag::matmul_tn(t.param(f.a), t.param(f.c)), f.w(4, 4)); }},
      {"add/sub/mul", [&](ag::Tape& t) {
         auto x = ag::mul(ag::add(t.param(f.a), t.param(f.c)), ag::sub(t.param(f.a), t.param(f.c)));
         return ag::weighted_sum(x, f.w(3, 4));
       }},
      {"scale/add_scalar", [&](ag::Tape& t) { return ag::add_scalar(ag::sum(ag::scale(t.param(f.a), 2.5)), 3.0); }},
      {"add_row/mul_col", [&](ag::Tape& t) {
         return ag::weighted_sum(ag::mul_col(ag::add_row(t.param(f.a), t.param(f.row)), t.param(f.col)), f.w(3, 4));
       }},
      {"leaky_relu", [&](ag::Tape& t) { return ag::weighted_sum(ag::leaky_relu(t.param(f.a), 0.05), f.w(3, 4)); }},
      {"abs", [&](ag::Tape& t) { return ag::weighted_sum(ag::abs(t.param(f.a)), f.w(3, 4)); }},
      {"exp", [&](ag::Tape& t) { return ag::weighted_sum(ag::exp(t.param(f.a)), f.w(3, 4)); }},
      {"concat/slice", [&](ag::Tape& t) {
         std::vector<ag::Var> parts{t.param(f.a), t.param(f.c)};
         auto x = ag::concat_cols(parts);
         auto y = ag::concat_rows(ag::slice_cols(x, 2, 4), ag::slice_rows(t.param(f.c), 1, 2));
         return ag::weighted_sum(y, f.w(5, 4));
       }},
      {"gather_rows", [&](ag::Tape& t) {
         std::vector<int> idx{2, 0, 2, 1};
         return ag::weighted_sum(ag::gather_rows(t.param(f.a), idx), f.w(4, 4));
       }},
      {"row_normalize", [&](ag::Tape& t) { return ag::weighted_sum(ag::row_normalize(t.param(f.a)), f.w(3, 4)); }},
      {"softmax_rows", [&](ag::Tape& t) { return ag::weighted_sum(ag::softmax_rows(t.param(f.a)), f.w(3, 4)); }},
      {"log_softmax_rows", [&](ag::Tape& t) { return ag::weighted_sum(ag::log_softmax_rows(t.param(f.a)), f.w(3, 4)); }},
      {"rowwise_dot/row_sum/mean", [&](ag::Tape& t) {
         return ag::add(ag::mean(ag::rowwise_dot(t.param(f.a), t.param(f.c))), ag::sum(ag::row_sum(t.param(f.c))));
       }},
      {"bce_with_logits", [&](ag::Tape& t) {
         std::vector<double> labels{1, 0, 1};
         return ag::bce_with_logits(t.param(f.col), labels);
       }},
      {"dropout (fixed mask)", [&](ag::Tape& t) {
         Rng r(9);
         return ag::weighted_sum(ag::dropout(t.param(f.a), 0.3, r), f.w(3, 4));
       }},
      {"operators", [&](ag::Tape& t) {
         auto x = 2.0 * (t.param(f.a) + t.param(f.c)) - t.param(f.c);
         return ag::weighted_sum(x, f.w(3, 4));
       }},
  };
  for (const auto& [name, fn] : cases) {
    CAPTURE(name);
    auto r = check_gradients(f.all(), fn);
    CHECK_MESSAGE(r.ok, r.worst);
  }
}

TEST_CASE("sparse product gradient") {
  Rng rng(3);
  std::vector<Eigen::Triplet<double>> trip{{0, 1, 0.5}, {1, 0, 0.5}, {1, 2, 2.0}, {2, 2, -1.0}};
  SpMat s(3, 3);
  s.setFromTriplets(trip.begin(), trip.end());
  ag::SparseOperator op(s);
  ag::Parameter x("x", random_mat(3, 2, rng));
  Mat w = random_mat(3, 2, rng);
  auto r = check_gradients({&x}, [&](ag::Tape& t) { return ag::weighted_sum(ag::spmm(op, t.param(x)), w); });
  CHECK_MESSAGE(r.ok, r.worst);
}

TEST_CASE("detach and constants block gradients") {
  Rng rng(1);
  ag::Parameter x("x", random_mat(2, 2, rng));
  ag::Tape t;
  auto v = t.param(x);
  auto loss = ag::add(ag::sum(ag::detach(v)), ag::sum(t.constant(Mat::Ones(2, 2))));
  x.zero_grad();
  t.backward(loss);
  CHECK(x.grad.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("log_softmax clamps at log 1e-12") {
  ag::Tape t(false);
  Mat m(1, 2);
  m << 0.0, -100.0;
  auto out = ag::log_softmax_rows(t.constant(m));
  CHECK(out.value()(0, 1) == doctest::Approx(std::log(1e-12)));
  CHECK(out.value()(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("row_normalize rejects zero rows") {
  ag::Tape t(false);
  Mat m = Mat::Zero(2, 3);
  m(0, 0) = 1.0;
  CHECK_THROWS_WITH_AS(ag::row_normalize(t.constant(m)), doctest::Contains("row 1"), Error);
}

TEST_CASE("gradients accumulate across uses of a parameter") {
  ag::Parameter x("x", Mat::Constant(1, 1, 3.0));
  ag::Tape t;
  auto v = t.param(x);
  auto loss = ag::sum(ag::mul(v, v));  // x^2
  x.zero_grad();
  t.backward(loss);
  CHECK(x.grad(0, 0) == doctest::Approx(6.0));
}
