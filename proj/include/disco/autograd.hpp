#pragma once

// Minimal reverse-mode automatic differentiation over dense row-major
// matrices. A Tape records every operation applied to Vars; backward() walks
// the record in reverse and accumulates gradients into the Parameters that
// were registered as leaves.

#include "disco/common.hpp"

#include <deque>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace disco::ag {

struct Parameter {
  std::string name;
  Mat value;
  Mat grad;

  Parameter() = default;
  Parameter(std::string n, Mat v) : name(std::move(n)), value(std::move(v)) {
    grad = Mat::Zero(value.rows(), value.cols());
  }
  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

class Var {
 public:
  Var() = default;

  const Mat& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double scalar() const;
  bool requires_grad() const;
  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* t, int id) : tape_(t), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Sparse linear operator with its transpose cached for the backward pass.
struct SparseOperator {
  SpMat forward;
  SpMat transpose;

  SparseOperator() = default;
  explicit SparseOperator(SpMat m) : forward(std::move(m)), transpose(forward.transpose()) {}
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  /// With record=false no backward closures are stored and every Var is a
  /// constant; used for evaluation and target-encoder passes.
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(Mat value);
  /// Leaf bound to a parameter; the parameter's storage is referenced, not
  /// copied, so it must outlive the tape.
  Var param(Parameter& p);
  /// Leaf that references an external matrix without tracking gradients.
  Var view(const Mat& value);

  /// Seeds d(root)/d(root) = 1 and accumulates into every reachable Parameter.
  void backward(const Var& root);

  const Mat& value(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.ref ? *n.ref : n.own;
  }
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  /// Gradient buffer of node `id`, allocated as zeros on first access.
  Mat& grad(int id);
  std::size_t size() const { return nodes_.size(); }

  Var push(Mat value, std::initializer_list<Var> parents, Backward fn);
  Var push(Mat value, std::span<const Var> parents, Backward fn);

 private:
  struct Node {
    Mat own;
    const Mat* ref = nullptr;
    Mat grad;
    bool has_grad = false;
    bool requires_grad = false;
    Parameter* param = nullptr;
    Backward backward;
  };

  bool record_;
  std::deque<Node> nodes_;
};

// -- linear algebra --------------------------------------------------------
Var matmul(const Var& a, const Var& b);
Var matmul_nt(const Var& a, const Var& b);  // a * b^T
Var matmul_tn(const Var& a, const Var& b);  // a^T * b
Var spmm(const SparseOperator& s, const Var& a);

// -- elementwise -----------------------------------------------------------
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_row(const Var& a, const Var& row);      // broadcast 1 x n over rows
Var mul_col(const Var& a, const Var& col);      // scale each row i by col(i)
Var leaky_relu(const Var& a, double slope);
Var abs(const Var& a);
Var exp(const Var& a);
Var dropout(const Var& a, double rate, std::mt19937_64& rng);

// -- shape -----------------------------------------------------------------
Var concat_rows(const Var& a, const Var& b);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(const Var& a, Index start, Index n);
Var slice_cols(const Var& a, Index start, Index n);
Var gather_rows(const Var& a, std::span<const int> rows);
Var detach(const Var& a);

// -- reductions and normalisers ---------------------------------------------
Var row_normalize(const Var& a);                 // unit l2 rows; throws on zero rows
Var softmax_rows(const Var& a);
Var log_softmax_rows(const Var& a, double floor = std::log(kLogClamp));
Var rowwise_dot(const Var& a, const Var& b);     // n x 1
Var row_sum(const Var& a);                       // n x 1
Var sum(const Var& a);                           // 1 x 1
Var mean(const Var& a);                          // 1 x 1
Var weighted_sum(const Var& a, const Mat& weights);  // sum(w .* a), 1 x 1
Var add_scalar(const Var& a, double c);

/// Sum over rows of binary cross-entropy on logits r (n x 1) with 0/1
/// labels; sigmoid outputs are clamped to [1e-12, 1 - 1e-12].
Var bce_with_logits(const Var& logits, std::span<const double> labels);

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(double s, const Var& a);

}  // namespace disco::ag
