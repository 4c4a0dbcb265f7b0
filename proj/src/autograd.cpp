#include "disco/autograd.hpp"

#include <algorithm>
#include <cmath>

namespace disco::ag {

const Mat& Var::value() const { return tape_->value(id_); }

double Var::scalar() const {
  const Mat& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw Error("scalar() called on a " + std::to_string(v.rows()) + "x" +
                std::to_string(v.cols()) + " value");
  }
  return v(0, 0);
}

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Mat value) {
  Node n;
  n.own = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::view(const Mat& value) {
  Node n;
  n.ref = &value;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::param(Parameter& p) {
  Node n;
  n.ref = &p.value;
  n.requires_grad = record_;
  n.param = record_ ? &p : nullptr;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Mat& Tape::grad(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.has_grad) {
    const Mat& v = n.ref ? *n.ref : n.own;
    n.grad = Mat::Zero(v.rows(), v.cols());
    n.has_grad = true;
  }
  return n.grad;
}

Var Tape::push(Mat value, std::initializer_list<Var> parents, Backward fn) {
  return push(std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(fn));
}

Var Tape::push(Mat value, std::span<const Var> parents, Backward fn) {
  Node n;
  n.own = std::move(value);
  if (record_) {
    for (const Var& p : parents) {
      if (p.tape() != this) throw Error("Var used with a different tape");
      n.requires_grad = n.requires_grad || requires_grad(p.id());
    }
    if (n.requires_grad) n.backward = std::move(fn);
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

void Tape::backward(const Var& root) {
  if (!record_) throw Error("backward() on a non-recording tape");
  if (root.rows() != 1 || root.cols() != 1) throw Error("backward() root must be a scalar");
  if (!requires_grad(root.id())) return;
  grad(root.id())(0, 0) += 1.0;
  for (int id = root.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.has_grad || !n.requires_grad) continue;
    if (n.param) {
      n.param->grad += n.grad;
    } else if (n.backward) {
      n.backward(*this, id);
    }
  }
}

namespace {

void check_same_tape(const Var& a, const Var& b) {
  if (a.tape() != b.tape()) throw Error("operands recorded on different tapes");
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                std::to_string(b.cols()));
  }
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

Var matmul(const Var& a, const Var& b) {
  check_same_tape(a, b);
  if (a.cols() != b.rows()) throw Error("matmul: inner dimensions differ");
  Mat out = a.value() * b.value();
  int ia = a.id(), ib = b.id();
  return a.tape()->push(std::move(out), {a, b}, [ia, ib](Tape& t, int self) {
    const Mat& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia).noalias() += g * t.value(ib).transpose();
    if (t.requires_grad(ib)) t.grad(ib).noalias() += t.value(ia).transpose() * g;
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  check_same_tape(a, b);
  if (a.cols() != b.cols()) throw Error("matmul_nt: inner dimensions differ");
  Mat out = a.value() * b.value().transpose();
  int ia = a.id(), ib = b.id();
  return a.tape()->push(std::move(out), {a, b}, [ia, ib](Tape& t, int self) {
    const Mat& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia).noalias() += g * t.value(ib);
    if (t.requires_grad(ib)) t.grad(ib).noalias() += g.transpose() * t.value(ia);
  });
}

Var matmul_tn(const Var& a, const Var& b) {
  check_same_tape(a, b);
  if (a.rows() != b.rows()) throw Error("matmul_tn: inner dimensions differ");
  Mat out = a.value().transpose() * b.value();
  int ia = a.id(), ib = b.id();
  return a.tape()->push(std::move(out), {a, b}, [ia, ib](Tape& t, int self) {
    const Mat& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia).noalias() += t.value(ib) * g.transpose();
    if (t.requires_grad(ib)) t.grad(ib).noalias() += t.value(ia) * g;
  });
}

Var spmm(const SparseOperator& s, const Var& a) {
  if (s.forward.cols() != a.rows()) throw Error("spmm: operator/input shape mismatch");
  Mat out = s.forward * a.value();
  int ia = a.id();
  const SparseOperator* op = &s;
  return a.tape()->push(std::move(out), {a}, [ia, op](Tape& t, int self) {
    t.grad(ia).noalias() += op->transpose * t.grad(self);
  });
}

Var add(const Var& a, const Var& b) {
  check_same_tape(a, b);
  check_same_shape(a, b, "add");
  Mat out = a.value() + b.value();
  int ia = a.id(), ib = b.id();
  return a.tape()->push(std::move(out), {a, b}, [ia, ib](Tape& t, int self) {
    const Mat& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia) += g;
    if (t.requires_grad(ib)) t.grad(ib) += g;
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_tape(a, b);
  check_same_shape(a, b, "sub");
  Mat out = a.value() - b.value();
  int ia = a.id(), ib = b.id();
  return a.tape()->push(std::move(out), {a, b}, [ia, ib](Tape& t, int self) {
    const Mat& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia) += g;
    if (t.requires_grad(ib)) t.grad(ib) -= g;
  });
}

Var mul(const Var& a, const Var& b) {
  check_same_tape(a, b);
  check_same_shape(a, b, "mul");
  Mat out = a.value().cwiseProduct(b.value());
  int ia = a.id(), ib = b.id();
  return a.tape()->push(std::move(out), {a, b}, [ia, ib](Tape& t, int self) {
    const Mat& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia) += g.cwiseProduct(t.value(ib));
    if (t.requires_grad(ib)) t.grad(ib) += g.cwiseProduct(t.value(ia));
  });
}

Var scale(const Var& a, double s) {
  Mat out = s * a.value();
  int ia = a.id();
  return a.tape()->push(std::move(out), {a}, [ia, s](Tape& t, int self) {
    t.grad(ia) += s * t.grad(self);
  });
}

Var add_scalar(const Var& a, double c) {
  Mat out = a.value().array() + c;
  int ia = a.id();
  return a.tape()->push(std::move(out), {a}, [ia](Tape& t, int self) { t.grad(ia) += t.grad(self); });
}

Var add_row(const Var& a, const Var& row) {
  check_same_tape(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) throw Error("add_row: expected 1 x cols row");
  Mat out = a.value().rowwise() + row.value().row(0);
  int ia = a.id(), ir = row.id();
  return a.tape()->push(std::move(out), {a, row}, [ia, ir](Tape& t, int self) {
    const Mat& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia) += g;
    if (t.requires_grad(ir)) t.grad(ir) += g.colwise().sum();
  });
}

Var mul_col(const Var& a, const Var& col) {
  check_same_tape(a, col);
  if (col.cols() != 1 || col.rows() != a.rows()) throw Error("mul_col: expected rows x 1 column");
  Mat out = col.value().col(0).asDiagonal() * a.value();
  int ia = a.id(), ic = col.id();
  return a.tape()->push(std::move(out), {a, col}, [ia, ic](Tape& t, int self) {
    const Mat& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia) += t.value(ic).col(0).asDiagonal() * g;
    if (t.requires_grad(ic)) t.grad(ic) += g.cwiseProduct(t.value(ia)).rowwise().sum();
  });
}

Var leaky_relu(const Var& a, double slope) {
  Mat out = a.value().unaryExpr([slope](double x) { return x > 0.0 ? x : slope * x; });
  int ia = a.id();
  return a.tape()->push(std::move(out), {a}, [ia, slope](Tape& t, int self) {
    const Mat& x = t.value(ia);
    t.grad(ia) += t.grad(self).binaryExpr(x, [slope](double g, double v) { return v > 0.0 ? g : slope * g; });
  });
}

Var abs(const Var& a) {
  Mat out = a.value().cwiseAbs();
  int ia = a.id();
  return a.tape()->push(std::move(out), {a}, [ia](Tape& t, int self) {
    const Mat& x = t.value(ia);
    t.grad(ia) += t.grad(self).binaryExpr(x, [](double g, double v) {
      return v > 0.0 ? g : (v < 0.0 ? -g : 0.0);
    });
  });
}

Var exp(const Var& a) {
  Mat out = a.value().array().exp();
  int ia = a.id();
  return a.tape()->push(std::move(out), {a}, [ia](Tape& t, int self) {
    t.grad(ia) += t.grad(self).cwiseProduct(t.value(self));
  });
}

Var dropout(const Var& a, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) throw Error("dropout rate must be < 1");
  std::bernoulli_distribution keep(1.0 - rate);
  Mat mask(a.rows(), a.cols());
  const double s = 1.0 / (1.0 - rate);
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? s : 0.0;
  Var m = a.tape()->constant(std::move(mask));
  return mul(a, m);
}

Var concat_rows(const Var& a, const Var& b) {
  check_same_tape(a, b);
  if (a.cols() != b.cols()) throw Error("concat_rows: column counts differ");
  Mat out(a.rows() + b.rows(), a.cols());
  out.topRows(a.rows()) = a.value();
  out.bottomRows(b.rows()) = b.value();
  int ia = a.id(), ib = b.id();
  Index na = a.rows(), nb = b.rows();
  return a.tape()->push(std::move(out), {a, b}, [ia, ib, na, nb](Tape& t, int self) {
    const Mat& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia) += g.topRows(na);
    if (t.requires_grad(ib)) t.grad(ib) += g.bottomRows(nb);
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw Error("concat_cols: no inputs");
  Tape* tape = parts[0].tape();
  Index rows = parts[0].rows(), cols = 0;
  for (const Var& p : parts) {
    if (p.tape() != tape) throw Error("concat_cols: operands on different tapes");
    if (p.rows() != rows) throw Error("concat_cols: row counts differ");
    cols += p.cols();
  }
  Mat out(rows, cols);
  std::vector<std::pair<int, Index>> layout;
  Index off = 0;
  for (const Var& p : parts) {
    out.middleCols(off, p.cols()) = p.value();
    layout.emplace_back(p.id(), off);
    off += p.cols();
  }
  return tape->push(std::move(out), parts, [layout](Tape& t, int self) {
    const Mat& g = t.grad(self);
    for (auto [id, o] : layout) {
      if (t.requires_grad(id)) t.grad(id) += g.middleCols(o, t.value(id).cols());
    }
  });
}

Var slice_rows(const Var& a, Index start, Index n) {
  if (start < 0 || n < 0 || start + n > a.rows()) throw Error("slice_rows: out of range");
  Mat out = a.value().middleRows(start, n);
  int ia = a.id();
  return a.tape()->push(std::move(out), {a}, [ia, start, n](Tape& t, int self) {
    t.grad(ia).middleRows(start, n) += t.grad(self);
  });
}

Var slice_cols(const Var& a, Index start, Index n) {
  if (start < 0 || n < 0 || start + n > a.cols()) throw Error("slice_cols: out of range");
  Mat out = a.value().middleCols(start, n);
  int ia = a.id();
  return a.tape()->push(std::move(out), {a}, [ia, start, n](Tape& t, int self) {
    t.grad(ia).middleCols(start, n) += t.grad(self);
  });
}

Var gather_rows(const Var& a, std::span<const int> rows) {
  const Mat& v = a.value();
  Mat out(static_cast<Index>(rows.size()), v.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= v.rows()) throw Error("gather_rows: index out of range");
    out.row(static_cast<Index>(i)) = v.row(rows[i]);
  }
  int ia = a.id();
  std::vector<int> idx(rows.begin(), rows.end());
  return a.tape()->push(std::move(out), {a}, [ia, idx = std::move(idx)](Tape& t, int self) {
    const Mat& g = t.grad(self);
    Mat& ga = t.grad(ia);
    for (std::size_t i = 0; i < idx.size(); ++i) ga.row(idx[i]) += g.row(static_cast<Index>(i));
  });
}

Var detach(const Var& a) { return a.tape()->constant(a.value()); }

Var row_normalize(const Var& a) {
  const Mat& v = a.value();
  Vec norms = v.rowwise().norm();
  for (Index i = 0; i < norms.size(); ++i) {
    if (!(norms(i) > 0.0)) throw Error("zero-norm vector at row " + std::to_string(i));
  }
  Mat out = norms.cwiseInverse().asDiagonal() * v;
  int ia = a.id();
  return a.tape()->push(std::move(out), {a}, [ia, norms = std::move(norms)](Tape& t, int self) {
    const Mat& g = t.grad(self);
    const Mat& y = t.value(self);
    Vec proj = g.cwiseProduct(y).rowwise().sum();
    Mat d = g - proj.asDiagonal() * y;
    t.grad(ia) += norms.cwiseInverse().asDiagonal() * d;
  });
}

namespace {

Mat softmax_of(const Mat& x) {
  Mat out(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    out.row(i) = (x.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

}  // namespace

Var softmax_rows(const Var& a) {
  Mat out = softmax_of(a.value());
  int ia = a.id();
  return a.tape()->push(std::move(out), {a}, [ia](Tape& t, int self) {
    const Mat& g = t.grad(self);
    const Mat& s = t.value(self);
    Vec dot = g.cwiseProduct(s).rowwise().sum();
    t.grad(ia) += s.cwiseProduct(g - dot.replicate(1, g.cols()));
  });
}

Var log_softmax_rows(const Var& a, double floor) {
  const Mat& x = a.value();
  Mat ls(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    const double lse = m + std::log((x.row(i).array() - m).exp().sum());
    ls.row(i) = x.row(i).array() - lse;
  }
  Mat out = ls.cwiseMax(floor);
  int ia = a.id();
  return a.tape()->push(std::move(out), {a}, [ia, floor](Tape& t, int self) {
    const Mat& y = t.value(self);
    Mat g = t.grad(self);
    // clamped entries carry no gradient
    for (Index i = 0; i < g.size(); ++i) {
      if (y.data()[i] <= floor) g.data()[i] = 0.0;
    }
    const Mat& x = t.value(ia);
    Mat s = softmax_of(x);
    Vec gs = g.rowwise().sum();
    t.grad(ia) += g - s.cwiseProduct(gs.replicate(1, g.cols()));
  });
}

Var rowwise_dot(const Var& a, const Var& b) {
  check_same_tape(a, b);
  check_same_shape(a, b, "rowwise_dot");
  Mat out = a.value().cwiseProduct(b.value()).rowwise().sum();
  int ia = a.id(), ib = b.id();
  return a.tape()->push(std::move(out), {a, b}, [ia, ib](Tape& t, int self) {
    const Mat& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia) += g.col(0).asDiagonal() * t.value(ib);
    if (t.requires_grad(ib)) t.grad(ib) += g.col(0).asDiagonal() * t.value(ia);
  });
}

Var row_sum(const Var& a) {
  Mat out = a.value().rowwise().sum();
  int ia = a.id();
  return a.tape()->push(std::move(out), {a}, [ia](Tape& t, int self) {
    const Mat& g = t.grad(self);
    t.grad(ia) += g.replicate(1, t.value(ia).cols());
  });
}

Var sum(const Var& a) {
  Mat out(1, 1);
  out(0, 0) = a.value().sum();
  int ia = a.id();
  return a.tape()->push(std::move(out), {a}, [ia](Tape& t, int self) {
    t.grad(ia).array() += t.grad(self)(0, 0);
  });
}

Var mean(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw Error("mean of an empty matrix");
  return scale(sum(a), 1.0 / n);
}

Var weighted_sum(const Var& a, const Mat& weights) {
  if (weights.rows() != a.rows() || weights.cols() != a.cols()) {
    throw Error("weighted_sum: weight shape mismatch");
  }
  Mat out(1, 1);
  out(0, 0) = a.value().cwiseProduct(weights).sum();
  int ia = a.id();
  return a.tape()->push(std::move(out), {a}, [ia, w = weights](Tape& t, int self) {
    t.grad(ia) += t.grad(self)(0, 0) * w;
  });
}

Var bce_with_logits(const Var& logits, std::span<const double> labels) {
  const Mat& r = logits.value();
  if (r.cols() != 1 || static_cast<std::size_t>(r.rows()) != labels.size()) {
    throw Error("bce_with_logits: expected n x 1 logits matching labels");
  }
  const double hi = -std::log(kLogClamp);
  const double lo = -std::log1p(-kLogClamp);
  double total = 0.0;
  Mat dlogit(r.rows(), 1);
  for (Index i = 0; i < r.rows(); ++i) {
    const double y = labels[static_cast<std::size_t>(i)];
    const double x = r(i, 0);
    const double p = 1.0 / (1.0 + std::exp(-x));
    const double raw = y > 0.5 ? softplus(-x) : softplus(x);
    const double l = std::clamp(raw, lo, hi);
    total += l;
    const bool clamped = raw >= hi || raw <= lo;
    dlogit(i, 0) = clamped ? 0.0 : (y > 0.5 ? p - 1.0 : p);
  }
  Mat out(1, 1);
  out(0, 0) = total;
  int ia = logits.id();
  return logits.tape()->push(std::move(out), {logits}, [ia, d = std::move(dlogit)](Tape& t, int self) {
    t.grad(ia) += t.grad(self)(0, 0) * d;
  });
}

Var operator+(const Var& a, const Var& b) { return add(a, b); }
Var operator-(const Var& a, const Var& b) { return sub(a, b); }
Var operator*(double s, const Var& a) { return scale(a, s); }

}  // namespace disco::ag
