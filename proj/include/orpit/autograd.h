// orpit/autograd.h

// Copyright 2026  The orpit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// A small tape-free reverse-mode differentiation engine over dense
// double-precision matrices. Every op records its parents and a closure that
// pushes the output gradient back; Var::Backward() walks the graph in reverse
// topological order. Recurrent layers, layer normalisation and the CTC
// forward-backward are fused ops with hand-written adjoints.

#ifndef ORPIT_AUTOGRAD_H_
#define ORPIT_AUTOGRAD_H_

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace orpit {
namespace ag {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

struct Node {
  Matrix value;
  Matrix grad;  // empty until something is accumulated
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void AccumulateGrad(const Matrix& g);
  template <typename Expr>
  void AccumulateGradExpr(const Expr& g) {
    if (grad.size() == 0) {
      grad = g;
    } else {
      grad += g;
    }
  }
};

class Var {
 public:
  Var() = default;
  explicit Var(Matrix value, bool requires_grad = false);
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  /// Direct access for parameter updates and finite-difference probes.
  Matrix& mutable_value() { return node_->value; }
  /// Accumulated gradient; a zero matrix of matching shape if none arrived.
  Matrix grad() const;
  bool has_grad() const { return node_->grad.size() != 0; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  double scalar() const;

  /// Reverse pass from a 1x1 root. Leaf gradients accumulate across calls.
  void Backward() const;
  void ZeroGrad();
  /// Same value, cut from the graph.
  Var Detach() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Scoped switch that stops graph recording (inference).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};
bool GradEnabled();

Var Constant(Matrix value);
Var Constant(double value);
/// Column vector T x 1 from samples.
Var ColumnFromVector(const std::vector<double>& v);
std::vector<double> VectorFromColumn(const Var& v);

// Elementwise and linear algebra.
Var MatMul(const Var& a, const Var& b);
Var Transpose(const Var& a);
Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);
Var Scale(const Var& a, double c);
Var AddScalar(const Var& a, double c);
/// a (n x m) + row (1 x m) broadcast over rows.
Var AddRow(const Var& a, const Var& row);
/// a (n x m) + column (n x 1) broadcast over columns.
Var AddColumn(const Var& a, const Var& column);
Var Sigmoid(const Var& a);
Var Tanh(const Var& a);
Var Relu(const Var& a);
/// max(x,0) + alpha * min(x,0); alpha is a 1x1 parameter.
Var PRelu(const Var& a, const Var& alpha);
Var Log(const Var& a);
Var Square(const Var& a);
/// max(a, floor) elementwise; zero gradient where clamped.
Var ClampMin(const Var& a, double floor);

// Reductions.
Var SumAll(const Var& a);
Var MeanAll(const Var& a);
Var SumSquares(const Var& a);
/// Mean over rows: n x m -> 1 x m.
Var MeanRows(const Var& a);
/// Sum over rows: n x m -> 1 x m.
Var SumRows(const Var& a);

Var LogSoftmaxRows(const Var& a);
Var SoftmaxRows(const Var& a);

// Shape.
Var SliceRows(const Var& a, Index start, Index count);
Var SliceCols(const Var& a, Index start, Index count);
Var ConcatCols(const std::vector<Var>& parts);
Var ConcatRows(const std::vector<Var>& parts);
/// 1x1 element a(r, c).
Var Element(const Var& a, Index r, Index c);

/// Linear map acting on rows: out.row(i) = sum_j w_ij a.row(src_ij).
struct RowMap {
  Index in_rows = 0;
  Index out_rows = 0;
  std::vector<std::vector<std::pair<Index, double>>> terms;  // per output row

  static RowMap Gather(Index in_rows, const std::vector<Index>& src);  // -1 gives a zero row
};
Var ApplyRowMap(const Var& a, std::shared_ptr<const RowMap> map);

/// T x 1 signal -> F x W frames, F = floor((T - W) / S) + 1.
Var FrameSignal(const Var& x, Index window, Index stride);
/// F x W frames -> length x 1 by overlap-add with the given stride;
/// samples beyond the last frame are zero and frames past `length` are cut.
Var OverlapAdd(const Var& frames, Index stride, Index length);

/// Per-row normalisation with learned gain and bias (each 1 x m).
Var LayerNormRows(const Var& a, const Var& gain, const Var& bias, double eps = 1e-8);

/// Unidirectional LSTM over `steps` time steps of `batch` sequences.
/// x has rows laid out as t * batch + b. Gate order i, f, g, o.
/// Returns (steps*batch) x H hidden states in the same layout.
Var Lstm(const Var& x, const Var& w_input, const Var& w_hidden, const Var& bias, Index steps,
         Index batch, bool reverse);

/// Negative log-likelihood of `labels` under CTC given per-frame log
/// posteriors (T x A). Throws InvalidArgument when T is too short for the
/// label sequence.
Var CtcLoss(const Var& log_probs, const std::vector<int>& labels, int blank);
/// Value-only forward algorithm; returns -log p(labels | log_probs).
double CtcNegLogLikelihood(const Matrix& log_probs, const std::vector<int>& labels, int blank);
/// Minimal frame count needed to emit `labels` (repeats need a blank).
Index CtcMinFrames(const std::vector<int>& labels);

inline Var operator+(const Var& a, const Var& b) { return Add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return Sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return Mul(a, b); }

/// Named trainable tensors of one model.
class ParameterStore {
 public:
  Var& Create(const std::string& name, Matrix init);
  const Var& Get(const std::string& name) const;
  Var& Get(const std::string& name);
  bool Contains(const std::string& name) const;
  const std::vector<std::pair<std::string, Var>>& items() const { return items_; }
  std::vector<Var> vars() const;
  std::size_t NumScalars() const;
  void ZeroGrad();

 private:
  std::vector<std::pair<std::string, Var>> items_;
  std::map<std::string, std::size_t> index_;
};

/// Uniform(-limit, limit) initialiser with limit = sqrt(6 / (fan_in + fan_out)).
Matrix XavierUniform(Index rows, Index cols, std::mt19937_64& rng);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;  // <= 0 disables global-norm clipping
};

class Adam {
 public:
  Adam(std::vector<Var> params, AdamOptions options);
  /// Applies one update from the accumulated gradients. Returns the
  /// pre-clipping global gradient norm.
  double Step();
  void ZeroGrad();
  void set_lr(double lr) { options_.lr = lr; }
  double lr() const { return options_.lr; }

 private:
  std::vector<Var> params_;
  AdamOptions options_;
  std::vector<Matrix> m_, v_;
  long step_ = 0;
};

}  // namespace ag
}  // namespace orpit

#endif  // ORPIT_AUTOGRAD_H_
