// autograd.cc

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

#include "orpit/autograd.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "orpit/common.h"

namespace orpit {
namespace ag {

namespace {

thread_local bool g_grad_enabled = true;

using NodePtr = std::shared_ptr<Node>;

bool AnyRequiresGrad(std::initializer_list<const Var*> vars) {
  if (!g_grad_enabled) return false;
  for (const Var* v : vars) {
    if (v->requires_grad()) return true;
  }
  return false;
}

// Builds the output node. When no input needs a gradient the closure is
// dropped and the result is a constant leaf.
Var MakeResult(Matrix value, std::initializer_list<const Var*> inputs,
               std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (AnyRequiresGrad(inputs)) {
    node->requires_grad = true;
    node->is_leaf = false;
    for (const Var* v : inputs) node->parents.push_back(v->node());
    node->backward = std::move(backward);
  }
  return Var(node);
}

Var MakeResultN(Matrix value, const std::vector<Var>& inputs, std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  bool needs = false;
  if (g_grad_enabled) {
    for (const Var& v : inputs) needs = needs || v.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    node->is_leaf = false;
    for (const Var& v : inputs) node->parents.push_back(v.node());
    node->backward = std::move(backward);
  }
  return Var(node);
}

void CheckSameShape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << op << ": shape mismatch " << a.rows() << "x" << a.cols() << " vs " << b.rows() << "x"
       << b.cols();
    throw InvalidArgument(os.str());
  }
}

double LogAdd(double a, double b) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

}  // namespace

void Node::AccumulateGrad(const Matrix& g) {
  if (grad.size() == 0) {
    grad = g;
  } else {
    grad += g;
  }
}

Var::Var(Matrix value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Matrix Var::grad() const {
  if (node_->grad.size() == 0) return Matrix::Zero(rows(), cols());
  return node_->grad;
}

double Var::scalar() const {
  if (rows() != 1 || cols() != 1) throw InvalidArgument("scalar(): value is not 1x1");
  return node_->value(0, 0);
}

void Var::Backward() const {
  if (rows() != 1 || cols() != 1) throw InvalidArgument("Backward(): root must be 1x1");
  if (!node_->requires_grad) return;
  // Iterative post-order DFS.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, i] = stack.back();
    if (i < n->parents.size()) {
      Node* p = n->parents[i++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  for (Node* n : order) {
    if (!n->is_leaf) n->grad.resize(0, 0);
  }
  node_->AccumulateGrad(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->is_leaf || n->grad.size() == 0 || !n->backward) continue;
    n->backward(*n);
  }
}

void Var::ZeroGrad() {
  if (node_) node_->grad.resize(0, 0);
}

Var Var::Detach() const { return Var(node_->value, false); }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool GradEnabled() { return g_grad_enabled; }

Var Constant(Matrix value) { return Var(std::move(value), false); }
Var Constant(double value) { return Var(Matrix::Constant(1, 1, value), false); }

Var ColumnFromVector(const std::vector<double>& v) {
  Matrix m(static_cast<Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Index>(i), 0) = v[i];
  return Constant(std::move(m));
}

std::vector<double> VectorFromColumn(const Var& v) {
  const Matrix& m = v.value();
  return std::vector<double>(m.data(), m.data() + m.size());
}

Var MatMul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    std::ostringstream os;
    os << "MatMul: inner dimension mismatch " << a.rows() << "x" << a.cols() << " * " << b.rows()
       << "x" << b.cols();
    throw InvalidArgument(os.str());
  }
  Matrix out = a.value() * b.value();
  Node* na = a.node().get();
  Node* nb = b.node().get();
  return MakeResult(std::move(out), {&a, &b}, [na, nb](Node& self) {
    if (na->requires_grad) na->AccumulateGradExpr(self.grad * nb->value.transpose());
    if (nb->requires_grad) nb->AccumulateGradExpr(na->value.transpose() * self.grad);
  });
}

Var Transpose(const Var& a) {
  Node* na = a.node().get();
  return MakeResult(a.value().transpose(), {&a}, [na](Node& self) {
    na->AccumulateGradExpr(self.grad.transpose());
  });
}

Var Add(const Var& a, const Var& b) {
  CheckSameShape(a, b, "Add");
  Node* na = a.node().get();
  Node* nb = b.node().get();
  return MakeResult(a.value() + b.value(), {&a, &b}, [na, nb](Node& self) {
    if (na->requires_grad) na->AccumulateGrad(self.grad);
    if (nb->requires_grad) nb->AccumulateGrad(self.grad);
  });
}

Var Sub(const Var& a, const Var& b) {
  CheckSameShape(a, b, "Sub");
  Node* na = a.node().get();
  Node* nb = b.node().get();
  return MakeResult(a.value() - b.value(), {&a, &b}, [na, nb](Node& self) {
    if (na->requires_grad) na->AccumulateGrad(self.grad);
    if (nb->requires_grad) nb->AccumulateGradExpr(-self.grad);
  });
}

Var Mul(const Var& a, const Var& b) {
  CheckSameShape(a, b, "Mul");
  Node* na = a.node().get();
  Node* nb = b.node().get();
  return MakeResult(a.value().cwiseProduct(b.value()), {&a, &b}, [na, nb](Node& self) {
    if (na->requires_grad) na->AccumulateGradExpr(self.grad.cwiseProduct(nb->value));
    if (nb->requires_grad) nb->AccumulateGradExpr(self.grad.cwiseProduct(na->value));
  });
}

Var Scale(const Var& a, double c) {
  Node* na = a.node().get();
  return MakeResult(a.value() * c, {&a}, [na, c](Node& self) {
    na->AccumulateGradExpr(self.grad * c);
  });
}

Var AddScalar(const Var& a, double c) {
  Node* na = a.node().get();
  return MakeResult((a.value().array() + c).matrix(), {&a},
                    [na](Node& self) { na->AccumulateGrad(self.grad); });
}

Var AddRow(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw InvalidArgument("AddRow: bad row shape");
  Node* na = a.node().get();
  Node* nr = row.node().get();
  Matrix out = a.value().rowwise() + row.value().row(0);
  return MakeResult(std::move(out), {&a, &row}, [na, nr](Node& self) {
    if (na->requires_grad) na->AccumulateGrad(self.grad);
    if (nr->requires_grad) nr->AccumulateGradExpr(self.grad.colwise().sum());
  });
}

Var AddColumn(const Var& a, const Var& column) {
  if (column.cols() != 1 || column.rows() != a.rows()) {
    throw InvalidArgument("AddColumn: bad column shape");
  }
  Node* na = a.node().get();
  Node* nc = column.node().get();
  Matrix out = a.value().colwise() + column.value().col(0);
  return MakeResult(std::move(out), {&a, &column}, [na, nc](Node& self) {
    if (na->requires_grad) na->AccumulateGrad(self.grad);
    if (nc->requires_grad) nc->AccumulateGradExpr(self.grad.rowwise().sum());
  });
}

Var Sigmoid(const Var& a) {
  Matrix out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  Node* na = a.node().get();
  return MakeResult(std::move(out), {&a}, [na](Node& self) {
    const auto y = self.value.array();
    na->AccumulateGradExpr((self.grad.array() * y * (1.0 - y)).matrix());
  });
}

Var Tanh(const Var& a) {
  Matrix out = a.value().array().tanh().matrix();
  Node* na = a.node().get();
  return MakeResult(std::move(out), {&a}, [na](Node& self) {
    const auto y = self.value.array();
    na->AccumulateGradExpr((self.grad.array() * (1.0 - y * y)).matrix());
  });
}

Var Relu(const Var& a) {
  Matrix out = a.value().cwiseMax(0.0);
  Node* na = a.node().get();
  return MakeResult(std::move(out), {&a}, [na](Node& self) {
    na->AccumulateGradExpr(
        (self.grad.array() * (na->value.array() > 0.0).cast<double>()).matrix());
  });
}

Var PRelu(const Var& a, const Var& alpha) {
  if (alpha.rows() != 1 || alpha.cols() != 1) throw InvalidArgument("PRelu: alpha must be 1x1");
  const double s = alpha.value()(0, 0);
  Matrix out = a.value().unaryExpr([s](double x) { return x > 0.0 ? x : s * x; });
  Node* na = a.node().get();
  Node* nal = alpha.node().get();
  return MakeResult(std::move(out), {&a, &alpha}, [na, nal, s](Node& self) {
    const auto pos = (na->value.array() > 0.0).cast<double>();
    if (na->requires_grad) {
      na->AccumulateGradExpr((self.grad.array() * (pos + s * (1.0 - pos))).matrix());
    }
    if (nal->requires_grad) {
      const double g = (self.grad.array() * na->value.array() * (1.0 - pos)).sum();
      nal->AccumulateGrad(Matrix::Constant(1, 1, g));
    }
  });
}

Var Log(const Var& a) {
  Node* na = a.node().get();
  return MakeResult(a.value().array().log().matrix(), {&a}, [na](Node& self) {
    na->AccumulateGradExpr((self.grad.array() / na->value.array()).matrix());
  });
}

Var Square(const Var& a) {
  Node* na = a.node().get();
  return MakeResult(a.value().array().square().matrix(), {&a}, [na](Node& self) {
    na->AccumulateGradExpr((2.0 * self.grad.array() * na->value.array()).matrix());
  });
}

Var ClampMin(const Var& a, double floor) {
  Node* na = a.node().get();
  return MakeResult(a.value().cwiseMax(floor), {&a}, [na, floor](Node& self) {
    na->AccumulateGradExpr(
        (self.grad.array() * (na->value.array() > floor).cast<double>()).matrix());
  });
}

Var SumAll(const Var& a) {
  Node* na = a.node().get();
  return MakeResult(Matrix::Constant(1, 1, a.value().sum()), {&a}, [na](Node& self) {
    na->AccumulateGrad(Matrix::Constant(na->value.rows(), na->value.cols(), self.grad(0, 0)));
  });
}

Var MeanAll(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  Node* na = a.node().get();
  return MakeResult(Matrix::Constant(1, 1, a.value().sum() / n), {&a}, [na, n](Node& self) {
    na->AccumulateGrad(Matrix::Constant(na->value.rows(), na->value.cols(), self.grad(0, 0) / n));
  });
}

Var SumSquares(const Var& a) {
  Node* na = a.node().get();
  return MakeResult(Matrix::Constant(1, 1, a.value().squaredNorm()), {&a}, [na](Node& self) {
    na->AccumulateGradExpr(2.0 * self.grad(0, 0) * na->value);
  });
}

Var MeanRows(const Var& a) {
  if (a.rows() == 0) throw InvalidArgument("MeanRows: empty input");
  const double n = static_cast<double>(a.rows());
  Node* na = a.node().get();
  Matrix out = a.value().colwise().sum() / n;
  return MakeResult(std::move(out), {&a}, [na, n](Node& self) {
    Matrix g = self.grad.replicate(na->value.rows(), 1) / n;
    na->AccumulateGrad(g);
  });
}

Var SumRows(const Var& a) {
  Node* na = a.node().get();
  Matrix out = a.value().colwise().sum();
  return MakeResult(std::move(out), {&a}, [na](Node& self) {
    na->AccumulateGradExpr(self.grad.replicate(na->value.rows(), 1));
  });
}

Var LogSoftmaxRows(const Var& a) {
  Matrix out = a.value();
  for (Index r = 0; r < out.rows(); ++r) {
    const double mx = out.row(r).maxCoeff();
    const double lse = mx + std::log((out.row(r).array() - mx).exp().sum());
    out.row(r).array() -= lse;
  }
  Node* na = a.node().get();
  return MakeResult(std::move(out), {&a}, [na](Node& self) {
    Matrix g = self.grad;
    for (Index r = 0; r < g.rows(); ++r) {
      const double total = self.grad.row(r).sum();
      g.row(r) -= (self.value.row(r).array().exp() * total).matrix();
    }
    na->AccumulateGrad(g);
  });
}

Var SoftmaxRows(const Var& a) {
  Matrix out = a.value();
  for (Index r = 0; r < out.rows(); ++r) {
    const double mx = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - mx).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  Node* na = a.node().get();
  return MakeResult(std::move(out), {&a}, [na](Node& self) {
    Matrix g(self.grad.rows(), self.grad.cols());
    for (Index r = 0; r < g.rows(); ++r) {
      const double dot = self.grad.row(r).dot(self.value.row(r));
      g.row(r) = (self.value.row(r).array() * (self.grad.row(r).array() - dot)).matrix();
    }
    na->AccumulateGrad(g);
  });
}

Var SliceRows(const Var& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) throw InvalidArgument("SliceRows: range");
  Node* na = a.node().get();
  return MakeResult(a.value().middleRows(start, count), {&a}, [na, start, count](Node& self) {
    if (na->grad.size() == 0) na->grad = Matrix::Zero(na->value.rows(), na->value.cols());
    na->grad.middleRows(start, count) += self.grad;
  });
}

Var SliceCols(const Var& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw InvalidArgument("SliceCols: range");
  Node* na = a.node().get();
  return MakeResult(a.value().middleCols(start, count), {&a}, [na, start, count](Node& self) {
    if (na->grad.size() == 0) na->grad = Matrix::Zero(na->value.rows(), na->value.cols());
    na->grad.middleCols(start, count) += self.grad;
  });
}

Var ConcatCols(const std::vector<Var>& parts) {
  if (parts.empty()) throw InvalidArgument("ConcatCols: no inputs");
  const Index rows = parts[0].rows();
  Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw InvalidArgument("ConcatCols: row mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<Node*> nodes;
  Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
    nodes.push_back(p.node().get());
  }
  return MakeResultN(std::move(out), parts, [nodes](Node& self) {
    Index c = 0;
    for (Node* n : nodes) {
      const Index w = n->value.cols();
      if (n->requires_grad) n->AccumulateGrad(self.grad.middleCols(c, w));
      c += w;
    }
  });
}

Var ConcatRows(const std::vector<Var>& parts) {
  if (parts.empty()) throw InvalidArgument("ConcatRows: no inputs");
  const Index cols = parts[0].cols();
  Index rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw InvalidArgument("ConcatRows: col mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<Node*> nodes;
  Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
    nodes.push_back(p.node().get());
  }
  return MakeResultN(std::move(out), parts, [nodes](Node& self) {
    Index r = 0;
    for (Node* n : nodes) {
      const Index h = n->value.rows();
      if (n->requires_grad) n->AccumulateGrad(self.grad.middleRows(r, h));
      r += h;
    }
  });
}

Var Element(const Var& a, Index r, Index c) {
  if (r < 0 || r >= a.rows() || c < 0 || c >= a.cols()) throw InvalidArgument("Element: range");
  Node* na = a.node().get();
  return MakeResult(Matrix::Constant(1, 1, a.value()(r, c)), {&a}, [na, r, c](Node& self) {
    if (na->grad.size() == 0) na->grad = Matrix::Zero(na->value.rows(), na->value.cols());
    na->grad(r, c) += self.grad(0, 0);
  });
}

RowMap RowMap::Gather(Index in_rows, const std::vector<Index>& src) {
  RowMap m;
  m.in_rows = in_rows;
  m.out_rows = static_cast<Index>(src.size());
  m.terms.resize(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i] >= 0) m.terms[i].emplace_back(src[i], 1.0);
  }
  return m;
}

Var ApplyRowMap(const Var& a, std::shared_ptr<const RowMap> map) {
  if (a.rows() != map->in_rows) throw InvalidArgument("ApplyRowMap: input row count mismatch");
  Matrix out = Matrix::Zero(map->out_rows, a.cols());
  for (Index i = 0; i < map->out_rows; ++i) {
    for (const auto& [j, w] : map->terms[static_cast<std::size_t>(i)]) {
      out.row(i) += w * a.value().row(j);
    }
  }
  Node* na = a.node().get();
  return MakeResult(std::move(out), {&a}, [na, map](Node& self) {
    if (na->grad.size() == 0) na->grad = Matrix::Zero(na->value.rows(), na->value.cols());
    for (Index i = 0; i < map->out_rows; ++i) {
      for (const auto& [j, w] : map->terms[static_cast<std::size_t>(i)]) {
        na->grad.row(j) += w * self.grad.row(i);
      }
    }
  });
}

Var FrameSignal(const Var& x, Index window, Index stride) {
  if (x.cols() != 1) throw InvalidArgument("FrameSignal: expected a column signal");
  if (window < 1 || stride < 1) throw InvalidArgument("FrameSignal: bad geometry");
  const Index length = x.rows();
  if (length < window) throw InvalidArgument("FrameSignal: signal shorter than one window");
  const Index frames = (length - window) / stride + 1;
  Matrix out(frames, window);
  for (Index f = 0; f < frames; ++f) {
    out.row(f) = x.value().col(0).segment(f * stride, window).transpose();
  }
  Node* nx = x.node().get();
  return MakeResult(std::move(out), {&x}, [nx, frames, window, stride](Node& self) {
    if (nx->grad.size() == 0) nx->grad = Matrix::Zero(nx->value.rows(), 1);
    for (Index f = 0; f < frames; ++f) {
      nx->grad.col(0).segment(f * stride, window) += self.grad.row(f).transpose();
    }
  });
}

Var OverlapAdd(const Var& frames, Index stride, Index length) {
  const Index count = frames.rows();
  const Index window = frames.cols();
  Matrix out = Matrix::Zero(length, 1);
  for (Index f = 0; f < count; ++f) {
    for (Index w = 0; w < window; ++w) {
      const Index t = f * stride + w;
      if (t < length) out(t, 0) += frames.value()(f, w);
    }
  }
  Node* nf = frames.node().get();
  return MakeResult(std::move(out), {&frames}, [nf, count, window, stride, length](Node& self) {
    Matrix g = Matrix::Zero(count, window);
    for (Index f = 0; f < count; ++f) {
      for (Index w = 0; w < window; ++w) {
        const Index t = f * stride + w;
        if (t < length) g(f, w) = self.grad(t, 0);
      }
    }
    nf->AccumulateGrad(g);
  });
}

Var LayerNormRows(const Var& a, const Var& gain, const Var& bias, double eps) {
  const Index n = a.rows();
  const Index m = a.cols();
  if (gain.rows() != 1 || gain.cols() != m || bias.rows() != 1 || bias.cols() != m) {
    throw InvalidArgument("LayerNormRows: gain/bias shape");
  }
  Matrix xhat(n, m);
  Eigen::VectorXd inv_std(n);
  for (Index r = 0; r < n; ++r) {
    const double mu = a.value().row(r).mean();
    const double var = (a.value().row(r).array() - mu).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (a.value().row(r).array() - mu).matrix() * inv_std(r);
  }
  Matrix out = (xhat.array().rowwise() * gain.value().row(0).array()).matrix();
  out.rowwise() += bias.value().row(0);
  Node* na = a.node().get();
  Node* ng = gain.node().get();
  Node* nb = bias.node().get();
  return MakeResult(std::move(out), {&a, &gain, &bias},
                    [na, ng, nb, xhat = std::move(xhat), inv_std, m](Node& self) {
                      if (ng->requires_grad) {
                        ng->AccumulateGradExpr(
                            (self.grad.array() * xhat.array()).colwise().sum().matrix());
                      }
                      if (nb->requires_grad) nb->AccumulateGradExpr(self.grad.colwise().sum());
                      if (na->requires_grad) {
                        Matrix dxhat =
                            (self.grad.array().rowwise() * ng->value.row(0).array()).matrix();
                        Matrix dx(dxhat.rows(), m);
                        for (Index r = 0; r < dxhat.rows(); ++r) {
                          const double mean_d = dxhat.row(r).mean();
                          const double mean_dx = dxhat.row(r).dot(xhat.row(r)) / m;
                          dx.row(r) = ((dxhat.row(r).array() - mean_d) -
                                       xhat.row(r).array() * mean_dx)
                                          .matrix() *
                                      inv_std(r);
                        }
                        na->AccumulateGrad(dx);
                      }
                    });
}

Var Lstm(const Var& x, const Var& w_input, const Var& w_hidden, const Var& bias, Index steps,
         Index batch, bool reverse) {
  const Index hidden = w_hidden.rows();
  if (x.rows() != steps * batch) throw InvalidArgument("Lstm: rows != steps * batch");
  if (w_input.rows() != x.cols() || w_input.cols() != 4 * hidden ||
      w_hidden.cols() != 4 * hidden || bias.rows() != 1 || bias.cols() != 4 * hidden) {
    throw InvalidArgument("Lstm: weight shapes");
  }
  Matrix pre = x.value() * w_input.value();
  pre.rowwise() += bias.value().row(0);

  // Saved activations, all in (steps*batch) x H layout.
  auto gi = std::make_shared<Matrix>(steps * batch, hidden);
  auto gf = std::make_shared<Matrix>(steps * batch, hidden);
  auto gg = std::make_shared<Matrix>(steps * batch, hidden);
  auto go = std::make_shared<Matrix>(steps * batch, hidden);
  auto cell = std::make_shared<Matrix>(steps * batch, hidden);
  auto tanh_cell = std::make_shared<Matrix>(steps * batch, hidden);
  Matrix out(steps * batch, hidden);

  Matrix h_prev = Matrix::Zero(batch, hidden);
  Matrix c_prev = Matrix::Zero(batch, hidden);
  for (Index k = 0; k < steps; ++k) {
    const Index t = reverse ? steps - 1 - k : k;
    const Index r0 = t * batch;
    Matrix a = pre.middleRows(r0, batch);
    a.noalias() += h_prev * w_hidden.value();
    auto sig = [](const auto& z) -> Matrix { return (1.0 / (1.0 + (-z.array()).exp())).matrix(); };
    gi->middleRows(r0, batch) = sig(a.leftCols(hidden));
    gf->middleRows(r0, batch) = sig(a.middleCols(hidden, hidden));
    gg->middleRows(r0, batch) = a.middleCols(2 * hidden, hidden).array().tanh().matrix();
    go->middleRows(r0, batch) = sig(a.rightCols(hidden));
    Matrix c = gf->middleRows(r0, batch).cwiseProduct(c_prev) +
               gi->middleRows(r0, batch).cwiseProduct(gg->middleRows(r0, batch));
    cell->middleRows(r0, batch) = c;
    tanh_cell->middleRows(r0, batch) = c.array().tanh().matrix();
    out.middleRows(r0, batch) =
        go->middleRows(r0, batch).cwiseProduct(tanh_cell->middleRows(r0, batch));
    h_prev = out.middleRows(r0, batch);
    c_prev = std::move(c);
  }

  Node* nx = x.node().get();
  Node* nwi = w_input.node().get();
  Node* nwh = w_hidden.node().get();
  Node* nb = bias.node().get();
  return MakeResult(
      std::move(out), {&x, &w_input, &w_hidden, &bias},
      [=](Node& self) {
        const Matrix& h_all = self.value;
        Matrix d_pre(steps * batch, 4 * hidden);
        Matrix dh_next = Matrix::Zero(batch, hidden);
        Matrix dc_next = Matrix::Zero(batch, hidden);
        Matrix d_wh = Matrix::Zero(hidden, 4 * hidden);
        for (Index k = steps - 1; k >= 0; --k) {
          const Index t = reverse ? steps - 1 - k : k;
          const Index r0 = t * batch;
          const bool has_prev = k > 0;
          const Index tp = reverse ? t + 1 : t - 1;
          Matrix dh = self.grad.middleRows(r0, batch) + dh_next;
          const auto i = gi->middleRows(r0, batch).array();
          const auto f = gf->middleRows(r0, batch).array();
          const auto g = gg->middleRows(r0, batch).array();
          const auto o = go->middleRows(r0, batch).array();
          const auto tc = tanh_cell->middleRows(r0, batch).array();
          Eigen::ArrayXXd dc = dc_next.array() + dh.array() * o * (1.0 - tc * tc);
          Eigen::ArrayXXd c_prev_arr = has_prev
                                           ? Eigen::ArrayXXd(cell->middleRows(tp * batch, batch).array())
                                           : Eigen::ArrayXXd::Zero(batch, hidden);
          d_pre.block(r0, 0, batch, hidden) = (dc * g * i * (1.0 - i)).matrix();
          d_pre.block(r0, hidden, batch, hidden) = (dc * c_prev_arr * f * (1.0 - f)).matrix();
          d_pre.block(r0, 2 * hidden, batch, hidden) = (dc * i * (1.0 - g * g)).matrix();
          d_pre.block(r0, 3 * hidden, batch, hidden) = (dh.array() * tc * o * (1.0 - o)).matrix();
          const auto da = d_pre.middleRows(r0, batch);
          if (has_prev) {
            d_wh.noalias() += h_all.middleRows(tp * batch, batch).transpose() * da;
            dh_next.noalias() = da * nwh->value.transpose();
          } else {
            dh_next.setZero();
          }
          dc_next = (dc * f).matrix();
        }
        if (nwh->requires_grad) nwh->AccumulateGrad(d_wh);
        if (nb->requires_grad) nb->AccumulateGradExpr(d_pre.colwise().sum());
        if (nwi->requires_grad) nwi->AccumulateGradExpr(nx->value.transpose() * d_pre);
        if (nx->requires_grad) nx->AccumulateGradExpr(d_pre * nwi->value.transpose());
      });
}

Index CtcMinFrames(const std::vector<int>& labels) {
  Index n = static_cast<Index>(labels.size());
  for (std::size_t i = 1; i < labels.size(); ++i) {
    if (labels[i] == labels[i - 1]) ++n;
  }
  return n;
}

namespace {

struct CtcLattice {
  Matrix log_alpha;  // T x S, includes emission at t
  Matrix log_beta;   // T x S, excludes emission at t
  double log_likelihood = 0.0;
  std::vector<int> extended;
};

CtcLattice RunCtcLattice(const Matrix& logp, const std::vector<int>& labels, int blank) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const Index frames = logp.rows();
  if (frames < 1) throw InvalidArgument("CTC: no frames");
  if (labels.empty()) throw InvalidArgument("CTC: empty label sequence");
  for (int l : labels) {
    if (l < 0 || l >= logp.cols() || l == blank) throw InvalidArgument("CTC: label out of range");
  }
  if (frames < CtcMinFrames(labels)) {
    std::ostringstream os;
    os << "CTC: " << labels.size() << " labels need at least " << CtcMinFrames(labels)
       << " frames, got " << frames;
    throw InvalidArgument(os.str());
  }
  CtcLattice lat;
  lat.extended.push_back(blank);
  for (int l : labels) {
    lat.extended.push_back(l);
    lat.extended.push_back(blank);
  }
  const Index states = static_cast<Index>(lat.extended.size());
  const auto& ext = lat.extended;
  auto can_skip = [&](Index s) { return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]; };

  lat.log_alpha = Matrix::Constant(frames, states, kNegInf);
  lat.log_alpha(0, 0) = logp(0, ext[0]);
  if (states > 1) lat.log_alpha(0, 1) = logp(0, ext[1]);
  for (Index t = 1; t < frames; ++t) {
    for (Index s = 0; s < states; ++s) {
      double acc = lat.log_alpha(t - 1, s);
      if (s >= 1) acc = LogAdd(acc, lat.log_alpha(t - 1, s - 1));
      if (can_skip(s)) acc = LogAdd(acc, lat.log_alpha(t - 1, s - 2));
      lat.log_alpha(t, s) = acc == kNegInf ? kNegInf : acc + logp(t, ext[s]);
    }
  }
  lat.log_likelihood = LogAdd(lat.log_alpha(frames - 1, states - 1),
                              states > 1 ? lat.log_alpha(frames - 1, states - 2) : kNegInf);

  lat.log_beta = Matrix::Constant(frames, states, kNegInf);
  lat.log_beta(frames - 1, states - 1) = 0.0;
  if (states > 1) lat.log_beta(frames - 1, states - 2) = 0.0;
  for (Index t = frames - 2; t >= 0; --t) {
    for (Index s = 0; s < states; ++s) {
      double acc = lat.log_beta(t + 1, s) + logp(t + 1, ext[s]);
      if (s + 1 < states) acc = LogAdd(acc, lat.log_beta(t + 1, s + 1) + logp(t + 1, ext[s + 1]));
      if (s + 2 < states && can_skip(s + 2)) {
        acc = LogAdd(acc, lat.log_beta(t + 1, s + 2) + logp(t + 1, ext[s + 2]));
      }
      lat.log_beta(t, s) = acc;
    }
  }
  return lat;
}

}  // namespace

double CtcNegLogLikelihood(const Matrix& log_probs, const std::vector<int>& labels, int blank) {
  return -RunCtcLattice(log_probs, labels, blank).log_likelihood;
}

Var CtcLoss(const Var& log_probs, const std::vector<int>& labels, int blank) {
  auto lat = std::make_shared<CtcLattice>(RunCtcLattice(log_probs.value(), labels, blank));
  if (!std::isfinite(lat->log_likelihood)) throw Error("CTC: zero-probability label sequence");
  Node* nl = log_probs.node().get();
  return MakeResult(Matrix::Constant(1, 1, -lat->log_likelihood), {&log_probs},
                    [nl, lat](Node& self) {
                      const Index frames = lat->log_alpha.rows();
                      const Index states = lat->log_alpha.cols();
                      Matrix g = Matrix::Zero(nl->value.rows(), nl->value.cols());
                      for (Index t = 0; t < frames; ++t) {
                        for (Index s = 0; s < states; ++s) {
                          const double occ = lat->log_alpha(t, s) + lat->log_beta(t, s) -
                                             lat->log_likelihood;
                          if (std::isfinite(occ)) g(t, lat->extended[s]) -= std::exp(occ);
                        }
                      }
                      nl->AccumulateGradExpr(self.grad(0, 0) * g);
                    });
}

Var& ParameterStore::Create(const std::string& name, Matrix init) {
  if (index_.count(name)) throw InvalidArgument("duplicate parameter " + name);
  index_[name] = items_.size();
  items_.emplace_back(name, Var(std::move(init), true));
  return items_.back().second;
}

const Var& ParameterStore::Get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw InvalidArgument("unknown parameter " + name);
  return items_[it->second].second;
}

Var& ParameterStore::Get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw InvalidArgument("unknown parameter " + name);
  return items_[it->second].second;
}

bool ParameterStore::Contains(const std::string& name) const { return index_.count(name) > 0; }

std::vector<Var> ParameterStore::vars() const {
  std::vector<Var> out;
  for (const auto& [name, v] : items_) out.push_back(v);
  return out;
}

std::size_t ParameterStore::NumScalars() const {
  std::size_t n = 0;
  for (const auto& [name, v] : items_) n += static_cast<std::size_t>(v.value().size());
  return n;
}

void ParameterStore::ZeroGrad() {
  for (auto& [name, v] : items_) v.ZeroGrad();
}

Matrix XavierUniform(Index rows, Index cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Adam::Adam(std::vector<Var> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  for (const Var& p : params_) {
    m_.push_back(Matrix::Zero(p.rows(), p.cols()));
    v_.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
}

double Adam::Step() {
  double sq = 0.0;
  for (const Var& p : params_) {
    if (p.has_grad()) sq += p.node()->grad.squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw Error("Adam: non-finite gradient");
  const double clip = (options_.clip_norm > 0.0 && norm > options_.clip_norm)
                          ? options_.clip_norm / norm
                          : 1.0;
  ++step_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Var& p = params_[i];
    if (!p.has_grad()) continue;
    const Matrix g = p.node()->grad * clip;
    m_[i] = options_.beta1 * m_[i] + (1.0 - options_.beta1) * g;
    v_[i] = options_.beta2 * v_[i] + (1.0 - options_.beta2) * g.cwiseAbs2();
    p.mutable_value().array() -= options_.lr * (m_[i].array() / bc1) /
                                 ((v_[i].array() / bc2).sqrt() + options_.eps);
  }
  return norm;
}

void Adam::ZeroGrad() {
  for (Var& p : params_) p.ZeroGrad();
}

}  // namespace ag
}  // namespace orpit
