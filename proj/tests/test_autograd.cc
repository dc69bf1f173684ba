// test_autograd.cc

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "oracles.h"
#include "orpit/autograd.h"

using namespace orpit;
using ag::Matrix;
using ag::Var;

namespace {

Var Param(ag::Index r, ag::Index c, std::mt19937_64& rng, double scale = 0.5) {
  std::normal_distribution<double> d(0.0, scale);
  Matrix m(r, c);
  for (ag::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return Var(m, true);
}

// Weighted sum so every output entry gets a distinct upstream gradient.
Var Probe(const Var& y) {
  Matrix w(y.rows(), y.cols());
  for (ag::Index i = 0; i < w.size(); ++i) w.data()[i] = std::sin(1.0 + 0.7 * static_cast<double>(i));
  return ag::SumAll(ag::Mul(y, ag::Constant(w)));
}

}  // namespace

TEST_CASE("elementwise and linear ops match finite differences") {
  std::mt19937_64 rng(1);
  Var a = Param(3, 4, rng), b = Param(4, 2, rng), c = Param(3, 4, rng);
  Var row = Param(1, 4, rng), col = Param(3, 1, rng), alpha = Param(1, 1, rng);
  const std::vector<std::pair<const char*, std::function<Var()>>> cases = {
      {"matmul", [&] { return Probe(ag::MatMul(a, b)); }},
      {"transpose", [&] { return Probe(ag::Transpose(a)); }},
      {"add/sub/mul", [&] { return Probe(ag::Mul(ag::Sub(a, c), ag::Add(a, c))); }},
      {"scale", [&] { return Probe(ag::AddScalar(ag::Scale(a, -1.5), 0.3)); }},
      {"broadcast", [&] { return Probe(ag::AddColumn(ag::AddRow(a, row), col)); }},
      {"sigmoid/tanh", [&] { return Probe(ag::Tanh(ag::Sigmoid(a))); }},
      {"prelu", [&] { return Probe(ag::PRelu(a, alpha)); }},
      {"log/square", [&] { return Probe(ag::Log(ag::AddScalar(ag::Square(a), 0.5))); }},
      {"reductions", [&] { return ag::Add(Probe(ag::MeanRows(a)), ag::Add(Probe(ag::SumRows(c)), ag::SumSquares(a))); }},
      {"mean", [&] { return ag::MeanAll(ag::Square(a)); }},
      {"softmax", [&] { return ag::Add(Probe(ag::LogSoftmaxRows(a)), Probe(ag::SoftmaxRows(c))); }},
      {"slices", [&] { return Probe(ag::ConcatCols({ag::SliceCols(a, 1, 2), ag::SliceRows(c, 0, 3)})); }},
      {"concat rows", [&] { return ag::Add(Probe(ag::ConcatRows({ag::SliceRows(a, 1, 2), c})), ag::Element(a, 2, 3)); }},
  };
  for (const auto& [name, f] : cases) {
    CAPTURE(name);
    CHECK(oracle::GradientCheck(f, {a, b, c, row, col, alpha}, 1e-6) < 1e-6);
  }
}

TEST_CASE("ConcatRows rejects ragged widths") {
  std::mt19937_64 rng(2);
  Var a = Param(2, 3, rng), b = Param(2, 2, rng);
  CHECK_THROWS(ag::ConcatRows({a, b}));
}

TEST_CASE("relu and clamp have zero gradient on the flat side") {
  Matrix m(1, 4);
  m << -1.0, -0.5, 0.5, 2.0;
  Var x(m, true);
  ag::SumAll(ag::Relu(x)).Backward();
  CHECK(x.grad()(0, 0) == 0.0);
  CHECK(x.grad()(0, 3) == 1.0);
  x.ZeroGrad();
  ag::SumAll(ag::ClampMin(x, 0.0)).Backward();
  CHECK(x.grad()(0, 1) == 0.0);
  CHECK(x.grad()(0, 2) == 1.0);
}

TEST_CASE("row maps, framing and overlap-add") {
  std::mt19937_64 rng(3);
  Var x = Param(20, 1, rng);
  auto map = std::make_shared<ag::RowMap>(ag::RowMap::Gather(20, {3, -1, 7, 7, 0}));
  CHECK(oracle::GradientCheck([&] { return Probe(ag::ApplyRowMap(x, map)); }, {x}, 1e-6) < 1e-6);
  Var frames = ag::FrameSignal(x, 8, 4);
  CHECK(frames.rows() == 4);
  CHECK(frames.value()(1, 0) == x.value()(4, 0));
  CHECK(oracle::GradientCheck([&] { return Probe(ag::FrameSignal(x, 8, 4)); }, {x}, 1e-6) < 1e-6);
  Var f = Param(4, 8, rng);
  Var y = ag::OverlapAdd(f, 4, 21);
  CHECK(y.rows() == 21);
  CHECK(y.value()(20, 0) == 0.0);
  CHECK(y.value()(5, 0) == doctest::Approx(f.value()(0, 5) + f.value()(1, 1)));
  CHECK(oracle::GradientCheck([&] { return Probe(ag::OverlapAdd(f, 4, 18)); }, {f}, 1e-6) < 1e-6);
}

TEST_CASE("layer norm matches finite differences and normalises rows") {
  std::mt19937_64 rng(4);
  Var a = Param(5, 6, rng), g = Param(1, 6, rng), b = Param(1, 6, rng);
  CHECK(oracle::GradientCheck([&] { return Probe(ag::LayerNormRows(a, g, b)); }, {a, g, b}, 1e-6) <
        1e-5);
  Var ones(Matrix::Ones(1, 6)), zeros(Matrix::Zero(1, 6));
  Matrix y = ag::LayerNormRows(a, ones, zeros).value();
  for (ag::Index r = 0; r < y.rows(); ++r) {
    CHECK(y.row(r).mean() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(y.row(r).squaredNorm() / 6.0 == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("LSTM matches finite differences in both directions") {
  std::mt19937_64 rng(5);
  const int steps = 4, batch = 2, in = 3, hid = 2;
  Var x = Param(steps * batch, in, rng), wx = Param(in, 4 * hid, rng), wh = Param(hid, 4 * hid, rng);
  Var b = Param(1, 4 * hid, rng);
  for (bool reverse : {false, true}) {
    CAPTURE(reverse);
    auto f = [&] { return Probe(ag::Lstm(x, wx, wh, b, steps, batch, reverse)); };
    CHECK(oracle::GradientCheck(f, {x, wx, wh, b}, 1e-6) < 1e-6);
  }
}

TEST_CASE("LSTM sequences in a batch do not interact") {
  std::mt19937_64 rng(6);
  Var x = Param(6, 2, rng), wx = Param(2, 8, rng), wh = Param(2, 8, rng), b = Param(1, 8, rng);
  Matrix both = ag::Lstm(x, wx, wh, b, 3, 2, false).value();
  Matrix x0(3, 2);
  for (int t = 0; t < 3; ++t) x0.row(t) = x.value().row(2 * t);
  Matrix alone = ag::Lstm(Var(x0), wx, wh, b, 3, 1, false).value();
  for (int t = 0; t < 3; ++t) CHECK((both.row(2 * t) - alone.row(t)).norm() < 1e-14);
}

TEST_CASE("CTC loss gradient and degenerate lattice") {
  std::mt19937_64 rng(7);
  Var logits = Param(6, 4, rng, 1.0);
  const std::vector<int> labels = {1, 2, 2};
  auto f = [&] { return ag::CtcLoss(ag::LogSoftmaxRows(logits), labels, 0); };
  CHECK(oracle::GradientCheck(f, {logits}, 1e-6) < 1e-6);
  Matrix one(1, 3);
  one << std::log(0.2), std::log(0.7), std::log(0.1);
  CHECK(ag::CtcNegLogLikelihood(one, {1}, 0) == doctest::Approx(-std::log(0.7)));
  CHECK(ag::CtcMinFrames({1, 2, 2}) == 4);
  CHECK_THROWS_AS(ag::CtcLoss(Var(Matrix::Constant(3, 3, std::log(1.0 / 3))), {1, 1, 1}, 0),
                  InvalidArgument);
}

TEST_CASE("no-grad guard stops graph recording") {
  Var a(Matrix::Ones(2, 2), true);
  {
    ag::NoGradGuard guard;
    CHECK_FALSE(ag::GradEnabled());
    Var y = ag::Scale(a, 2.0);
    CHECK_FALSE(y.requires_grad());
  }
  CHECK(ag::GradEnabled());
}

TEST_CASE("Adam clips the global norm and skips parameters without gradient") {
  Var p(Matrix::Zero(1, 2), true), q(Matrix::Ones(1, 1), true);
  ag::AdamOptions o;
  o.lr = 0.1;
  o.clip_norm = 1.0;
  ag::Adam adam({p, q}, o);
  ag::SumAll(ag::Scale(p, 100.0)).Backward();
  const double norm = adam.Step();
  CHECK(norm == doctest::Approx(100.0 * std::sqrt(2.0)));
  // First Adam step moves each coordinate by ~lr against the gradient sign.
  CHECK(p.value()(0, 0) == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(q.value()(0, 0) == 1.0);
}

TEST_CASE("parameter store") {
  ag::ParameterStore s;
  s.Create("w", Matrix::Zero(2, 3));
  CHECK(s.Contains("w"));
  CHECK(s.NumScalars() == 6);
  CHECK_THROWS(s.Create("w", Matrix::Zero(1, 1)));
  CHECK_THROWS(s.Get("missing"));
}
