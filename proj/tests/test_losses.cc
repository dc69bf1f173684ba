// test_losses.cc

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
#include <algorithm>

#include "doctest.h"
#include "oracles.h"
#include "orpit/losses.h"

using namespace orpit;
using ag::Var;

namespace {

// Target/estimate pair with a prescribed residual energy.
std::pair<Waveform, Waveform> WithResidual(double energy) {
  Waveform s({0.1, -0.2, 0.3, 0.4}, 8000);
  Waveform z = s;
  z.samples[2] += std::sqrt(energy);
  return {s, z};
}

std::vector<oracle::Signal> Raw(const std::vector<Waveform>& w) {
  std::vector<oracle::Signal> out;
  for (const auto& x : w) out.push_back(x.samples);
  return out;
}

}  // namespace

TEST_CASE("T-LMSE values and clamp") {
  auto [s1, z1] = WithResidual(1.0);
  CHECK(TLmse(s1, z1).value == doctest::Approx(0.0).epsilon(1e-12));
  auto [s2, z2] = WithResidual(100.0);
  CHECK(TLmse(s2, z2).value == doctest::Approx(20.0));
  const LossValue exact = TLmse(s1, s1);
  CHECK(exact.value == kLmseFloorDb);
  CHECK(exact.clamped);
  CHECK_FALSE(TLmse(s1, z1).clamped);
  CHECK_THROWS_AS(TLmse(s1, Waveform({0.0}, 8000)), InvalidArgument);
}

TEST_CASE("T-L1PMSE values") {
  auto [s, z] = WithResidual(9.0);
  CHECK(TL1pmse(s, s).value == 0.0);
  CHECK(TL1pmse(s, z).value == doctest::Approx(10.0));
  const Waveform zero({0.0, 0.0, 0.0}, 8000);
  CHECK(TL1pmse(zero, zero).value == 0.0);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    CHECK(TL1pmse(oracle::RandomWave(16, rng), oracle::RandomWave(16, rng)).value > 0.0);
  }
}

TEST_CASE("PIT examples") {
  std::mt19937_64 rng(2);
  const Waveform a = oracle::RandomWave(32, rng), b = oracle::RandomWave(32, rng);
  const LossValue one = PitLoss({a}, {b}, BaseLoss::kTL1pmse);
  CHECK(one.value == doctest::Approx(TL1pmse(a, b).value));
  CHECK(one.assignment == std::vector<int>{0});
  const LossValue swap = PitLoss({a, b}, {b, a}, BaseLoss::kTL1pmse);
  CHECK(swap.value == 0.0);
  CHECK(swap.assignment == std::vector<int>{1, 0});
  CHECK_THROWS_AS(PitLoss({a, b}, {a}, BaseLoss::kTL1pmse), InvalidArgument);
  std::vector<Waveform> seven(7, a);
  CHECK_THROWS_AS(PitLoss(seven, seven, BaseLoss::kTL1pmse), InvalidArgument);
}

TEST_CASE("PIT equals the brute-force enumerator and respects its invariants") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 60; ++trial) {
    const int k = 1 + trial % 4;
    const BaseLoss base = trial % 2 ? BaseLoss::kTLmse : BaseLoss::kTL1pmse;
    std::vector<Waveform> s, z;
    for (int i = 0; i < k; ++i) {
      s.push_back(oracle::RandomWave(24, rng));
      z.push_back(oracle::RandomWave(24, rng));
    }
    const LossValue got = PitLoss(s, z, base);
    const oracle::PitAnswer want = oracle::BruteForcePit(Raw(s), Raw(z), base);
    CHECK(got.value == doctest::Approx(want.value).epsilon(1e-12));
    CHECK(got.assignment == want.permutation);
    double identity = 0.0;
    for (int i = 0; i < k; ++i) identity += oracle::Base(base, s[static_cast<std::size_t>(i)].samples, z[static_cast<std::size_t>(i)].samples);
    CHECK(got.value <= identity / k + 1e-12);
    std::vector<Waveform> shuffled = s;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(PitLoss(shuffled, z, base).value == doctest::Approx(got.value).epsilon(1e-12));
  }
}

TEST_CASE("PIT ties go to the lexicographically smallest permutation") {
  const Waveform a({1.0, 0.0}, 8000);
  const LossValue r = PitLoss({a, a, a}, {a, a, a}, BaseLoss::kTL1pmse);
  CHECK(r.assignment == std::vector<int>{0, 1, 2});
}

TEST_CASE("OR-PIT examples and brute force") {
  std::mt19937_64 rng(4);
  const Waveform s1 = oracle::RandomWave(32, rng), s2 = oracle::RandomWave(32, rng);
  const LossValue two = OrpitLoss({s1, s2}, s2, s1, BaseLoss::kTL1pmse);
  CHECK(two.value == 0.0);
  CHECK(two.assignment == std::vector<int>{1});
  const LossValue single = OrpitLoss({s1}, s1, Zeros(32, 8000), BaseLoss::kTL1pmse);
  CHECK(single.value == 0.0);
  CHECK(single.assignment == std::vector<int>{0});
  for (int trial = 0; trial < 40; ++trial) {
    const int k = 1 + trial % 4;
    std::vector<Waveform> s;
    for (int i = 0; i < k; ++i) s.push_back(oracle::RandomWave(20, rng));
    const Waveform z1 = oracle::RandomWave(20, rng), z2 = oracle::RandomWave(20, rng);
    const LossValue got = OrpitLoss(s, z1, z2, BaseLoss::kTL1pmse);
    const oracle::OrpitAnswer want = oracle::BruteForceOrpit(Raw(s), z1.samples, z2.samples, BaseLoss::kTL1pmse);
    CHECK(got.value == doctest::Approx(want.value).epsilon(1e-12));
    CHECK(got.assignment[0] == want.selected);
    std::vector<Waveform> rev(s.rbegin(), s.rend());
    CHECK(OrpitLoss(rev, z1, z2, BaseLoss::kTL1pmse).value == doctest::Approx(got.value).epsilon(1e-12));
  }
  CHECK_THROWS_AS(OrpitLoss({s1}, s1, Zeros(31, 8000), BaseLoss::kTL1pmse), InvalidArgument);
}

TEST_CASE("OR-PIT ties pick the smallest index") {
  const Waveform a({1.0, 2.0}, 8000);
  const LossValue r = OrpitLoss({a, a}, a, a, BaseLoss::kTL1pmse);
  CHECK(r.assignment == std::vector<int>{0});
}

TEST_CASE("flag BCE") {
  CHECK(FlagBce(1, 1.0) == doctest::Approx(-std::log(1.0 - kFlagEps)));
  CHECK(FlagBce(1, 1.0) < 1e-6);
  CHECK(FlagBce(1, 0.5) == doctest::Approx(std::log(2.0)));
  CHECK(FlagBce(0, 0.5) == doctest::Approx(std::log(2.0)));
  CHECK(std::isfinite(FlagBce(1, 0.0)));
  CHECK(FlagBce(1, 0.0) == doctest::Approx(-std::log(kFlagEps)));
}

TEST_CASE("loss gradients match finite differences") {
  std::mt19937_64 rng(5);
  Var s(ag::ColumnFromVector(oracle::RandomSignal(32, rng)).value(), true);
  Var z(ag::ColumnFromVector(oracle::RandomSignal(32, rng)).value(), true);
  CHECK(oracle::GradientCheck([&] { return TLmse(s, z).value; }, {s, z}, 1e-6) < 1e-6);
  CHECK(oracle::GradientCheck([&] { return TL1pmse(s, z).value; }, {s, z}, 1e-6) < 1e-6);

  std::vector<Var> targets, estimates;
  for (int i = 0; i < 3; ++i) {
    targets.push_back(Var(ag::ColumnFromVector(oracle::RandomSignal(32, rng)).value(), true));
    estimates.push_back(Var(ag::ColumnFromVector(oracle::RandomSignal(32, rng)).value(), true));
  }
  std::vector<Var> all = targets;
  all.insert(all.end(), estimates.begin(), estimates.end());
  const std::vector<int> perm = {2, 0, 1};
  for (BaseLoss base : {BaseLoss::kTLmse, BaseLoss::kTL1pmse}) {
    CHECK(oracle::GradientCheck([&] { return PitLossFixed(targets, estimates, perm, base).value; },
                                all, 1e-6) < 1e-6);
    CHECK(oracle::GradientCheck(
              [&] { return OrpitLoss(targets, estimates[0], estimates[1], base).value; }, all,
              1e-6) < 1e-6);
  }
  Var p(ag::Matrix::Constant(1, 1, 0.3), true);
  for (int f : {0, 1}) CHECK(oracle::GradientCheck([&] { return FlagBce(f, p); }, {p}, 1e-7) < 1e-6);
}

TEST_CASE("base loss names") {
  CHECK(ParseBaseLoss("t_lmse") == BaseLoss::kTLmse);
  CHECK(ParseBaseLoss(ToString(BaseLoss::kTL1pmse)) == BaseLoss::kTL1pmse);
  CHECK_THROWS(ParseBaseLoss("mse"));
}
