// losses.cc

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

#include "orpit/losses.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace orpit {

using ag::Var;

BaseLoss ParseBaseLoss(const std::string& name) {
  if (name == "t_lmse") return BaseLoss::kTLmse;
  if (name == "t_l1pmse") return BaseLoss::kTL1pmse;
  throw ConfigError("unknown loss '" + name + "'");
}

std::string ToString(BaseLoss loss) { return loss == BaseLoss::kTLmse ? "t_lmse" : "t_l1pmse"; }

namespace {

const double kDbPerNeper = 10.0 / std::log(10.0);

void CheckPair(const Var& a, const Var& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument("loss: target and estimate lengths differ");
  }
}

}  // namespace

LossTerm TLmse(const Var& target, const Var& estimate) {
  CheckPair(target, estimate);
  Var energy = ag::SumSquares(ag::Sub(target, estimate));
  const double e = energy.scalar();
  if (!(e > 0.0) || kDbPerNeper * std::log(e) < kLmseFloorDb) {
    return {ag::Constant(kLmseFloorDb), true};
  }
  return {ag::Scale(ag::Log(energy), kDbPerNeper), false};
}

LossTerm TL1pmse(const Var& target, const Var& estimate) {
  CheckPair(target, estimate);
  Var energy = ag::SumSquares(ag::Sub(target, estimate));
  return {ag::Scale(ag::Log(ag::AddScalar(energy, 1.0)), kDbPerNeper), false};
}

LossTerm ApplyBaseLoss(BaseLoss base, const Var& target, const Var& estimate) {
  return base == BaseLoss::kTLmse ? TLmse(target, estimate) : TL1pmse(target, estimate);
}

LossTerm PitLossFixed(const std::vector<Var>& targets, const std::vector<Var>& estimates,
                      const std::vector<int>& permutation, BaseLoss base) {
  const std::size_t k = targets.size();
  if (estimates.size() != k || permutation.size() != k || k == 0) {
    throw InvalidArgument("PIT: target, estimate and permutation counts differ");
  }
  LossTerm out;
  std::vector<Var> terms;
  for (std::size_t i = 0; i < k; ++i) {
    LossTerm t = ApplyBaseLoss(base, targets[static_cast<std::size_t>(permutation[i])], estimates[i]);
    out.clamped = out.clamped || t.clamped;
    terms.push_back(t.value);
  }
  Var sum = terms[0];
  for (std::size_t i = 1; i < k; ++i) sum = ag::Add(sum, terms[i]);
  out.value = ag::Scale(sum, 1.0 / static_cast<double>(k));
  return out;
}

PitLossResult PitLoss(const std::vector<Var>& targets, const std::vector<Var>& estimates,
                      BaseLoss base) {
  const std::size_t k = targets.size();
  if (estimates.size() != k) throw InvalidArgument("PIT: target and estimate counts differ");
  if (k < 1 || k > kMaxPitSources) throw InvalidArgument("PIT: need 1 <= K <= 6");
  std::vector<std::vector<double>> pair(k, std::vector<double>(k));
  {
    ag::NoGradGuard guard;
    for (std::size_t t = 0; t < k; ++t) {
      for (std::size_t e = 0; e < k; ++e) {
        pair[t][e] = ApplyBaseLoss(base, targets[t], estimates[e]).value.scalar();
      }
    }
  }
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_value = std::numeric_limits<double>::infinity();
  do {
    double v = 0.0;
    for (std::size_t e = 0; e < k; ++e) v += pair[static_cast<std::size_t>(perm[e])][e];
    v /= static_cast<double>(k);
    if (v < best_value) {
      best_value = v;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  LossTerm fixed = PitLossFixed(targets, estimates, best, base);
  return {fixed.value, best, fixed.clamped};
}

OrpitLossResult OrpitLoss(const std::vector<Var>& sources, const Var& z1, const Var& z2,
                          BaseLoss base) {
  if (sources.empty()) throw InvalidArgument("OR-PIT: no sources");
  CheckPair(z1, z2);
  for (const Var& s : sources) CheckPair(s, z1);
  const std::size_t k = sources.size();
  auto residual = [&](std::size_t skip) {
    Var r = ag::Constant(ag::Matrix::Zero(z1.rows(), z1.cols()));
    for (std::size_t i = 0; i < k; ++i) {
      if (i != skip) r = ag::Add(r, sources[i]);
    }
    return r;
  };
  std::size_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  {
    ag::NoGradGuard guard;
    for (std::size_t c = 0; c < k; ++c) {
      const double v = ApplyBaseLoss(base, sources[c], z1).value.scalar() +
                       ApplyBaseLoss(base, residual(c), z2).value.scalar();
      if (v < best_value) {
        best_value = v;
        best = c;
      }
    }
  }
  LossTerm primary = ApplyBaseLoss(base, sources[best], z1);
  LossTerm rest = ApplyBaseLoss(base, residual(best), z2);
  OrpitLossResult out;
  out.selected = static_cast<int>(best);
  out.primary_term = primary.value;
  out.residual_term = rest.value;
  out.value = ag::Add(primary.value, rest.value);
  out.clamped = primary.clamped || rest.clamped;
  return out;
}

Var FlagBce(int target, const Var& prob) {
  if (target != 0 && target != 1) throw InvalidArgument("flag target must be 0 or 1");
  if (prob.rows() != 1 || prob.cols() != 1) throw InvalidArgument("flag probability must be 1x1");
  // Clip to [eps, 1 - eps] on both sides.
  Var p = ag::Scale(ag::ClampMin(ag::Scale(ag::ClampMin(prob, kFlagEps), -1.0), kFlagEps - 1.0), -1.0);
  if (target == 1) return ag::Scale(ag::Log(p), -1.0);
  return ag::Scale(ag::Log(ag::AddScalar(ag::Scale(p, -1.0), 1.0)), -1.0);
}

std::vector<Var> ToVars(const std::vector<Waveform>& signals) {
  std::vector<Var> out;
  out.reserve(signals.size());
  for (const auto& s : signals) out.push_back(ag::ColumnFromVector(s.samples));
  return out;
}

LossValue TLmse(const Waveform& target, const Waveform& estimate) {
  ag::NoGradGuard guard;
  LossTerm t = TLmse(ag::ColumnFromVector(target.samples), ag::ColumnFromVector(estimate.samples));
  return {t.value.scalar(), {}, t.clamped};
}

LossValue TL1pmse(const Waveform& target, const Waveform& estimate) {
  ag::NoGradGuard guard;
  LossTerm t =
      TL1pmse(ag::ColumnFromVector(target.samples), ag::ColumnFromVector(estimate.samples));
  return {t.value.scalar(), {}, false};
}

LossValue PitLoss(const std::vector<Waveform>& targets, const std::vector<Waveform>& estimates,
                  BaseLoss base) {
  ag::NoGradGuard guard;
  PitLossResult r = PitLoss(ToVars(targets), ToVars(estimates), base);
  return {r.value.scalar(), r.permutation, r.clamped};
}

LossValue OrpitLoss(const std::vector<Waveform>& sources, const Waveform& z1, const Waveform& z2,
                    BaseLoss base) {
  ag::NoGradGuard guard;
  OrpitLossResult r = OrpitLoss(ToVars(sources), ag::ColumnFromVector(z1.samples),
                                ag::ColumnFromVector(z2.samples), base);
  return {r.value.scalar(), {r.selected}, r.clamped};
}

double FlagBce(int target, double prob) {
  ag::NoGradGuard guard;
  return FlagBce(target, ag::Constant(prob)).scalar();
}

}  // namespace orpit
