// orpit/losses.h

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

#ifndef ORPIT_LOSSES_H_
#define ORPIT_LOSSES_H_

#include <string>
#include <vector>

#include "orpit/autograd.h"
#include "orpit/common.h"

namespace orpit {

enum class BaseLoss { kTLmse, kTL1pmse };
BaseLoss ParseBaseLoss(const std::string& name);
std::string ToString(BaseLoss loss);

/// Floor returned by T-LMSE when the residual energy is (numerically) zero.
inline constexpr double kLmseFloorDb = -300.0;
inline constexpr double kFlagEps = 1e-7;
inline constexpr int kMaxPitSources = 6;

/// A loss on the graph plus the clamp report of T-LMSE.
struct LossTerm {
  ag::Var value;
  bool clamped = false;
};

/// 10 log10 sum_t |s - est|^2, clamped at kLmseFloorDb.
LossTerm TLmse(const ag::Var& target, const ag::Var& estimate);
/// 10 log10 (1 + sum_t |s - est|^2).
LossTerm TL1pmse(const ag::Var& target, const ag::Var& estimate);
LossTerm ApplyBaseLoss(BaseLoss base, const ag::Var& target, const ag::Var& estimate);

struct PitLossResult {
  ag::Var value;
  /// permutation[k] is the target index paired with estimate k.
  std::vector<int> permutation;
  bool clamped = false;
};

/// min over permutations phi of (1/K) sum_k base(s_phi(k), z_k). Exhaustive;
/// ties resolve to the lexicographically smallest permutation.
PitLossResult PitLoss(const std::vector<ag::Var>& targets, const std::vector<ag::Var>& estimates,
                      BaseLoss base);
/// The same objective evaluated for a fixed permutation.
LossTerm PitLossFixed(const std::vector<ag::Var>& targets, const std::vector<ag::Var>& estimates,
                      const std::vector<int>& permutation, BaseLoss base);

struct OrpitLossResult {
  ag::Var value;
  int selected = 0;  // source assigned to the primary output
  ag::Var primary_term;
  ag::Var residual_term;
  bool clamped = false;
};

/// min over k of base(z1, s_k) + base(z2, sum_{i != k} s_i); ties pick the
/// smallest k.
OrpitLossResult OrpitLoss(const std::vector<ag::Var>& sources, const ag::Var& z1,
                          const ag::Var& z2, BaseLoss base);

/// -f log p - (1 - f) log(1 - p) with p clipped to [kFlagEps, 1 - kFlagEps].
ag::Var FlagBce(int target, const ag::Var& prob);

// Value-only conveniences on waveforms.
struct LossValue {
  double value = 0.0;
  std::vector<int> assignment;
  bool clamped = false;
};
LossValue TLmse(const Waveform& target, const Waveform& estimate);
LossValue TL1pmse(const Waveform& target, const Waveform& estimate);
LossValue PitLoss(const std::vector<Waveform>& targets, const std::vector<Waveform>& estimates,
                  BaseLoss base);
LossValue OrpitLoss(const std::vector<Waveform>& sources, const Waveform& z1, const Waveform& z2,
                    BaseLoss base);
double FlagBce(int target, double prob);

std::vector<ag::Var> ToVars(const std::vector<Waveform>& signals);

}  // namespace orpit

#endif  // ORPIT_LOSSES_H_
