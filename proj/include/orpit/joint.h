// orpit/joint.h

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

#ifndef ORPIT_JOINT_H_
#define ORPIT_JOINT_H_

#include <memory>
#include <string>
#include <vector>

#include "orpit/asr.h"
#include "orpit/autograd.h"
#include "orpit/losses.h"
#include "orpit/separator.h"
#include "orpit/signals.h"

namespace orpit {

/// One training item: what the front-end hears plus what it should produce.
/// For fed-back examples `input` is a previous secondary output, so it is not
/// the exact sum of `sources`.
struct TrainingExample {
  std::string id;
  Waveform input;
  std::vector<Waveform> sources;
  std::vector<std::string> transcripts;

  static TrainingExample FromMixture(const MixtureExample& ex, std::string id = {});
  int num_sources() const { return static_cast<int>(sources.size()); }
};

/// Which parameters a step may change. kSeparation trains the front-end on
/// its signal loss alone and never runs the recogniser.
enum class TuneMode { kSeparation, kAsrOnly, kFeOnly, kBoth };
TuneMode ParseTuneMode(const std::string& name);
std::string ToString(TuneMode mode);

struct JointOptions {
  BaseLoss base = BaseLoss::kTL1pmse;
  /// Weight on the front-end loss in the joint sum; 1 reproduces a plain sum.
  double fe_weight = 1.0;
  int max_unroll = 6;
  /// Keep copies of the primary streams produced during the pass.
  bool record_streams = false;
};

struct JointBatchResult {
  double total_loss = 0.0;
  double fe_loss = 0.0;    // signal terms plus flag terms, batch mean
  double asr_loss = 0.0;   // per-example sum over recognised streams, batch mean
  double flag_loss = 0.0;  // part of fe_loss, batch mean
  std::vector<double> asr_losses;            // every recognised stream, in order
  std::vector<double> flag_losses;           // per unrolled iteration, batch mean
  std::vector<std::vector<int>> assignments; // per example
  std::vector<std::vector<Waveform>> primary_streams;  // when record_streams
  double grad_norm_fe = 0.0;
  double grad_norm_asr = 0.0;
};

/// Front-end plus back-end loss; non-finite inputs are rejected.
double JointLoss(double asr_loss_sum, double fe_loss, double fe_weight = 1.0);
ag::Var JointLoss(const ag::Var& asr_loss_sum, const ag::Var& fe_loss, double fe_weight = 1.0);

/// Permutation from the signal-level PIT loss only; transcripts follow it.
std::vector<int> ResolvePermutationByFe(const std::vector<ag::Var>& targets,
                                        const std::vector<ag::Var>& estimates, BaseLoss base);

/// Drops streams whose mean power is more than rel_threshold_db below the
/// mixture's. Survivors keep their order; their indices go to `kept`.
std::vector<Waveform> VadGate(const std::vector<Waveform>& streams, const Waveform& mixture,
                              double rel_threshold_db = 30.0, std::vector<int>* kept = nullptr);

/// Runs the two-output front-end on `ex`, assigns its primary output by the
/// OR-PIT criterion, and returns the secondary output (detached) as a new
/// example over the remaining sources. Single-source examples come back as is.
TrainingExample MakeFeedbackExample(const TrainingExample& ex, const Separator& fe, BaseLoss base);

class JointTrainer {
 public:
  /// `asr` may be null when only separation steps are run.
  JointTrainer(Separator* fe, Recognizer* asr, JointOptions options, ag::AdamOptions fe_optim,
               ag::AdamOptions asr_optim);

  struct Computation {
    ag::Var total;
    JointBatchResult result;
  };

  /// Fixed-output front-end with PIT; missing speakers get silent targets.
  Computation ComputeTasnet(const std::vector<TrainingExample>& batch, bool with_asr) const;
  /// One OR-PIT pass on the raw input; ASR on the primary output only.
  Computation ComputeOrpitSingle(const std::vector<TrainingExample>& batch, bool with_asr) const;
  /// K unrolled OR-PIT passes feeding the secondary output forward.
  Computation ComputeOrpitMulti(const std::vector<TrainingExample>& batch, bool with_asr) const;

  JointBatchResult StepTasnet(const std::vector<TrainingExample>& batch, TuneMode mode);
  JointBatchResult StepOrpitSingle(const std::vector<TrainingExample>& batch, TuneMode mode);
  JointBatchResult StepOrpitMulti(const std::vector<TrainingExample>& batch, TuneMode mode);

  void set_lr(double lr);
  double lr() const { return fe_optim_.lr(); }
  const JointOptions& options() const { return options_; }
  JointOptions& mutable_options() { return options_; }

 private:
  JointBatchResult Apply(Computation c, TuneMode mode);
  void CheckAsr(bool with_asr) const;

  Separator* fe_;
  Recognizer* asr_;
  JointOptions options_;
  ag::Adam fe_optim_;
  ag::Adam asr_optim_;
};

}  // namespace orpit

#endif  // ORPIT_JOINT_H_
