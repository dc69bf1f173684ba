// orpit/counting.h

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

#ifndef ORPIT_COUNTING_H_
#define ORPIT_COUNTING_H_

#include <optional>
#include <string>
#include <vector>

#include "orpit/common.h"
#include "orpit/separator.h"

namespace orpit {

struct StopRule {
  enum class Kind { kThreshold, kFlag };
  Kind kind = Kind::kThreshold;
  double gamma = 1e-4;       // mean power, threshold rule only
  double flag_cutoff = 0.5;  // flag rule only
  int max_iterations = 6;

  void Validate() const;
};
StopRule::Kind ParseStopKind(const std::string& name);
std::string ToString(StopRule::Kind kind);

enum class StopReason { kNone, kThreshold, kFlag, kMaxIterations };
std::string ToString(StopReason reason);

struct IterationEvidence {
  double residual_power = 0.0;  // mean power of z2
  std::optional<double> flag_prob;
  StopReason stopped_by = StopReason::kNone;
};

struct ExtractionResult {
  std::vector<Waveform> streams;  // one primary output per iteration
  int count = 0;
  std::vector<IterationEvidence> evidence;
  Waveform final_residual;
};

/// True when (1/T) sum_t z2(t)^2 < gamma.
bool ThresholdStop(const Waveform& z2, double gamma);

/// Applies a two-output extractor repeatedly, feeding the secondary output
/// back, until the stop rule fires or max_iterations is reached.
ExtractionResult ExtractIteratively(const Waveform& x, const Extractor& model,
                                    const StopRule& rule);
/// Runs exactly `iterations` passes regardless of stop evidence (oracle count).
ExtractionResult ExtractForced(const Waveform& x, const Extractor& model, int iterations);

/// Residual mean power after each iteration of a (forced) extraction.
struct ResidualTrace {
  std::vector<double> residual_powers;
  int true_count = 0;
};

struct Calibration {
  double gamma = 0.0;
  double accuracy = 0.0;  // fraction in [0, 1]
  std::vector<double> grid;
  std::vector<double> accuracies;
  std::vector<int> counts_included;

  std::string ToJson() const;
  static Calibration FromJson(const std::string& text);
};

/// 71 log-spaced candidates from 1e-8 to 1e-1.
std::vector<double> ThresholdGrid();
/// Count implied by a trace under threshold gamma (stops at the first
/// residual below gamma; otherwise the trace length).
int CountFromTrace(const std::vector<double>& residual_powers, double gamma);
/// Grid search maximising counting accuracy; ties go to the smallest gamma.
Calibration CalibrateFromTraces(const std::vector<ResidualTrace>& traces);
/// Runs the extractor for max_iterations on each mixture and calibrates.
Calibration CalibrateThreshold(const Extractor& model, const std::vector<Waveform>& mixtures,
                               const std::vector<int>& true_counts, int max_iterations = 6);

/// Number of streams whose mean power is at least gamma.
int CountFixedOutputs(const std::vector<Waveform>& streams, double gamma);
/// Indices of the K highest-energy streams in original order.
std::vector<int> SelectTopKEnergy(const std::vector<Waveform>& streams, int k);

}  // namespace orpit

#endif  // ORPIT_COUNTING_H_
