// orpit/metrics.h

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

#ifndef ORPIT_METRICS_H_
#define ORPIT_METRICS_H_

#include <string>
#include <vector>

#include "orpit/common.h"

namespace orpit {

/// Cap (and floor) applied to ratio metrics so aggregates stay finite.
inline constexpr double kMetricCapDb = 300.0;

/// Scale-invariant SDR after removing the mean of both signals.
/// Perfect reconstruction returns +kMetricCapDb, a zero estimate -kMetricCapDb.
double SiSdr(const Waveform& reference, const Waveform& estimate);
/// 10 log10(|s|^2 / |s - est|^2), capped at +kMetricCapDb.
double Sdr(const Waveform& reference, const Waveform& estimate);

/// Permutation of estimates maximising mean SDR: result[k] is the estimate
/// paired with source k.
std::vector<int> BestSdrAssignment(const std::vector<Waveform>& sources,
                                   const std::vector<Waveform>& estimates);
/// mean_k [sdr(s_k, z_assign(k)) - sdr(s_k, x)].
double Sdri(const std::vector<Waveform>& sources, const std::vector<Waveform>& estimates,
            const Waveform& mixture, const std::vector<int>& assignment);

struct MetricRecord {
  std::string id;
  std::vector<double> sdr_db;
  std::vector<double> si_sdr_db;
  double sdri_db = 0.0;
  int predicted_count = 0;
  int true_count = 0;
};

/// Percentage of records whose predicted count equals the true count.
double CountingAccuracy(const std::vector<MetricRecord>& records);

}  // namespace orpit

#endif  // ORPIT_METRICS_H_
