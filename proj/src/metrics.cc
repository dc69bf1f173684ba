// metrics.cc

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

#include "orpit/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace orpit {

namespace {

double Ratio(double num, double den) {
  if (den <= 0.0) return num > 0.0 ? kMetricCapDb : -kMetricCapDb;
  if (num <= 0.0) return -kMetricCapDb;
  return std::clamp(10.0 * std::log10(num / den), -kMetricCapDb, kMetricCapDb);
}

void CheckPair(const Waveform& s, const Waveform& e) {
  if (s.size() != e.size() || s.size() == 0) throw InvalidArgument("metric: length mismatch");
}

}  // namespace

double SiSdr(const Waveform& reference, const Waveform& estimate) {
  CheckPair(reference, estimate);
  const std::size_t n = reference.size();
  const double ms = std::accumulate(reference.samples.begin(), reference.samples.end(), 0.0) / n;
  const double me = std::accumulate(estimate.samples.begin(), estimate.samples.end(), 0.0) / n;
  double ss = 0.0, se = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double s = reference.samples[t] - ms;
    ss += s * s;
    se += (estimate.samples[t] - me) * s;
  }
  if (ss <= 0.0) throw InvalidArgument("SI-SDR: zero reference");
  const double alpha = se / ss;
  double target = 0.0, noise = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double proj = alpha * (reference.samples[t] - ms);
    const double err = (estimate.samples[t] - me) - proj;
    target += proj * proj;
    noise += err * err;
  }
  return Ratio(target, noise);
}

double Sdr(const Waveform& reference, const Waveform& estimate) {
  CheckPair(reference, estimate);
  const double ss = reference.Energy();
  if (ss <= 0.0) throw InvalidArgument("SDR: zero reference");
  double noise = 0.0;
  for (std::size_t t = 0; t < reference.size(); ++t) {
    const double d = reference.samples[t] - estimate.samples[t];
    noise += d * d;
  }
  return Ratio(ss, noise);
}

std::vector<int> BestSdrAssignment(const std::vector<Waveform>& sources,
                                   const std::vector<Waveform>& estimates) {
  const std::size_t k = sources.size();
  if (k == 0 || estimates.size() != k) throw InvalidArgument("SDR assignment: count mismatch");
  std::vector<std::vector<double>> table(k, std::vector<double>(k));
  for (std::size_t s = 0; s < k; ++s) {
    for (std::size_t e = 0; e < k; ++e) table[s][e] = Sdr(sources[s], estimates[e]);
  }
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_value = -std::numeric_limits<double>::infinity();
  do {
    double v = 0.0;
    for (std::size_t s = 0; s < k; ++s) v += table[s][static_cast<std::size_t>(perm[s])];
    if (v > best_value) {
      best_value = v;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double Sdri(const std::vector<Waveform>& sources, const std::vector<Waveform>& estimates,
            const Waveform& mixture, const std::vector<int>& assignment) {
  const std::size_t k = sources.size();
  if (k == 0 || assignment.size() != k) throw InvalidArgument("SDRi: assignment size mismatch");
  double total = 0.0;
  for (std::size_t s = 0; s < k; ++s) {
    const auto e = static_cast<std::size_t>(assignment[s]);
    if (e >= estimates.size()) throw InvalidArgument("SDRi: assignment out of range");
    total += Sdr(sources[s], estimates[e]) - Sdr(sources[s], mixture);
  }
  return total / static_cast<double>(k);
}

double CountingAccuracy(const std::vector<MetricRecord>& records) {
  if (records.empty()) throw InvalidArgument("counting accuracy of an empty set");
  std::size_t correct = 0;
  for (const auto& r : records) correct += r.predicted_count == r.true_count;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(records.size());
}

}  // namespace orpit
