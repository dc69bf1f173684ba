// counting.cc

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

#include "orpit/counting.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "json.hpp"

namespace orpit {

void StopRule::Validate() const {
  if (max_iterations < 1 || max_iterations > 10) {
    throw ConfigError("stop rule: max_iterations must be in [1, 10]");
  }
  if (kind == Kind::kThreshold && !(gamma > 0.0)) throw ConfigError("stop rule: gamma must be > 0");
  if (kind == Kind::kFlag && !(flag_cutoff > 0.0 && flag_cutoff < 1.0)) {
    throw ConfigError("stop rule: flag_cutoff must be in (0, 1)");
  }
}

StopRule::Kind ParseStopKind(const std::string& name) {
  if (name == "threshold") return StopRule::Kind::kThreshold;
  if (name == "flag") return StopRule::Kind::kFlag;
  throw ConfigError("unknown stop rule '" + name + "'");
}

std::string ToString(StopRule::Kind kind) {
  return kind == StopRule::Kind::kThreshold ? "threshold" : "flag";
}

std::string ToString(StopReason reason) {
  switch (reason) {
    case StopReason::kNone: return "none";
    case StopReason::kThreshold: return "threshold";
    case StopReason::kFlag: return "flag";
    case StopReason::kMaxIterations: return "max_iterations";
  }
  return "none";
}

bool ThresholdStop(const Waveform& z2, double gamma) {
  if (z2.size() == 0) throw InvalidArgument("threshold stop on an empty signal");
  return z2.MeanPower() < gamma;
}

namespace {

void RequireTwoOutputs(const Extractor& model) {
  if (model.num_outputs() != 2) {
    throw InvalidArgument("iterative extraction needs a two-output separator");
  }
}

}  // namespace

ExtractionResult ExtractIteratively(const Waveform& x, const Extractor& model,
                                    const StopRule& rule) {
  rule.Validate();
  RequireTwoOutputs(model);
  ExtractionResult result;
  Waveform input = x;
  for (int it = 0; it < rule.max_iterations; ++it) {
    SeparatorOutput out = model.Separate(input);
    IterationEvidence ev;
    ev.residual_power = out.streams[1].MeanPower();
    ev.flag_prob = out.stop_flag_prob;
    result.streams.push_back(std::move(out.streams[0]));
    if (rule.kind == StopRule::Kind::kThreshold) {
      if (ThresholdStop(out.streams[1], rule.gamma)) ev.stopped_by = StopReason::kThreshold;
    } else {
      if (!out.stop_flag_prob) throw InvalidArgument("flag stop rule needs a stop-flag head");
      if (*out.stop_flag_prob >= rule.flag_cutoff) ev.stopped_by = StopReason::kFlag;
    }
    if (ev.stopped_by == StopReason::kNone && it + 1 == rule.max_iterations) {
      ev.stopped_by = StopReason::kMaxIterations;
    }
    result.evidence.push_back(ev);
    input = std::move(out.streams[1]);
    if (ev.stopped_by != StopReason::kNone) break;
  }
  result.final_residual = std::move(input);
  result.count = static_cast<int>(result.streams.size());
  return result;
}

ExtractionResult ExtractForced(const Waveform& x, const Extractor& model, int iterations) {
  RequireTwoOutputs(model);
  if (iterations < 1) throw InvalidArgument("forced extraction needs >= 1 iteration");
  ExtractionResult result;
  Waveform input = x;
  for (int it = 0; it < iterations; ++it) {
    SeparatorOutput out = model.Separate(input);
    IterationEvidence ev;
    ev.residual_power = out.streams[1].MeanPower();
    ev.flag_prob = out.stop_flag_prob;
    if (it + 1 == iterations) ev.stopped_by = StopReason::kMaxIterations;
    result.evidence.push_back(ev);
    result.streams.push_back(std::move(out.streams[0]));
    input = std::move(out.streams[1]);
  }
  result.final_residual = std::move(input);
  result.count = iterations;
  return result;
}

std::vector<double> ThresholdGrid() {
  std::vector<double> grid;
  for (int i = 0; i <= 70; ++i) grid.push_back(std::pow(10.0, -8.0 + 0.1 * i));
  return grid;
}

int CountFromTrace(const std::vector<double>& residual_powers, double gamma) {
  for (std::size_t i = 0; i < residual_powers.size(); ++i) {
    if (residual_powers[i] < gamma) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(residual_powers.size());
}

Calibration CalibrateFromTraces(const std::vector<ResidualTrace>& traces) {
  if (traces.empty()) throw InvalidArgument("calibration needs a nonempty dev set");
  Calibration cal;
  cal.grid = ThresholdGrid();
  std::set<int> included;
  for (const auto& t : traces) included.insert(t.true_count);
  cal.counts_included.assign(included.begin(), included.end());
  cal.accuracy = -1.0;
  for (double gamma : cal.grid) {
    int correct = 0;
    for (const auto& t : traces) correct += CountFromTrace(t.residual_powers, gamma) == t.true_count;
    const double acc = static_cast<double>(correct) / static_cast<double>(traces.size());
    cal.accuracies.push_back(acc);
    if (acc > cal.accuracy) {
      cal.accuracy = acc;
      cal.gamma = gamma;
    }
  }
  return cal;
}

Calibration CalibrateThreshold(const Extractor& model, const std::vector<Waveform>& mixtures,
                               const std::vector<int>& true_counts, int max_iterations) {
  if (mixtures.empty()) throw InvalidArgument("calibration needs a nonempty dev set");
  if (mixtures.size() != true_counts.size()) throw InvalidArgument("one true count per mixture");
  std::vector<ResidualTrace> traces;
  for (std::size_t i = 0; i < mixtures.size(); ++i) {
    ExtractionResult r = ExtractForced(mixtures[i], model, max_iterations);
    ResidualTrace t;
    t.true_count = true_counts[i];
    for (const auto& ev : r.evidence) t.residual_powers.push_back(ev.residual_power);
    traces.push_back(std::move(t));
  }
  return CalibrateFromTraces(traces);
}

std::string Calibration::ToJson() const {
  nlohmann::ordered_json j;
  j["gamma"] = gamma;
  j["accuracy"] = accuracy;
  j["grid"] = grid;
  j["accuracies"] = accuracies;
  j["counts_included"] = counts_included;
  return j.dump();
}

Calibration Calibration::FromJson(const std::string& text) {
  Calibration c;
  try {
    const auto j = nlohmann::json::parse(text);
    c.gamma = j.at("gamma").get<double>();
    c.accuracy = j.at("accuracy").get<double>();
    c.grid = j.at("grid").get<std::vector<double>>();
    if (j.contains("accuracies")) c.accuracies = j["accuracies"].get<std::vector<double>>();
    if (j.contains("counts_included")) c.counts_included = j["counts_included"].get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad calibration document: ") + e.what());
  }
  return c;
}

int CountFixedOutputs(const std::vector<Waveform>& streams, double gamma) {
  if (streams.empty()) throw InvalidArgument("counting needs at least one stream");
  int n = 0;
  for (const auto& s : streams) n += s.MeanPower() >= gamma;
  return n;
}

std::vector<int> SelectTopKEnergy(const std::vector<Waveform>& streams, int k) {
  if (k < 0 || static_cast<std::size_t>(k) > streams.size()) {
    throw InvalidArgument("top-K selection: K exceeds the number of streams");
  }
  std::vector<int> idx(streams.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return streams[static_cast<std::size_t>(a)].Energy() > streams[static_cast<std::size_t>(b)].Energy();
  });
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace orpit
