// orpit/config.h

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

// Experiment configuration. The on-disk format is a flat text file of
// `dotted.key = value` lines ('#' starts a comment); command-line flags of
// the form --dotted.key=value override it.

#ifndef ORPIT_CONFIG_H_
#define ORPIT_CONFIG_H_

#include <string>
#include <utility>
#include <vector>

#include "orpit/asr.h"
#include "orpit/counting.h"
#include "orpit/joint.h"
#include "orpit/separator.h"
#include "orpit/signals.h"

namespace orpit {

enum class Scheme { kTasnetFixed, kOrpitSingle, kOrpitMulti, kAsrClean };
Scheme ParseScheme(const std::string& name);
std::string ToString(Scheme scheme);

struct TrainConfig {
  int steps = 1000;
  int batch_size = 2;
  double lr = 1e-3;
  uint64_t seed = 0;
  Scheme scheme = Scheme::kTasnetFixed;
  TuneMode tune = TuneMode::kSeparation;
  BaseLoss loss = BaseLoss::kTL1pmse;
  /// Training crop length in seconds; 0 trains on whole signals.
  double crop_s = 0.5;
  int dev_every = 250;
  double fe_weight = 1.0;
  /// Share of OR-PIT single-scheme batches built from fed-back residuals.
  double feedback_ratio = 0.5;
  double clip = 5.0;
  /// Halve the learning rate after this many dev checks without improvement
  /// (0 keeps it constant).
  int lr_patience = 0;
  std::string init;  // checkpoint to start from
  std::string out = "model.ckpt";
  std::string log = "train.jsonl";
};

struct EvalConfig {
  bool oracle_count = true;
  bool vad = false;
  double vad_threshold_db = 30.0;
  bool asr = true;
  std::string report = "report.jsonl";
  std::string table;       // plain-text table; empty prints nothing to disk
  std::string hypotheses;  // hypothesis dump; empty disables it
};

struct DataConfig {
  std::string train;
  std::string dev;
  std::string test;
};

struct ExperimentConfig {
  DatasetSpec synth;
  SeparatorConfig sep;
  StopRule stop;
  bool use_asr = false;
  AsrConfig asr;
  TrainConfig train;
  DataConfig data;
  EvalConfig eval;

  /// Sets one dotted key. Unknown keys and unparsable values raise ConfigError.
  void Set(const std::string& key, const std::string& value);
  /// Every key with its current value, in a fixed order.
  std::vector<std::pair<std::string, std::string>> ToKeyValues() const;
  std::string ToText() const;
  /// Range checks across sections; throws ConfigError.
  void Validate() const;
};

/// Parses the flat key-value format.
std::vector<std::pair<std::string, std::string>> ParseKeyValueText(const std::string& text);
ExperimentConfig ConfigFromText(const std::string& text);
/// Loads `path` (may be empty for defaults) and applies `overrides` in order.
ExperimentConfig LoadConfig(const std::string& path,
                            const std::vector<std::pair<std::string, std::string>>& overrides = {});
/// "--a.b=c" -> ("a.b", "c"). Throws ConfigError on anything else.
std::pair<std::string, std::string> ParseOverride(const std::string& flag);

}  // namespace orpit

#endif  // ORPIT_CONFIG_H_
