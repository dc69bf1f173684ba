// orpit/harness.h

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

// Training loops, evaluation and reports.

#ifndef ORPIT_HARNESS_H_
#define ORPIT_HARNESS_H_

#include <optional>
#include <string>
#include <vector>

#include "orpit/config.h"
#include "orpit/metrics.h"

namespace orpit {

struct TrainingSummary {
  int steps_run = 0;
  std::vector<double> losses;  // total loss per step
  std::optional<double> best_dev_loss;
  int best_step = 0;
  std::string checkpoint;
};

/// Runs config.train.scheme for config.train.steps updates. Writes a JSON
/// line per step (and per dev check) to config.train.log and keeps the
/// checkpoint with the lowest dev loss at config.train.out (the final one
/// when there is no dev set). A non-finite loss aborts with the step logged.
TrainingSummary RunTraining(const ExperimentConfig& config);

struct HypothesisRecord {
  std::string id;
  int stream_index = 0;
  std::string ref;
  std::string hyp;
  double cer = 0.0;
  double wer = 0.0;
};

/// Everything known about one evaluated mixture.
struct EvalRecord {
  MetricRecord metrics;
  /// False when the unprocessed mixture already hits the SDR cap (K = 1),
  /// which leaves no improvement to measure.
  bool sdri_valid = true;
  int extra_streams = 0;          // produced streams beyond the true count
  std::vector<int> kept_streams;  // after the VAD gate
  std::size_t char_edits = 0, char_ref = 0;
  std::size_t word_edits = 0, word_ref = 0;
  bool scored_asr = false;
};

struct EvalReport {
  std::vector<EvalRecord> records;
  std::vector<HypothesisRecord> hypotheses;
  std::vector<std::string> json_lines;
  std::string table;
};

/// Separates (fixed-K with top-K energy selection, or iteratively with
/// counting or the oracle count), optionally gates with VAD, recognises and
/// scores every example of `manifest_path`. Writes the files named in
/// config.eval. Throws ConfigError for an incompatible checkpoint and
/// InvalidArgument for an empty manifest.
EvalReport RunEval(const ExperimentConfig& config, const std::string& checkpoint_path,
                   const std::string& manifest_path);

/// Pairs each source with a distinct estimate maximising total SDR. Missing
/// estimates are taken as silence; the returned index is then >= estimates.size().
std::vector<int> AssignEstimates(const std::vector<Waveform>& sources,
                                 const std::vector<Waveform>& estimates);

std::string RecordToJson(const EvalRecord& record);
EvalRecord RecordFromJson(const std::string& line);
/// Aggregate table by true count: SDRi, SI-SDR, counting accuracy, CER, WER.
std::string FormatTable(const std::vector<EvalRecord>& records);
/// Reads a JSON-lines report written by RunEval and formats its table.
std::string TableFromReport(const std::string& report_path);

}  // namespace orpit

#endif  // ORPIT_HARNESS_H_
