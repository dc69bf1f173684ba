// orpit/asr.h

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

#ifndef ORPIT_ASR_H_
#define ORPIT_ASR_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "orpit/autograd.h"
#include "orpit/common.h"

namespace orpit {

using TokenSequence = std::vector<int>;

/// blank = 0, then the syllabic symbols, space, and a shared sos/eos.
class Alphabet {
 public:
  Alphabet();
  int size() const { return static_cast<int>(symbols_.size()) + 2; }
  int blank() const { return 0; }
  int eos() const { return size() - 1; }
  int sos() const { return eos(); }
  /// Throws InvalidArgument on characters outside the alphabet.
  TokenSequence Encode(const std::string& text) const;
  std::string Decode(const TokenSequence& tokens) const;

 private:
  std::string symbols_;
};

struct AsrConfig {
  int stft_window = 128;
  int stft_hop = 32;
  /// Triangular filterbank channels; 0 keeps the raw power bins.
  int num_features = 40;
  int conv_channels = 64;
  int blstm_layers = 1;
  int blstm_hidden = 64;
  int projection = 64;
  int embedding_dim = 16;
  int decoder_hidden = 64;
  int attention_dim = 32;
  double lambda = 0.2;
  /// Reserved for a location-aware attention variant; must stay false.
  bool location_aware = false;

  void Validate() const;
  std::map<std::string, std::string> ToMap() const;
  bool operator==(const AsrConfig&) const = default;
};

inline constexpr double kFeatureFloor = 1e-10;

/// log(floor + filterbank * |STFT|^2), frames x features.
ag::Var StftFeatures(const ag::Var& x, const AsrConfig& config);
int StftFrameCount(int length, const AsrConfig& config);

struct AsrOutput {
  ag::Matrix ctc_log_posteriors;        // frames x alphabet
  ag::Matrix attention_log_posteriors;  // steps x alphabet
  TokenSequence hypothesis;
};

/// Differentiable pieces of a recognizer pass.
struct AsrGraph {
  ag::Var encoded;
  ag::Var ctc_log_posteriors;
  ag::Var attention_log_posteriors;  // teacher-forced, defined when a reference is given
};

/// lambda * CTC + (1 - lambda) * summed attention cross-entropy (eos included).
ag::Var AsrLoss(const ag::Var& ctc_log_posteriors, const ag::Var& attention_log_posteriors,
                const TokenSequence& reference, double lambda, const Alphabet& alphabet);

/// Small CTC/attention recognizer: two strided convolutions over time,
/// projected BLSTMs, a CTC head and an additive-attention LSTM decoder.
class Recognizer {
 public:
  Recognizer(const AsrConfig& config, uint64_t seed);

  const AsrConfig& config() const { return config_; }
  const Alphabet& alphabet() const { return alphabet_; }

  ag::Var Encode(const ag::Var& features) const;
  /// With a reference the decoder is teacher-forced for len(reference) + 1 steps.
  AsrGraph Forward(const ag::Var& features, const TokenSequence* reference) const;
  /// Waveform (T x 1) -> scalar loss.
  ag::Var Loss(const ag::Var& waveform, const TokenSequence& reference) const;
  /// Greedy attention decoding capped at max_steps (<= 0 means encoder frames).
  AsrOutput Recognize(const Waveform& x, int max_steps = 0) const;
  AsrOutput RecognizeFeatures(const ag::Var& features, int max_steps = 0) const;

  ag::ParameterStore& params() { return params_; }
  const ag::ParameterStore& params() const { return params_; }

 private:
  struct DecoderState {
    ag::Var h, c, context;
  };
  ag::Var Linear(const ag::Var& x, const std::string& name) const;
  ag::Var DecoderStep(int token, const ag::Var& encoded, const ag::Var& encoded_proj,
                      DecoderState* state) const;

  AsrConfig config_;
  Alphabet alphabet_;
  ag::ParameterStore params_;
};

/// Argmax per row until eos.
TokenSequence GreedyFromPosteriors(const ag::Matrix& attention_log_posteriors, int eos);
/// Best path, merge repeats, drop blanks.
TokenSequence CtcBestPath(const ag::Matrix& ctc_log_posteriors, int blank);

enum class ErrorUnit { kChar, kWord };
std::size_t Levenshtein(const std::vector<std::string>& hyp, const std::vector<std::string>& ref);
/// Levenshtein distance / reference length at the chosen unit.
double EditDistanceRate(const std::string& hyp, const std::string& ref, ErrorUnit unit);

}  // namespace orpit

#endif  // ORPIT_ASR_H_
