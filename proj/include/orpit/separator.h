// orpit/separator.h

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

#ifndef ORPIT_SEPARATOR_H_
#define ORPIT_SEPARATOR_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "orpit/autograd.h"
#include "orpit/common.h"

namespace orpit {

struct SeparatorConfig {
  int encoder_window = 16;
  int encoder_stride = 8;
  int latent_dim = 32;
  int num_blocks = 2;
  int hidden_units = 32;
  int chunk_size = 50;
  int num_outputs = 2;
  bool stop_flag = false;
  /// Extra core channels feeding the stop-flag head.
  int flag_dim = 8;

  /// Six blocks, 128 units, window 16, chunk 100.
  static SeparatorConfig FullScale();
  void Validate() const;
  std::map<std::string, std::string> ToMap() const;
  bool operator==(const SeparatorConfig&) const = default;
};

/// Result of one separation pass over a waveform.
struct SeparatorOutput {
  std::vector<Waveform> streams;
  std::optional<double> stop_flag_prob;
};

/// Anything the iterative extraction loop can drive.
class Extractor {
 public:
  virtual ~Extractor() = default;
  virtual int num_outputs() const = 0;
  virtual SeparatorOutput Separate(const Waveform& x) const = 0;
};

/// Differentiable outputs of a forward pass.
struct SeparatorGraph {
  std::vector<ag::Var> streams;  // each T x 1
  ag::Var stop_flag_prob;        // 1 x 1, undefined without a flag head
};

struct CoreOutput {
  std::vector<ag::Var> masked;  // per output, frames x latent_dim
  ag::Var flag_features;        // frames x flag_dim, undefined without a flag head
};

/// Chunk bookkeeping of the dual-path core.
struct ChunkGrid {
  int frames = 0;
  int chunk = 0;
  int hop = 0;
  int chunks = 0;
  /// Frame count after right padding: (chunks - 1) * hop + chunk.
  int padded_frames() const { return (chunks - 1) * hop + chunk; }
  static ChunkGrid For(int frames, int chunk_size);
};

/// Time-domain masking separator: conv encoder, dual-path recurrent core with
/// alternating intra- and inter-chunk BLSTMs, transposed-conv decoder.
class Separator : public Extractor {
 public:
  Separator(const SeparatorConfig& config, uint64_t seed);

  const SeparatorConfig& config() const { return config_; }
  int num_outputs() const override { return config_.num_outputs; }

  /// T x 1 -> F x N, F = floor((T - W) / S) + 1.
  ag::Var Encode(const ag::Var& x) const;
  CoreOutput Core(const ag::Var& latent) const;
  /// F x N -> length x 1 by overlap-add.
  ag::Var Decode(const ag::Var& latent, int length) const;
  /// Linear scalar per frame, mean over frames, sigmoid.
  ag::Var StopFlagHead(const ag::Var& features) const;

  SeparatorGraph Forward(const ag::Var& x) const;
  SeparatorOutput Separate(const Waveform& x) const override;

  ag::ParameterStore& params() { return params_; }
  const ag::ParameterStore& params() const { return params_; }

  /// Column range of the output projection that only feeds stream k.
  std::pair<int, int> OutputColumns(int k) const;

 private:
  ag::Var Linear(const ag::Var& x, const std::string& name, bool bias = true) const;
  ag::Var Blstm(const ag::Var& x, const std::string& name, int steps, int batch) const;

  SeparatorConfig config_;
  ag::ParameterStore params_;
};

}  // namespace orpit

#endif  // ORPIT_SEPARATOR_H_
