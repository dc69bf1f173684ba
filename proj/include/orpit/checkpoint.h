// orpit/checkpoint.h

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

#ifndef ORPIT_CHECKPOINT_H_
#define ORPIT_CHECKPOINT_H_

#include <memory>
#include <optional>
#include <string>

#include "orpit/asr.h"
#include "orpit/separator.h"

namespace orpit {

/// A saved model pair. The configuration of each network travels with its
/// weights so a checkpoint can be rebuilt without the training config.
struct Checkpoint {
  std::unique_ptr<Separator> separator;
  std::unique_ptr<Recognizer> recognizer;  // may be null
  std::string scheme;                      // training scheme that produced it
  int step = 0;
  std::optional<double> dev_loss;
};

/// JSON container; parameter values are written with round-trip precision.
void SaveCheckpoint(const std::string& path, const Separator& separator,
                    const Recognizer* recognizer, const std::string& scheme, int step,
                    std::optional<double> dev_loss);
Checkpoint LoadCheckpoint(const std::string& path);

/// Throws ConfigError("incompatible checkpoint ...") unless the stored
/// network configurations equal the expected ones. A null `asr` skips the
/// recogniser check.
void CheckCompatible(const Checkpoint& ckpt, const SeparatorConfig& sep, const AsrConfig* asr);

/// Copies every parameter of `from` into `to`; names and shapes must match.
void CopyParameters(const ag::ParameterStore& from, ag::ParameterStore* to);

}  // namespace orpit

#endif  // ORPIT_CHECKPOINT_H_
