// orpit/common.h

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

#ifndef ORPIT_COMMON_H_
#define ORPIT_COMMON_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace orpit {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed user input: bad config keys, out-of-range options, mismatched
/// shapes handed in from outside.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Configuration errors map to exit code 2 in the command-line tool.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Mono audio. The universal signal type of the project.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 8000;

  Waveform() = default;
  Waveform(std::vector<double> s, int rate) : samples(std::move(s)), sample_rate(rate) {}

  std::size_t size() const { return samples.size(); }
  /// (1/T) sum_t x(t)^2; zero for an empty signal.
  double MeanPower() const;
  double Energy() const;
  /// Throws InvalidArgument unless length >= 1, all samples finite and rate > 0.
  void Validate() const;
};

/// Sample-wise a + b. Lengths and rates must match.
Waveform Add(const Waveform& a, const Waveform& b);
Waveform Subtract(const Waveform& a, const Waveform& b);
Waveform Scaled(const Waveform& a, double gain);
Waveform Zeros(std::size_t length, int sample_rate);

/// Deterministic 64-bit mixing (splitmix64); used to derive per-entry seeds.
uint64_t MixSeed(uint64_t a, uint64_t b);
uint64_t HashString(const std::string& s);

}  // namespace orpit

#endif  // ORPIT_COMMON_H_
