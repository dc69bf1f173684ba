// common.cc

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

#include "orpit/common.h"

#include <cmath>
#include <sstream>

namespace orpit {

double Waveform::Energy() const {
  double e = 0.0;
  for (double x : samples) e += x * x;
  return e;
}

double Waveform::MeanPower() const {
  if (samples.empty()) return 0.0;
  return Energy() / static_cast<double>(samples.size());
}

void Waveform::Validate() const {
  if (samples.empty()) throw InvalidArgument("waveform is empty");
  if (sample_rate <= 0) throw InvalidArgument("waveform sample rate must be positive");
  for (double x : samples) {
    if (!std::isfinite(x)) throw InvalidArgument("waveform contains a non-finite sample");
  }
}

namespace {
void CheckCompatible(const Waveform& a, const Waveform& b) {
  if (a.size() != b.size() || a.sample_rate != b.sample_rate) {
    std::ostringstream os;
    os << "incompatible waveforms: " << a.size() << "@" << a.sample_rate << " vs " << b.size()
       << "@" << b.sample_rate;
    throw InvalidArgument(os.str());
  }
}
}  // namespace

Waveform Add(const Waveform& a, const Waveform& b) {
  CheckCompatible(a, b);
  Waveform out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += b.samples[i];
  return out;
}

Waveform Subtract(const Waveform& a, const Waveform& b) {
  CheckCompatible(a, b);
  Waveform out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] -= b.samples[i];
  return out;
}

Waveform Scaled(const Waveform& a, double gain) {
  Waveform out = a;
  for (double& x : out.samples) x *= gain;
  return out;
}

Waveform Zeros(std::size_t length, int sample_rate) {
  return Waveform(std::vector<double>(length, 0.0), sample_rate);
}

uint64_t MixSeed(uint64_t a, uint64_t b) {
  uint64_t z = a + 0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2) + b * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t HashString(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace orpit
