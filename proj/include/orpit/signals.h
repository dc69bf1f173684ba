// orpit/signals.h

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

#ifndef ORPIT_SIGNALS_H_
#define ORPIT_SIGNALS_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "orpit/common.h"

namespace orpit {

enum class SourceKind { kToneBurst, kBandNoise, kSyllabic };
enum class OverlapMode { kMin, kMax };

SourceKind ParseSourceKind(const std::string& name);
std::string ToString(SourceKind kind);
OverlapMode ParseOverlapMode(const std::string& name);
std::string ToString(OverlapMode mode);

/// Symbols a syllabic source can speak. Space is a short pause.
inline constexpr const char* kSyllabicTokens = "abcdefghijkl";

struct SynthOptions {
  int sample_rate = 8000;
  /// Voice identity; -1 derives it from the seed. Each voice owns a disjoint
  /// carrier band.
  int speaker = -1;
  int num_speakers = 4;
  double peak = 0.25;
  double syllable_s = 0.1;
};

/// Centre frequency (Hz) of a voice's carrier band.
double SpeakerCentreHz(int speaker, int num_speakers, int sample_rate);

/// Deterministic synthetic utterance. `duration_s` is ignored for syllabic
/// sources, whose length is tokens * syllable_s.
Waveform SynthSource(SourceKind kind, double duration_s, const std::string& tokens, uint64_t seed,
                     const SynthOptions& options = {});

struct MixtureExample {
  Waveform mixture;
  std::vector<Waveform> sources;  // gain-scaled, aligned to the mixture
  std::vector<std::string> transcripts;
  OverlapMode overlap_mode = OverlapMode::kMin;
  std::vector<double> gains_db;

  std::size_t num_sources() const { return sources.size(); }
};

/// Truncates (min) or zero-pads with a random onset (max) and sums the
/// gain-scaled sources.
MixtureExample MakeMixture(const std::vector<Waveform>& sources, OverlapMode mode,
                           const std::vector<double>& gains_db, uint64_t seed,
                           const std::vector<std::string>& transcripts = {});

struct ManifestEntry {
  std::string id;
  std::string mix;                // path relative to the manifest directory
  std::vector<std::string> srcs;  // idem
  std::vector<std::string> texts;
  int k = 0;
  OverlapMode mode = OverlapMode::kMin;
  uint64_t seed = 0;
};

struct DatasetManifest {
  std::string root;  // directory the relative paths resolve against
  std::vector<ManifestEntry> entries;
};

struct DatasetSpec {
  std::map<int, int> counts;  // K -> number of examples
  std::vector<OverlapMode> modes = {OverlapMode::kMin};
  std::vector<SourceKind> kinds = {SourceKind::kSyllabic};
  uint64_t seed = 0;
  std::string output_dir;
  int sample_rate = 8000;
  int num_speakers = 4;
  double min_duration_s = 0.8;
  double max_duration_s = 1.2;
  int min_tokens = 6;
  int max_tokens = 10;
  double gain_jitter_db = 2.5;
};

/// Writes WAV files plus manifest.jsonl under spec.output_dir. Regenerating
/// the same spec yields byte-identical output.
DatasetManifest BuildDataset(const DatasetSpec& spec);
/// The in-memory examples BuildDataset would write (before quantisation).
std::vector<std::pair<ManifestEntry, MixtureExample>> GenerateExamples(const DatasetSpec& spec);

void WriteManifest(const std::string& path, const DatasetManifest& manifest);
/// Reads a JSONL manifest; every referenced file must exist.
DatasetManifest ReadManifest(const std::string& path);
/// Loads mixture and sources of one entry from disk.
MixtureExample LoadExample(const DatasetManifest& manifest, const ManifestEntry& entry);

/// Random transcript of whole words over kSyllabicTokens, `tokens` symbols
/// long including single spaces between words.
std::string RandomTranscript(int tokens, uint64_t seed);

// 16-bit PCM mono RIFF/WAVE.
Waveform ReadWav(const std::string& path);
/// Returns the number of clipped samples (|x| > 1 before quantisation).
std::size_t WriteWav(const std::string& path, const Waveform& wav);

}  // namespace orpit

#endif  // ORPIT_SIGNALS_H_
