// test_signals.cc

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "orpit/signals.h"

using namespace orpit;
namespace fs = std::filesystem;

namespace {

std::string Slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path TempDir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("orpit_test_signals_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void Put16(std::ofstream& o, uint16_t v) { o.put(static_cast<char>(v & 0xff)).put(static_cast<char>(v >> 8)); }
void Put32(std::ofstream& o, uint32_t v) {
  Put16(o, static_cast<uint16_t>(v & 0xffff));
  Put16(o, static_cast<uint16_t>(v >> 16));
}

}  // namespace

TEST_CASE("sources are deterministic and tokens matter") {
  const Waveform a = SynthSource(SourceKind::kToneBurst, 1.0, "", 7);
  const Waveform b = SynthSource(SourceKind::kToneBurst, 1.0, "", 7);
  CHECK(a.samples == b.samples);
  const Waveform ab = SynthSource(SourceKind::kSyllabic, 0.0, "ab", 1);
  const Waveform ba = SynthSource(SourceKind::kSyllabic, 0.0, "ba", 1);
  CHECK(ab.size() == ba.size());
  CHECK(ab.samples != ba.samples);
  CHECK(SynthSource(SourceKind::kBandNoise, 0.5, "", 3).size() == 4000);
  CHECK(SynthSource(SourceKind::kSyllabic, 0.0, "abc d", 3).size() == 4000);
}

TEST_CASE("sources stay within the peak and reject bad arguments") {
  for (SourceKind k : {SourceKind::kToneBurst, SourceKind::kBandNoise, SourceKind::kSyllabic}) {
    const Waveform w = SynthSource(k, 0.3, "kal", 11);
    double peak = 0.0;
    for (double v : w.samples) peak = std::max(peak, std::abs(v));
    CHECK(peak <= 1.0);
    CHECK(peak == doctest::Approx(0.25));
  }
  CHECK_THROWS_AS(SynthSource(SourceKind::kToneBurst, 0.0, "", 1), InvalidArgument);
  CHECK_THROWS_AS(SynthSource(SourceKind::kSyllabic, 1.0, "", 1), InvalidArgument);
  CHECK_THROWS_AS(SynthSource(SourceKind::kSyllabic, 1.0, "xyz", 1), InvalidArgument);
  CHECK_THROWS(ParseSourceKind("speech"));
}

TEST_CASE("voices occupy disjoint bands") {
  CHECK(SpeakerCentreHz(0, 4, 8000) == 500.0);
  CHECK(SpeakerCentreHz(3, 4, 8000) == 3500.0);
}

TEST_CASE("mixture sums, truncation and padding") {
  const Waveform s = SynthSource(SourceKind::kBandNoise, 0.5, "", 5);
  const MixtureExample twice = MakeMixture({s, s}, OverlapMode::kMin, {0.0, 0.0}, 1);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(twice.mixture.samples[i] == 2.0 * s.samples[i]);
  for (OverlapMode m : {OverlapMode::kMin, OverlapMode::kMax}) {
    const MixtureExample one = MakeMixture({s}, m, {0.0}, 9);
    CHECK(one.mixture.samples == s.samples);
  }
  const Waveform long_src = SynthSource(SourceKind::kBandNoise, 1.0, "", 6);
  const MixtureExample mn = MakeMixture({long_src, s}, OverlapMode::kMin, {0.0, 0.0}, 2);
  CHECK(mn.mixture.size() == 4000);
  for (const auto& src : mn.sources) CHECK(src.size() == 4000);
  const MixtureExample mx = MakeMixture({long_src, s}, OverlapMode::kMax, {0.0, 0.0}, 2);
  CHECK(mx.mixture.size() >= 8000);
  // Every source keeps its full extent.
  for (std::size_t k = 0; k < 2; ++k) {
    const Waveform& orig = k == 0 ? long_src : s;
    CHECK(mx.sources[k].Energy() == doctest::Approx(orig.Energy()));
  }
  CHECK_THROWS_AS(MakeMixture({}, OverlapMode::kMin, {}, 1), InvalidArgument);
  Waveform other = s;
  other.sample_rate = 16000;
  CHECK_THROWS_AS(MakeMixture({s, other}, OverlapMode::kMin, {0.0, 0.0}, 1), InvalidArgument);
}

TEST_CASE("generated mixtures equal the sum of their sources") {
  DatasetSpec spec;
  spec.counts = {{1, 2}, {2, 2}, {3, 2}, {4, 2}};
  spec.modes = {OverlapMode::kMin, OverlapMode::kMax};
  spec.kinds = {SourceKind::kSyllabic, SourceKind::kToneBurst, SourceKind::kBandNoise};
  spec.seed = 4;
  for (const auto& [entry, ex] : GenerateExamples(spec)) {
    CHECK(static_cast<int>(ex.sources.size()) == entry.k);
    double worst = 0.0;
    for (std::size_t t = 0; t < ex.mixture.size(); ++t) {
      double sum = 0.0;
      for (const auto& s : ex.sources) sum += s.samples[t];
      worst = std::max(worst, std::abs(sum - ex.mixture.samples[t]));
    }
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("dataset build is byte-identical and covers every count") {
  const fs::path a = TempDir("a"), b = TempDir("b");
  DatasetSpec spec;
  spec.counts = {{1, 5}, {2, 5}, {3, 5}, {4, 5}};
  spec.seed = 21;
  spec.output_dir = a.string();
  const DatasetManifest ma = BuildDataset(spec);
  spec.output_dir = b.string();
  BuildDataset(spec);
  CHECK(ma.entries.size() == 20);
  std::map<int, int> per_k;
  for (const auto& e : ma.entries) ++per_k[e.k];
  CHECK(per_k == std::map<int, int>{{1, 5}, {2, 5}, {3, 5}, {4, 5}});
  CHECK(Slurp((a / "manifest.jsonl").string()) == Slurp((b / "manifest.jsonl").string()));
  CHECK(Slurp((a / ma.entries[7].mix).string()) == Slurp((b / ma.entries[7].mix).string()));

  const DatasetManifest back = ReadManifest((a / "manifest.jsonl").string());
  REQUIRE(back.entries.size() == 20);
  CHECK(back.entries[3].texts == ma.entries[3].texts);
  const MixtureExample ex = LoadExample(back, back.entries[12]);
  CHECK(static_cast<int>(ex.sources.size()) == back.entries[12].k);

  spec.counts = {{2, 10}};
  spec.output_dir = TempDir("c").string();
  const DatasetManifest mc = BuildDataset(spec);
  CHECK(mc.entries.size() == 10);
  for (const auto& e : mc.entries) CHECK(e.k == 2);
}

TEST_CASE("manifest reader rejects duplicates and missing files") {
  const fs::path d = TempDir("bad");
  DatasetSpec spec;
  spec.counts = {{1, 2}};
  spec.output_dir = d.string();
  BuildDataset(spec);
  const std::string text = Slurp((d / "manifest.jsonl").string());
  const std::string first = text.substr(0, text.find('\n') + 1);
  {
    std::ofstream o(d / "dup.jsonl");
    o << first << first;
  }
  CHECK_THROWS(ReadManifest((d / "dup.jsonl").string()));
  fs::remove(d / "wav" / "k1_00001_mix.wav");
  CHECK_THROWS(ReadManifest((d / "manifest.jsonl").string()));
}

TEST_CASE("wav round trip, clipping report and format errors") {
  const fs::path d = TempDir("wav");
  Waveform ramp;
  for (int i = 0; i < 1000; ++i) ramp.samples.push_back(-0.9 + 1.8 * i / 999.0);
  const std::string path = (d / "ramp.wav").string();
  CHECK(WriteWav(path, ramp) == 0);
  const Waveform back = ReadWav(path);
  REQUIRE(back.size() == ramp.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < ramp.size(); ++i) worst = std::max(worst, std::abs(back.samples[i] - ramp.samples[i]));
  CHECK(worst <= 1.0 / 32768.0);
  CHECK(back.sample_rate == 8000);

  Waveform loud({0.5, 1.5, -2.0}, 8000);
  CHECK(WriteWav((d / "loud.wav").string(), loud) == 2);

  const std::string stereo = (d / "stereo.wav").string();
  {
    std::ofstream o(stereo, std::ios::binary);
    o.write("RIFF", 4);
    Put32(o, 36 + 8);
    o.write("WAVEfmt ", 8);
    Put32(o, 16);
    Put16(o, 1);
    Put16(o, 2);
    Put32(o, 8000);
    Put32(o, 8000 * 4);
    Put16(o, 4);
    Put16(o, 16);
    o.write("data", 4);
    Put32(o, 8);
    for (int i = 0; i < 4; ++i) Put16(o, 0);
  }
  CHECK_THROWS_AS(ReadWav(stereo), IoError);
  const std::string empty = (d / "empty.wav").string();
  std::ofstream(empty).close();
  CHECK_THROWS_AS(ReadWav(empty), IoError);
  CHECK_THROWS_AS(ReadWav((d / "absent.wav").string()), IoError);
}

TEST_CASE("random transcripts use the syllabic alphabet") {
  const std::string t = RandomTranscript(9, 3);
  CHECK(t.size() == 9);
  CHECK(t.front() != ' ');
  CHECK(t.back() != ' ');
  CHECK(t.find("  ") == std::string::npos);
  for (char c : t) CHECK((c == ' ' || std::string(kSyllabicTokens).find(c) != std::string::npos));
  CHECK(RandomTranscript(9, 3) == t);
}
