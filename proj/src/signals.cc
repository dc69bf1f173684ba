// signals.cc

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

#include "orpit/signals.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace orpit {

namespace fs = std::filesystem;
using std::numbers::pi;

SourceKind ParseSourceKind(const std::string& name) {
  if (name == "tone_burst") return SourceKind::kToneBurst;
  if (name == "band_noise") return SourceKind::kBandNoise;
  if (name == "syllabic") return SourceKind::kSyllabic;
  throw InvalidArgument("unknown source kind '" + name + "'");
}

std::string ToString(SourceKind kind) {
  switch (kind) {
    case SourceKind::kToneBurst: return "tone_burst";
    case SourceKind::kBandNoise: return "band_noise";
    case SourceKind::kSyllabic: return "syllabic";
  }
  throw InvalidArgument("unknown source kind");
}

OverlapMode ParseOverlapMode(const std::string& name) {
  if (name == "min") return OverlapMode::kMin;
  if (name == "max") return OverlapMode::kMax;
  throw InvalidArgument("unknown overlap mode '" + name + "'");
}

std::string ToString(OverlapMode mode) { return mode == OverlapMode::kMin ? "min" : "max"; }

double SpeakerCentreHz(int speaker, int num_speakers, int sample_rate) {
  if (num_speakers < 1 || speaker < 0 || speaker >= num_speakers) {
    throw InvalidArgument("speaker index out of range");
  }
  const double band = 0.5 * sample_rate / num_speakers;
  return (speaker + 0.5) * band;
}

namespace {

void NormalisePeak(std::vector<double>* x, double peak) {
  double mx = 0.0;
  for (double v : *x) mx = std::max(mx, std::abs(v));
  if (mx <= 0.0) return;
  for (double& v : *x) v *= peak / mx;
}

// Raised-cosine fade at both ends, `ramp` samples long.
double Fade(std::size_t n, std::size_t len, std::size_t ramp) {
  if (ramp == 0) return 1.0;
  if (n < ramp) return 0.5 - 0.5 * std::cos(pi * static_cast<double>(n) / ramp);
  if (n + ramp >= len) return 0.5 - 0.5 * std::cos(pi * static_cast<double>(len - 1 - n) / ramp);
  return 1.0;
}

std::vector<double> ToneBursts(std::size_t length, double centre, int rate, std::mt19937_64& rng) {
  std::vector<double> out(length, 0.0);
  std::uniform_real_distribution<double> burst_s(0.06, 0.15);
  std::uniform_real_distribution<double> gap_s(0.02, 0.06);
  std::uniform_real_distribution<double> offset_hz(-100.0, 100.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * pi);
  std::size_t pos = 0;
  while (pos < length) {
    const std::size_t len = static_cast<std::size_t>(burst_s(rng) * rate);
    const double f = centre + offset_hz(rng);
    const double ph = phase(rng);
    for (std::size_t n = 0; n < len && pos + n < length; ++n) {
      out[pos + n] = Fade(n, len, len / 4) * std::sin(2.0 * pi * f * n / rate + ph);
    }
    pos += len + static_cast<std::size_t>(gap_s(rng) * rate);
  }
  return out;
}

std::vector<double> BandNoise(std::size_t length, double centre, int rate, std::mt19937_64& rng) {
  constexpr int kComponents = 24;
  constexpr double kHalfWidth = 200.0;
  std::uniform_real_distribution<double> freq(centre - kHalfWidth, centre + kHalfWidth);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * pi);
  std::uniform_real_distribution<double> env_rate(2.0, 6.0);
  std::vector<double> out(length, 0.0);
  for (int c = 0; c < kComponents; ++c) {
    const double f = freq(rng);
    const double ph = phase(rng);
    for (std::size_t n = 0; n < length; ++n) out[n] += std::sin(2.0 * pi * f * n / rate + ph);
  }
  const double er = env_rate(rng);
  const double eph = phase(rng);
  for (std::size_t n = 0; n < length; ++n) {
    out[n] *= (0.6 + 0.4 * std::sin(2.0 * pi * er * n / rate + eph)) *
              Fade(n, length, static_cast<std::size_t>(0.01 * rate));
  }
  return out;
}

// Each symbol is one syllable: an amplitude-modulation rate (index / 4) and a
// pitch contour (index % 4) around the speaker's carrier.
std::vector<double> Syllables(const std::string& tokens, double centre, int rate,
                              std::size_t syllable_len, std::mt19937_64& rng) {
  static const std::string kAlphabet = kSyllabicTokens;
  std::vector<double> out(tokens.size() * syllable_len, 0.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * pi);
  std::uniform_real_distribution<double> wobble(0.95, 1.05);
  double ph = phase(rng);
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const char c = tokens[k];
    if (c == ' ') continue;
    const auto idx = kAlphabet.find(c);
    if (idx == std::string::npos) throw InvalidArgument(std::string("unknown token '") + c + "'");
    const double am_hz = 10.0 * static_cast<double>(idx / 4);
    const int contour = static_cast<int>(idx % 4);
    const double depth = wobble(rng);
    const double dur = static_cast<double>(syllable_len) / rate;
    for (std::size_t n = 0; n < syllable_len; ++n) {
      const double t = static_cast<double>(n) / rate;
      const double u = t / dur;
      double f = centre;
      switch (contour) {
        case 0: f += 150.0 * depth * (2.0 * u - 1.0); break;
        case 1: break;
        case 2: f -= 150.0 * depth * (2.0 * u - 1.0); break;
        case 3: f += 100.0 * depth * std::sin(2.0 * pi * 15.0 * t); break;
      }
      ph += 2.0 * pi * f / rate;
      const double hann = 0.5 - 0.5 * std::cos(2.0 * pi * (n + 0.5) / syllable_len);
      const double am = 1.0 - 0.7 * (0.5 - 0.5 * std::cos(2.0 * pi * am_hz * t));
      out[k * syllable_len + n] = hann * am * std::sin(ph);
    }
  }
  return out;
}

}  // namespace

Waveform SynthSource(SourceKind kind, double duration_s, const std::string& tokens, uint64_t seed,
                     const SynthOptions& options) {
  if (options.sample_rate <= 0) throw InvalidArgument("sample rate must be positive");
  const int speaker = options.speaker >= 0
                          ? options.speaker
                          : static_cast<int>(seed % static_cast<uint64_t>(options.num_speakers));
  std::mt19937_64 rng(MixSeed(seed, static_cast<uint64_t>(kind) + 17));
  std::uniform_real_distribution<double> jitter(-40.0, 40.0);
  const double centre =
      SpeakerCentreHz(speaker, options.num_speakers, options.sample_rate) + jitter(rng);
  std::vector<double> samples;
  if (kind == SourceKind::kSyllabic) {
    if (tokens.empty()) throw InvalidArgument("syllabic source needs a nonempty token sequence");
    const auto syl = static_cast<std::size_t>(std::lround(options.syllable_s * options.sample_rate));
    samples = Syllables(tokens, centre, options.sample_rate, syl, rng);
  } else {
    if (!(duration_s > 0.0)) throw InvalidArgument("source duration must be positive");
    const auto length = static_cast<std::size_t>(std::lround(duration_s * options.sample_rate));
    if (length == 0) throw InvalidArgument("source duration shorter than one sample");
    samples = kind == SourceKind::kToneBurst ? ToneBursts(length, centre, options.sample_rate, rng)
                                             : BandNoise(length, centre, options.sample_rate, rng);
  }
  NormalisePeak(&samples, options.peak);
  return Waveform(std::move(samples), options.sample_rate);
}

MixtureExample MakeMixture(const std::vector<Waveform>& sources, OverlapMode mode,
                           const std::vector<double>& gains_db, uint64_t seed,
                           const std::vector<std::string>& transcripts) {
  if (sources.empty()) throw InvalidArgument("mixture needs at least one source");
  if (gains_db.size() != sources.size()) throw InvalidArgument("one gain per source required");
  if (!transcripts.empty() && transcripts.size() != sources.size()) {
    throw InvalidArgument("one transcript per source required");
  }
  const int rate = sources[0].sample_rate;
  std::size_t shortest = sources[0].size(), longest = sources[0].size();
  for (const auto& s : sources) {
    s.Validate();
    if (s.sample_rate != rate) throw InvalidArgument("mismatched sample rates in mixture");
    shortest = std::min(shortest, s.size());
    longest = std::max(longest, s.size());
  }

  std::vector<std::size_t> offsets(sources.size(), 0);
  std::size_t length = shortest;
  if (mode == OverlapMode::kMax) {
    std::mt19937_64 rng(MixSeed(seed, 0x6d6178));
    std::uniform_int_distribution<std::size_t> onset(0, longest / 4);
    for (auto& o : offsets) o = onset(rng);
    const std::size_t first = *std::min_element(offsets.begin(), offsets.end());
    length = 0;
    for (std::size_t k = 0; k < sources.size(); ++k) {
      offsets[k] -= first;
      length = std::max(length, offsets[k] + sources[k].size());
    }
  }

  MixtureExample ex;
  ex.overlap_mode = mode;
  ex.gains_db = gains_db;
  ex.transcripts = transcripts.empty() ? std::vector<std::string>(sources.size()) : transcripts;
  ex.mixture = Zeros(length, rate);
  for (std::size_t k = 0; k < sources.size(); ++k) {
    const double gain = std::pow(10.0, gains_db[k] / 20.0);
    Waveform aligned = Zeros(length, rate);
    const std::size_t n = std::min(sources[k].size(), length - offsets[k]);
    for (std::size_t t = 0; t < n; ++t) aligned.samples[offsets[k] + t] = gain * sources[k].samples[t];
    for (std::size_t t = 0; t < length; ++t) ex.mixture.samples[t] += aligned.samples[t];
    ex.sources.push_back(std::move(aligned));
  }
  return ex;
}

std::string RandomTranscript(int tokens, uint64_t seed) {
  if (tokens < 1) throw InvalidArgument("transcript needs at least one token");
  static const std::string kAlphabet = kSyllabicTokens;
  std::mt19937_64 rng(MixSeed(seed, 0x747874));
  std::uniform_int_distribution<std::size_t> letter(0, kAlphabet.size() - 1);
  std::string out;
  int remaining = tokens;
  while (remaining > 0) {
    int word = remaining;
    if (remaining > 3) {
      std::uniform_int_distribution<int> len(1, std::min(3, remaining - 2));
      word = len(rng);
    }
    for (int i = 0; i < word; ++i) out.push_back(kAlphabet[letter(rng)]);
    remaining -= word;
    if (remaining > 0) {
      out.push_back(' ');
      --remaining;
    }
  }
  return out;
}

std::vector<std::pair<ManifestEntry, MixtureExample>> GenerateExamples(const DatasetSpec& spec) {
  if (spec.modes.empty() || spec.kinds.empty()) throw InvalidArgument("dataset needs modes and kinds");
  std::vector<std::pair<ManifestEntry, MixtureExample>> out;
  for (const auto& [k, count] : spec.counts) {
    if (k < 1) throw InvalidArgument("talker count must be >= 1");
    if (k > spec.num_speakers) {
      throw InvalidArgument("talker count exceeds the number of synthetic voices");
    }
    for (int i = 0; i < count; ++i) {
      char id[32];
      std::snprintf(id, sizeof(id), "k%d_%05d", k, i);
      ManifestEntry entry;
      entry.id = id;
      entry.k = k;
      entry.mode = spec.modes[static_cast<std::size_t>(i) % spec.modes.size()];
      entry.seed = MixSeed(spec.seed, HashString(entry.id));
      std::mt19937_64 rng(entry.seed);

      std::vector<int> voices(static_cast<std::size_t>(spec.num_speakers));
      for (int v = 0; v < spec.num_speakers; ++v) voices[static_cast<std::size_t>(v)] = v;
      std::shuffle(voices.begin(), voices.end(), rng);

      std::vector<Waveform> sources;
      std::vector<std::string> texts;
      std::vector<double> gains;
      std::uniform_real_distribution<double> gain(-spec.gain_jitter_db, spec.gain_jitter_db);
      std::uniform_real_distribution<double> dur(spec.min_duration_s, spec.max_duration_s);
      std::uniform_int_distribution<int> ntok(spec.min_tokens, spec.max_tokens);
      for (int j = 0; j < k; ++j) {
        const SourceKind kind = spec.kinds[rng() % spec.kinds.size()];
        const uint64_t src_seed = MixSeed(entry.seed, static_cast<uint64_t>(j) + 1);
        SynthOptions opts;
        opts.sample_rate = spec.sample_rate;
        opts.num_speakers = spec.num_speakers;
        opts.speaker = voices[static_cast<std::size_t>(j)];
        std::string text;
        double d = dur(rng);
        if (kind == SourceKind::kSyllabic) text = RandomTranscript(ntok(rng), src_seed);
        sources.push_back(SynthSource(kind, d, text, src_seed, opts));
        texts.push_back(text);
        gains.push_back(spec.gain_jitter_db > 0.0 ? gain(rng) : 0.0);
      }
      MixtureExample ex = MakeMixture(sources, entry.mode, gains, MixSeed(entry.seed, 99), texts);

      // Keep the mixture inside 16-bit range.
      double peak = 0.0;
      for (double v : ex.mixture.samples) peak = std::max(peak, std::abs(v));
      if (peak > 0.95) {
        const double s = 0.95 / peak;
        ex.mixture = Scaled(ex.mixture, s);
        for (auto& src : ex.sources) src = Scaled(src, s);
        for (auto& g : ex.gains_db) g += 20.0 * std::log10(s);
      }
      entry.texts = texts;
      entry.mix = "wav/" + entry.id + "_mix.wav";
      for (int j = 0; j < k; ++j) entry.srcs.push_back("wav/" + entry.id + "_s" + std::to_string(j) + ".wav");
      out.emplace_back(std::move(entry), std::move(ex));
    }
  }
  return out;
}

DatasetManifest BuildDataset(const DatasetSpec& spec) {
  if (spec.output_dir.empty()) throw InvalidArgument("dataset output directory not set");
  std::error_code ec;
  fs::create_directories(fs::path(spec.output_dir) / "wav", ec);
  if (ec) throw IoError("cannot create " + spec.output_dir + ": " + ec.message());
  DatasetManifest manifest;
  manifest.root = spec.output_dir;
  for (auto& [entry, ex] : GenerateExamples(spec)) {
    const fs::path root(spec.output_dir);
    if (WriteWav((root / entry.mix).string(), ex.mixture) > 0) {
      throw IoError("mixture " + entry.id + " clipped while writing");
    }
    for (std::size_t j = 0; j < ex.sources.size(); ++j) {
      WriteWav((root / entry.srcs[j]).string(), ex.sources[j]);
    }
    manifest.entries.push_back(std::move(entry));
  }
  WriteManifest((fs::path(spec.output_dir) / "manifest.jsonl").string(), manifest);
  return manifest;
}

void WriteManifest(const std::string& path, const DatasetManifest& manifest) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write manifest " + path);
  for (const auto& e : manifest.entries) {
    nlohmann::ordered_json j;
    j["id"] = e.id;
    j["mix"] = e.mix;
    j["srcs"] = e.srcs;
    j["texts"] = e.texts;
    j["k"] = e.k;
    j["mode"] = ToString(e.mode);
    j["seed"] = e.seed;
    os << j.dump() << '\n';
  }
  if (!os) throw IoError("failed writing manifest " + path);
}

DatasetManifest ReadManifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open manifest " + path);
  DatasetManifest manifest;
  manifest.root = fs::path(path).parent_path().string();
  std::set<std::string> ids;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ManifestEntry e;
    try {
      const auto j = nlohmann::json::parse(line);
      e.id = j.at("id").get<std::string>();
      e.mix = j.at("mix").get<std::string>();
      e.srcs = j.at("srcs").get<std::vector<std::string>>();
      e.texts = j.at("texts").get<std::vector<std::string>>();
      e.k = j.at("k").get<int>();
      e.mode = ParseOverlapMode(j.at("mode").get<std::string>());
      e.seed = j.at("seed").get<uint64_t>();
    } catch (const nlohmann::json::exception& ex) {
      throw IoError(path + ":" + std::to_string(lineno) + ": " + ex.what());
    }
    if (!ids.insert(e.id).second) throw IoError("duplicate manifest id " + e.id);
    if (static_cast<std::size_t>(e.k) != e.srcs.size()) {
      throw IoError("manifest entry " + e.id + ": k does not match source count");
    }
    for (const auto& p : std::vector<std::string>{e.mix}) {
      if (!fs::exists(fs::path(manifest.root) / p)) throw IoError("missing file " + p);
    }
    for (const auto& p : e.srcs) {
      if (!fs::exists(fs::path(manifest.root) / p)) throw IoError("missing file " + p);
    }
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

MixtureExample LoadExample(const DatasetManifest& manifest, const ManifestEntry& entry) {
  const fs::path root(manifest.root);
  MixtureExample ex;
  ex.mixture = ReadWav((root / entry.mix).string());
  for (const auto& p : entry.srcs) {
    Waveform s = ReadWav((root / p).string());
    if (s.size() != ex.mixture.size()) throw IoError("source/mixture length mismatch in " + entry.id);
    ex.sources.push_back(std::move(s));
  }
  ex.transcripts = entry.texts;
  ex.transcripts.resize(ex.sources.size());
  ex.overlap_mode = entry.mode;
  ex.gains_db.assign(ex.sources.size(), 0.0);
  return ex;
}

}  // namespace orpit
