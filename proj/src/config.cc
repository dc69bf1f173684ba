// config.cc

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

#include "orpit/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace orpit {

Scheme ParseScheme(const std::string& name) {
  if (name == "tasnet_fixed") return Scheme::kTasnetFixed;
  if (name == "orpit_single") return Scheme::kOrpitSingle;
  if (name == "orpit_multi") return Scheme::kOrpitMulti;
  if (name == "asr_clean") return Scheme::kAsrClean;
  throw ConfigError("unknown training scheme '" + name + "'");
}

std::string ToString(Scheme scheme) {
  switch (scheme) {
    case Scheme::kTasnetFixed: return "tasnet_fixed";
    case Scheme::kOrpitSingle: return "orpit_single";
    case Scheme::kOrpitMulti: return "orpit_multi";
    case Scheme::kAsrClean: return "asr_clean";
  }
  return "tasnet_fixed";
}

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config key '" + key + "': cannot parse '" + v + "'");
  }
  return out;
}

bool ParseBool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::string FormatDouble(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

std::string FormatBool(bool b) { return b ? "true" : "false"; }

template <typename T, typename F>
std::string Join(const std::vector<T>& items, F fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += fmt(items[i]);
  }
  return out;
}

struct Field {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define ORPIT_INT(KEY, MEMBER)                                                   \
  Field{KEY, [](const ExperimentConfig& c) { return std::to_string(c.MEMBER); }, \
        [](ExperimentConfig& c, const std::string& v) { c.MEMBER = ParseNumber<int>(KEY, v); }}
#define ORPIT_U64(KEY, MEMBER)                                                   \
  Field{KEY, [](const ExperimentConfig& c) { return std::to_string(c.MEMBER); }, \
        [](ExperimentConfig& c, const std::string& v) { c.MEMBER = ParseNumber<uint64_t>(KEY, v); }}
#define ORPIT_DBL(KEY, MEMBER)                                               \
  Field{KEY, [](const ExperimentConfig& c) { return FormatDouble(c.MEMBER); }, \
        [](ExperimentConfig& c, const std::string& v) { c.MEMBER = ParseNumber<double>(KEY, v); }}
#define ORPIT_BOOL(KEY, MEMBER)                                             \
  Field{KEY, [](const ExperimentConfig& c) { return FormatBool(c.MEMBER); }, \
        [](ExperimentConfig& c, const std::string& v) { c.MEMBER = ParseBool(KEY, v); }}
#define ORPIT_STR(KEY, MEMBER)                                    \
  Field{KEY, [](const ExperimentConfig& c) { return c.MEMBER; }, \
        [](ExperimentConfig& c, const std::string& v) { c.MEMBER = v; }}
#define ORPIT_ENUM(KEY, MEMBER, PARSE)                                          \
  Field{KEY, [](const ExperimentConfig& c) { return ToString(c.MEMBER); }, \
        [](ExperimentConfig& c, const std::string& v) { c.MEMBER = PARSE(v); }}

std::string FormatCounts(const std::map<int, int>& counts) {
  std::string out;
  for (const auto& [k, n] : counts) {
    if (!out.empty()) out += ",";
    out += std::to_string(k) + ":" + std::to_string(n);
  }
  return out;
}

std::map<int, int> ParseCounts(const std::string& v) {
  std::map<int, int> out;
  for (const std::string& item : SplitList(v)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("synth.counts: expected K:N pairs");
    out[ParseNumber<int>("synth.counts", Trim(item.substr(0, colon)))] =
        ParseNumber<int>("synth.counts", Trim(item.substr(colon + 1)));
  }
  return out;
}

const std::vector<Field>& Fields() {
  static const std::vector<Field> fields = {
      Field{"synth.counts", [](const ExperimentConfig& c) { return FormatCounts(c.synth.counts); },
            [](ExperimentConfig& c, const std::string& v) { c.synth.counts = ParseCounts(v); }},
      Field{"synth.modes",
            [](const ExperimentConfig& c) {
              return Join(c.synth.modes, [](OverlapMode m) { return ToString(m); });
            },
            [](ExperimentConfig& c, const std::string& v) {
              c.synth.modes.clear();
              for (const auto& s : SplitList(v)) c.synth.modes.push_back(ParseOverlapMode(s));
            }},
      Field{"synth.kinds",
            [](const ExperimentConfig& c) {
              return Join(c.synth.kinds, [](SourceKind k) { return ToString(k); });
            },
            [](ExperimentConfig& c, const std::string& v) {
              c.synth.kinds.clear();
              for (const auto& s : SplitList(v)) c.synth.kinds.push_back(ParseSourceKind(s));
            }},
      ORPIT_U64("synth.seed", synth.seed),
      ORPIT_STR("synth.out", synth.output_dir),
      ORPIT_INT("synth.sample_rate", synth.sample_rate),
      ORPIT_INT("synth.num_speakers", synth.num_speakers),
      ORPIT_DBL("synth.min_duration_s", synth.min_duration_s),
      ORPIT_DBL("synth.max_duration_s", synth.max_duration_s),
      ORPIT_INT("synth.min_tokens", synth.min_tokens),
      ORPIT_INT("synth.max_tokens", synth.max_tokens),
      ORPIT_DBL("synth.gain_jitter_db", synth.gain_jitter_db),

      ORPIT_INT("sep.encoder_window", sep.encoder_window),
      ORPIT_INT("sep.encoder_stride", sep.encoder_stride),
      ORPIT_INT("sep.latent_dim", sep.latent_dim),
      ORPIT_INT("sep.num_blocks", sep.num_blocks),
      ORPIT_INT("sep.hidden_units", sep.hidden_units),
      ORPIT_INT("sep.chunk_size", sep.chunk_size),
      ORPIT_INT("sep.num_outputs", sep.num_outputs),
      ORPIT_BOOL("sep.stop_flag", sep.stop_flag),
      ORPIT_INT("sep.flag_dim", sep.flag_dim),

      ORPIT_ENUM("stop.kind", stop.kind, ParseStopKind),
      ORPIT_DBL("stop.gamma", stop.gamma),
      ORPIT_DBL("stop.flag_cutoff", stop.flag_cutoff),
      ORPIT_INT("stop.max_iterations", stop.max_iterations),

      ORPIT_BOOL("asr.enabled", use_asr),
      ORPIT_INT("asr.stft_window", asr.stft_window),
      ORPIT_INT("asr.stft_hop", asr.stft_hop),
      ORPIT_INT("asr.num_features", asr.num_features),
      ORPIT_INT("asr.conv_channels", asr.conv_channels),
      ORPIT_INT("asr.blstm_layers", asr.blstm_layers),
      ORPIT_INT("asr.blstm_hidden", asr.blstm_hidden),
      ORPIT_INT("asr.projection", asr.projection),
      ORPIT_INT("asr.embedding_dim", asr.embedding_dim),
      ORPIT_INT("asr.decoder_hidden", asr.decoder_hidden),
      ORPIT_INT("asr.attention_dim", asr.attention_dim),
      ORPIT_DBL("asr.lambda", asr.lambda),
      ORPIT_BOOL("asr.location_aware", asr.location_aware),

      ORPIT_INT("train.steps", train.steps),
      ORPIT_INT("train.batch_size", train.batch_size),
      ORPIT_DBL("train.lr", train.lr),
      ORPIT_U64("train.seed", train.seed),
      ORPIT_ENUM("train.scheme", train.scheme, ParseScheme),
      ORPIT_ENUM("train.tune", train.tune, ParseTuneMode),
      ORPIT_ENUM("train.loss", train.loss, ParseBaseLoss),
      ORPIT_DBL("train.crop_s", train.crop_s),
      ORPIT_INT("train.dev_every", train.dev_every),
      ORPIT_DBL("train.fe_weight", train.fe_weight),
      ORPIT_DBL("train.feedback_ratio", train.feedback_ratio),
      ORPIT_DBL("train.clip", train.clip),
      ORPIT_INT("train.lr_patience", train.lr_patience),
      ORPIT_STR("train.init", train.init),
      ORPIT_STR("train.out", train.out),
      ORPIT_STR("train.log", train.log),

      ORPIT_STR("data.train", data.train),
      ORPIT_STR("data.dev", data.dev),
      ORPIT_STR("data.test", data.test),

      ORPIT_BOOL("eval.oracle_count", eval.oracle_count),
      ORPIT_BOOL("eval.vad", eval.vad),
      ORPIT_DBL("eval.vad_threshold_db", eval.vad_threshold_db),
      ORPIT_BOOL("eval.asr", eval.asr),
      ORPIT_STR("eval.report", eval.report),
      ORPIT_STR("eval.table", eval.table),
      ORPIT_STR("eval.hypotheses", eval.hypotheses),
  };
  return fields;
}

#undef ORPIT_INT
#undef ORPIT_U64
#undef ORPIT_DBL
#undef ORPIT_BOOL
#undef ORPIT_STR
#undef ORPIT_ENUM

}  // namespace

void ExperimentConfig::Set(const std::string& key, const std::string& value) {
  for (const Field& f : Fields()) {
    if (f.key != key) continue;
    try {
      f.set(*this, value);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
    return;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::ToKeyValues() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Field& f : Fields()) out.emplace_back(f.key, f.get(*this));
  return out;
}

std::string ExperimentConfig::ToText() const {
  std::string out;
  for (const auto& [k, v] : ToKeyValues()) out += k + " = " + v + "\n";
  return out;
}

void ExperimentConfig::Validate() const {
  sep.Validate();
  try {
    stop.Validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (use_asr) asr.Validate();
  if (train.steps < 0) throw ConfigError("train.steps must be >= 0");
  if (train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(train.lr > 0.0)) throw ConfigError("train.lr must be positive");
  if (train.crop_s < 0.0) throw ConfigError("train.crop_s must be >= 0");
  if (train.dev_every < 0) throw ConfigError("train.dev_every must be >= 0");
  if (!(train.feedback_ratio >= 0.0 && train.feedback_ratio <= 1.0)) {
    throw ConfigError("train.feedback_ratio must be in [0, 1]");
  }
  if (train.lr_patience < 0) throw ConfigError("train.lr_patience must be >= 0");
  if ((train.scheme == Scheme::kOrpitSingle || train.scheme == Scheme::kOrpitMulti) &&
      sep.num_outputs != 2) {
    throw ConfigError("OR-PIT schemes need sep.num_outputs = 2");
  }
  const bool needs_asr = train.scheme == Scheme::kAsrClean || train.tune != TuneMode::kSeparation;
  if (needs_asr && !use_asr) throw ConfigError("this training setup needs asr.enabled = true");
  if (train.scheme == Scheme::kAsrClean && train.tune != TuneMode::kAsrOnly) {
    throw ConfigError("scheme asr_clean requires train.tune = asr_only");
  }
}

std::vector<std::pair<std::string, std::string>> ParseKeyValueText(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = Trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    out.emplace_back(std::move(key), Trim(line.substr(eq + 1)));
  }
  return out;
}

ExperimentConfig ConfigFromText(const std::string& text) {
  ExperimentConfig c;
  for (const auto& [k, v] : ParseKeyValueText(text)) c.Set(k, v);
  return c;
}

ExperimentConfig LoadConfig(const std::string& path,
                            const std::vector<std::pair<std::string, std::string>>& overrides) {
  ExperimentConfig c;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    c = ConfigFromText(ss.str());
  }
  for (const auto& [k, v] : overrides) c.Set(k, v);
  return c;
}

std::pair<std::string, std::string> ParseOverride(const std::string& flag) {
  if (flag.rfind("--", 0) != 0) throw ConfigError("expected --key=value, got '" + flag + "'");
  const auto eq = flag.find('=');
  if (eq == std::string::npos || eq == 2) {
    throw ConfigError("expected --key=value, got '" + flag + "'");
  }
  return {flag.substr(2, eq - 2), flag.substr(eq + 1)};
}

}  // namespace orpit
