// checkpoint.cc

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

#include "orpit/checkpoint.h"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace orpit {

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kFormat = "orpit-checkpoint-1";

json ParamsToJson(const ag::ParameterStore& store) {
  json out = json::object();
  for (const auto& [name, var] : store.items()) {
    const ag::Matrix& m = var.value();
    std::vector<double> data(m.data(), m.data() + m.size());
    out[name] = {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
  }
  return out;
}

void ParamsFromJson(const json& j, ag::ParameterStore* store) {
  if (j.size() != store->items().size()) {
    throw ConfigError("incompatible checkpoint: parameter count differs");
  }
  std::vector<std::string> names;
  for (const auto& item : store->items()) names.push_back(item.first);
  for (const std::string& name : names) {
    if (!j.contains(name)) throw ConfigError("incompatible checkpoint: missing " + name);
    const json& p = j.at(name);
    ag::Matrix& m = store->Get(name).mutable_value();
    const auto rows = p.at("rows").get<ag::Index>();
    const auto cols = p.at("cols").get<ag::Index>();
    const auto data = p.at("data").get<std::vector<double>>();
    if (rows != m.rows() || cols != m.cols() || static_cast<ag::Index>(data.size()) != m.size()) {
      throw ConfigError("incompatible checkpoint: shape of " + name);
    }
    std::copy(data.begin(), data.end(), m.data());
  }
}

template <typename Config>
json ConfigToJson(const Config& c) {
  json out = json::object();
  for (const auto& [k, v] : c.ToMap()) out[k] = v;
  return out;
}

int GetInt(const json& j, const char* key) { return std::stoi(j.at(key).get<std::string>()); }
bool GetBool(const json& j, const char* key) { return j.at(key).get<std::string>() == "true"; }

SeparatorConfig SeparatorConfigFromJson(const json& j) {
  SeparatorConfig c;
  c.encoder_window = GetInt(j, "encoder_window");
  c.encoder_stride = GetInt(j, "encoder_stride");
  c.latent_dim = GetInt(j, "latent_dim");
  c.num_blocks = GetInt(j, "num_blocks");
  c.hidden_units = GetInt(j, "hidden_units");
  c.chunk_size = GetInt(j, "chunk_size");
  c.num_outputs = GetInt(j, "num_outputs");
  c.stop_flag = GetBool(j, "stop_flag");
  c.flag_dim = GetInt(j, "flag_dim");
  return c;
}

AsrConfig AsrConfigFromJson(const json& j) {
  AsrConfig c;
  c.stft_window = GetInt(j, "stft_window");
  c.stft_hop = GetInt(j, "stft_hop");
  c.num_features = GetInt(j, "num_features");
  c.conv_channels = GetInt(j, "conv_channels");
  c.blstm_layers = GetInt(j, "blstm_layers");
  c.blstm_hidden = GetInt(j, "blstm_hidden");
  c.projection = GetInt(j, "projection");
  c.embedding_dim = GetInt(j, "embedding_dim");
  c.decoder_hidden = GetInt(j, "decoder_hidden");
  c.attention_dim = GetInt(j, "attention_dim");
  c.lambda = std::stod(j.at("lambda").get<std::string>());
  c.location_aware = GetBool(j, "location_aware");
  return c;
}

}  // namespace

void CopyParameters(const ag::ParameterStore& from, ag::ParameterStore* to) {
  ParamsFromJson(ParamsToJson(from), to);
}

void SaveCheckpoint(const std::string& path, const Separator& separator,
                    const Recognizer* recognizer, const std::string& scheme, int step,
                    std::optional<double> dev_loss) {
  json j;
  j["format"] = kFormat;
  j["scheme"] = scheme;
  j["step"] = step;
  j["dev_loss"] = dev_loss ? json(*dev_loss) : json(nullptr);
  j["separator"] = {{"config", ConfigToJson(separator.config())},
                    {"params", ParamsToJson(separator.params())}};
  if (recognizer) {
    j["recognizer"] = {{"config", ConfigToJson(recognizer->config())},
                       {"params", ParamsToJson(recognizer->params())}};
  } else {
    j["recognizer"] = nullptr;
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path);
    out << j.dump();
    if (!out) throw IoError("failed writing checkpoint " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IoError("cannot move checkpoint to " + path);
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw IoError("corrupt checkpoint " + path + ": " + e.what());
  }
  if (j.value("format", std::string()) != kFormat) {
    throw ConfigError("incompatible checkpoint: unknown format in " + path);
  }
  Checkpoint c;
  try {
    c.scheme = j.at("scheme").get<std::string>();
    c.step = j.at("step").get<int>();
    if (!j.at("dev_loss").is_null()) c.dev_loss = j.at("dev_loss").get<double>();
    const json& sep = j.at("separator");
    c.separator = std::make_unique<Separator>(SeparatorConfigFromJson(sep.at("config")), 0);
    ParamsFromJson(sep.at("params"), &c.separator->params());
    if (!j.at("recognizer").is_null()) {
      const json& asr = j.at("recognizer");
      c.recognizer = std::make_unique<Recognizer>(AsrConfigFromJson(asr.at("config")), 0);
      ParamsFromJson(asr.at("params"), &c.recognizer->params());
    }
  } catch (const json::exception& e) {
    throw ConfigError("incompatible checkpoint " + path + ": " + e.what());
  }
  return c;
}

void CheckCompatible(const Checkpoint& ckpt, const SeparatorConfig& sep, const AsrConfig* asr) {
  if (!(ckpt.separator->config() == sep)) {
    throw ConfigError("incompatible checkpoint: separator configuration differs");
  }
  if (asr != nullptr) {
    if (!ckpt.recognizer) throw ConfigError("incompatible checkpoint: no recogniser stored");
    if (!(ckpt.recognizer->config() == *asr)) {
      throw ConfigError("incompatible checkpoint: recogniser configuration differs");
    }
  }
}

}  // namespace orpit
