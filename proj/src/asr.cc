// asr.cc

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

#include "orpit/asr.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "orpit/signals.h"

namespace orpit {

using ag::Index;
using ag::Matrix;
using ag::Var;

Alphabet::Alphabet() : symbols_(std::string(kSyllabicTokens) + " ") {}

TokenSequence Alphabet::Encode(const std::string& text) const {
  TokenSequence out;
  out.reserve(text.size());
  for (char c : text) {
    const auto pos = symbols_.find(c);
    if (pos == std::string::npos) throw InvalidArgument(std::string("symbol '") + c + "' not in alphabet");
    out.push_back(static_cast<int>(pos) + 1);
  }
  return out;
}

std::string Alphabet::Decode(const TokenSequence& tokens) const {
  std::string out;
  for (int t : tokens) {
    if (t >= 1 && t <= static_cast<int>(symbols_.size())) out.push_back(symbols_[static_cast<std::size_t>(t - 1)]);
  }
  return out;
}

void AsrConfig::Validate() const {
  if (stft_window < 2 || stft_hop < 1) throw ConfigError("asr: bad STFT geometry");
  if (num_features < 0 || num_features > stft_window / 2 + 1) {
    throw ConfigError("asr: num_features must be in [0, stft_window/2 + 1]");
  }
  if (conv_channels < 1 || blstm_layers < 1 || blstm_hidden < 1 || projection < 1 ||
      embedding_dim < 1 || decoder_hidden < 1 || attention_dim < 1) {
    throw ConfigError("asr: layer sizes must be positive");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("asr: lambda must be in [0, 1]");
  if (location_aware) throw ConfigError("asr: location-aware attention is not available");
}

std::map<std::string, std::string> AsrConfig::ToMap() const {
  std::ostringstream lam;
  lam.precision(17);
  lam << lambda;
  return {{"stft_window", std::to_string(stft_window)},
          {"stft_hop", std::to_string(stft_hop)},
          {"num_features", std::to_string(num_features)},
          {"conv_channels", std::to_string(conv_channels)},
          {"blstm_layers", std::to_string(blstm_layers)},
          {"blstm_hidden", std::to_string(blstm_hidden)},
          {"projection", std::to_string(projection)},
          {"embedding_dim", std::to_string(embedding_dim)},
          {"decoder_hidden", std::to_string(decoder_hidden)},
          {"attention_dim", std::to_string(attention_dim)},
          {"lambda", lam.str()},
          {"location_aware", location_aware ? "true" : "false"}};
}

namespace {

// Periodic Hann window folded into a real DFT: columns [cos | sin].
const Matrix& DftMatrix(int window) {
  thread_local std::map<int, Matrix> cache;
  auto it = cache.find(window);
  if (it != cache.end()) return it->second;
  const int bins = window / 2 + 1;
  Matrix m(window, 2 * bins);
  for (int n = 0; n < window; ++n) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / window);
    for (int k = 0; k < bins; ++k) {
      const double arg = 2.0 * std::numbers::pi * k * n / window;
      m(n, k) = w * std::cos(arg);
      m(n, bins + k) = -w * std::sin(arg);
    }
  }
  return cache.emplace(window, std::move(m)).first->second;
}

// Linearly spaced triangular filters over the power bins.
Matrix Filterbank(int bins, int channels) {
  Matrix fb = Matrix::Zero(bins, channels);
  const double spacing = static_cast<double>(bins - 1) / (channels + 1);
  for (int j = 0; j < channels; ++j) {
    const double centre = (j + 1) * spacing;
    for (int b = 0; b < bins; ++b) {
      const double w = 1.0 - std::abs(b - centre) / spacing;
      if (w > 0.0) fb(b, j) = w;
    }
  }
  return fb;
}

// Same-padded kernel-3 stride-2 convolution expressed as three row gathers.
std::vector<std::shared_ptr<const ag::RowMap>> StridedTaps(Index rows) {
  const Index out = (rows + 1) / 2;
  std::vector<std::shared_ptr<const ag::RowMap>> taps;
  for (int offset = -1; offset <= 1; ++offset) {
    std::vector<Index> src(static_cast<std::size_t>(out));
    for (Index t = 0; t < out; ++t) {
      const Index r = 2 * t + offset;
      src[static_cast<std::size_t>(t)] = (r >= 0 && r < rows) ? r : -1;
    }
    taps.push_back(std::make_shared<ag::RowMap>(ag::RowMap::Gather(rows, src)));
  }
  return taps;
}

}  // namespace

int StftFrameCount(int length, const AsrConfig& config) {
  if (length < config.stft_window) return 0;
  return (length - config.stft_window) / config.stft_hop + 1;
}

Var StftFeatures(const Var& x, const AsrConfig& config) {
  if (x.cols() != 1) throw InvalidArgument("STFT features need a T x 1 signal");
  if (x.rows() < config.stft_window) throw InvalidArgument("signal shorter than one STFT window");
  const int bins = config.stft_window / 2 + 1;
  Var frames = ag::FrameSignal(x, config.stft_window, config.stft_hop);
  Var spec = ag::MatMul(frames, ag::Constant(DftMatrix(config.stft_window)));
  Var power = ag::Add(ag::Square(ag::SliceCols(spec, 0, bins)),
                      ag::Square(ag::SliceCols(spec, bins, bins)));
  if (config.num_features > 0) {
    power = ag::MatMul(power, ag::Constant(Filterbank(bins, config.num_features)));
  }
  return ag::Log(ag::AddScalar(power, kFeatureFloor));
}

Var AsrLoss(const Var& ctc_log_posteriors, const Var& attention_log_posteriors,
            const TokenSequence& reference, double lambda, const Alphabet& alphabet) {
  if (reference.empty()) throw InvalidArgument("ASR loss needs a nonempty reference");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must be in [0, 1]");
  if (attention_log_posteriors.rows() != static_cast<Index>(reference.size()) + 1) {
    throw InvalidArgument("attention posteriors must cover reference + eos");
  }
  Var ctc = ag::CtcLoss(ctc_log_posteriors, reference, alphabet.blank());
  std::vector<Var> picks;
  for (std::size_t i = 0; i <= reference.size(); ++i) {
    const int target = i < reference.size() ? reference[i] : alphabet.eos();
    picks.push_back(ag::Element(attention_log_posteriors, static_cast<Index>(i), target));
  }
  Var att = picks[0];
  for (std::size_t i = 1; i < picks.size(); ++i) att = ag::Add(att, picks[i]);
  att = ag::Scale(att, -1.0);
  return ag::Add(ag::Scale(ctc, lambda), ag::Scale(att, 1.0 - lambda));
}

Recognizer::Recognizer(const AsrConfig& config, uint64_t seed) : config_(config) {
  config_.Validate();
  std::mt19937_64 rng(seed);
  const int feat = config_.num_features > 0 ? config_.num_features : config_.stft_window / 2 + 1;
  const int a = alphabet_.size();
  auto zeros = [](int r, int c) { return Matrix::Zero(r, c); };
  auto lstm_bias = [](int h) {
    Matrix b = Matrix::Zero(1, 4 * h);
    b.middleCols(h, h).setOnes();
    return b;
  };
  params_.Create("conv1.w", ag::XavierUniform(3 * feat, config_.conv_channels, rng));
  params_.Create("conv1.b", zeros(1, config_.conv_channels));
  params_.Create("conv2.w", ag::XavierUniform(3 * config_.conv_channels, config_.conv_channels, rng));
  params_.Create("conv2.b", zeros(1, config_.conv_channels));
  int in = config_.conv_channels;
  for (int l = 0; l < config_.blstm_layers; ++l) {
    const std::string p = "blstm" + std::to_string(l);
    const int h = config_.blstm_hidden;
    for (const char* dir : {"fw", "bw"}) {
      params_.Create(p + "." + dir + ".wx", ag::XavierUniform(in, 4 * h, rng));
      params_.Create(p + "." + dir + ".wh", ag::XavierUniform(h, 4 * h, rng));
      params_.Create(p + "." + dir + ".b", lstm_bias(h));
    }
    params_.Create(p + ".proj.w", ag::XavierUniform(2 * h, config_.projection, rng));
    params_.Create(p + ".proj.b", zeros(1, config_.projection));
    in = config_.projection;
  }
  const int p = config_.projection;
  const int d = config_.decoder_hidden;
  params_.Create("ctc.w", ag::XavierUniform(p, a, rng));
  params_.Create("ctc.b", zeros(1, a));
  params_.Create("emb", ag::XavierUniform(a, config_.embedding_dim, rng));
  params_.Create("dec.wx", ag::XavierUniform(config_.embedding_dim + p, 4 * d, rng));
  params_.Create("dec.wh", ag::XavierUniform(d, 4 * d, rng));
  params_.Create("dec.b", lstm_bias(d));
  params_.Create("att.enc.w", ag::XavierUniform(p, config_.attention_dim, rng));
  params_.Create("att.dec.w", ag::XavierUniform(d, config_.attention_dim, rng));
  params_.Create("att.b", zeros(1, config_.attention_dim));
  params_.Create("att.v", ag::XavierUniform(config_.attention_dim, 1, rng));
  params_.Create("out.w", ag::XavierUniform(d + p, a, rng));
  params_.Create("out.b", zeros(1, a));
}

Var Recognizer::Linear(const Var& x, const std::string& name) const {
  return ag::AddRow(ag::MatMul(x, params_.Get(name + ".w")), params_.Get(name + ".b"));
}

Var Recognizer::Encode(const Var& features) const {
  if (features.rows() < 1) throw InvalidArgument("recogniser needs at least one feature frame");
  // Per-utterance mean normalisation.
  Var x = ag::AddRow(features, ag::Scale(ag::MeanRows(features), -1.0));
  x = ag::Scale(x, 0.2);
  for (const char* conv : {"conv1", "conv2"}) {
    auto taps = StridedTaps(x.rows());
    std::vector<Var> parts;
    for (const auto& t : taps) parts.push_back(ag::ApplyRowMap(x, t));
    x = ag::Relu(Linear(ag::ConcatCols(parts), conv));
  }
  for (int l = 0; l < config_.blstm_layers; ++l) {
    const std::string p = "blstm" + std::to_string(l);
    const Index steps = x.rows();
    Var fw = ag::Lstm(x, params_.Get(p + ".fw.wx"), params_.Get(p + ".fw.wh"),
                      params_.Get(p + ".fw.b"), steps, 1, false);
    Var bw = ag::Lstm(x, params_.Get(p + ".bw.wx"), params_.Get(p + ".bw.wh"),
                      params_.Get(p + ".bw.b"), steps, 1, true);
    x = ag::Tanh(Linear(ag::ConcatCols({fw, bw}), p + ".proj"));
  }
  return x;
}

Var Recognizer::DecoderStep(int token, const Var& encoded, const Var& encoded_proj,
                            DecoderState* state) const {
  const Index d = config_.decoder_hidden;
  Var emb = ag::SliceRows(params_.Get("emb"), token, 1);
  Var gates = ag::AddRow(ag::MatMul(ag::ConcatCols({emb, state->context}), params_.Get("dec.wx")),
                         params_.Get("dec.b"));
  gates = ag::Add(gates, ag::MatMul(state->h, params_.Get("dec.wh")));
  Var i = ag::Sigmoid(ag::SliceCols(gates, 0, d));
  Var f = ag::Sigmoid(ag::SliceCols(gates, d, d));
  Var g = ag::Tanh(ag::SliceCols(gates, 2 * d, d));
  Var o = ag::Sigmoid(ag::SliceCols(gates, 3 * d, d));
  state->c = ag::Add(ag::Mul(f, state->c), ag::Mul(i, g));
  state->h = ag::Mul(o, ag::Tanh(state->c));

  // Additive content-based attention.
  Var query = ag::AddRow(ag::MatMul(state->h, params_.Get("att.dec.w")), params_.Get("att.b"));
  Var energy = ag::MatMul(ag::Tanh(ag::AddRow(encoded_proj, query)), params_.Get("att.v"));
  Var weights = ag::SoftmaxRows(ag::Transpose(energy));
  state->context = ag::MatMul(weights, encoded);

  Var logits = Linear(ag::ConcatCols({state->h, state->context}), "out");
  return ag::LogSoftmaxRows(logits);
}

AsrGraph Recognizer::Forward(const Var& features, const TokenSequence* reference) const {
  AsrGraph g;
  g.encoded = Encode(features);
  g.ctc_log_posteriors = ag::LogSoftmaxRows(Linear(g.encoded, "ctc"));
  if (reference != nullptr) {
    Var proj = ag::MatMul(g.encoded, params_.Get("att.enc.w"));
    DecoderState st{ag::Constant(Matrix::Zero(1, config_.decoder_hidden)),
                    ag::Constant(Matrix::Zero(1, config_.decoder_hidden)),
                    ag::Constant(Matrix::Zero(1, config_.projection))};
    std::vector<Var> rows;
    int prev = alphabet_.sos();
    for (std::size_t i = 0; i <= reference->size(); ++i) {
      rows.push_back(DecoderStep(prev, g.encoded, proj, &st));
      if (i < reference->size()) prev = (*reference)[i];
    }
    g.attention_log_posteriors = ag::ConcatRows(rows);
  }
  return g;
}

Var Recognizer::Loss(const Var& waveform, const TokenSequence& reference) const {
  AsrGraph g = Forward(StftFeatures(waveform, config_), &reference);
  return AsrLoss(g.ctc_log_posteriors, g.attention_log_posteriors, reference, config_.lambda,
                 alphabet_);
}

AsrOutput Recognizer::RecognizeFeatures(const Var& features, int max_steps) const {
  ag::NoGradGuard guard;
  AsrGraph g = Forward(features, nullptr);
  AsrOutput out;
  out.ctc_log_posteriors = g.ctc_log_posteriors.value();
  const int cap = max_steps > 0 ? max_steps : static_cast<int>(g.encoded.rows());
  Var proj = ag::MatMul(g.encoded, params_.Get("att.enc.w"));
  DecoderState st{ag::Constant(Matrix::Zero(1, config_.decoder_hidden)),
                  ag::Constant(Matrix::Zero(1, config_.decoder_hidden)),
                  ag::Constant(Matrix::Zero(1, config_.projection))};
  std::vector<Matrix> rows;
  int prev = alphabet_.sos();
  for (int step = 0; step < cap; ++step) {
    Var logp = DecoderStep(prev, g.encoded, proj, &st);
    rows.push_back(logp.value());
    Index best = 0;
    logp.value().row(0).maxCoeff(&best);
    if (static_cast<int>(best) == alphabet_.eos()) break;
    out.hypothesis.push_back(static_cast<int>(best));
    prev = static_cast<int>(best);
  }
  out.attention_log_posteriors.resize(static_cast<Index>(rows.size()), alphabet_.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out.attention_log_posteriors.row(static_cast<Index>(i)) = rows[i];
  return out;
}

AsrOutput Recognizer::Recognize(const Waveform& x, int max_steps) const {
  ag::NoGradGuard guard;
  return RecognizeFeatures(StftFeatures(ag::ColumnFromVector(x.samples), config_), max_steps);
}

TokenSequence GreedyFromPosteriors(const Matrix& attention_log_posteriors, int eos) {
  TokenSequence out;
  for (Index r = 0; r < attention_log_posteriors.rows(); ++r) {
    Index best = 0;
    attention_log_posteriors.row(r).maxCoeff(&best);
    if (static_cast<int>(best) == eos) break;
    out.push_back(static_cast<int>(best));
  }
  return out;
}

TokenSequence CtcBestPath(const Matrix& ctc_log_posteriors, int blank) {
  TokenSequence out;
  int prev = -1;
  for (Index r = 0; r < ctc_log_posteriors.rows(); ++r) {
    Index best = 0;
    ctc_log_posteriors.row(r).maxCoeff(&best);
    const int tok = static_cast<int>(best);
    if (tok != prev && tok != blank) out.push_back(tok);
    prev = tok;
  }
  return out;
}

std::size_t Levenshtein(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
  std::vector<std::size_t> prev(ref.size() + 1), cur(ref.size() + 1);
  for (std::size_t j = 0; j <= ref.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= hyp.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= ref.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[ref.size()];
}

namespace {
std::vector<std::string> Units(const std::string& text, ErrorUnit unit) {
  std::vector<std::string> out;
  if (unit == ErrorUnit::kChar) {
    for (char c : text) out.emplace_back(1, c);
  } else {
    std::istringstream is(text);
    std::string w;
    while (is >> w) out.push_back(w);
  }
  return out;
}
}  // namespace

double EditDistanceRate(const std::string& hyp, const std::string& ref, ErrorUnit unit) {
  const auto r = Units(ref, unit);
  if (r.empty()) throw InvalidArgument("edit distance rate needs a nonempty reference");
  return static_cast<double>(Levenshtein(Units(hyp, unit), r)) / static_cast<double>(r.size());
}

}  // namespace orpit
