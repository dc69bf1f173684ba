// separator.cc

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

#include "orpit/separator.h"

#include <random>
#include <sstream>

namespace orpit {

using ag::Matrix;
using ag::Var;

SeparatorConfig SeparatorConfig::FullScale() {
  SeparatorConfig c;
  c.num_blocks = 6;
  c.hidden_units = 128;
  c.latent_dim = 64;
  c.encoder_window = 16;
  c.encoder_stride = 8;
  c.chunk_size = 100;
  return c;
}

void SeparatorConfig::Validate() const {
  if (encoder_window < 1 || encoder_stride < 1 || encoder_stride > encoder_window) {
    throw ConfigError("separator: need 1 <= encoder_stride <= encoder_window");
  }
  if (latent_dim < 1 || hidden_units < 1 || num_blocks < 0) {
    throw ConfigError("separator: latent_dim/hidden_units must be positive");
  }
  if (chunk_size < 1) throw ConfigError("separator: chunk_size must be >= 1");
  if (num_outputs < 1) throw ConfigError("separator: num_outputs must be >= 1");
  if (stop_flag && flag_dim < 1) throw ConfigError("separator: flag_dim must be >= 1");
}

std::map<std::string, std::string> SeparatorConfig::ToMap() const {
  return {{"encoder_window", std::to_string(encoder_window)},
          {"encoder_stride", std::to_string(encoder_stride)},
          {"latent_dim", std::to_string(latent_dim)},
          {"num_blocks", std::to_string(num_blocks)},
          {"hidden_units", std::to_string(hidden_units)},
          {"chunk_size", std::to_string(chunk_size)},
          {"num_outputs", std::to_string(num_outputs)},
          {"stop_flag", stop_flag ? "true" : "false"},
          {"flag_dim", std::to_string(flag_dim)}};
}

ChunkGrid ChunkGrid::For(int frames, int chunk_size) {
  if (frames < 1) throw InvalidArgument("dual-path core needs at least one frame");
  ChunkGrid g;
  g.frames = frames;
  g.chunk = chunk_size;
  g.hop = std::max(1, chunk_size / 2);
  g.chunks = frames <= chunk_size ? 1 : (frames - chunk_size + g.hop - 1) / g.hop + 1;
  return g;
}

namespace {

struct ChunkMaps {
  std::shared_ptr<const ag::RowMap> split;       // frames -> chunks*chunk (inter layout)
  std::shared_ptr<const ag::RowMap> to_intra;    // s*C+c -> c*S+s
  std::shared_ptr<const ag::RowMap> from_intra;  // inverse
  std::shared_ptr<const ag::RowMap> merge;       // chunks*chunk -> frames, averaged
};

// Inter layout: row s * C + c is frame s * hop + c (time = chunk index,
// batch = position). Intra layout swaps the roles.
ChunkMaps BuildChunkMaps(const ChunkGrid& g) {
  const ag::Index rows = static_cast<ag::Index>(g.chunks) * g.chunk;
  std::vector<ag::Index> split(static_cast<std::size_t>(rows), -1);
  std::vector<ag::Index> to_intra(static_cast<std::size_t>(rows));
  std::vector<ag::Index> from_intra(static_cast<std::size_t>(rows));
  ag::RowMap merge;
  merge.in_rows = rows;
  merge.out_rows = g.frames;
  merge.terms.resize(static_cast<std::size_t>(g.frames));
  for (int s = 0; s < g.chunks; ++s) {
    for (int c = 0; c < g.chunk; ++c) {
      const ag::Index inter = static_cast<ag::Index>(s) * g.chunk + c;
      const ag::Index intra = static_cast<ag::Index>(c) * g.chunks + s;
      const int frame = s * g.hop + c;
      if (frame < g.frames) {
        split[static_cast<std::size_t>(inter)] = frame;
        merge.terms[static_cast<std::size_t>(frame)].emplace_back(inter, 1.0);
      }
      to_intra[static_cast<std::size_t>(intra)] = inter;
      from_intra[static_cast<std::size_t>(inter)] = intra;
    }
  }
  for (auto& terms : merge.terms) {
    for (auto& t : terms) t.second = 1.0 / static_cast<double>(terms.size());
  }
  ChunkMaps m;
  m.split = std::make_shared<ag::RowMap>(ag::RowMap::Gather(g.frames, split));
  m.to_intra = std::make_shared<ag::RowMap>(ag::RowMap::Gather(rows, to_intra));
  m.from_intra = std::make_shared<ag::RowMap>(ag::RowMap::Gather(rows, from_intra));
  m.merge = std::make_shared<ag::RowMap>(std::move(merge));
  return m;
}

}  // namespace

Separator::Separator(const SeparatorConfig& config, uint64_t seed) : config_(config) {
  config_.Validate();
  std::mt19937_64 rng(seed);
  const int n = config_.latent_dim;
  const int h = config_.hidden_units;
  const int w = config_.encoder_window;
  auto zeros = [](int r, int c) { return Matrix::Zero(r, c); };
  auto ones = [](int r, int c) { return Matrix::Ones(r, c); };
  auto lstm_bias = [h]() {
    Matrix b = Matrix::Zero(1, 4 * h);
    b.middleCols(h, h).setOnes();  // forget gate
    return b;
  };

  params_.Create("enc.w", ag::XavierUniform(w, n, rng));
  params_.Create("dec.w", ag::XavierUniform(n, w, rng));
  params_.Create("in.ln.g", ones(1, n));
  params_.Create("in.ln.b", zeros(1, n));
  params_.Create("in.proj.w", ag::XavierUniform(n, n, rng));
  params_.Create("in.proj.b", zeros(1, n));
  for (int b = 0; b < config_.num_blocks; ++b) {
    for (const char* path : {"intra", "inter"}) {
      const std::string p = "block" + std::to_string(b) + "." + path;
      for (const char* dir : {"fw", "bw"}) {
        params_.Create(p + "." + dir + ".wx", ag::XavierUniform(n, 4 * h, rng));
        params_.Create(p + "." + dir + ".wh", ag::XavierUniform(h, 4 * h, rng));
        params_.Create(p + "." + dir + ".b", lstm_bias());
      }
      params_.Create(p + ".proj.w", ag::XavierUniform(2 * h, n, rng));
      params_.Create(p + ".proj.b", zeros(1, n));
      params_.Create(p + ".ln.g", ones(1, n));
      params_.Create(p + ".ln.b", zeros(1, n));
    }
  }
  const int out_cols = config_.num_outputs * n + (config_.stop_flag ? config_.flag_dim : 0);
  params_.Create("out.prelu", Matrix::Constant(1, 1, 0.25));
  params_.Create("out.w", ag::XavierUniform(n, out_cols, rng));
  params_.Create("out.b", zeros(1, out_cols));
  if (config_.stop_flag) {
    params_.Create("flag.w", ag::XavierUniform(config_.flag_dim, 1, rng));
    params_.Create("flag.b", zeros(1, 1));
  }
}

std::pair<int, int> Separator::OutputColumns(int k) const {
  if (k < 0 || k >= config_.num_outputs) throw InvalidArgument("output index out of range");
  return {k * config_.latent_dim, config_.latent_dim};
}

Var Separator::Linear(const Var& x, const std::string& name, bool bias) const {
  Var y = ag::MatMul(x, params_.Get(name + ".w"));
  if (bias) y = ag::AddRow(y, params_.Get(name + ".b"));
  return y;
}

Var Separator::Blstm(const Var& x, const std::string& name, int steps, int batch) const {
  Var fw = ag::Lstm(x, params_.Get(name + ".fw.wx"), params_.Get(name + ".fw.wh"),
                    params_.Get(name + ".fw.b"), steps, batch, false);
  Var bw = ag::Lstm(x, params_.Get(name + ".bw.wx"), params_.Get(name + ".bw.wh"),
                    params_.Get(name + ".bw.b"), steps, batch, true);
  return ag::ConcatCols({fw, bw});
}

Var Separator::Encode(const Var& x) const {
  if (x.cols() != 1) throw InvalidArgument("Encode: expected a T x 1 signal");
  if (x.rows() < config_.encoder_window) {
    std::ostringstream os;
    os << "input of " << x.rows() << " samples is shorter than the encoder window ("
       << config_.encoder_window << ")";
    throw InvalidArgument(os.str());
  }
  Var frames = ag::FrameSignal(x, config_.encoder_window, config_.encoder_stride);
  return ag::Relu(ag::MatMul(frames, params_.Get("enc.w")));
}

CoreOutput Separator::Core(const Var& latent) const {
  const int n = config_.latent_dim;
  if (latent.cols() != n) throw InvalidArgument("Core: latent width mismatch");
  const ChunkGrid grid = ChunkGrid::For(static_cast<int>(latent.rows()), config_.chunk_size);
  const ChunkMaps maps = BuildChunkMaps(grid);

  Var h = ag::LayerNormRows(latent, params_.Get("in.ln.g"), params_.Get("in.ln.b"));
  h = Linear(h, "in.proj");
  h = ag::ApplyRowMap(h, maps.split);
  for (int b = 0; b < config_.num_blocks; ++b) {
    const std::string p = "block" + std::to_string(b);
    {
      Var y = ag::ApplyRowMap(h, maps.to_intra);
      y = Blstm(y, p + ".intra", grid.chunk, grid.chunks);
      y = Linear(y, p + ".intra.proj");
      y = ag::LayerNormRows(y, params_.Get(p + ".intra.ln.g"), params_.Get(p + ".intra.ln.b"));
      h = ag::Add(h, ag::ApplyRowMap(y, maps.from_intra));
    }
    {
      Var y = Blstm(h, p + ".inter", grid.chunks, grid.chunk);
      y = Linear(y, p + ".inter.proj");
      y = ag::LayerNormRows(y, params_.Get(p + ".inter.ln.g"), params_.Get(p + ".inter.ln.b"));
      h = ag::Add(h, y);
    }
  }
  Var merged = ag::ApplyRowMap(h, maps.merge);
  Var out = Linear(ag::PRelu(merged, params_.Get("out.prelu")), "out");

  CoreOutput core;
  for (int k = 0; k < config_.num_outputs; ++k) {
    Var mask = ag::Sigmoid(ag::SliceCols(out, static_cast<ag::Index>(k) * n, n));
    core.masked.push_back(ag::Mul(mask, latent));
  }
  if (config_.stop_flag) {
    core.flag_features =
        ag::SliceCols(out, static_cast<ag::Index>(config_.num_outputs) * n, config_.flag_dim);
  }
  return core;
}

Var Separator::Decode(const Var& latent, int length) const {
  if (latent.cols() != config_.latent_dim) throw InvalidArgument("Decode: latent width mismatch");
  if (length < config_.encoder_window ||
      latent.rows() != (length - config_.encoder_window) / config_.encoder_stride + 1) {
    throw InvalidArgument("Decode: frame grid inconsistent with the requested length");
  }
  Var frames = ag::MatMul(latent, params_.Get("dec.w"));
  return ag::OverlapAdd(frames, config_.encoder_stride, length);
}

Var Separator::StopFlagHead(const Var& features) const {
  if (!config_.stop_flag) throw InvalidArgument("separator has no stop-flag head");
  if (features.rows() < 1) throw InvalidArgument("stop-flag head needs at least one frame");
  Var per_frame = Linear(features, "flag");
  return ag::Sigmoid(ag::MeanRows(per_frame));
}

SeparatorGraph Separator::Forward(const Var& x) const {
  const int length = static_cast<int>(x.rows());
  Var latent = Encode(x);
  CoreOutput core = Core(latent);
  SeparatorGraph g;
  for (const Var& m : core.masked) g.streams.push_back(Decode(m, length));
  if (config_.stop_flag) g.stop_flag_prob = StopFlagHead(core.flag_features);
  return g;
}

SeparatorOutput Separator::Separate(const Waveform& x) const {
  x.Validate();
  ag::NoGradGuard guard;
  SeparatorGraph g = Forward(ag::ColumnFromVector(x.samples));
  SeparatorOutput out;
  for (const Var& s : g.streams) out.streams.emplace_back(ag::VectorFromColumn(s), x.sample_rate);
  if (g.stop_flag_prob.defined()) out.stop_flag_prob = g.stop_flag_prob.scalar();
  return out;
}

}  // namespace orpit
