// acceptance.cc

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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Criteria can be selected by number, e.g.
//   acceptance --cli path/to/orpit-cli 1 3 8

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oracles.h"
#include "orpit/asr.h"
#include "orpit/config.h"
#include "orpit/counting.h"
#include "orpit/harness.h"
#include "orpit/joint.h"
#include "orpit/losses.h"
#include "orpit/metrics.h"
#include "orpit/separator.h"

using namespace orpit;
using ag::Matrix;
using ag::Var;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string Fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

const fs::path kWork = "acceptance_work";
std::string g_cli;

std::vector<oracle::Signal> Raw(const std::vector<Waveform>& w) {
  std::vector<oracle::Signal> out;
  for (const auto& x : w) out.push_back(x.samples);
  return out;
}

std::string Slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string Dataset(const std::string& name, const std::map<int, int>& counts, uint64_t seed,
                    double min_s = 0.8, double max_s = 1.2) {
  const fs::path dir = kWork / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  DatasetSpec spec;
  spec.counts = counts;
  spec.seed = seed;
  spec.output_dir = dir.string();
  spec.min_duration_s = min_s;
  spec.max_duration_s = max_s;
  BuildDataset(spec);
  return (dir / "manifest.jsonl").string();
}

// Loss oracle equivalence.
Outcome Criterion1() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  int mismatched = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + trial % 4;
    const BaseLoss base = (trial / 4) % 2 ? BaseLoss::kTLmse : BaseLoss::kTL1pmse;
    std::vector<Waveform> s, z;
    for (int i = 0; i < k; ++i) {
      s.push_back(oracle::RandomWave(40, rng));
      z.push_back(oracle::RandomWave(40, rng));
    }
    const LossValue got = PitLoss(s, z, base);
    const oracle::PitAnswer want = oracle::BruteForcePit(Raw(s), Raw(z), base);
    worst = std::max(worst, std::abs(got.value - want.value));
    if (got.assignment != want.permutation) ++mismatched;
  }
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + trial % 4;
    const BaseLoss base = (trial / 4) % 2 ? BaseLoss::kTLmse : BaseLoss::kTL1pmse;
    std::vector<Waveform> s;
    for (int i = 0; i < k; ++i) s.push_back(oracle::RandomWave(40, rng));
    const Waveform z1 = oracle::RandomWave(40, rng), z2 = oracle::RandomWave(40, rng);
    const LossValue got = OrpitLoss(s, z1, z2, base);
    const oracle::OrpitAnswer want = oracle::BruteForceOrpit(Raw(s), z1.samples, z2.samples, base);
    worst = std::max(worst, std::abs(got.value - want.value));
    if (got.assignment[0] != want.selected) ++mismatched;
  }
  return {worst <= 1e-9 && mismatched == 0,
          Fmt("400 instances, max |diff| %.2e, assignment mismatches %d", worst, mismatched)};
}

// Finite-difference gradient suite.
Outcome Criterion2() {
  std::mt19937_64 rng(202);
  auto col = [&](int n) { return Var(ag::ColumnFromVector(oracle::RandomSignal(n, rng)).value(), true); };
  std::map<std::string, double> err;
  Var s = col(32), z = col(32);
  err["t_lmse"] = oracle::GradientCheck([&] { return TLmse(s, z).value; }, {s, z}, 1e-6);
  err["t_l1pmse"] = oracle::GradientCheck([&] { return TL1pmse(s, z).value; }, {s, z}, 1e-6);
  std::vector<Var> t, e;
  for (int i = 0; i < 3; ++i) {
    t.push_back(col(32));
    e.push_back(col(32));
  }
  std::vector<Var> all = t;
  all.insert(all.end(), e.begin(), e.end());
  err["pit_loss"] = oracle::GradientCheck(
      [&] { return PitLossFixed(t, e, {1, 2, 0}, BaseLoss::kTL1pmse).value; }, all, 1e-6);
  err["orpit_loss"] = oracle::GradientCheck(
      [&] { return OrpitLoss(t, e[0], e[1], BaseLoss::kTL1pmse).value; }, all, 1e-6);
  Var p(Matrix::Constant(1, 1, 0.3), true);
  err["flag_bce"] = std::max(oracle::GradientCheck([&] { return FlagBce(0, p); }, {p}, 1e-7),
                             oracle::GradientCheck([&] { return FlagBce(1, p); }, {p}, 1e-7));

  SeparatorConfig sc;
  sc.latent_dim = 8;
  sc.hidden_units = 8;
  sc.chunk_size = 4;
  sc.stop_flag = true;
  sc.flag_dim = 3;
  Separator sep(sc, 203);
  Var x = col(64);
  const Matrix w0 = Matrix::Random(64, 1), w1 = Matrix::Random(64, 1);
  std::vector<Var> sv = sep.params().vars();
  sv.push_back(x);
  err["separator"] = oracle::GradientCheck(
      [&] {
        SeparatorGraph g = sep.Forward(x);
        return ag::Add(ag::Add(ag::SumAll(ag::Mul(g.streams[0], ag::Constant(w0))),
                               ag::SumAll(ag::Mul(ag::Square(g.streams[1]), ag::Constant(w1)))),
                       g.stop_flag_prob);
      },
      sv, 1e-6);

  AsrConfig ac;
  ac.stft_window = 16;
  ac.stft_hop = 8;
  ac.num_features = 4;
  ac.conv_channels = 4;
  ac.blstm_hidden = 4;
  ac.projection = 4;
  ac.embedding_dim = 3;
  ac.decoder_hidden = 4;
  ac.attention_dim = 3;
  Var y = col(40);
  const Matrix wf = Matrix::Random(4, 4);
  err["stft"] = oracle::GradientCheck(
      [&] { return ag::SumAll(ag::Mul(StftFeatures(y, ac), ag::Constant(wf))); }, {y}, 1e-6);
  Recognizer asr(ac, 204);
  Var a = Var(ag::ColumnFromVector(oracle::RandomSignal(128, rng, 0.3)).value(), true);
  std::vector<Var> av = asr.params().vars();
  av.push_back(a);
  err["asr_loss"] = oracle::GradientCheckJoint([&] { return asr.Loss(a, {2, 7}); }, av, 1e-6);

  bool pass = true;
  std::string detail;
  for (const auto& [name, v] : err) {
    const double tol = (name == "stft" || name == "asr_loss") ? 1e-3 : 1e-4;
    pass = pass && v < tol;
    detail += Fmt("%s %.1e ", name.c_str(), v);
  }
  return {pass, "max rel err: " + detail};
}

// CTC forward algorithm against exhaustive alignment sums.
Outcome Criterion3() {
  std::mt19937_64 rng(303);
  std::normal_distribution<double> n01;
  int cases = 0;
  double worst = 0.0;
  for (int alpha = 2; alpha <= 4; ++alpha) {
    for (int frames = 1; frames <= 6; ++frames) {
      // Every label string of length 1..3 over the non-blank symbols.
      std::vector<std::vector<int>> all = {{}};
      std::vector<std::vector<int>> frontier = {{}};
      for (int len = 1; len <= 3; ++len) {
        std::vector<std::vector<int>> next;
        for (const auto& f : frontier) {
          for (int c = 1; c < alpha; ++c) {
            auto g = f;
            g.push_back(c);
            next.push_back(g);
          }
        }
        all.insert(all.end(), next.begin(), next.end());
        frontier = next;
      }
      for (const auto& labels : all) {
        if (labels.empty()) continue;
        if (ag::CtcMinFrames(labels) > frames) continue;
        Matrix logits(frames, alpha);
        for (int i = 0; i < logits.size(); ++i) logits.data()[i] = 2.0 * n01(rng);
        const Matrix logp = ag::LogSoftmaxRows(Var(logits)).value();
        const double fwd = ag::CtcNegLogLikelihood(logp, labels, 0);
        const double brute = oracle::BruteForceCtc(logp, labels, 0);
        worst = std::max(worst, std::abs(fwd - brute));
        ++cases;
      }
    }
  }
  return {worst <= 1e-10, Fmt("%d lattices, max |diff| %.2e", cases, worst)};
}

// Peels whichever stored source set sums to its input.
class LibraryStub : public Extractor {
 public:
  explicit LibraryStub(std::vector<std::vector<Waveform>> sets) {
    for (auto& s : sets) {
      lengths_.push_back(s.front().size());
      stubs_.emplace_back(std::move(s));
    }
  }
  int num_outputs() const override { return 2; }
  SeparatorOutput Separate(const Waveform& x) const override {
    for (std::size_t i = 0; i < stubs_.size(); ++i) {
      if (lengths_[i] != x.size()) continue;
      SeparatorOutput out = stubs_[i].Separate(x);
      if (out.streams[0].Energy() > 0.0 || out.streams[1].Energy() > 0.0) return out;
    }
    SeparatorOutput none;
    none.streams = {Zeros(x.size(), x.sample_rate), Zeros(x.size(), x.sample_rate)};
    return none;
  }

 private:
  std::vector<oracle::PeelingStub> stubs_;
  std::vector<std::size_t> lengths_;
};

// Counting with a perfect peeling separator after threshold calibration.
Outcome Criterion4() {
  DatasetSpec spec;
  spec.counts = {{1, 25}, {2, 25}, {3, 25}, {4, 25}};
  spec.seed = 404;
  std::vector<Waveform> mixtures;
  std::vector<int> counts;
  std::vector<std::vector<Waveform>> sets;
  for (const auto& [entry, ex] : GenerateExamples(spec)) {
    mixtures.push_back(ex.mixture);
    counts.push_back(entry.k);
    sets.push_back(ex.sources);
  }
  // Calibrate on the odd half, count the even half.
  std::vector<Waveform> cal_mix, test_mix;
  std::vector<int> cal_k, test_k;
  for (std::size_t i = 0; i < mixtures.size(); ++i) {
    (i % 2 ? cal_mix : test_mix).push_back(mixtures[i]);
    (i % 2 ? cal_k : test_k).push_back(counts[i]);
  }
  const LibraryStub stub(sets);
  const Calibration cal = CalibrateThreshold(stub, cal_mix, cal_k, 6);
  StopRule rule;
  rule.kind = StopRule::Kind::kThreshold;
  rule.gamma = cal.gamma;
  std::map<int, std::pair<int, int>> per_k;
  int correct = 0;
  for (std::size_t i = 0; i < test_mix.size(); ++i) {
    const int got = ExtractIteratively(test_mix[i], stub, rule).count;
    per_k[test_k[i]].second++;
    if (got == test_k[i]) {
      ++correct;
      per_k[test_k[i]].first++;
    }
  }
  std::string detail = Fmt("gamma %.3g, accuracy %d/%zu (", cal.gamma, correct, test_mix.size());
  for (const auto& [k, c] : per_k) detail += Fmt(" K=%d %d/%d", k, c.first, c.second);
  return {correct == static_cast<int>(test_mix.size()), detail + " )"};
}

ExperimentConfig ToyConfig(const std::string& tag) {
  fs::create_directories(kWork / tag);
  ExperimentConfig c;
  c.train.out = (kWork / tag / "model.ckpt").string();
  c.train.log = (kWork / tag / "train.jsonl").string();
  c.eval.report = (kWork / tag / "report.jsonl").string();
  c.eval.table = (kWork / tag / "table.txt").string();
  c.eval.hypotheses.clear();
  return c;
}

// Toy two-talker separation.
Outcome Criterion5() {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig c = ToyConfig("c5");
  c.Set("train.scheme", "tasnet_fixed");
  c.train.steps = 500;
  c.train.dev_every = 100;
  c.data.train = Dataset("c5_train", {{2, 200}}, 501);
  c.data.dev = Dataset("c5_dev", {{2, 20}}, 502);
  c.data.test = Dataset("c5_test", {{2, 50}}, 503);
  c.eval.oracle_count = true;
  RunTraining(c);
  const EvalReport r = RunEval(c, c.train.out, c.data.test);
  double sum = 0.0;
  for (const auto& rec : r.records) sum += rec.metrics.sdri_db;
  const double mean = sum / static_cast<double>(r.records.size());
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  return {mean >= 5.0 && r.records.size() == 50 && minutes <= 30.0,
          Fmt("mean SDRi %.2f dB over %zu examples, %.1f min", mean, r.records.size(), minutes)};
}

// Toy counting with the learned stop flag.
Outcome Criterion6() {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig c = ToyConfig("c6");
  c.Set("train.scheme", "orpit_single");
  c.Set("sep.stop_flag", "true");
  c.Set("stop.kind", "flag");
  c.train.steps = 3000;
  c.train.dev_every = 500;
  c.data.train = Dataset("c6_train", {{1, 200}, {2, 200}, {3, 200}}, 601);
  c.data.dev = Dataset("c6_dev", {{1, 20}, {2, 20}, {3, 20}}, 602);
  c.data.test = Dataset("c6_test", {{1, 50}, {2, 50}, {3, 50}, {4, 50}}, 603);
  c.eval.oracle_count = false;
  RunTraining(c);
  const EvalReport r = RunEval(c, c.train.out, c.data.test);
  std::map<int, std::pair<int, int>> per_k;
  for (const auto& rec : r.records) {
    auto& slot = per_k[rec.metrics.true_count];
    slot.second++;
    if (rec.metrics.predicted_count == rec.metrics.true_count) slot.first++;
  }
  int seen_ok = 0, seen_n = 0;
  for (int k = 1; k <= 3; ++k) {
    seen_ok += per_k[k].first;
    seen_n += per_k[k].second;
  }
  const double seen = 100.0 * seen_ok / std::max(seen_n, 1);
  const double unseen = 100.0 * per_k[4].first / std::max(per_k[4].second, 1);
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  std::string detail = Fmt("K=1..3 %.1f%%, K=4 %.1f%% (", seen, unseen);
  for (const auto& [k, v] : per_k) detail += Fmt(" K=%d %d/%d", k, v.first, v.second);
  return {seen >= 90.0 && unseen > 100.0 / 3.0, detail + Fmt(" ), %.1f min", minutes)};
}

// Multi-iteration training streams versus forced-count inference.
Outcome Criterion7() {
  SeparatorConfig sc;
  sc.stop_flag = true;
  Separator sep(sc, 701);
  JointOptions opts;
  opts.record_streams = true;
  JointTrainer trainer(&sep, nullptr, opts, ag::AdamOptions(), ag::AdamOptions());
  DatasetSpec spec;
  spec.counts = {{1, 6}, {2, 7}, {3, 7}};
  spec.seed = 702;
  int identical = 0, total = 0;
  for (const auto& [entry, ex] : GenerateExamples(spec)) {
    const auto c = trainer.ComputeOrpitMulti({TrainingExample::FromMixture(ex, entry.id)}, false);
    const ExtractionResult forced = ExtractForced(ex.mixture, sep, entry.k);
    bool same = c.result.primary_streams[0].size() == forced.streams.size();
    for (std::size_t i = 0; same && i < forced.streams.size(); ++i) {
      same = c.result.primary_streams[0][i].samples == forced.streams[i].samples;
    }
    identical += same;
    ++total;
  }
  return {identical == 20 && total == 20, Fmt("%d/%d examples bit-identical", identical, total)};
}

// Metric properties and the VAD gate.
Outcome Criterion8() {
  std::mt19937_64 rng(801);
  std::uniform_real_distribution<double> log_scale(-3.0, 3.0);
  const Waveform s = oracle::RandomWave(400, rng);
  Waveform est = s;
  for (double& v : est.samples) v += 0.3 * std::normal_distribution<double>()(rng);
  const double base = SiSdr(s, est);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    worst = std::max(worst, std::abs(SiSdr(s, Scaled(est, std::pow(10.0, log_scale(rng)))) - base));
  }
  const Waveform a = oracle::RandomWave(400, rng), b = oracle::RandomWave(400, rng);
  const Waveform mix = Add(a, b);
  const double sdri_mix = Sdri({a, b}, {mix, mix}, mix, {0, 1});
  // Streams at -20, -35 and -60 dB relative to the mixture with a 30 dB gate.
  auto at = [&](double db) { return Scaled(mix, std::pow(10.0, db / 20.0)); };
  std::vector<int> kept;
  VadGate({at(-20.0), at(-35.0), at(-60.0), Zeros(400, 8000)}, mix, 30.0, &kept);
  const bool vad_ok = kept == std::vector<int>{0};
  VadGate({at(-35.0), at(-5.0)}, mix, 40.0, &kept);
  const bool vad_ok2 = kept == std::vector<int>{0, 1};
  return {worst <= 1e-6 && sdri_mix == 0.0 && vad_ok && vad_ok2,
          Fmt("SI-SDR scale drift %.1e dB, sdri(mixture) %g, VAD cases %s", worst, sdri_mix,
              vad_ok && vad_ok2 ? "ok" : "wrong")};
}

// Joint objective arithmetic and gradient masking.
Outcome Criterion9() {
  Alphabet alpha;
  Matrix ctc = Matrix::Constant(1, alpha.size(), -50.0);
  ctc(0, 3) = -1.0;
  Matrix att = Matrix::Constant(2, alpha.size(), -50.0);
  att(0, 3) = -0.25;
  att(1, alpha.eos()) = -0.25;
  const double asr = AsrLoss(Var(ctc), Var(att), {3}, 0.2, alpha).scalar();
  const bool lambda_ok = std::abs(asr - 0.6) < 1e-12;
  const bool joint_ok = std::abs(JointLoss(0.6, -10.0) - (-9.4)) < 1e-12 && JointLoss(0.0, 0.0) == 0.0;

  SeparatorConfig sc;
  sc.latent_dim = 8;
  sc.hidden_units = 8;
  sc.chunk_size = 20;
  sc.stop_flag = true;
  AsrConfig ac;
  ac.stft_window = 64;
  ac.num_features = 8;
  ac.conv_channels = 4;
  ac.blstm_hidden = 6;
  ac.projection = 6;
  ac.decoder_hidden = 6;
  ac.attention_dim = 4;
  Separator sep(sc, 901);
  Recognizer rec(ac, 902);
  JointTrainer trainer(&sep, &rec, JointOptions(), ag::AdamOptions(), ag::AdamOptions());
  DatasetSpec spec;
  spec.counts = {{2, 2}};
  spec.seed = 903;
  spec.min_duration_s = spec.max_duration_s = 0.4;
  spec.min_tokens = 2;
  spec.max_tokens = 3;
  std::vector<TrainingExample> batch;
  for (const auto& [entry, ex] : GenerateExamples(spec)) {
    batch.push_back(TrainingExample::FromMixture(ex, entry.id));
  }
  auto snapshot = [](const ag::ParameterStore& p) {
    std::vector<Matrix> out;
    for (const auto& [n, v] : p.items()) out.push_back(v.value());
    return out;
  };
  auto same = [](const ag::ParameterStore& p, const std::vector<Matrix>& snap) {
    for (std::size_t i = 0; i < snap.size(); ++i) {
      if (p.items()[i].second.value() != snap[i]) return false;
    }
    return true;
  };
  int violations = 0;
  for (int scheme = 0; scheme < 3; ++scheme) {
    auto step = [&](TuneMode m) {
      if (scheme == 0) return trainer.StepTasnet(batch, m);
      if (scheme == 1) return trainer.StepOrpitSingle(batch, m);
      return trainer.StepOrpitMulti(batch, m);
    };
    auto fe0 = snapshot(sep.params()), asr0 = snapshot(rec.params());
    step(TuneMode::kAsrOnly);
    violations += !same(sep.params(), fe0) + same(rec.params(), asr0);
    fe0 = snapshot(sep.params());
    asr0 = snapshot(rec.params());
    step(TuneMode::kFeOnly);
    violations += !same(rec.params(), asr0) + same(sep.params(), fe0);
  }
  return {lambda_ok && joint_ok && violations == 0,
          Fmt("asr_loss %.12g (want 0.6), joint %.12g (want -9.4), mask violations %d", asr,
              JointLoss(0.6, -10.0), violations)};
}

int RunCli(const std::string& args, const fs::path& log) {
  const std::string cmd = "\"" + g_cli + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  return std::system(cmd.c_str());
}

// Seeded runs of the command-line tool reproduce exactly.
Outcome Criterion10() {
  if (g_cli.empty() || !fs::exists(g_cli)) return {false, "orpit-cli not found; pass --cli"};
  const fs::path dir = kWork / "c10";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string train = Dataset("c10_train", {{1, 20}, {2, 20}}, 1001);
  const std::string test = Dataset("c10_test", {{1, 5}, {2, 5}}, 1002);
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "train.scheme = orpit_single\nsep.stop_flag = true\nstop.kind = flag\n"
        << "train.steps = 100\ntrain.batch_size = 2\ntrain.seed = 7\ntrain.dev_every = 0\n"
        << "data.train = " << train << "\ndata.test = " << test << "\n";
  }
  const std::string cfg = "--config " + (dir / "run.cfg").string();
  std::vector<std::string> logs, ckpts;
  for (const char* run : {"a", "b"}) {
    const fs::path out = dir / (std::string(run) + ".ckpt"), log = dir / (std::string(run) + ".jsonl");
    const int rc = RunCli("train " + cfg + " --train.out=" + out.string() + " --train.log=" + log.string(),
                          dir / (std::string(run) + ".stdout"));
    if (rc != 0) return {false, Fmt("train run %s failed (status %d)", run, rc)};
    logs.push_back(Slurp(log));
    ckpts.push_back(out.string());
  }
  std::vector<std::string> reports;
  for (int i = 0; i < 3; ++i) {
    const fs::path rep = dir / Fmt("report%d.jsonl", i);
    const int rc = RunCli("evaluate " + cfg + " --checkpoint " + ckpts[i == 2 ? 1 : 0] +
                              " --eval.report=" + rep.string(),
                          dir / Fmt("eval%d.stdout", i));
    if (rc != 0) return {false, Fmt("evaluate run %d failed (status %d)", i, rc)};
    reports.push_back(Slurp(rep));
  }
  const int lines = static_cast<int>(std::count(logs[0].begin(), logs[0].end(), '\n'));
  const bool logs_same = logs[0] == logs[1] && lines == 100;
  const bool reports_same = !reports[0].empty() && reports[0] == reports[1] && reports[1] == reports[2];
  return {logs_same && reports_same,
          Fmt("train logs %s (%d lines), evaluate reports %s", logs_same ? "identical" : "DIFFER", lines,
              reports_same ? "byte-identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("orpit acceptance checks");
  std::vector<int> selected;
  app.add_option("--cli", g_cli, "Path to the orpit-cli binary");
  app.add_option("criteria", selected, "Criterion numbers to run (default: all)");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"loss oracle equivalence", Criterion1},
      {"gradient suite", Criterion2},
      {"CTC exhaustive check", Criterion3},
      {"stub counting after calibration", Criterion4},
      {"toy separation SDRi", Criterion5},
      {"toy flag counting", Criterion6},
      {"unroll equivalence", Criterion7},
      {"metric properties", Criterion8},
      {"joint arithmetic and masking", Criterion9},
      {"determinism", Criterion10},
  };
  const std::set<int> want(selected.begin(), selected.end());
  fs::create_directories(kWork);
  std::ofstream summary("acceptance_summary.txt");
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!want.empty() && !want.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::string line = Fmt("%s  %2d  %-32s %s [%.1fs]", o.pass ? "PASS" : "FAIL", id,
                                 criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    summary << line << "\n" << std::flush;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
