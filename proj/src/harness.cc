// harness.cc

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

#include "orpit/harness.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "orpit/checkpoint.h"
#include "orpit/counting.h"
#include "orpit/joint.h"

namespace orpit {

using json = nlohmann::ordered_json;

namespace {

std::vector<TrainingExample> LoadExamples(const std::string& manifest_path) {
  const DatasetManifest m = ReadManifest(manifest_path);
  std::vector<TrainingExample> out;
  out.reserve(m.entries.size());
  for (const auto& e : m.entries) {
    MixtureExample ex = LoadExample(m, e);
    ex.transcripts = e.texts;
    out.push_back(TrainingExample::FromMixture(ex, e.id));
  }
  return out;
}

Waveform Cut(const Waveform& w, std::size_t offset, std::size_t length) {
  return Waveform(std::vector<double>(w.samples.begin() + static_cast<std::ptrdiff_t>(offset),
                                      w.samples.begin() + static_cast<std::ptrdiff_t>(offset + length)),
                  w.sample_rate);
}

// Random fixed-length segment of input and sources. Transcripts no longer
// describe a cropped signal, so they are cleared.
TrainingExample Crop(const TrainingExample& ex, double crop_s, std::mt19937_64& rng) {
  const auto length = static_cast<std::size_t>(std::lround(crop_s * ex.input.sample_rate));
  if (length == 0 || ex.input.size() <= length) return ex;
  std::uniform_int_distribution<std::size_t> pick(0, ex.input.size() - length);
  const std::size_t offset = pick(rng);
  TrainingExample out;
  out.id = ex.id;
  out.input = Cut(ex.input, offset, length);
  for (const auto& s : ex.sources) out.sources.push_back(Cut(s, offset, length));
  out.transcripts.assign(out.sources.size(), std::string());
  return out;
}

class JsonLog {
 public:
  explicit JsonLog(const std::string& path) {
    if (path.empty()) return;
    out_.open(path, std::ios::trunc);
    if (!out_) throw IoError("cannot write training log " + path);
  }
  void Write(const json& j) {
    if (!out_.is_open()) return;
    out_ << j.dump() << "\n";
    out_.flush();
  }

 private:
  std::ofstream out_;
};

bool NeedsRecognizer(const ExperimentConfig& c) {
  return c.train.scheme == Scheme::kAsrClean || c.train.tune != TuneMode::kSeparation;
}

// Batch-mean recogniser loss on clean sources; one random talker per example.
ag::Var CleanAsrLoss(const Recognizer& asr, const std::vector<TrainingExample>& batch,
                     std::mt19937_64& rng) {
  ag::Var total;
  for (const auto& ex : batch) {
    std::uniform_int_distribution<int> pick(0, ex.num_sources() - 1);
    const auto k = static_cast<std::size_t>(pick(rng));
    const TokenSequence ref = asr.alphabet().Encode(ex.transcripts.at(k));
    ag::Var l = asr.Loss(ag::ColumnFromVector(ex.sources[k].samples), ref);
    total = total.defined() ? ag::Add(total, l) : l;
  }
  return ag::Scale(total, 1.0 / static_cast<double>(batch.size()));
}

struct DevResult {
  double loss = 0.0;
  std::vector<double> flag_losses;
};

DevResult EvaluateDev(const ExperimentConfig& c, const JointTrainer& trainer, const Recognizer* asr,
                      const std::vector<TrainingExample>& dev) {
  ag::NoGradGuard guard;
  DevResult r;
  const bool with_asr = c.train.tune != TuneMode::kSeparation;
  std::vector<double> flag_sum;
  for (const auto& ex : dev) {
    const std::vector<TrainingExample> one = {ex};
    if (c.train.scheme == Scheme::kAsrClean) {
      double v = 0.0;
      for (int k = 0; k < ex.num_sources(); ++k) {
        const TokenSequence ref = asr->alphabet().Encode(ex.transcripts[static_cast<std::size_t>(k)]);
        v += asr->Loss(ag::ColumnFromVector(ex.sources[static_cast<std::size_t>(k)].samples), ref).scalar();
      }
      r.loss += v / ex.num_sources();
      continue;
    }
    JointTrainer::Computation comp;
    switch (c.train.scheme) {
      case Scheme::kTasnetFixed: comp = trainer.ComputeTasnet(one, with_asr); break;
      case Scheme::kOrpitSingle: comp = trainer.ComputeOrpitSingle(one, with_asr); break;
      default: comp = trainer.ComputeOrpitMulti(one, with_asr); break;
    }
    r.loss += comp.result.total_loss;
    const auto& f = comp.result.flag_losses;
    if (flag_sum.size() < f.size()) flag_sum.resize(f.size(), 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) flag_sum[i] += f[i];
  }
  r.loss /= static_cast<double>(dev.size());
  for (double v : flag_sum) r.flag_losses.push_back(v / static_cast<double>(dev.size()));
  return r;
}

}  // namespace

TrainingSummary RunTraining(const ExperimentConfig& config) {
  config.Validate();
  const TrainConfig& tc = config.train;
  Separator sep(config.sep, MixSeed(tc.seed, 1));
  std::unique_ptr<Recognizer> asr;
  if (config.use_asr) asr = std::make_unique<Recognizer>(config.asr, MixSeed(tc.seed, 2));
  if (!tc.init.empty()) {
    Checkpoint init = LoadCheckpoint(tc.init);
    CheckCompatible(init, config.sep, nullptr);
    CopyParameters(init.separator->params(), &sep.params());
    if (asr && init.recognizer) {
      CheckCompatible(init, config.sep, &config.asr);
      CopyParameters(init.recognizer->params(), &asr->params());
    }
  }
  if (NeedsRecognizer(config) && !asr) throw ConfigError("training setup needs a recogniser");

  TrainingSummary summary;
  summary.checkpoint = tc.out;
  const std::string scheme_name = ToString(tc.scheme);
  if (tc.steps == 0) {
    SaveCheckpoint(tc.out, sep, asr.get(), scheme_name, 0, std::nullopt);
    return summary;
  }
  if (tc.out.empty()) throw ConfigError("train.out must name a checkpoint path");
  if (config.data.train.empty()) throw ConfigError("data.train must name a manifest");
  const std::vector<TrainingExample> train = LoadExamples(config.data.train);
  if (train.empty()) throw InvalidArgument("training manifest is empty");
  std::vector<TrainingExample> dev;
  if (!config.data.dev.empty()) dev = LoadExamples(config.data.dev);

  JointOptions jo;
  jo.base = tc.loss;
  jo.fe_weight = tc.fe_weight;
  jo.max_unroll = config.stop.max_iterations;
  ag::AdamOptions ao;
  ao.lr = tc.lr;
  ao.clip_norm = tc.clip;
  JointTrainer trainer(&sep, asr.get(), jo, ao, ao);
  std::unique_ptr<ag::Adam> clean_optim;
  if (tc.scheme == Scheme::kAsrClean) clean_optim = std::make_unique<ag::Adam>(asr->params().vars(), ao);

  // Transcripts only survive on whole signals.
  const bool crop = tc.crop_s > 0.0 && tc.tune == TuneMode::kSeparation &&
                    tc.scheme != Scheme::kAsrClean;
  std::mt19937_64 rng(MixSeed(tc.seed, 3));
  std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  JsonLog log(tc.log);
  double lr = tc.lr;
  int stale = 0;

  auto check_dev = [&](int step) {
    if (dev.empty()) return;
    const DevResult d = EvaluateDev(config, trainer, asr.get(), dev);
    json j;
    j["step"] = step;
    j["dev_loss"] = d.loss;
    if (tc.scheme == Scheme::kOrpitMulti) j["dev_flag_losses"] = d.flag_losses;
    log.Write(j);
    if (!summary.best_dev_loss || d.loss < *summary.best_dev_loss) {
      summary.best_dev_loss = d.loss;
      summary.best_step = step;
      stale = 0;
      SaveCheckpoint(tc.out, sep, asr.get(), scheme_name, step, d.loss);
    } else if (tc.lr_patience > 0 && ++stale >= tc.lr_patience) {
      lr *= 0.5;
      trainer.set_lr(lr);
      if (clean_optim) clean_optim->set_lr(lr);
      stale = 0;
    }
  };

  for (int step = 1; step <= tc.steps; ++step) {
    std::vector<TrainingExample> batch;
    for (int b = 0; b < tc.batch_size; ++b) {
      TrainingExample ex = train[pick(rng)];
      if (crop) ex = Crop(ex, tc.crop_s, rng);
      if (tc.scheme == Scheme::kOrpitSingle && ex.num_sources() > 1 &&
          coin(rng) < tc.feedback_ratio) {
        ex = MakeFeedbackExample(ex, sep, tc.loss);
      }
      batch.push_back(std::move(ex));
    }
    json j;
    j["step"] = step;
    try {
      if (tc.scheme == Scheme::kAsrClean) {
        ag::Var loss = CleanAsrLoss(*asr, batch, rng);
        if (!std::isfinite(loss.scalar())) throw Error("non-finite training loss");
        clean_optim->ZeroGrad();
        loss.Backward();
        clean_optim->Step();
        clean_optim->ZeroGrad();
        j["fe_loss"] = 0.0;
        j["asr_loss"] = loss.scalar();
        j["flag_loss"] = 0.0;
        summary.losses.push_back(loss.scalar());
      } else {
        JointBatchResult r;
        switch (tc.scheme) {
          case Scheme::kTasnetFixed: r = trainer.StepTasnet(batch, tc.tune); break;
          case Scheme::kOrpitSingle: r = trainer.StepOrpitSingle(batch, tc.tune); break;
          default: r = trainer.StepOrpitMulti(batch, tc.tune); break;
        }
        j["fe_loss"] = r.fe_loss;
        j["asr_loss"] = r.asr_loss;
        j["flag_loss"] = r.flag_loss;
        if (tc.scheme == Scheme::kOrpitMulti) j["flag_losses"] = r.flag_losses;
        summary.losses.push_back(r.total_loss);
      }
    } catch (const Error& e) {
      json err;
      err["step"] = step;
      err["error"] = e.what();
      log.Write(err);
      throw Error("training aborted at step " + std::to_string(step) + ": " + e.what());
    }
    j["lr"] = lr;
    log.Write(j);
    summary.steps_run = step;
    if (tc.dev_every > 0 && (step % tc.dev_every == 0 || step == tc.steps)) check_dev(step);
  }
  if (dev.empty() || tc.dev_every == 0) {
    SaveCheckpoint(tc.out, sep, asr.get(), scheme_name, tc.steps, std::nullopt);
    summary.best_step = tc.steps;
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Evaluation.

std::vector<int> AssignEstimates(const std::vector<Waveform>& sources,
                                 const std::vector<Waveform>& estimates) {
  const std::size_t k = sources.size();
  if (k == 0) throw InvalidArgument("assignment needs at least one source");
  const std::size_t n = std::max(k, estimates.size());
  if (n > 8) throw InvalidArgument("assignment: too many streams for exhaustive search");
  std::vector<std::vector<double>> table(k, std::vector<double>(n));
  for (std::size_t s = 0; s < k; ++s) {
    for (std::size_t e = 0; e < n; ++e) {
      table[s][e] = e < estimates.size() ? Sdr(sources[s], estimates[e])
                                         : Sdr(sources[s], Zeros(sources[s].size(), sources[s].sample_rate));
    }
  }
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best;
  double best_value = -std::numeric_limits<double>::infinity();
  do {
    double v = 0.0;
    for (std::size_t s = 0; s < k; ++s) v += table[s][static_cast<std::size_t>(perm[s])];
    if (v > best_value) {
      best_value = v;
      best.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k));
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

namespace {

std::vector<std::string> Units(const std::string& text, ErrorUnit unit) {
  std::vector<std::string> out;
  if (unit == ErrorUnit::kChar) {
    for (char c : text) out.emplace_back(1, c);
  } else {
    std::istringstream in(text);
    std::string w;
    while (in >> w) out.push_back(w);
  }
  return out;
}

std::string Fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string RecordToJson(const EvalRecord& r) {
  json j;
  j["id"] = r.metrics.id;
  j["true_count"] = r.metrics.true_count;
  j["predicted_count"] = r.metrics.predicted_count;
  j["sdri_db"] = r.metrics.sdri_db;
  j["sdri_valid"] = r.sdri_valid;
  j["sdr_db"] = r.metrics.sdr_db;
  j["si_sdr_db"] = r.metrics.si_sdr_db;
  j["extra_streams"] = r.extra_streams;
  j["kept_streams"] = r.kept_streams;
  j["scored_asr"] = r.scored_asr;
  j["char_edits"] = r.char_edits;
  j["char_ref"] = r.char_ref;
  j["word_edits"] = r.word_edits;
  j["word_ref"] = r.word_ref;
  return j.dump();
}

EvalRecord RecordFromJson(const std::string& line) {
  EvalRecord r;
  try {
    const json j = json::parse(line);
    r.metrics.id = j.at("id").get<std::string>();
    r.metrics.true_count = j.at("true_count").get<int>();
    r.metrics.predicted_count = j.at("predicted_count").get<int>();
    r.metrics.sdri_db = j.at("sdri_db").get<double>();
    r.sdri_valid = j.at("sdri_valid").get<bool>();
    r.metrics.sdr_db = j.at("sdr_db").get<std::vector<double>>();
    r.metrics.si_sdr_db = j.at("si_sdr_db").get<std::vector<double>>();
    r.extra_streams = j.at("extra_streams").get<int>();
    r.kept_streams = j.at("kept_streams").get<std::vector<int>>();
    r.scored_asr = j.at("scored_asr").get<bool>();
    r.char_edits = j.at("char_edits").get<std::size_t>();
    r.char_ref = j.at("char_ref").get<std::size_t>();
    r.word_edits = j.at("word_edits").get<std::size_t>();
    r.word_ref = j.at("word_ref").get<std::size_t>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed report line: ") + e.what());
  }
  return r;
}

std::string FormatTable(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw InvalidArgument("cannot tabulate an empty report");
  std::map<int, std::vector<const EvalRecord*>> by_k;
  for (const auto& r : records) by_k[r.metrics.true_count].push_back(&r);
  std::string out = "K      N   SDRi(dB)  SI-SDR(dB)  Count(%)   CER(%)   WER(%)  Extra\n";
  auto row = [&](const std::string& label, const std::vector<const EvalRecord*>& rs) {
    double sdri = 0.0, sisdr = 0.0;
    std::size_t n_sdri = 0, n_sisdr = 0, ce = 0, cr = 0, we = 0, wr = 0;
    int extra = 0;
    bool asr = false;
    std::vector<MetricRecord> m;
    for (const EvalRecord* r : rs) {
      if (r->sdri_valid) {
        sdri += r->metrics.sdri_db;
        ++n_sdri;
      }
      for (double v : r->metrics.si_sdr_db) sisdr += v;
      n_sisdr += r->metrics.si_sdr_db.size();
      ce += r->char_edits;
      cr += r->char_ref;
      we += r->word_edits;
      wr += r->word_ref;
      extra += r->extra_streams;
      asr = asr || r->scored_asr;
      m.push_back(r->metrics);
    }
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-4s %4zu %10s %11s %9s %8s %8s %6d\n", label.c_str(), rs.size(),
                  n_sdri ? Fixed(sdri / static_cast<double>(n_sdri)).c_str() : "-",
                  Fixed(n_sisdr ? sisdr / static_cast<double>(n_sisdr) : 0.0).c_str(),
                  Fixed(CountingAccuracy(m), 1).c_str(),
                  asr && cr ? Fixed(100.0 * static_cast<double>(ce) / static_cast<double>(cr), 1).c_str() : "-",
                  asr && wr ? Fixed(100.0 * static_cast<double>(we) / static_cast<double>(wr), 1).c_str() : "-",
                  extra);
    out += buf;
  };
  std::vector<const EvalRecord*> all;
  for (const auto& [k, rs] : by_k) {
    row(std::to_string(k), rs);
    all.insert(all.end(), rs.begin(), rs.end());
  }
  if (by_k.size() > 1) row("all", all);
  return out;
}

std::string TableFromReport(const std::string& report_path) {
  std::ifstream in(report_path);
  if (!in) throw IoError("cannot open report " + report_path);
  std::vector<EvalRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) records.push_back(RecordFromJson(line));
  }
  return FormatTable(records);
}

namespace {

void WriteLines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& l : lines) out << l << "\n";
}

}  // namespace

EvalReport RunEval(const ExperimentConfig& config, const std::string& checkpoint_path,
                   const std::string& manifest_path) {
  config.Validate();
  const Checkpoint ckpt = LoadCheckpoint(checkpoint_path);
  const bool want_asr = config.eval.asr && config.use_asr;
  CheckCompatible(ckpt, config.sep, want_asr ? &config.asr : nullptr);
  const DatasetManifest manifest = ReadManifest(manifest_path);
  if (manifest.entries.empty()) throw InvalidArgument("empty manifest " + manifest_path);
  const Separator& sep = *ckpt.separator;
  const Recognizer* asr = want_asr ? ckpt.recognizer.get() : nullptr;
  const bool iterative = config.train.scheme == Scheme::kOrpitSingle ||
                         config.train.scheme == Scheme::kOrpitMulti;

  EvalReport report;
  for (const auto& entry : manifest.entries) {
    MixtureExample ex = LoadExample(manifest, entry);
    const int k_true = static_cast<int>(ex.sources.size());
    std::vector<Waveform> streams;
    int predicted = 0;
    if (iterative) {
      ExtractionResult r = config.eval.oracle_count ? ExtractForced(ex.mixture, sep, k_true)
                                                    : ExtractIteratively(ex.mixture, sep, config.stop);
      streams = std::move(r.streams);
      predicted = r.count;
    } else {
      SeparatorOutput out = sep.Separate(ex.mixture);
      predicted = config.eval.oracle_count ? k_true
                                           : CountFixedOutputs(out.streams, config.stop.gamma);
      const int take = std::min(predicted, static_cast<int>(out.streams.size()));
      for (int i : SelectTopKEnergy(out.streams, take)) {
        streams.push_back(out.streams[static_cast<std::size_t>(i)]);
      }
    }

    EvalRecord rec;
    rec.metrics.id = entry.id;
    rec.metrics.true_count = k_true;
    rec.metrics.predicted_count = predicted;
    rec.extra_streams = std::max(0, static_cast<int>(streams.size()) - k_true);
    const std::vector<int> assign = AssignEstimates(ex.sources, streams);
    double sdri = 0.0;
    for (int s = 0; s < k_true; ++s) {
      const Waveform& src = ex.sources[static_cast<std::size_t>(s)];
      const auto e = static_cast<std::size_t>(assign[static_cast<std::size_t>(s)]);
      const Waveform est = e < streams.size() ? streams[e] : Zeros(src.size(), src.sample_rate);
      const double sdr = Sdr(src, est);
      rec.metrics.sdr_db.push_back(sdr);
      rec.metrics.si_sdr_db.push_back(SiSdr(src, est));
      const double baseline = Sdr(src, ex.mixture);
      if (baseline >= kMetricCapDb) rec.sdri_valid = false;
      sdri += sdr - baseline;
    }
    rec.metrics.sdri_db = sdri / k_true;

    if (streams.empty()) {
      rec.kept_streams.clear();
    } else if (config.eval.vad) {
      VadGate(streams, ex.mixture, config.eval.vad_threshold_db, &rec.kept_streams);
    } else {
      rec.kept_streams.resize(streams.size());
      std::iota(rec.kept_streams.begin(), rec.kept_streams.end(), 0);
    }

    if (asr != nullptr) {
      rec.scored_asr = true;
      for (int s = 0; s < k_true; ++s) {
        const std::string& ref = entry.texts.at(static_cast<std::size_t>(s));
        const int e = assign[static_cast<std::size_t>(s)];
        const bool kept = std::find(rec.kept_streams.begin(), rec.kept_streams.end(), e) !=
                          rec.kept_streams.end();
        std::string hyp;
        if (kept && e < static_cast<int>(streams.size())) {
          const int cap = 2 * static_cast<int>(std::max<std::size_t>(ref.size(), 1));
          hyp = asr->alphabet().Decode(
              asr->Recognize(streams[static_cast<std::size_t>(e)], cap).hypothesis);
        }
        const auto rc = Units(ref, ErrorUnit::kChar), hc = Units(hyp, ErrorUnit::kChar);
        const auto rw = Units(ref, ErrorUnit::kWord), hw = Units(hyp, ErrorUnit::kWord);
        HypothesisRecord h;
        h.id = entry.id;
        h.stream_index = e < static_cast<int>(streams.size()) ? e : -1;
        h.ref = ref;
        h.hyp = hyp;
        const std::size_t ce = Levenshtein(hc, rc), we = Levenshtein(hw, rw);
        rec.char_edits += ce;
        rec.char_ref += rc.size();
        rec.word_edits += we;
        rec.word_ref += rw.size();
        h.cer = rc.empty() ? 0.0 : static_cast<double>(ce) / static_cast<double>(rc.size());
        h.wer = rw.empty() ? 0.0 : static_cast<double>(we) / static_cast<double>(rw.size());
        report.hypotheses.push_back(std::move(h));
      }
    }
    report.json_lines.push_back(RecordToJson(rec));
    report.records.push_back(std::move(rec));
  }
  report.table = FormatTable(report.records);

  if (!config.eval.report.empty()) WriteLines(config.eval.report, report.json_lines);
  if (!config.eval.table.empty()) WriteLines(config.eval.table, {report.table});
  if (!config.eval.hypotheses.empty()) {
    std::vector<std::string> lines;
    for (const auto& h : report.hypotheses) {
      json j;
      j["id"] = h.id;
      j["stream_index"] = h.stream_index;
      j["ref"] = h.ref;
      j["hyp"] = h.hyp;
      j["cer"] = h.cer;
      j["wer"] = h.wer;
      lines.push_back(j.dump());
    }
    WriteLines(config.eval.hypotheses, lines);
  }
  return report;
}

}  // namespace orpit
