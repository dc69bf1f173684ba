// joint.cc

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

#include "orpit/joint.h"

#include <algorithm>
#include <cmath>

#include "orpit/counting.h"

namespace orpit {

using ag::Var;

TrainingExample TrainingExample::FromMixture(const MixtureExample& ex, std::string id) {
  TrainingExample t;
  t.id = std::move(id);
  t.input = ex.mixture;
  t.sources = ex.sources;
  t.transcripts = ex.transcripts;
  t.transcripts.resize(t.sources.size());
  return t;
}

TuneMode ParseTuneMode(const std::string& name) {
  if (name == "separation") return TuneMode::kSeparation;
  if (name == "asr_only" || name == "asr") return TuneMode::kAsrOnly;
  if (name == "fe_only") return TuneMode::kFeOnly;
  if (name == "both" || name == "fe_and_asr") return TuneMode::kBoth;
  throw ConfigError("unknown tune mode '" + name + "'");
}

std::string ToString(TuneMode mode) {
  switch (mode) {
    case TuneMode::kSeparation: return "separation";
    case TuneMode::kAsrOnly: return "asr_only";
    case TuneMode::kFeOnly: return "fe_only";
    case TuneMode::kBoth: return "both";
  }
  return "both";
}

double JointLoss(double asr_loss_sum, double fe_loss, double fe_weight) {
  if (!std::isfinite(asr_loss_sum) || !std::isfinite(fe_loss) || !std::isfinite(fe_weight)) {
    throw InvalidArgument("joint loss: non-finite input");
  }
  return asr_loss_sum + fe_weight * fe_loss;
}

Var JointLoss(const Var& asr_loss_sum, const Var& fe_loss, double fe_weight) {
  JointLoss(asr_loss_sum.scalar(), fe_loss.scalar(), fe_weight);
  return ag::Add(asr_loss_sum, ag::Scale(fe_loss, fe_weight));
}

std::vector<int> ResolvePermutationByFe(const std::vector<Var>& targets,
                                        const std::vector<Var>& estimates, BaseLoss base) {
  ag::NoGradGuard guard;
  return PitLoss(targets, estimates, base).permutation;
}

std::vector<Waveform> VadGate(const std::vector<Waveform>& streams, const Waveform& mixture,
                              double rel_threshold_db, std::vector<int>* kept) {
  if (streams.empty()) throw InvalidArgument("VAD gate needs at least one stream");
  const double floor = mixture.MeanPower() * std::pow(10.0, -rel_threshold_db / 10.0);
  std::vector<Waveform> out;
  if (kept) kept->clear();
  for (std::size_t i = 0; i < streams.size(); ++i) {
    const double p = streams[i].MeanPower();
    if (p > 0.0 && p >= floor) {
      out.push_back(streams[i]);
      if (kept) kept->push_back(static_cast<int>(i));
    }
  }
  return out;
}

TrainingExample MakeFeedbackExample(const TrainingExample& ex, const Separator& fe, BaseLoss base) {
  if (ex.num_sources() <= 1) return ex;
  SeparatorOutput out = fe.Separate(ex.input);
  if (out.streams.size() != 2) throw InvalidArgument("feedback needs a two-output front-end");
  const LossValue assign = OrpitLoss(ex.sources, out.streams[0], out.streams[1], base);
  const int chosen = assign.assignment[0];
  TrainingExample next;
  next.id = ex.id + "+fb";
  next.input = std::move(out.streams[1]);
  for (int i = 0; i < ex.num_sources(); ++i) {
    if (i == chosen) continue;
    next.sources.push_back(ex.sources[static_cast<std::size_t>(i)]);
    next.transcripts.push_back(ex.transcripts[static_cast<std::size_t>(i)]);
  }
  return next;
}

JointTrainer::JointTrainer(Separator* fe, Recognizer* asr, JointOptions options,
                           ag::AdamOptions fe_optim, ag::AdamOptions asr_optim)
    : fe_(fe),
      asr_(asr),
      options_(options),
      fe_optim_(fe->params().vars(), fe_optim),
      asr_optim_(asr ? asr->params().vars() : std::vector<Var>{}, asr_optim) {}

void JointTrainer::set_lr(double lr) {
  fe_optim_.set_lr(lr);
  asr_optim_.set_lr(lr);
}

void JointTrainer::CheckAsr(bool with_asr) const {
  if (with_asr && asr_ == nullptr) throw InvalidArgument("joint step needs a recogniser");
}

namespace {

Var SumVars(const std::vector<Var>& v) {
  Var s = v.at(0);
  for (std::size_t i = 1; i < v.size(); ++i) s = ag::Add(s, v[i]);
  return s;
}

void CheckBatch(const std::vector<TrainingExample>& batch) {
  if (batch.empty()) throw InvalidArgument("empty training batch");
  for (const auto& ex : batch) {
    if (ex.sources.empty()) throw InvalidArgument("training example without sources");
    if (ex.transcripts.size() != ex.sources.size()) {
      throw InvalidArgument("training example: one transcript per source required");
    }
  }
}

const std::string& RequireTranscript(const TrainingExample& ex, int k) {
  const std::string& t = ex.transcripts.at(static_cast<std::size_t>(k));
  if (t.empty()) throw InvalidArgument("example " + ex.id + ": source without transcript");
  return t;
}

// Accumulates per-example parts into batch means.
struct BatchSums {
  std::vector<Var> totals;
  double fe = 0.0, asr = 0.0, flag = 0.0;

  JointTrainer::Computation Finish(JointBatchResult r) {
    const double n = static_cast<double>(totals.size());
    JointTrainer::Computation c;
    c.total = ag::Scale(SumVars(totals), 1.0 / n);
    r.fe_loss = fe / n;
    r.asr_loss = asr / n;
    r.flag_loss = flag / n;
    r.total_loss = c.total.scalar();
    for (double& f : r.flag_losses) f /= n;
    c.result = std::move(r);
    return c;
  }
};

}  // namespace

JointTrainer::Computation JointTrainer::ComputeTasnet(const std::vector<TrainingExample>& batch,
                                                      bool with_asr) const {
  CheckBatch(batch);
  CheckAsr(with_asr);
  const int outputs = fe_->num_outputs();
  BatchSums sums;
  JointBatchResult r;
  for (const auto& ex : batch) {
    if (ex.num_sources() > outputs) {
      throw InvalidArgument("example " + ex.id + " has more talkers than front-end outputs");
    }
    SeparatorGraph g = fe_->Forward(ag::ColumnFromVector(ex.input.samples));
    std::vector<Var> targets = ToVars(ex.sources);
    while (static_cast<int>(targets.size()) < outputs) {
      targets.push_back(ag::Constant(ag::Matrix::Zero(static_cast<ag::Index>(ex.input.size()), 1)));
    }
    std::vector<int> perm = ResolvePermutationByFe(targets, g.streams, options_.base);
    Var fe_loss = PitLossFixed(targets, g.streams, perm, options_.base).value;
    Var asr_sum = ag::Constant(0.0);
    double asr_value = 0.0;
    if (with_asr) {
      std::vector<Var> parts;
      for (int k = 0; k < outputs; ++k) {
        const int src = perm[static_cast<std::size_t>(k)];
        if (src >= ex.num_sources()) continue;  // silent target
        const TokenSequence ref = asr_->alphabet().Encode(RequireTranscript(ex, src));
        Var l = asr_->Loss(g.streams[static_cast<std::size_t>(k)], ref);
        r.asr_losses.push_back(l.scalar());
        parts.push_back(l);
      }
      asr_sum = SumVars(parts);
      asr_value = asr_sum.scalar();
    }
    if (options_.record_streams) {
      std::vector<Waveform> streams;
      for (const Var& s : g.streams) streams.emplace_back(ag::VectorFromColumn(s), ex.input.sample_rate);
      r.primary_streams.push_back(std::move(streams));
    }
    sums.totals.push_back(JointLoss(asr_sum, fe_loss, options_.fe_weight));
    sums.fe += fe_loss.scalar();
    sums.asr += asr_value;
    r.assignments.push_back(perm);
  }
  return sums.Finish(std::move(r));
}

JointTrainer::Computation JointTrainer::ComputeOrpitSingle(
    const std::vector<TrainingExample>& batch, bool with_asr) const {
  CheckBatch(batch);
  CheckAsr(with_asr);
  if (fe_->num_outputs() != 2) throw InvalidArgument("OR-PIT needs a two-output front-end");
  BatchSums sums;
  JointBatchResult r;
  r.flag_losses.assign(1, 0.0);
  for (const auto& ex : batch) {
    SeparatorGraph g = fe_->Forward(ag::ColumnFromVector(ex.input.samples));
    OrpitLossResult o = OrpitLoss(ToVars(ex.sources), g.streams[0], g.streams[1], options_.base);
    Var fe_loss = o.value;
    if (g.stop_flag_prob.defined()) {
      Var flag = FlagBce(ex.num_sources() == 1 ? 1 : 0, g.stop_flag_prob);
      sums.flag += flag.scalar();
      r.flag_losses[0] += flag.scalar();
      fe_loss = ag::Add(fe_loss, flag);
    }
    Var asr_loss = ag::Constant(0.0);
    if (with_asr) {
      const TokenSequence ref = asr_->alphabet().Encode(RequireTranscript(ex, o.selected));
      asr_loss = asr_->Loss(g.streams[0], ref);
      r.asr_losses.push_back(asr_loss.scalar());
    }
    if (options_.record_streams) {
      r.primary_streams.push_back({Waveform(ag::VectorFromColumn(g.streams[0]), ex.input.sample_rate)});
    }
    sums.totals.push_back(JointLoss(asr_loss, fe_loss, options_.fe_weight));
    sums.fe += fe_loss.scalar();
    sums.asr += asr_loss.scalar();
    r.assignments.push_back({o.selected});
  }
  return sums.Finish(std::move(r));
}

JointTrainer::Computation JointTrainer::ComputeOrpitMulti(const std::vector<TrainingExample>& batch,
                                                          bool with_asr) const {
  CheckBatch(batch);
  CheckAsr(with_asr);
  if (fe_->num_outputs() != 2) throw InvalidArgument("OR-PIT needs a two-output front-end");
  BatchSums sums;
  JointBatchResult r;
  for (const auto& ex : batch) {
    const int k_true = ex.num_sources();
    if (k_true > options_.max_unroll) {
      throw InvalidArgument("example " + ex.id + " needs more iterations than max_unroll");
    }
    if (static_cast<int>(r.flag_losses.size()) < k_true) r.flag_losses.resize(static_cast<std::size_t>(k_true), 0.0);
    std::vector<int> remaining(static_cast<std::size_t>(k_true));
    for (int i = 0; i < k_true; ++i) remaining[static_cast<std::size_t>(i)] = i;
    std::vector<int> order;
    std::vector<Var> fe_parts, asr_parts;
    std::vector<Waveform> streams;
    Var input = ag::ColumnFromVector(ex.input.samples);
    for (int it = 0; it < k_true; ++it) {
      SeparatorGraph g = fe_->Forward(input);
      std::vector<Var> candidates;
      for (int idx : remaining) candidates.push_back(ag::ColumnFromVector(ex.sources[static_cast<std::size_t>(idx)].samples));
      OrpitLossResult o = OrpitLoss(candidates, g.streams[0], g.streams[1], options_.base);
      const int chosen = remaining[static_cast<std::size_t>(o.selected)];
      remaining.erase(remaining.begin() + o.selected);
      order.push_back(chosen);
      fe_parts.push_back(o.value);
      if (g.stop_flag_prob.defined()) {
        Var flag = FlagBce(it + 1 == k_true ? 1 : 0, g.stop_flag_prob);
        sums.flag += flag.scalar();
        r.flag_losses[static_cast<std::size_t>(it)] += flag.scalar();
        fe_parts.push_back(flag);
      }
      if (with_asr) {
        const TokenSequence ref = asr_->alphabet().Encode(RequireTranscript(ex, chosen));
        Var l = asr_->Loss(g.streams[0], ref);
        r.asr_losses.push_back(l.scalar());
        asr_parts.push_back(l);
      }
      if (options_.record_streams) {
        streams.emplace_back(ag::VectorFromColumn(g.streams[0]), ex.input.sample_rate);
      }
      input = g.streams[1];
    }
    Var fe_loss = SumVars(fe_parts);
    Var asr_loss = with_asr ? SumVars(asr_parts) : ag::Constant(0.0);
    sums.totals.push_back(JointLoss(asr_loss, fe_loss, options_.fe_weight));
    sums.fe += fe_loss.scalar();
    sums.asr += asr_loss.scalar();
    r.assignments.push_back(order);
    if (options_.record_streams) r.primary_streams.push_back(std::move(streams));
  }
  return sums.Finish(std::move(r));
}

JointBatchResult JointTrainer::Apply(Computation c, TuneMode mode) {
  fe_optim_.ZeroGrad();
  asr_optim_.ZeroGrad();
  c.total.Backward();
  if (!std::isfinite(c.result.total_loss)) throw Error("non-finite training loss");
  if (mode != TuneMode::kAsrOnly) c.result.grad_norm_fe = fe_optim_.Step();
  if (asr_ != nullptr && (mode == TuneMode::kAsrOnly || mode == TuneMode::kBoth)) {
    c.result.grad_norm_asr = asr_optim_.Step();
  }
  fe_optim_.ZeroGrad();
  asr_optim_.ZeroGrad();
  return std::move(c.result);
}

JointBatchResult JointTrainer::StepTasnet(const std::vector<TrainingExample>& batch, TuneMode mode) {
  return Apply(ComputeTasnet(batch, mode != TuneMode::kSeparation), mode);
}

JointBatchResult JointTrainer::StepOrpitSingle(const std::vector<TrainingExample>& batch,
                                               TuneMode mode) {
  return Apply(ComputeOrpitSingle(batch, mode != TuneMode::kSeparation), mode);
}

JointBatchResult JointTrainer::StepOrpitMulti(const std::vector<TrainingExample>& batch,
                                              TuneMode mode) {
  return Apply(ComputeOrpitMulti(batch, mode != TuneMode::kSeparation), mode);
}

}  // namespace orpit
