// orpit_cli.cc

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

// Command-line front end. Every subcommand accepts --config FILE plus any
// number of --dotted.key=value overrides of the experiment configuration.
// Exit status: 0 success, 2 configuration error, 3 runtime failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "orpit/checkpoint.h"
#include "orpit/config.h"
#include "orpit/counting.h"
#include "orpit/harness.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Common {
  std::string config_path;
};

orpit::ExperimentConfig BuildConfig(const Common& common, const CLI::App& sub) {
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const std::string& extra : sub.remaining()) overrides.push_back(orpit::ParseOverride(extra));
  orpit::ExperimentConfig c = orpit::LoadConfig(common.config_path, overrides);
  c.Validate();
  return c;
}

bool IsIterative(const orpit::ExperimentConfig& c) {
  return c.train.scheme == orpit::Scheme::kOrpitSingle ||
         c.train.scheme == orpit::Scheme::kOrpitMulti;
}

std::vector<orpit::Waveform> SeparateOne(const orpit::ExperimentConfig& c,
                                         const orpit::Separator& sep, const orpit::Waveform& x,
                                         int forced) {
  if (IsIterative(c)) {
    return forced > 0 ? orpit::ExtractForced(x, sep, forced).streams
                      : orpit::ExtractIteratively(x, sep, c.stop).streams;
  }
  std::vector<orpit::Waveform> all = sep.Separate(x).streams;
  const int k = forced > 0 ? forced : orpit::CountFixedOutputs(all, c.stop.gamma);
  std::vector<orpit::Waveform> out;
  for (int i : orpit::SelectTopKEnergy(all, std::min(k, static_cast<int>(all.size())))) {
    out.push_back(all[static_cast<std::size_t>(i)]);
  }
  return out;
}

int CountOne(const orpit::ExperimentConfig& c, const orpit::Separator& sep, const orpit::Waveform& x) {
  if (IsIterative(c)) return orpit::ExtractIteratively(x, sep, c.stop).count;
  return orpit::CountFixedOutputs(sep.Separate(x).streams, c.stop.gamma);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative speaker extraction with source counting"};
  app.require_subcommand(1);
  Common common;
  std::string checkpoint, manifest, input, out, report;
  int forced = 0;

  auto add = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", common.config_path, "Experiment configuration file");
    sub->allow_extras();
    return sub;
  };
  CLI::App* synth = add("synth-data", "Generate a synthetic mixture corpus");
  CLI::App* train = add("train", "Train a model");
  CLI::App* calib = add("calibrate-threshold", "Grid-search the residual energy threshold");
  calib->add_option("--checkpoint", checkpoint)->required();
  calib->add_option("--manifest", manifest, "Defaults to data.dev");
  calib->add_option("--out", out, "JSON output path")->required();
  CLI::App* separate = add("separate", "Separate one WAV file");
  separate->add_option("--checkpoint", checkpoint)->required();
  separate->add_option("--input", input)->required();
  separate->add_option("--out", out, "Output prefix; streams go to <prefix>_<i>.wav")->required();
  separate->add_option("--count", forced, "Force this many streams");
  CLI::App* count = add("count", "Count talkers in a WAV file");
  count->add_option("--checkpoint", checkpoint)->required();
  count->add_option("--input", input)->required();
  CLI::App* evaluate = add("evaluate", "Score a checkpoint on a manifest");
  evaluate->add_option("--checkpoint", checkpoint)->required();
  evaluate->add_option("--manifest", manifest, "Defaults to data.test");
  CLI::App* rep = add("report", "Print the aggregate table of a report");
  rep->add_option("--report", report)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (synth->parsed()) {
      orpit::ExperimentConfig c = BuildConfig(common, *synth);
      if (c.synth.output_dir.empty()) throw orpit::ConfigError("synth.out must be set");
      const orpit::DatasetManifest m = orpit::BuildDataset(c.synth);
      std::printf("wrote %zu examples to %s/manifest.jsonl\n", m.entries.size(),
                  c.synth.output_dir.c_str());
    } else if (train->parsed()) {
      orpit::ExperimentConfig c = BuildConfig(common, *train);
      const orpit::TrainingSummary s = orpit::RunTraining(c);
      std::printf("steps %d, checkpoint %s (step %d)", s.steps_run, s.checkpoint.c_str(), s.best_step);
      if (s.best_dev_loss) std::printf(", best dev loss %.6f", *s.best_dev_loss);
      std::printf("\n");
    } else if (calib->parsed()) {
      orpit::ExperimentConfig c = BuildConfig(common, *calib);
      if (manifest.empty()) manifest = c.data.dev;
      const orpit::Checkpoint ckpt = orpit::LoadCheckpoint(checkpoint);
      orpit::CheckCompatible(ckpt, c.sep, nullptr);
      const orpit::DatasetManifest m = orpit::ReadManifest(manifest);
      std::vector<orpit::Waveform> mixtures;
      std::vector<int> counts;
      for (const auto& e : m.entries) {
        mixtures.push_back(orpit::LoadExample(m, e).mixture);
        counts.push_back(e.k);
      }
      const orpit::Calibration cal =
          orpit::CalibrateThreshold(*ckpt.separator, mixtures, counts, c.stop.max_iterations);
      std::ofstream o(out);
      if (!o) throw orpit::IoError("cannot write " + out);
      o << cal.ToJson() << "\n";
      std::printf("gamma %.6g accuracy %.2f%%\n", cal.gamma, 100.0 * cal.accuracy);
    } else if (separate->parsed()) {
      orpit::ExperimentConfig c = BuildConfig(common, *separate);
      const orpit::Checkpoint ckpt = orpit::LoadCheckpoint(checkpoint);
      orpit::CheckCompatible(ckpt, c.sep, nullptr);
      const auto streams = SeparateOne(c, *ckpt.separator, orpit::ReadWav(input), forced);
      for (std::size_t i = 0; i < streams.size(); ++i) {
        orpit::WriteWav(out + "_" + std::to_string(i) + ".wav", streams[i]);
      }
      std::printf("%zu streams\n", streams.size());
    } else if (count->parsed()) {
      orpit::ExperimentConfig c = BuildConfig(common, *count);
      const orpit::Checkpoint ckpt = orpit::LoadCheckpoint(checkpoint);
      orpit::CheckCompatible(ckpt, c.sep, nullptr);
      std::printf("%d\n", CountOne(c, *ckpt.separator, orpit::ReadWav(input)));
    } else if (evaluate->parsed()) {
      orpit::ExperimentConfig c = BuildConfig(common, *evaluate);
      if (manifest.empty()) manifest = c.data.test;
      const orpit::EvalReport r = orpit::RunEval(c, checkpoint, manifest);
      std::cout << r.table;
    } else if (rep->parsed()) {
      std::cout << orpit::TableFromReport(report);
    }
  } catch (const orpit::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return 0;
}
