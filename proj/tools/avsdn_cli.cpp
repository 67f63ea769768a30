// Copyright 2026 The AVSDN Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: synth, train, eval, gradcheck.

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "avsdn/batch.hpp"
#include "avsdn/checkpoint.hpp"
#include "avsdn/data_io.hpp"
#include "avsdn/trainer.hpp"

namespace fs = std::filesystem;
using namespace avsdn;

namespace {

struct TrainArgs {
  std::string config;
  std::string manifest;
  std::string setting = "supervised";
  std::string init = "fusion";
  std::uint64_t seed = 1;
  std::size_t epochs = 100;
  double lr = 1e-3;
  std::size_t hidden = 128;
  std::string out = "model.avsm";
  std::size_t batch = 16;
  double clip = 5.0;
  std::size_t patience = 20;
  std::string precision = "standard";
  double aux_weight = 1.0;
  bool parallel = false;
};

// Config keys are the long flag names with '-' replaced by '_'. Values from
// the file apply only to options not given on the command line.
void apply_config(CLI::App& cmd, const std::string& path,
                  const std::map<std::string, std::function<void(const std::string&)>>& setters) {
  if (path.empty()) return;
  for (const auto& [key, value] : read_key_values(path)) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw std::invalid_argument("config: unknown key '" + key + "'");
    std::string flag = "--" + key;
    for (auto& ch : flag) {
      if (ch == '_') ch = '-';
    }
    if (cmd.count(flag) == 0) it->second(value);
  }
}

template <typename Real>
int run_train(const TrainArgs& args, const TrainConfig& cfg) {
  const auto manifest = read_manifest(args.manifest);
  const auto train_videos = load_split(manifest, Split::train);
  const auto val_videos = load_split(manifest, Split::val);
  const auto test_videos = load_split(manifest, Split::test);
  if (train_videos.empty()) throw std::invalid_argument("manifest has no train videos");

  const auto train_set = make_training_set<Real>(train_videos, cfg.setting);
  const auto selection =
      make_eval_set<Real>(val_videos.empty() ? train_videos : val_videos);
  if (val_videos.empty()) {
    std::cerr << "note: no val split, selecting on train accuracy\n";
  }
  const ModelDims dims{manifest.audio_dim, manifest.visual_dim, cfg.hidden,
                       manifest.categories};
  const auto result = train<Real>(dims, train_set, selection, cfg, &std::cout);
  write_checkpoint(fs::path(args.out), result.params, cfg.init, cfg.precision);

  char line[128];
  std::snprintf(line, sizeof line, "best_epoch\t%zu\tval_acc\t%.4f\n", result.best_epoch,
                result.best_accuracy);
  std::cerr << line;
  if (!test_videos.empty()) {
    const auto test_set = make_eval_set<Real>(test_videos);
    const auto report = evaluate(result.params, cfg.init,
                                 std::span<const EvalExample<Real>>(test_set), cfg.parallel);
    std::snprintf(line, sizeof line, "test_acc\t%.4f\n", report.accuracy);
    std::cerr << line;
  }
  return 0;
}

template <typename Real>
int run_eval(const fs::path& checkpoint, const DatasetManifest& manifest, Split split) {
  const auto ck = read_checkpoint<Real>(checkpoint);
  const auto videos = load_split(manifest, split);
  if (videos.empty()) {
    std::cerr << "error: split '" << to_string(split) << "' is empty\n";
    return 2;
  }
  const auto examples = make_eval_set<Real>(videos);
  const auto report =
      evaluate(ck.params, ck.info.mode, std::span<const EvalExample<Real>>(examples));
  print_report(std::cout, report, manifest.category_names);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audio-visual sequence-to-sequence event localization"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dual-modality dataset");
  std::string synth_config;
  std::string synth_out;
  std::uint64_t synth_seed = 0;
  synth->add_option("--config", synth_config, "key=value synthetic dataset config")
      ->required()
      ->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_seed, "Override the config seed");

  // train
  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--config", ta.config, "key=value file mirroring these flags");
  train_cmd->add_option("--manifest", ta.manifest, "Dataset manifest");
  train_cmd->add_option("--setting", ta.setting, "supervised | weak")
      ->check(CLI::IsMember({"supervised", "weak"}));
  train_cmd->add_option("--init", ta.init, "fusion | visual_only | audio_only | label_guided")
      ->check(CLI::IsMember({"fusion", "visual_only", "audio_only", "label_guided"}));
  train_cmd->add_option("--seed", ta.seed, "Random seed");
  train_cmd->add_option("--epochs", ta.epochs, "Maximum epochs");
  train_cmd->add_option("--lr", ta.lr, "Adam learning rate");
  train_cmd->add_option("--hidden", ta.hidden, "LSTM hidden size");
  train_cmd->add_option("--out", ta.out, "Checkpoint path");
  train_cmd->add_option("--batch", ta.batch, "Videos per update");
  train_cmd->add_option("--clip", ta.clip, "Global gradient norm clip, 0 disables");
  train_cmd->add_option("--patience", ta.patience, "Early stopping patience, 0 disables");
  train_cmd->add_option("--precision", ta.precision, "standard | checking")
      ->check(CLI::IsMember({"standard", "checking"}));
  train_cmd->add_option("--aux-weight", ta.aux_weight, "label_guided auxiliary loss weight");
  train_cmd->add_flag("--parallel", ta.parallel, "Per-video OpenMP parallelism");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Frame-wise accuracy of a checkpoint");
  std::string eval_checkpoint;
  std::string eval_manifest;
  std::string eval_split = "test";
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint path")->required();
  eval_cmd->add_option("--manifest", eval_manifest, "Dataset manifest")->required();
  eval_cmd->add_option("--split", eval_split, "train | val | test")
      ->check(CLI::IsMember({"train", "val", "test"}));

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  std::uint64_t grad_seed = 1;
  bool break_tanh = false;
  grad_cmd->add_option("--seed", grad_seed, "Random seed");
  grad_cmd->add_flag("--break-tanh-grad", break_tanh,
                     "Use a wrong tanh derivative (the check must fail)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      auto cfg = synth_config_from(read_key_values(synth_config));
      if (synth->count("--seed")) cfg.seed = synth_seed;
      const auto m = generate_synthetic(cfg, synth_out);
      std::cerr << "wrote " << m.entries.size() << " videos to " << synth_out << "\n";
      return 0;
    }

    if (*train_cmd) {
      apply_config(*train_cmd, ta.config,
                   {{"manifest", [&](const std::string& v) { ta.manifest = v; }},
                    {"setting", [&](const std::string& v) { ta.setting = v; }},
                    {"init", [&](const std::string& v) { ta.init = v; }},
                    {"seed", [&](const std::string& v) { ta.seed = std::stoull(v); }},
                    {"epochs", [&](const std::string& v) { ta.epochs = std::stoull(v); }},
                    {"lr", [&](const std::string& v) { ta.lr = std::stod(v); }},
                    {"hidden", [&](const std::string& v) { ta.hidden = std::stoull(v); }},
                    {"out", [&](const std::string& v) { ta.out = v; }},
                    {"batch", [&](const std::string& v) { ta.batch = std::stoull(v); }},
                    {"clip", [&](const std::string& v) { ta.clip = std::stod(v); }},
                    {"patience", [&](const std::string& v) { ta.patience = std::stoull(v); }},
                    {"precision", [&](const std::string& v) { ta.precision = v; }},
                    {"aux_weight", [&](const std::string& v) { ta.aux_weight = std::stod(v); }},
                    {"parallel",
                     [&](const std::string& v) { ta.parallel = v == "1" || v == "true"; }}});
      if (ta.manifest.empty()) throw std::invalid_argument("--manifest is required");

      TrainConfig cfg;
      cfg.setting = parse_setting(ta.setting);
      cfg.init = parse_init_mode(ta.init);
      cfg.seed = ta.seed;
      cfg.epochs = ta.epochs;
      cfg.adam.learning_rate = ta.lr;
      cfg.adam.clip_norm = ta.clip > 0.0 ? std::optional<double>(ta.clip) : std::nullopt;
      cfg.hidden = ta.hidden;
      cfg.batch_size = ta.batch;
      cfg.patience = ta.patience;
      cfg.precision = parse_precision(ta.precision);
      cfg.aux_weight = ta.aux_weight;
      cfg.parallel = ta.parallel;
      cfg.validate();
      return cfg.precision == Precision::checking ? run_train<double>(ta, cfg)
                                                  : run_train<float>(ta, cfg);
    }

    if (*eval_cmd) {
      const auto manifest = read_manifest(eval_manifest);
      const auto info = read_checkpoint_info(eval_checkpoint);
      if (info.dims.audio_dim != manifest.audio_dim ||
          info.dims.visual_dim != manifest.visual_dim ||
          info.dims.categories != manifest.categories) {
        std::cerr << "error: checkpoint dims (d_a=" << info.dims.audio_dim
                  << ", d_v=" << info.dims.visual_dim << ", C=" << info.dims.categories
                  << ") do not match manifest (d_a=" << manifest.audio_dim
                  << ", d_v=" << manifest.visual_dim << ", C=" << manifest.categories
                  << ")\n";
        return 2;
      }
      const auto split = parse_split(eval_split);
      return info.precision == Precision::checking
                 ? run_eval<double>(eval_checkpoint, manifest, split)
                 : run_eval<float>(eval_checkpoint, manifest, split);
    }

    if (*grad_cmd) {
      GradcheckOptions opts;
      opts.seed = grad_seed;
      GradcheckReport report;
      if (break_tanh) {
        testing::ScopedTanhGradFault fault;
        report = gradcheck(opts);
      } else {
        report = gradcheck(opts);
      }
      print_gradcheck(std::cout, report);
      return report.passed ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
