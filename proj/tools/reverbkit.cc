// tools/reverbkit.cc

// Copyright 2026  The reverbkit authors

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

// Single entry point for the pipeline: every stage is a subcommand, errors
// leave as one-line JSON on stderr with a stable exit code per error class.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "reverbkit/augment.h"
#include "reverbkit/common.h"
#include "reverbkit/featio.h"
#include "reverbkit/fhvae.h"
#include "reverbkit/harness.h"
#include "reverbkit/logmel.h"
#include "reverbkit/manifest.h"
#include "reverbkit/roomsim.h"
#include "reverbkit/synth.h"
#include "reverbkit/tdnn.h"
#include "reverbkit/wav.h"

namespace fs = std::filesystem;
using Json = nlohmann::json;
using namespace reverbkit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

int g_log_level = 1;  // 0 quiet, 1 info, 2 debug

void log_info(const std::string &msg) {
  if (g_log_level >= 1) std::cerr << "# " << msg << "\n";
}

void emit_error(const std::string &code, const std::string &message,
                const std::string &context) {
  Json j;
  j["code"] = code;
  j["message"] = message;
  j["context"] = context;
  std::cerr << j.dump() << "\n";
}

std::vector<std::string> list_rirs(const std::string &dir) {
  if (!fs::is_directory(dir))
    throw DataError("rir directory not found: " + dir);
  std::vector<std::string> paths;
  for (const auto &e : fs::directory_iterator(dir))
    if (e.path().extension() == ".wav") paths.push_back(e.path().string());
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw DataError("no RIR files under " + dir);
  return paths;
}

Manifest read_manifest_checked(const std::string &path,
                               Split split = Split::kTrain) {
  if (!fs::exists(path)) throw DataError("manifest not found: " + path);
  return read_manifest(path, split);
}

// ---- Subcommand state ----

struct RirArgs {
  std::string set_id = "S1";
  int rooms = 20;
  int per_room = 2;
  double duration = 0.5;
  std::string out;
};

struct AugmentArgs {
  std::string manifest, rir_dir, out;
  bool keep_gain = false;
  double gain_db = 0.0;
  double snr_db = 0.0;
  bool has_snr = false;
  std::string domain = "clean-r";
};

struct FeaturesArgs {
  std::string manifest, out;
  bool serial = false;
};

struct SynthArgs {
  std::string out;
  synth::CorpusParams params;
};

struct TrainAmArgs {
  std::string train_manifest, train_feats, dev_manifest, dev_feats;
  std::string out, log;
  int hidden = 64;
  int classes = 0;  // 0 = infer from labels
  double step = 0.025;
  int epochs = 20, finetune_epochs = 5;
  double finetune_decay = 0.75, clip = 5.0;
};

struct TrainEnhanceArgs {
  std::string in_manifest, in_feats, target_manifest, target_feats;
  std::string dev_in_manifest, dev_in_feats, dev_target_manifest,
      dev_target_feats;
  std::string out, log;
  bool identity = true;
  int hidden = 64;
  double step = 0.01;
  int epochs = 20, finetune_epochs = 5;
  double finetune_decay = 0.75, clip = 5.0;
};

struct TrainFhvaeArgs {
  std::string train_manifest, train_feats, dev_manifest, dev_feats;
  std::string out, log;
  fhvae::FhvaeConfig config;
};

struct ExtractArgs {
  std::string model, manifest, feats, out;
  bool logvar = false;
};

struct EvalArgs {
  std::string model, manifest, feats, out;
};

struct GridArgs {
  std::string config, out;
  std::string emit_config;
  std::vector<uint64_t> seeds;
  std::vector<std::string> arms;
  bool parallel_arms = false;
};

struct ReportArgs {
  std::string metrics, out;
  std::string format = "text";
};

int run_rir(const RirArgs &a, uint64_t seed) {
  auto paths = harness::build_rir_pool(a.set_id, a.rooms, a.per_room,
                                       a.duration, seed, a.out);
  log_info("wrote " + std::to_string(paths.size()) + " RIRs under " + a.out);
  return kExitOk;
}

int run_augment(const AugmentArgs &a, uint64_t seed) {
  Manifest in = read_manifest_checked(a.manifest);
  CorruptionSpec spec;
  if (!a.rir_dir.empty()) spec.rir_pool = list_rirs(a.rir_dir);
  if (a.has_snr) spec.snr_db = a.snr_db;
  spec.gain_db = a.gain_db;
  spec.keep_gain = a.keep_gain;
  spec.domain_tag = a.domain;
  spec.seed = seed;
  Manifest out = generate(in, spec, a.out);
  write_manifest(out, a.out + "/manifest.jsonl");
  log_info("augmented " + std::to_string(out.entries.size()) +
           " utterances under " + a.out);
  return kExitOk;
}

int run_features(const FeaturesArgs &a) {
  Manifest in = read_manifest_checked(a.manifest);
  fs::create_directories(a.out);
  LogMelConfig cfg;
  for (const auto &e : in.entries) {
    AudioClip clip = read_wav(e.audio);
    clip.id = e.id;
    FeatureMatrix m = a.serial ? logmel_serial(clip, cfg) : logmel(clip, cfg);
    write_feat(m, a.out + "/" + e.id + ".feat");
  }
  log_info("wrote features for " + std::to_string(in.entries.size()) +
           " utterances under " + a.out);
  return kExitOk;
}

int run_synth(const SynthArgs &a, uint64_t seed) {
  synth::Corpus corpus = synth::synth_corpus(a.params, seed, a.out);
  log_info("synthesized corpus under " + a.out + " (" +
           std::to_string(corpus.train.entries.size()) + "/" +
           std::to_string(corpus.dev.entries.size()) + "/" +
           std::to_string(corpus.test.entries.size()) + " utterances)");
  return kExitOk;
}

tdnn::TrainOptions schedule_options(double step, double clip, int epochs,
                                    int finetune_epochs, double decay,
                                    uint64_t seed) {
  tdnn::TrainOptions o;
  o.step_size = step;
  o.clip_norm = clip;
  o.epochs = epochs;
  o.finetune_epochs = finetune_epochs;
  o.finetune_decay = decay;
  o.seed = seed;
  return o;
}

int run_train_am(const TrainAmArgs &a, uint64_t seed) {
  Manifest train_m = read_manifest_checked(a.train_manifest, Split::kTrain);
  Manifest dev_m = read_manifest_checked(a.dev_manifest, Split::kDev);
  auto train = tdnn::load_labeled_utterances(train_m, a.train_feats);
  auto dev = tdnn::load_labeled_utterances(dev_m, a.dev_feats);
  int classes = a.classes;
  if (classes == 0) {
    for (const auto &u : train)
      for (int l : u.labels) classes = std::max(classes, l + 1);
  }
  tdnn::TdnnConfig config;
  config.hidden_units = a.hidden;
  config.input_dim = train.at(0).feats.num_bins;
  config.output_dim = classes;
  config.softmax_output = true;
  tdnn::TrainOptions opts = schedule_options(
      a.step, a.clip, a.epochs, a.finetune_epochs, a.finetune_decay, seed);
  tdnn::TrainResult res = tdnn::train_acoustic_model(train, dev, config, opts);
  tdnn::save_tdnn(a.out, res.ckpt, config);
  if (!a.log.empty()) tdnn::write_train_log(a.log, res.log, true);
  log_info("best dev FER " + std::to_string(res.best_dev) + "% at epoch " +
           std::to_string(res.best_epoch) + "; model saved to " + a.out);
  return kExitOk;
}

int run_train_enhance(const TrainEnhanceArgs &a, uint64_t seed) {
  Manifest in_m = read_manifest_checked(a.in_manifest, Split::kTrain);
  Manifest tgt_m = read_manifest_checked(a.target_manifest, Split::kTrain);
  Manifest dev_in_m = read_manifest_checked(a.dev_in_manifest, Split::kDev);
  Manifest dev_tgt_m =
      read_manifest_checked(a.dev_target_manifest, Split::kDev);
  auto parallel =
      tdnn::load_feature_pairs(in_m, a.in_feats, tgt_m, a.target_feats);
  std::vector<tdnn::FeaturePair> identity;
  if (a.identity) {
    identity =
        tdnn::load_feature_pairs(tgt_m, a.target_feats, tgt_m, a.target_feats);
  }
  auto dev = tdnn::load_feature_pairs(dev_in_m, a.dev_in_feats, dev_tgt_m,
                                      a.dev_target_feats);
  tdnn::TdnnConfig config;
  config.hidden_units = a.hidden;
  config.input_dim = parallel.at(0).input.num_bins;
  config.output_dim = parallel.at(0).target.num_bins;
  config.softmax_output = false;
  tdnn::TrainOptions opts = schedule_options(
      a.step, a.clip, a.epochs, a.finetune_epochs, a.finetune_decay, seed);
  tdnn::TrainResult res =
      tdnn::train_enhancer(parallel, identity, dev, config, opts);
  tdnn::save_tdnn(a.out, res.ckpt, config);
  if (!a.log.empty()) tdnn::write_train_log(a.log, res.log, false);
  log_info("best dev MSE " + std::to_string(res.best_dev) + " at epoch " +
           std::to_string(res.best_epoch) + "; model saved to " + a.out);
  return kExitOk;
}

int run_train_fhvae(TrainFhvaeArgs a, uint64_t seed) {
  Manifest train_m = read_manifest_checked(a.train_manifest, Split::kTrain);
  Manifest dev_m = read_manifest_checked(a.dev_manifest, Split::kDev);
  auto train = fhvae::load_features(train_m, a.train_feats);
  auto dev = fhvae::load_features(dev_m, a.dev_feats);
  a.config.input_dim = train.at(0).feats.num_bins;
  a.config.seed = seed;
  fhvae::FhvaeTrainResult res = fhvae::train_fhvae(train, dev, a.config);
  fhvae::save_fhvae(a.out, res.model);
  if (!a.log.empty()) fhvae::write_fhvae_log(a.log, res.log, a.config);
  log_info("best dev bound at epoch " + std::to_string(res.best_epoch) +
           "; model saved to " + a.out);
  return kExitOk;
}

int run_extract(const ExtractArgs &a) {
  fhvae::FhvaeModel model = fhvae::load_fhvae(a.model);
  Manifest m = read_manifest_checked(a.manifest);
  fs::create_directories(a.out);
  for (const auto &e : m.entries) {
    FeatureMatrix feats = read_feat(a.feats + "/" + e.id + ".feat");
    FeatureMatrix z = fhvae::extract_z1(model, feats, a.logvar);
    write_feat(z, a.out + "/" + e.id + ".feat");
  }
  log_info("extracted latent features for " +
           std::to_string(m.entries.size()) + " utterances under " + a.out);
  return kExitOk;
}

int run_eval(const EvalArgs &a) {
  auto [ckpt, config] = tdnn::load_tdnn(a.model);
  Manifest m = read_manifest_checked(a.manifest, Split::kTest);
  auto data = tdnn::load_labeled_utterances(m, a.feats);
  double fer = tdnn::dataset_fer(ckpt, config, data);
  long frames = 0;
  for (const auto &u : data) frames += static_cast<long>(u.labels.size());
  Json j;
  j["fer"] = fer;
  j["frames"] = frames;
  j["utterances"] = data.size();
  std::cout << j.dump() << "\n";
  if (!a.out.empty()) {
    std::ofstream os(a.out);
    if (!os) throw DataError("cannot write " + a.out);
    os << j.dump(2) << "\n";
  }
  return kExitOk;
}

int run_grid_cmd(const GridArgs &a) {
  if (!a.emit_config.empty()) {
    harness::GridConfig def = harness::default_grid_config();
    if (!a.out.empty()) def.out_dir = a.out;
    harness::write_grid_config(def, a.emit_config);
    log_info("wrote default grid config to " + a.emit_config);
    if (a.config.empty()) return kExitOk;
  }
  harness::GridConfig cfg = a.config.empty()
                                ? harness::default_grid_config()
                                : harness::read_grid_config(a.config);
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (!a.seeds.empty()) cfg.seeds = a.seeds;
  if (!a.arms.empty()) cfg.arms = a.arms;
  if (a.parallel_arms) cfg.parallel_arms = true;
  harness::MetricsReport rep = harness::run_grid(cfg);
  log_info("grid complete; reports under " + cfg.out_dir);
  int failed = 0;
  for (const auto &c : rep.cells) failed += c.failed ? 1 : 0;
  if (failed > 0)
    log_info(std::to_string(failed) + " cell(s) failed; see report.json");
  return kExitOk;
}

int run_report(const ReportArgs &a) {
  harness::MetricsReport rep;
  if (a.metrics.size() >= 4 &&
      a.metrics.substr(a.metrics.size() - 4) == ".csv")
    rep = harness::read_report_csv(a.metrics);
  else
    rep = harness::read_report_json(a.metrics);
  fs::create_directories(a.out);
  if (a.format == "csv")
    harness::write_report_csv(rep, a.out + "/report.csv");
  else if (a.format == "svg")
    harness::write_report_svg(rep, a.out + "/report.svg");
  else if (a.format == "text")
    harness::write_report_text(rep, a.out + "/report.txt");
  else
    throw UsageError("unknown report format: " + a.format);
  log_info("report written under " + a.out);
  return kExitOk;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"reverbkit: distant-speech adaptation toolkit"};
  app.require_subcommand(0, 1);
  app.fallthrough(false);

  uint64_t seed = 0;
  std::string log_level = "info";
  app.add_option("--seed", seed, "Base seed for every stochastic stage");
  app.add_option("--log-level", log_level, "quiet, info, or debug")
      ->check(CLI::IsMember({"quiet", "info", "debug"}));

  RirArgs rir;
  CLI::App *rir_cmd = app.add_subcommand("rir", "Simulate room impulse responses");
  CLI::App *rir_sample =
      rir_cmd->add_subcommand("sample", "Sample a room set and save its RIRs");
  rir_sample->add_option("--set", rir.set_id, "Room set: S1, S2, or S3");
  rir_sample->add_option("--rooms", rir.rooms, "Number of rooms");
  rir_sample->add_option("--per-room", rir.per_room, "RIRs per room");
  rir_sample->add_option("--duration", rir.duration, "RIR length in seconds");
  rir_sample->add_option("--out", rir.out, "Output directory")->required();
  rir_cmd->require_subcommand(1);

  AugmentArgs aug;
  CLI::App *aug_cmd =
      app.add_subcommand("augment", "Corrupt a manifest's audio");
  aug_cmd->add_option("--manifest", aug.manifest, "Input manifest")->required();
  aug_cmd->add_option("--rir-dir", aug.rir_dir, "Directory of RIR WAVs");
  CLI::Option *snr_opt =
      aug_cmd->add_option("--snr", aug.snr_db, "Additive noise SNR (dB)");
  aug_cmd->add_option("--gain", aug.gain_db, "Gain offset (dB)");
  aug_cmd->add_flag("--keep-gain", aug.keep_gain,
                    "Keep raw convolution gain (skip peak renormalization)");
  aug_cmd->add_option("--domain", aug.domain, "Domain tag for the output");
  aug_cmd->add_option("--out", aug.out, "Output directory")->required();

  FeaturesArgs feat;
  CLI::App *feat_cmd =
      app.add_subcommand("features", "Compute log-Mel features");
  feat_cmd->add_option("--manifest", feat.manifest, "Input manifest")
      ->required();
  feat_cmd->add_option("--out", feat.out, "Output directory")->required();
  feat_cmd->add_flag("--serial", feat.serial, "Use the serial reference path");

  SynthArgs synth_args;
  CLI::App *synth_cmd =
      app.add_subcommand("synth", "Synthesize the labeled corpus");
  synth_cmd->add_option("--out", synth_args.out, "Output directory")
      ->required();
  synth_cmd->add_option("--train", synth_args.params.train_utts,
                        "Training utterances");
  synth_cmd->add_option("--dev", synth_args.params.dev_utts,
                        "Development utterances");
  synth_cmd->add_option("--test", synth_args.params.test_utts,
                        "Test utterances");
  synth_cmd->add_option("--frames", synth_args.params.frames_per_utt,
                        "Nominal frames per utterance");
  synth_cmd->add_option("--classes", synth_args.params.n_classes,
                        "Number of unit classes");

  TrainAmArgs am;
  CLI::App *am_cmd =
      app.add_subcommand("train-am", "Train a frame classifier");
  am_cmd->add_option("--train-manifest", am.train_manifest, "Training manifest")
      ->required();
  am_cmd->add_option("--train-feats", am.train_feats, "Training feature dir")
      ->required();
  am_cmd->add_option("--dev-manifest", am.dev_manifest, "Dev manifest")
      ->required();
  am_cmd->add_option("--dev-feats", am.dev_feats, "Dev feature dir")
      ->required();
  am_cmd->add_option("--out", am.out, "Output checkpoint path")->required();
  am_cmd->add_option("--log", am.log, "JSONL metric log path");
  am_cmd->add_option("--hidden", am.hidden, "Hidden units per layer");
  am_cmd->add_option("--classes", am.classes,
                     "Output classes (default: inferred from labels)");
  am_cmd->add_option("--step", am.step, "Initial step size");
  am_cmd->add_option("--epochs", am.epochs, "Fixed-step epochs");
  am_cmd->add_option("--finetune-epochs", am.finetune_epochs,
                     "Decayed-step epochs");
  am_cmd->add_option("--finetune-decay", am.finetune_decay,
                     "Per-epoch step decay in the finetune phase");
  am_cmd->add_option("--clip", am.clip, "Gradient norm clip");

  TrainEnhanceArgs enh;
  CLI::App *enh_cmd = app.add_subcommand(
      "train-enhance", "Train a feature-domain enhancement regressor");
  enh_cmd->add_option("--in-manifest", enh.in_manifest, "Corrupted manifest")
      ->required();
  enh_cmd->add_option("--in-feats", enh.in_feats, "Corrupted feature dir")
      ->required();
  enh_cmd->add_option("--target-manifest", enh.target_manifest,
                      "Clean manifest")
      ->required();
  enh_cmd->add_option("--target-feats", enh.target_feats, "Clean feature dir")
      ->required();
  enh_cmd->add_option("--dev-in-manifest", enh.dev_in_manifest,
                      "Dev corrupted manifest")
      ->required();
  enh_cmd->add_option("--dev-in-feats", enh.dev_in_feats,
                      "Dev corrupted feature dir")
      ->required();
  enh_cmd->add_option("--dev-target-manifest", enh.dev_target_manifest,
                      "Dev clean manifest")
      ->required();
  enh_cmd->add_option("--dev-target-feats", enh.dev_target_feats,
                      "Dev clean feature dir")
      ->required();
  enh_cmd->add_option("--out", enh.out, "Output checkpoint path")->required();
  enh_cmd->add_option("--log", enh.log, "JSONL metric log path");
  enh_cmd->add_flag("!--no-identity", enh.identity,
                    "Drop the clean-to-clean identity pairs");
  enh_cmd->add_option("--hidden", enh.hidden, "Hidden units per layer");
  enh_cmd->add_option("--step", enh.step, "Initial step size");
  enh_cmd->add_option("--epochs", enh.epochs, "Fixed-step epochs");
  enh_cmd->add_option("--finetune-epochs", enh.finetune_epochs,
                      "Decayed-step epochs");
  enh_cmd->add_option("--finetune-decay", enh.finetune_decay,
                      "Per-epoch step decay in the finetune phase");
  enh_cmd->add_option("--clip", enh.clip, "Gradient norm clip");

  TrainFhvaeArgs fh;
  CLI::App *fh_cmd = app.add_subcommand(
      "train-fhvae", "Train the factorized hierarchical VAE");
  fh_cmd->add_option("--train-manifest", fh.train_manifest, "Training manifest")
      ->required();
  fh_cmd->add_option("--train-feats", fh.train_feats, "Training feature dir")
      ->required();
  fh_cmd->add_option("--dev-manifest", fh.dev_manifest, "Dev manifest")
      ->required();
  fh_cmd->add_option("--dev-feats", fh.dev_feats, "Dev feature dir")
      ->required();
  fh_cmd->add_option("--out", fh.out, "Output checkpoint path")->required();
  fh_cmd->add_option("--log", fh.log, "JSONL metric log path");
  fh_cmd->add_option("--hidden", fh.config.hidden, "LSTM hidden units");
  fh_cmd->add_option("--d1", fh.config.d1, "Segment latent dimension");
  fh_cmd->add_option("--d2", fh.config.d2, "Sequence latent dimension");
  fh_cmd->add_option("--alpha", fh.config.alpha,
                     "Discriminative objective weight");
  fh_cmd->add_option("--batch", fh.config.batch_segments,
                     "Segments per training batch");
  fh_cmd->add_option("--epochs", fh.config.max_epochs, "Maximum epochs");
  fh_cmd->add_option("--patience", fh.config.patience,
                     "Early-stopping patience (epochs)");
  fh_cmd->add_option("--step", fh.config.adam.step_size, "Adam step size");

  ExtractArgs ex;
  CLI::App *ex_cmd = app.add_subcommand(
      "extract-z1", "Extract per-frame segment-latent features");
  ex_cmd->add_option("--model", ex.model, "FHVAE checkpoint")->required();
  ex_cmd->add_option("--manifest", ex.manifest, "Manifest to extract")
      ->required();
  ex_cmd->add_option("--feats", ex.feats, "Input feature dir")->required();
  ex_cmd->add_option("--out", ex.out, "Output feature dir")->required();
  ex_cmd->add_flag("--logvar", ex.logvar,
                   "Append posterior log-variances to the means");

  EvalArgs ev;
  CLI::App *ev_cmd =
      app.add_subcommand("eval", "Score a classifier on a labeled set");
  ev_cmd->add_option("--model", ev.model, "Classifier checkpoint")->required();
  ev_cmd->add_option("--manifest", ev.manifest, "Manifest to score")
      ->required();
  ev_cmd->add_option("--feats", ev.feats, "Feature dir")->required();
  ev_cmd->add_option("--out", ev.out, "Optional JSON result path");

  GridArgs grid;
  CLI::App *grid_cmd =
      app.add_subcommand("grid", "Run the adaptation-strategy grid");
  grid_cmd->add_option("--config", grid.config, "Grid config JSON");
  grid_cmd->add_option("--out", grid.out, "Output directory");
  grid_cmd->add_option("--seeds", grid.seeds, "Override config seeds");
  grid_cmd->add_option("--arms", grid.arms, "Override config arm groups");
  grid_cmd->add_flag("--parallel-arms", grid.parallel_arms,
                     "Run one seed's arms concurrently");
  grid_cmd->add_option("--emit-config", grid.emit_config,
                       "Write the default config to this path and exit");

  ReportArgs rep;
  CLI::App *rep_cmd =
      app.add_subcommand("report", "Re-render a saved metrics report");
  rep_cmd->add_option("--metrics", rep.metrics,
                      "report.json (or report.csv) from a grid run")
      ->required();
  rep_cmd->add_option("--out", rep.out, "Output directory")->required();
  rep_cmd->add_option("--format", rep.format, "csv, svg, or text")
      ->check(CLI::IsMember({"csv", "svg", "text"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    emit_error("usage", e.what(), "argument parsing");
    std::cerr << app.help() << std::flush;
    return kExitUsage;
  }

  if (log_level == "quiet") g_log_level = 0;
  else if (log_level == "debug") g_log_level = 2;

  std::string active = "none";
  try {
    if (rir_sample->parsed()) {
      active = "rir sample";
      return run_rir(rir, seed);
    }
    if (aug_cmd->parsed()) {
      active = "augment";
      aug.has_snr = snr_opt->count() > 0;
      return run_augment(aug, seed);
    }
    if (feat_cmd->parsed()) {
      active = "features";
      return run_features(feat);
    }
    if (synth_cmd->parsed()) {
      active = "synth";
      return run_synth(synth_args, seed);
    }
    if (am_cmd->parsed()) {
      active = "train-am";
      return run_train_am(am, seed);
    }
    if (enh_cmd->parsed()) {
      active = "train-enhance";
      return run_train_enhance(enh, seed);
    }
    if (fh_cmd->parsed()) {
      active = "train-fhvae";
      return run_train_fhvae(fh, seed);
    }
    if (ex_cmd->parsed()) {
      active = "extract-z1";
      return run_extract(ex);
    }
    if (ev_cmd->parsed()) {
      active = "eval";
      return run_eval(ev);
    }
    if (grid_cmd->parsed()) {
      active = "grid";
      return run_grid_cmd(grid);
    }
    if (rep_cmd->parsed()) {
      active = "report";
      return run_report(rep);
    }
    std::cout << app.help() << std::flush;
    return kExitOk;
  } catch (const UsageError &e) {
    emit_error("usage", e.what(), active);
    return kExitUsage;
  } catch (const DataError &e) {
    emit_error("data", e.what(), active);
    return kExitData;
  } catch (const NumericError &e) {
    emit_error("numeric", e.what(), active);
    return kExitNumeric;
  } catch (const std::exception &e) {
    emit_error("data", e.what(), active);
    return kExitData;
  }
}
