// src/harness.cc

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

#include "reverbkit/harness.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "reverbkit/logmel.h"

namespace reverbkit {
namespace harness {

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

const char *kSplitNames[3] = {"train", "dev", "test"};

// Training entry points never accept test-split data.
void require_trainable(const Manifest &m, const std::string &what) {
  if (m.split == Split::kTest)
    throw UsageError("refusing to use a test-split manifest for " + what);
}

void compute_features(const Manifest &manifest, const std::string &feat_dir) {
  fs::create_directories(feat_dir);
  LogMelConfig cfg;
  for (const auto &e : manifest.entries) {
    std::string out = feat_dir + "/" + e.id + ".feat";
    if (fs::exists(out)) continue;
    AudioClip clip = read_wav(e.audio);
    clip.id = e.id;
    FeatureMatrix m = logmel(clip, cfg);
    write_feat(m, out);
  }
}

// All per-seed artifacts and caches an arm may need.  Domains materialize
// lazily; features and loaded datasets are computed once and shared.
struct SeedData {
  const GridConfig *cfg = nullptr;
  uint64_t seed = 0;
  std::string dir;  // <out>/corpus/<seed>

  Manifest clean[3], distant[3], reverb[3];
  bool have_clean = false, have_distant = false, have_reverb = false;

  std::map<std::string, std::vector<tdnn::LabeledUtterance>> data;
  std::map<std::string, tdnn::TrainResult> models;
  bool have_fhvae = false;
  fhvae::FhvaeTrainResult fhvae_model;
  // z1 datasets keyed "<lv?>z1_<domain>_<split>".
};

void ensure_clean(SeedData &sd) {
  if (sd.have_clean) return;
  synth::Corpus corpus = synth::synth_corpus(
      sd.cfg->corpus, derive_seed(sd.seed, "corpus"), sd.dir);
  sd.clean[0] = corpus.train;
  sd.clean[1] = corpus.dev;
  sd.clean[2] = corpus.test;
  sd.have_clean = true;
}

void ensure_distant(SeedData &sd) {
  if (sd.have_distant) return;
  ensure_clean(sd);
  const ChannelSpec &ch = sd.cfg->channel;
  std::vector<std::string> pool;
  if (ch.reverb)
    pool = build_rir_pool(ch.rir_set, ch.n_rooms, ch.n_rirs_per_room,
                          ch.rir_duration_s,
                          derive_seed(sd.seed, "channel-rooms"),
                          sd.dir + "/rirs/channel");
  for (int s = 0; s < 3; ++s) {
    sd.distant[s] = make_distant(
        sd.clean[s], pool, ch, sd.dir + "/audio_distant_" + kSplitNames[s],
        derive_seed(sd.seed, std::string("channel-") + kSplitNames[s]));
    sd.distant[s].split = sd.clean[s].split;
    write_manifest(sd.distant[s],
                   sd.dir + "/distant_" + kSplitNames[s] + ".jsonl");
  }
  sd.have_distant = true;
}

void ensure_reverb(SeedData &sd) {
  if (sd.have_reverb) return;
  ensure_clean(sd);
  std::vector<std::string> pool = build_rir_pool(
      sd.cfg->augment_rir_set, sd.cfg->augment_rooms,
      sd.cfg->augment_rirs_per_room, sd.cfg->augment_rir_duration_s,
      derive_seed(sd.seed, "augment-rooms"), sd.dir + "/rirs/augment");
  for (int s = 0; s < 3; ++s) {
    CorruptionSpec spec;
    spec.rir_pool = pool;
    spec.domain_tag = "reverb";
    spec.seed = derive_seed(sd.seed, std::string("reverb-") + kSplitNames[s]);
    sd.reverb[s] =
        generate(sd.clean[s], spec, sd.dir + "/audio_reverb_" + kSplitNames[s]);
    sd.reverb[s].split = sd.clean[s].split;
    write_manifest(sd.reverb[s],
                   sd.dir + "/reverb_" + kSplitNames[s] + ".jsonl");
  }
  sd.have_reverb = true;
}

const Manifest &domain_manifest(SeedData &sd, const std::string &domain,
                                int split) {
  if (domain == "clean") {
    ensure_clean(sd);
    return sd.clean[split];
  }
  if (domain == "distant") {
    ensure_distant(sd);
    return sd.distant[split];
  }
  if (domain == "reverb") {
    ensure_reverb(sd);
    return sd.reverb[split];
  }
  throw UsageError("unknown domain " + domain);
}

// Log-Mel datasets, loaded once per (domain, split).
std::vector<tdnn::LabeledUtterance> &labeled(SeedData &sd,
                                             const std::string &domain,
                                             int split) {
  std::string key = domain + "_" + kSplitNames[split];
  auto it = sd.data.find(key);
  if (it != sd.data.end()) return it->second;
  const Manifest &m = domain_manifest(sd, domain, split);
  std::string feat_dir = sd.dir + "/feats/" + key;
  compute_features(m, feat_dir);
  return sd.data.emplace(key, tdnn::load_labeled_utterances(m, feat_dir))
      .first->second;
}

std::vector<tdnn::LabeledUtterance> &labeled_for_training(
    SeedData &sd, const std::string &domain, int split) {
  require_trainable(domain_manifest(sd, domain, split), "training");
  return labeled(sd, domain, split);
}

std::vector<tdnn::LabeledUtterance> concat(
    const std::vector<tdnn::LabeledUtterance> &a,
    const std::vector<tdnn::LabeledUtterance> &b) {
  std::vector<tdnn::LabeledUtterance> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

tdnn::TdnnConfig am_config(const GridConfig &cfg, int input_dim,
                           int output_dim, bool softmax) {
  tdnn::TdnnConfig c;
  c.contexts = cfg.contexts;
  c.hidden_units = cfg.hidden_units;
  c.input_dim = input_dim;
  c.output_dim = output_dim;
  c.softmax_output = softmax;
  return c;
}

tdnn::TrainOptions train_options(const GridConfig &cfg, double step,
                                 uint64_t seed) {
  tdnn::TrainOptions o;
  o.step_size = step;
  o.clip_norm = cfg.clip_norm;
  o.epochs = cfg.epochs;
  o.finetune_epochs = cfg.finetune_epochs;
  o.finetune_decay = cfg.finetune_decay;
  o.seed = seed;
  return o;
}

std::string model_dir(const GridConfig &cfg, uint64_t seed) {
  std::string dir = cfg.out_dir + "/models/" + std::to_string(seed);
  fs::create_directories(dir);
  return dir;
}

// Classifier cache: arms share the clean-trained model.
tdnn::TrainResult &get_classifier(
    SeedData &sd, const std::string &name,
    const std::vector<tdnn::LabeledUtterance> &train,
    const std::vector<tdnn::LabeledUtterance> &dev, double step) {
  auto it = sd.models.find(name);
  if (it != sd.models.end()) return it->second;
  tdnn::TdnnConfig config =
      am_config(*sd.cfg, train.at(0).feats.num_bins, sd.cfg->corpus.n_classes,
                true);
  tdnn::TrainOptions opts =
      train_options(*sd.cfg, step, derive_seed(sd.seed, name));
  tdnn::TrainResult res = tdnn::train_acoustic_model(train, dev, config, opts);
  std::string dir = model_dir(*sd.cfg, sd.seed);
  tdnn::save_tdnn(dir + "/" + name + ".ckpt", res.ckpt, config);
  tdnn::write_train_log(dir + "/" + name + ".log.jsonl", res.log, true);
  return sd.models.emplace(name, std::move(res)).first->second;
}

tdnn::TrainResult &get_clean_am(SeedData &sd) {
  return get_classifier(sd, "am-clean", labeled_for_training(sd, "clean", 0),
                        labeled_for_training(sd, "clean", 1),
                        sd.cfg->step_size);
}

std::vector<tdnn::FeaturePair> make_pairs(
    const std::vector<tdnn::LabeledUtterance> &input,
    const std::vector<tdnn::LabeledUtterance> &target) {
  if (input.size() != target.size())
    throw DataError("parallel datasets differ in size");
  std::vector<tdnn::FeaturePair> out;
  out.reserve(input.size());
  for (size_t i = 0; i < input.size(); ++i) {
    if (input[i].id != target[i].id)
      throw DataError("parallel datasets disagree at " + input[i].id);
    out.push_back({input[i].id, input[i].feats, target[i].feats});
  }
  return out;
}

tdnn::TdnnConfig enhancer_config(const GridConfig &cfg, int dim) {
  tdnn::TdnnConfig c = am_config(cfg, dim, dim, false);
  c.hidden_units = cfg.enhancer_hidden_units;
  return c;
}

tdnn::TrainResult &get_enhancer(SeedData &sd, const std::string &name,
                                const std::string &corrupt_domain) {
  auto it = sd.models.find(name);
  if (it != sd.models.end()) return it->second;
  auto &clean_tr = labeled_for_training(sd, "clean", 0);
  auto &clean_dv = labeled_for_training(sd, "clean", 1);
  auto &corr_tr = labeled_for_training(sd, corrupt_domain, 0);
  auto &corr_dv = labeled_for_training(sd, corrupt_domain, 1);
  std::vector<tdnn::FeaturePair> parallel = make_pairs(corr_tr, clean_tr);
  std::vector<tdnn::FeaturePair> identity = make_pairs(clean_tr, clean_tr);
  std::vector<tdnn::FeaturePair> dev = make_pairs(corr_dv, clean_dv);
  tdnn::TdnnConfig config =
      enhancer_config(*sd.cfg, clean_tr.at(0).feats.num_bins);
  tdnn::TrainOptions opts = train_options(
      *sd.cfg, sd.cfg->multi_step_size, derive_seed(sd.seed, name));
  tdnn::TrainResult res = tdnn::train_enhancer(parallel, identity, dev,
                                               config, opts);
  std::string dir = model_dir(*sd.cfg, sd.seed);
  tdnn::save_tdnn(dir + "/" + name + ".ckpt", res.ckpt, config);
  tdnn::write_train_log(dir + "/" + name + ".log.jsonl", res.log, false);
  return sd.models.emplace(name, std::move(res)).first->second;
}

std::vector<tdnn::LabeledUtterance> enhanced_dataset(
    SeedData &sd, tdnn::TrainResult &enh,
    const std::vector<tdnn::LabeledUtterance> &in) {
  tdnn::TdnnConfig config = enhancer_config(*sd.cfg, in.at(0).feats.num_bins);
  std::vector<tdnn::LabeledUtterance> out;
  out.reserve(in.size());
  for (const auto &u : in)
    out.push_back({u.id, tdnn::enhance(u.feats, enh.ckpt, config), u.labels});
  return out;
}

std::vector<fhvae::UttFeatures> pooled_features(
    const std::vector<tdnn::LabeledUtterance> &clean,
    const std::vector<tdnn::LabeledUtterance> &distant) {
  std::vector<fhvae::UttFeatures> out;
  out.reserve(clean.size() + distant.size());
  for (const auto &u : clean) out.push_back({"clean:" + u.id, u.feats});
  for (const auto &u : distant) out.push_back({"distant:" + u.id, u.feats});
  return out;
}

fhvae::FhvaeTrainResult &get_fhvae(SeedData &sd) {
  if (sd.have_fhvae) return sd.fhvae_model;
  auto &clean_tr = labeled_for_training(sd, "clean", 0);
  auto &dist_tr = labeled_for_training(sd, "distant", 0);
  auto &clean_dv = labeled_for_training(sd, "clean", 1);
  auto &dist_dv = labeled_for_training(sd, "distant", 1);
  fhvae::FhvaeConfig cfg = sd.cfg->fhvae;
  cfg.seed = derive_seed(sd.seed, "fhvae");
  sd.fhvae_model = fhvae::train_fhvae(pooled_features(clean_tr, dist_tr),
                                      pooled_features(clean_dv, dist_dv), cfg);
  std::string dir = model_dir(*sd.cfg, sd.seed);
  fhvae::save_fhvae(dir + "/fhvae.ckpt", sd.fhvae_model.model);
  fhvae::write_fhvae_log(dir + "/fhvae.log.jsonl", sd.fhvae_model.log, cfg);
  sd.have_fhvae = true;
  return sd.fhvae_model;
}

// z1 datasets reuse the source dataset's labels frame for frame.
std::vector<tdnn::LabeledUtterance> &z1_dataset(SeedData &sd,
                                                const std::string &domain,
                                                int split, bool logvar) {
  std::string key = std::string(logvar ? "z1lv_" : "z1_") + domain + "_" +
                    kSplitNames[split];
  auto it = sd.data.find(key);
  if (it != sd.data.end()) return it->second;
  fhvae::FhvaeTrainResult &fh = get_fhvae(sd);
  const auto &src = labeled(sd, domain, split);
  std::vector<tdnn::LabeledUtterance> out;
  out.reserve(src.size());
  std::string feat_dir = sd.dir + "/feats/" + key;
  fs::create_directories(feat_dir);
  for (const auto &u : src) {
    tdnn::LabeledUtterance z;
    z.id = u.id;
    z.feats = fhvae::extract_z1(fh.model, u.feats, logvar);
    z.labels = u.labels;
    write_feat(z.feats, feat_dir + "/" + u.id + ".feat");
    out.push_back(std::move(z));
  }
  return sd.data.emplace(key, std::move(out)).first->second;
}

// ---- Report plumbing ----

MetricCell &cell(MetricsReport &rep, const std::string &train,
                 const std::string &target) {
  MetricCell *c = rep.find(train, target);
  if (c) return *c;
  MetricCell fresh;
  fresh.train_domain = train;
  fresh.target_domain = target;
  rep.cells.push_back(fresh);
  return rep.cells.back();
}

void record(MetricsReport &rep, const std::string &train,
            const std::string &target, double fer) {
  cell(rep, train, target).fers.push_back(fer);
}

void mark_failed(MetricsReport &rep, const std::string &train,
                 const std::string &target, const std::string &error) {
  MetricCell &c = cell(rep, train, target);
  c.failed = true;
  if (c.error.empty()) c.error = error;
}

struct ArmDef {
  std::string name;
  std::vector<std::pair<std::string, std::string>> cells;
};

const std::vector<ArmDef> &arm_defs() {
  static const std::vector<ArmDef> defs = {
      {"baseline",
       {{"clean", "clean"},
        {"clean", "distant"},
        {"distant", "distant"},
        {"distant-cl", "distant"}}},
      {"multi", {{"multi", "clean"}, {"multi", "distant"}}},
      {"reverb-aug",
       {{"clean+reverb", "reverb"}, {"clean+reverb", "distant"}}},
      {"enhance", {{"clean", "clean-enh"}, {"clean", "distant-enh"}}},
      {"dereverb", {{"clean", "distant-dr"}}},
      {"fhvae",
       {{"z1-clean", "z1-clean"},
        {"z1-clean", "z1-distant"},
        {"z1lv-clean", "z1lv-clean"},
        {"z1lv-clean", "z1lv-distant"}}}};
  return defs;
}

const ArmDef &arm_def(const std::string &name) {
  for (const auto &d : arm_defs())
    if (d.name == name) return d;
  throw UsageError("unknown experiment arm " + name);
}

// (train domain, target domain, FER%) triples produced by one arm run.
using ArmResults = std::vector<std::tuple<std::string, std::string, double>>;

void write_arm_fers(const GridConfig &cfg, const std::string &arm,
                    uint64_t seed, const ArmResults &fers) {
  std::string dir = cfg.out_dir + "/" + arm + "/" + std::to_string(seed);
  fs::create_directories(dir);
  Json j;
  j["seed"] = seed;
  for (const auto &[train, target, fer] : fers)
    j["fer"][train + "->" + target] = fer;
  std::ofstream os(dir + "/fer.json");
  os << j.dump(2) << "\n";
}

ArmResults run_arm(SeedData &sd, const std::string &arm) {
  const GridConfig &cfg = *sd.cfg;
  ArmResults fers;
  auto note = [&](const std::string &train, const std::string &target,
                  double fer) { fers.push_back({train, target, fer}); };

  if (arm == "baseline") {
    tdnn::TrainResult &am_clean = get_clean_am(sd);
    tdnn::TrainResult &am_distant = get_classifier(
        sd, "am-distant", labeled_for_training(sd, "distant", 0),
        labeled_for_training(sd, "distant", 1), cfg.step_size);
    tdnn::TrainResult &am_distant_cl = get_classifier(
        sd, "am-distant-cl", labeled_for_training(sd, "distant", 0),
        labeled_for_training(sd, "distant", 1), cfg.step_size);
    tdnn::TdnnConfig config = am_config(cfg, 80, cfg.corpus.n_classes, true);
    note("clean", "clean",
         tdnn::dataset_fer(am_clean.ckpt, config, labeled(sd, "clean", 2)));
    note("clean", "distant",
         tdnn::dataset_fer(am_clean.ckpt, config, labeled(sd, "distant", 2)));
    note("distant", "distant",
         tdnn::dataset_fer(am_distant.ckpt, config, labeled(sd, "distant", 2)));
    note("distant-cl", "distant",
         tdnn::dataset_fer(am_distant_cl.ckpt, config,
                           labeled(sd, "distant", 2)));
  } else if (arm == "multi") {
    tdnn::TrainResult &am = get_classifier(
        sd, "am-multi",
        concat(labeled_for_training(sd, "clean", 0),
               labeled_for_training(sd, "distant", 0)),
        concat(labeled_for_training(sd, "clean", 1),
               labeled_for_training(sd, "distant", 1)),
        cfg.multi_step_size);
    tdnn::TdnnConfig config = am_config(cfg, 80, cfg.corpus.n_classes, true);
    note("multi", "clean",
         tdnn::dataset_fer(am.ckpt, config, labeled(sd, "clean", 2)));
    note("multi", "distant",
         tdnn::dataset_fer(am.ckpt, config, labeled(sd, "distant", 2)));
  } else if (arm == "reverb-aug") {
    tdnn::TrainResult &am = get_classifier(
        sd, "am-revaug",
        concat(labeled_for_training(sd, "clean", 0),
               labeled_for_training(sd, "reverb", 0)),
        concat(labeled_for_training(sd, "clean", 1),
               labeled_for_training(sd, "reverb", 1)),
        cfg.multi_step_size);
    tdnn::TdnnConfig config = am_config(cfg, 80, cfg.corpus.n_classes, true);
    note("clean+reverb", "reverb",
         tdnn::dataset_fer(am.ckpt, config, labeled(sd, "reverb", 2)));
    note("clean+reverb", "distant",
         tdnn::dataset_fer(am.ckpt, config, labeled(sd, "distant", 2)));
  } else if (arm == "enhance") {
    tdnn::TrainResult &enh = get_enhancer(sd, "enhancer", "distant");
    tdnn::TrainResult &am = get_clean_am(sd);
    tdnn::TdnnConfig config = am_config(cfg, 80, cfg.corpus.n_classes, true);
    note("clean", "clean-enh",
         tdnn::dataset_fer(am.ckpt, config,
                           enhanced_dataset(sd, enh, labeled(sd, "clean", 2))));
    note("clean", "distant-enh",
         tdnn::dataset_fer(
             am.ckpt, config,
             enhanced_dataset(sd, enh, labeled(sd, "distant", 2))));
  } else if (arm == "dereverb") {
    tdnn::TrainResult &enh = get_enhancer(sd, "enhancer-dr", "reverb");
    tdnn::TrainResult &am = get_clean_am(sd);
    tdnn::TdnnConfig config = am_config(cfg, 80, cfg.corpus.n_classes, true);
    note("clean", "distant-dr",
         tdnn::dataset_fer(
             am.ckpt, config,
             enhanced_dataset(sd, enh, labeled(sd, "distant", 2))));
  } else if (arm == "fhvae") {
    for (bool logvar : {false, true}) {
      std::string tag = logvar ? "z1lv" : "z1";
      auto &train = z1_dataset(sd, "clean", 0, logvar);
      auto &dev = z1_dataset(sd, "clean", 1, logvar);
      tdnn::TrainResult &am = get_classifier(sd, "am-" + tag, train, dev,
                                             cfg.step_size);
      tdnn::TdnnConfig config = am_config(cfg, train.at(0).feats.num_bins,
                                          cfg.corpus.n_classes, true);
      note(tag + "-clean", tag + "-clean",
           tdnn::dataset_fer(am.ckpt, config, z1_dataset(sd, "clean", 2,
                                                         logvar)));
      note(tag + "-clean", tag + "-distant",
           tdnn::dataset_fer(am.ckpt, config, z1_dataset(sd, "distant", 2,
                                                         logvar)));
    }
  } else {
    throw UsageError("unknown experiment arm " + arm);
  }
  write_arm_fers(cfg, arm, sd.seed, fers);
  return fers;
}

// Pre-builds everything the enabled arms share so parallel arms only read.
void materialize_shared(SeedData &sd) {
  const auto &arms = sd.cfg->arms;
  auto enabled = [&](const char *name) {
    return std::find(arms.begin(), arms.end(), name) != arms.end();
  };
  for (int split = 0; split < 3; ++split) {
    labeled(sd, "clean", split);
    labeled(sd, "distant", split);
    if (enabled("reverb-aug") || enabled("dereverb"))
      labeled(sd, "reverb", split);
  }
  if (enabled("baseline") || enabled("enhance") || enabled("dereverb"))
    get_clean_am(sd);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string xml_escape(const std::string &s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

struct TableDef {
  std::string title;
  std::vector<std::pair<std::string, std::string>> rows;
};

std::vector<TableDef> table_layout() {
  return {
      {"Domain baselines and multi-condition training",
       {{"clean", "clean"},
        {"clean", "distant"},
        {"distant", "distant"},
        {"distant-cl", "distant"},
        {"multi", "clean"},
        {"multi", "distant"}}},
      {"Reverberation data augmentation",
       {{"clean+reverb", "reverb"}, {"clean+reverb", "distant"}}},
      {"Speech enhancement and dereverberation",
       {{"clean", "clean-enh"},
        {"clean", "distant-enh"},
        {"clean", "distant-dr"}}},
      {"FHVAE latent features",
       {{"z1-clean", "z1-clean"},
        {"z1-clean", "z1-distant"},
        {"z1lv-clean", "z1lv-clean"},
        {"z1lv-clean", "z1lv-distant"}}}};
}

}  // namespace

std::vector<std::string> build_rir_pool(const std::string &set_id, int n_rooms,
                                        int n_rirs_per_room,
                                        double duration_s, uint64_t seed,
                                        const std::string &out_dir) {
  fs::create_directories(out_dir);
  std::vector<RoomSpec> rooms =
      sample_rooms(set_id, n_rooms, n_rirs_per_room, seed);
  std::vector<std::string> paths;
  paths.reserve(rooms.size());
  for (size_t i = 0; i < rooms.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "rir_%04d.wav", static_cast<int>(i));
    std::string path = out_dir + "/" + buf;
    if (!fs::exists(path)) {
      Rir rir = image_method(rooms[i], duration_s, -1);
      save_rir(rir, path);
    }
    paths.push_back(path);
  }
  return paths;
}

Manifest make_distant(const Manifest &clean,
                      const std::vector<std::string> &rir_pool,
                      const ChannelSpec &spec, const std::string &out_dir,
                      uint64_t seed) {
  CorruptionSpec corr;
  if (spec.reverb) corr.rir_pool = rir_pool;
  corr.snr_db = spec.snr_db;
  // Reverb output is renormalized to the clean peak first, so the gain
  // offset below survives as a stable level difference between domains.
  corr.gain_db = spec.gain_db;
  corr.domain_tag = "distant";
  corr.seed = seed;
  Manifest out = generate(clean, corr, out_dir);
  out.split = clean.split;
  return out;
}

GridConfig default_grid_config() {
  GridConfig cfg;
  // Longer units than the corpus default: fewer label boundaries per
  // utterance, so reverberant smearing at boundaries does not dominate the
  // in-domain error floor.
  cfg.corpus.min_unit_frames = 20;
  cfg.corpus.max_unit_frames = 60;
  cfg.fhvae.hidden = 64;
  cfg.fhvae.d1 = 16;
  cfg.fhvae.d2 = 16;
  cfg.fhvae.batch_segments = 32;
  cfg.fhvae.max_epochs = 30;
  cfg.fhvae.patience = 5;
  return cfg;
}

void MetricCell::finalize() {
  seed_count = static_cast<int>(fers.size());
  if (fers.empty()) {
    fer_mean = fer_min = fer_max = 0.0;
    return;
  }
  double sum = 0.0;
  fer_min = fers[0];
  fer_max = fers[0];
  for (double f : fers) {
    sum += f;
    fer_min = std::min(fer_min, f);
    fer_max = std::max(fer_max, f);
  }
  fer_mean = sum / static_cast<double>(fers.size());
}

MetricCell *MetricsReport::find(const std::string &train,
                                const std::string &target) {
  for (auto &c : cells)
    if (c.train_domain == train && c.target_domain == target) return &c;
  return nullptr;
}

const MetricCell *MetricsReport::find(const std::string &train,
                                      const std::string &target) const {
  for (const auto &c : cells)
    if (c.train_domain == train && c.target_domain == target) return &c;
  return nullptr;
}

MetricsReport run_grid(const GridConfig &config) {
  if (config.seeds.empty()) throw UsageError("grid: need at least one seed");
  if (config.out_dir.empty()) throw UsageError("grid: output dir not set");
  if (config.arms.empty())
    throw UsageError("grid: no experiment arms selected");
  for (const auto &arm : config.arms) arm_def(arm);  // validate names
  fs::create_directories(config.out_dir);
  write_grid_config(config, config.out_dir + "/config.json");

  MetricsReport rep;
  rep.seeds = config.seeds;
  for (uint64_t seed : config.seeds) {
    SeedData sd;
    sd.cfg = &config;
    sd.seed = seed;
    sd.dir = config.out_dir + "/corpus/" + std::to_string(seed);
    fs::create_directories(sd.dir);

    int n_arms = static_cast<int>(config.arms.size());
    std::vector<ArmResults> results(n_arms);
    std::vector<std::string> errors(n_arms);
    if (config.parallel_arms) {
      materialize_shared(sd);
#pragma omp parallel for schedule(dynamic)
      for (int i = 0; i < n_arms; ++i) {
        SeedData mine = sd;  // private caches; shared inputs already on disk
        mine.cfg = &config;
        try {
          results[i] = run_arm(mine, config.arms[i]);
        } catch (const std::exception &e) {
          errors[i] = e.what();
        }
      }
    } else {
      for (int i = 0; i < n_arms; ++i) {
        try {
          results[i] = run_arm(sd, config.arms[i]);
        } catch (const std::exception &e) {
          errors[i] = e.what();
        }
      }
    }
    for (int i = 0; i < n_arms; ++i) {
      if (errors[i].empty()) {
        for (const auto &[train, target, fer] : results[i])
          record(rep, train, target, fer);
      } else {
        for (const auto &[train, target] : arm_def(config.arms[i]).cells)
          mark_failed(rep, train, target,
                      "seed " + std::to_string(seed) + ": " + errors[i]);
      }
    }
  }
  for (auto &c : rep.cells) c.finalize();
  write_reports(rep, config.out_dir);
  return rep;
}

void write_report_csv(const MetricsReport &report, const std::string &path) {
  if (report.cells.empty()) throw DataError("refusing to write empty report");
  std::ofstream os(path);
  if (!os) throw DataError("cannot write report: " + path);
  os << "train,target,fer_mean,fer_min,fer_max,seeds\n";
  for (const auto &c : report.cells) {
    if (c.failed) {
      os << c.train_domain << "," << c.target_domain << ",,,,0\n";
    } else {
      os << c.train_domain << "," << c.target_domain << ","
         << format_double(c.fer_mean) << "," << format_double(c.fer_min)
         << "," << format_double(c.fer_max) << "," << c.seed_count << "\n";
    }
  }
}

MetricsReport read_report_csv(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open report: " + path);
  std::string line;
  if (!std::getline(is, line) ||
      line != "train,target,fer_mean,fer_min,fer_max,seeds")
    throw DataError("malformed report header in " + path);
  MetricsReport rep;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    while (fields.size() < 6) fields.push_back("");
    if (fields.size() != 6)
      throw DataError("malformed report row in " + path + ": " + line);
    MetricCell c;
    c.train_domain = fields[0];
    c.target_domain = fields[1];
    c.seed_count = std::stoi(fields[5]);
    if (c.seed_count == 0) {
      c.failed = true;
    } else {
      c.fer_mean = std::stod(fields[2]);
      c.fer_min = std::stod(fields[3]);
      c.fer_max = std::stod(fields[4]);
    }
    rep.cells.push_back(std::move(c));
  }
  return rep;
}

void write_report_json(const MetricsReport &report, const std::string &path) {
  Json j;
  j["seeds"] = report.seeds;
  j["cells"] = Json::array();
  for (const auto &c : report.cells) {
    Json cj;
    cj["train"] = c.train_domain;
    cj["target"] = c.target_domain;
    cj["fers"] = c.fers;
    cj["failed"] = c.failed;
    if (c.failed) cj["error"] = c.error;
    j["cells"].push_back(cj);
  }
  std::ofstream os(path);
  if (!os) throw DataError("cannot write report: " + path);
  os << j.dump(2) << "\n";
}

MetricsReport read_report_json(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open report: " + path);
  Json j;
  try {
    is >> j;
  } catch (const Json::exception &e) {
    throw DataError("malformed report " + path + ": " + e.what());
  }
  MetricsReport rep;
  rep.seeds = j.at("seeds").get<std::vector<uint64_t>>();
  for (const auto &cj : j.at("cells")) {
    MetricCell c;
    c.train_domain = cj.at("train").get<std::string>();
    c.target_domain = cj.at("target").get<std::string>();
    c.fers = cj.at("fers").get<std::vector<double>>();
    c.failed = cj.at("failed").get<bool>();
    if (c.failed && cj.contains("error"))
      c.error = cj.at("error").get<std::string>();
    c.finalize();
    rep.cells.push_back(std::move(c));
  }
  return rep;
}

void write_report_svg(const MetricsReport &report, const std::string &path) {
  if (report.cells.empty()) throw DataError("refusing to write empty report");
  std::vector<TableDef> tables = table_layout();
  // Keep panels only for cells present in the report.
  for (auto &t : tables) {
    std::vector<std::pair<std::string, std::string>> rows;
    for (auto &r : t.rows)
      if (report.find(r.first, r.second)) rows.push_back(r);
    t.rows = rows;
  }
  tables.erase(std::remove_if(tables.begin(), tables.end(),
                              [](const TableDef &t) { return t.rows.empty(); }),
               tables.end());

  int row_h = 26, panel_pad = 48, width = 760, bar_x = 300, bar_w_max = 340;
  int height = 20;
  for (const auto &t : tables)
    height += panel_pad + row_h * static_cast<int>(t.rows.size());

  std::ofstream os(path);
  if (!os) throw DataError("cannot write report: " + path);
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"" << height << "\" font-family=\"monospace\" "
     << "font-size=\"13\">\n";
  int y = 20;
  for (const auto &t : tables) {
    os << "  <text x=\"16\" y=\"" << y + 14 << "\" font-weight=\"bold\">"
       << xml_escape(t.title) << "</text>\n";
    y += panel_pad - 8;
    for (const auto &r : t.rows) {
      const MetricCell *c = report.find(r.first, r.second);
      std::string label = r.first + " -> " + r.second;
      os << "  <text x=\"16\" y=\"" << y + 16 << "\">" << xml_escape(label)
         << "</text>\n";
      if (c->failed) {
        os << "  <text x=\"" << bar_x << "\" y=\"" << y + 16
           << "\" fill=\"#b00\">failed: " << xml_escape(c->error)
           << "</text>\n";
      } else {
        double frac = std::min(1.0, std::max(0.0, c->fer_mean / 100.0));
        int w = std::max(1, static_cast<int>(frac * bar_w_max));
        os << "  <rect x=\"" << bar_x << "\" y=\"" << y + 4 << "\" width=\""
           << w << "\" height=\"14\" fill=\"#4477aa\"/>\n";
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%.1f (%.1f-%.1f, n=%d)", c->fer_mean,
                      c->fer_min, c->fer_max, c->seed_count);
        os << "  <text x=\"" << bar_x + w + 8 << "\" y=\"" << y + 16 << "\">"
           << xml_escape(buf) << "</text>\n";
      }
      y += row_h;
    }
    y += 8;
  }
  os << "</svg>\n";
}

void write_report_text(const MetricsReport &report, const std::string &path) {
  if (report.cells.empty()) throw DataError("refusing to write empty report");
  std::ofstream os(path);
  if (!os) throw DataError("cannot write report: " + path);
  os << "Frame error rate (%) by training and target domain; mean over "
     << report.seeds.size() << " seed(s)\n";
  int table_no = 0;
  for (const auto &t : table_layout()) {
    std::vector<std::pair<std::string, std::string>> rows;
    for (const auto &r : t.rows)
      if (report.find(r.first, r.second)) rows.push_back(r);
    if (rows.empty()) continue;
    ++table_no;
    os << "\nTable " << table_no << ": " << t.title << "\n";
    char head[96];
    std::snprintf(head, sizeof(head), "  %-16s %-14s %8s %8s %8s %6s\n",
                  "train", "target", "mean", "min", "max", "seeds");
    os << head;
    for (const auto &r : rows) {
      const MetricCell *c = report.find(r.first, r.second);
      char buf[160];
      if (c->failed) {
        std::snprintf(buf, sizeof(buf), "  %-16s %-14s   FAILED  (%s)\n",
                      c->train_domain.c_str(), c->target_domain.c_str(),
                      c->error.c_str());
      } else {
        std::snprintf(buf, sizeof(buf),
                      "  %-16s %-14s %8.2f %8.2f %8.2f %6d\n",
                      c->train_domain.c_str(), c->target_domain.c_str(),
                      c->fer_mean, c->fer_min, c->fer_max, c->seed_count);
      }
      os << buf;
    }
  }
}

void write_reports(const MetricsReport &report, const std::string &dir) {
  fs::create_directories(dir);
  write_report_csv(report, dir + "/report.csv");
  write_report_json(report, dir + "/report.json");
  write_report_svg(report, dir + "/report.svg");
  write_report_text(report, dir + "/report.txt");
}

void write_grid_config(const GridConfig &config, const std::string &path) {
  Json j;
  j["seeds"] = config.seeds;
  j["out_dir"] = config.out_dir;
  j["corpus"] = {{"train_utts", config.corpus.train_utts},
                 {"dev_utts", config.corpus.dev_utts},
                 {"test_utts", config.corpus.test_utts},
                 {"frames_per_utt", config.corpus.frames_per_utt},
                 {"n_classes", config.corpus.n_classes},
                 {"min_unit_frames", config.corpus.min_unit_frames},
                 {"max_unit_frames", config.corpus.max_unit_frames}};
  j["channel"] = {{"reverb", config.channel.reverb},
                  {"rir_set", config.channel.rir_set},
                  {"n_rooms", config.channel.n_rooms},
                  {"n_rirs_per_room", config.channel.n_rirs_per_room},
                  {"rir_duration_s", config.channel.rir_duration_s},
                  {"snr_db", config.channel.snr_db
                                 ? Json(*config.channel.snr_db)
                                 : Json(nullptr)},
                  {"gain_db", config.channel.gain_db}};
  j["augment"] = {{"rir_set", config.augment_rir_set},
                  {"rooms", config.augment_rooms},
                  {"rirs_per_room", config.augment_rirs_per_room},
                  {"rir_duration_s", config.augment_rir_duration_s}};
  j["model"] = {{"hidden_units", config.hidden_units},
                {"enhancer_hidden_units", config.enhancer_hidden_units},
                {"contexts", config.contexts}};
  j["train"] = {{"step_size", config.step_size},
                {"multi_step_size", config.multi_step_size},
                {"epochs", config.epochs},
                {"finetune_epochs", config.finetune_epochs},
                {"finetune_decay", config.finetune_decay},
                {"clip_norm", config.clip_norm}};
  j["fhvae"] = {{"hidden", config.fhvae.hidden},
                {"d1", config.fhvae.d1},
                {"d2", config.fhvae.d2},
                {"alpha", config.fhvae.alpha},
                {"var_z1", config.fhvae.var_z1},
                {"var_z2", config.fhvae.var_z2},
                {"var_mu2", config.fhvae.var_mu2},
                {"batch_segments", config.fhvae.batch_segments},
                {"max_epochs", config.fhvae.max_epochs},
                {"patience", config.fhvae.patience},
                {"step_size", config.fhvae.adam.step_size}};
  j["arms"] = config.arms;
  j["parallel_arms"] = config.parallel_arms;
  std::ofstream os(path);
  if (!os) throw DataError("cannot write grid config: " + path);
  os << j.dump(2) << "\n";
}

GridConfig read_grid_config(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open grid config: " + path);
  Json j;
  try {
    is >> j;
  } catch (const Json::exception &e) {
    throw DataError("malformed grid config " + path + ": " + e.what());
  }
  GridConfig cfg = default_grid_config();
  try {
    if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<uint64_t>>();
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("corpus")) {
      const Json &c = j["corpus"];
      if (c.contains("train_utts")) cfg.corpus.train_utts = c["train_utts"];
      if (c.contains("dev_utts")) cfg.corpus.dev_utts = c["dev_utts"];
      if (c.contains("test_utts")) cfg.corpus.test_utts = c["test_utts"];
      if (c.contains("frames_per_utt"))
        cfg.corpus.frames_per_utt = c["frames_per_utt"];
      if (c.contains("n_classes")) cfg.corpus.n_classes = c["n_classes"];
      if (c.contains("min_unit_frames"))
        cfg.corpus.min_unit_frames = c["min_unit_frames"];
      if (c.contains("max_unit_frames"))
        cfg.corpus.max_unit_frames = c["max_unit_frames"];
    }
    if (j.contains("channel")) {
      const Json &c = j["channel"];
      if (c.contains("reverb")) cfg.channel.reverb = c["reverb"];
      if (c.contains("rir_set")) cfg.channel.rir_set = c["rir_set"];
      if (c.contains("n_rooms")) cfg.channel.n_rooms = c["n_rooms"];
      if (c.contains("n_rirs_per_room"))
        cfg.channel.n_rirs_per_room = c["n_rirs_per_room"];
      if (c.contains("rir_duration_s"))
        cfg.channel.rir_duration_s = c["rir_duration_s"];
      if (c.contains("snr_db")) {
        if (c["snr_db"].is_null())
          cfg.channel.snr_db.reset();
        else
          cfg.channel.snr_db = c["snr_db"].get<double>();
      }
      if (c.contains("gain_db")) cfg.channel.gain_db = c["gain_db"];
    }
    if (j.contains("augment")) {
      const Json &c = j["augment"];
      if (c.contains("rir_set")) cfg.augment_rir_set = c["rir_set"];
      if (c.contains("rooms")) cfg.augment_rooms = c["rooms"];
      if (c.contains("rirs_per_room"))
        cfg.augment_rirs_per_room = c["rirs_per_room"];
      if (c.contains("rir_duration_s"))
        cfg.augment_rir_duration_s = c["rir_duration_s"];
    }
    if (j.contains("model")) {
      const Json &c = j["model"];
      if (c.contains("hidden_units")) cfg.hidden_units = c["hidden_units"];
      if (c.contains("enhancer_hidden_units"))
        cfg.enhancer_hidden_units = c["enhancer_hidden_units"];
      if (c.contains("contexts")) {
        cfg.contexts.clear();
        for (const auto &t : c["contexts"])
          cfg.contexts.push_back({t.at(0).get<int>(), t.at(1).get<int>(),
                                  t.at(2).get<int>()});
      }
    }
    if (j.contains("train")) {
      const Json &c = j["train"];
      if (c.contains("step_size")) cfg.step_size = c["step_size"];
      if (c.contains("multi_step_size"))
        cfg.multi_step_size = c["multi_step_size"];
      if (c.contains("epochs")) cfg.epochs = c["epochs"];
      if (c.contains("finetune_epochs"))
        cfg.finetune_epochs = c["finetune_epochs"];
      if (c.contains("finetune_decay"))
        cfg.finetune_decay = c["finetune_decay"];
      if (c.contains("clip_norm")) cfg.clip_norm = c["clip_norm"];
    }
    if (j.contains("fhvae")) {
      const Json &c = j["fhvae"];
      if (c.contains("hidden")) cfg.fhvae.hidden = c["hidden"];
      if (c.contains("d1")) cfg.fhvae.d1 = c["d1"];
      if (c.contains("d2")) cfg.fhvae.d2 = c["d2"];
      if (c.contains("alpha")) cfg.fhvae.alpha = c["alpha"];
      if (c.contains("var_z1")) cfg.fhvae.var_z1 = c["var_z1"];
      if (c.contains("var_z2")) cfg.fhvae.var_z2 = c["var_z2"];
      if (c.contains("var_mu2")) cfg.fhvae.var_mu2 = c["var_mu2"];
      if (c.contains("batch_segments"))
        cfg.fhvae.batch_segments = c["batch_segments"];
      if (c.contains("max_epochs")) cfg.fhvae.max_epochs = c["max_epochs"];
      if (c.contains("patience")) cfg.fhvae.patience = c["patience"];
      if (c.contains("step_size")) cfg.fhvae.adam.step_size = c["step_size"];
    }
    if (j.contains("arms")) cfg.arms = j["arms"].get<std::vector<std::string>>();
    if (j.contains("parallel_arms")) cfg.parallel_arms = j["parallel_arms"];
  } catch (const Json::exception &e) {
    throw DataError("malformed grid config " + path + ": " + e.what());
  }
  return cfg;
}

}  // namespace harness
}  // namespace reverbkit
