// src/tdnn.cc

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

#include "reverbkit/tdnn.h"

#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "reverbkit/optim.h"

namespace reverbkit {
namespace tdnn {

namespace {

using Json = nlohmann::json;

ad::Tensor<float> feats_to_tensor(const FeatureMatrix &m) {
  ad::Tensor<float> t(m.num_frames, m.num_bins);
  for (size_t i = 0; i < m.frames.size(); ++i)
    t.v[i] = static_cast<float>(m.frames[i]);
  return t;
}

std::vector<std::string> param_names(const TdnnConfig &config) {
  std::vector<std::string> names;
  for (size_t l = 0; l < config.contexts.size(); ++l) {
    names.push_back("context" + std::to_string(l) + ".w");
    names.push_back("context" + std::to_string(l) + ".b");
  }
  names.push_back("plain.w");
  names.push_back("plain.b");
  names.push_back("output.w");
  names.push_back("output.b");
  return names;
}

void check_config(const TdnnConfig &config) {
  if (config.hidden_units < 1 || config.input_dim < 1 ||
      config.output_dim < 1)
    throw UsageError("tdnn: dimensions must be positive");
  for (const auto &ctx : config.contexts) {
    if (ctx[1] != 0) throw UsageError("tdnn: context middle offset must be 0");
  }
}

// Deterministic in-place shuffle driven by the training generator.
void shuffle_indices(std::vector<int> *idx, Rng *rng) {
  for (int i = static_cast<int>(idx->size()) - 1; i > 0; --i) {
    int j = rng->uniform_int(i + 1);
    std::swap((*idx)[i], (*idx)[j]);
  }
}

struct BoundModel {
  std::vector<ad::Param<float> *> w, b;
  std::vector<ad::Param<float> *> all;
};

BoundModel bind(Checkpoint &ckpt, const TdnnConfig &config) {
  BoundModel m;
  std::vector<std::string> names = param_names(config);
  for (size_t i = 0; i < names.size(); i += 2) {
    m.w.push_back(&ckpt.require(names[i]));
    m.b.push_back(&ckpt.require(names[i + 1]));
  }
  for (size_t i = 0; i < m.w.size(); ++i) {
    m.all.push_back(m.w[i]);
    m.all.push_back(m.b[i]);
  }
  return m;
}

// Forward for inference: parameters enter as plain inputs, no tape growth
// beyond the forward values.
ad::Tensor<float> forward_values(Checkpoint &ckpt, const TdnnConfig &config,
                                 const FeatureMatrix &feats) {
  if (feats.num_bins != config.input_dim)
    throw DataError("feature dimension " + std::to_string(feats.num_bins) +
                    " does not match model input dimension " +
                    std::to_string(config.input_dim) + " for utterance " +
                    feats.source_id);
  if (feats.num_frames < 1)
    throw DataError("empty feature matrix for utterance " + feats.source_id);
  BoundModel m = bind(ckpt, config);
  ad::Graph<float> g;
  std::vector<ad::Node<float> *> w, b;
  for (size_t i = 0; i < m.w.size(); ++i) {
    w.push_back(g.input(m.w[i]->value));
    b.push_back(g.input(m.b[i]->value));
  }
  ad::Node<float> *out =
      tdnn_forward(g, g.input(feats_to_tensor(feats)), config, w, b);
  return out->val;
}

}  // namespace

int receptive_field(const TdnnConfig &config) {
  int r = 0;
  for (const auto &ctx : config.contexts)
    r += std::max(std::abs(ctx[0]), std::abs(ctx[2]));
  return r;
}

Checkpoint init_tdnn(const TdnnConfig &config, uint64_t seed) {
  check_config(config);
  Rng rng(derive_seed(seed, "tdnn-init"));
  Checkpoint ckpt;
  int prev = config.input_dim;
  for (size_t l = 0; l < config.contexts.size(); ++l) {
    ckpt.params.emplace_back(
        "context" + std::to_string(l) + ".w",
        ad::xavier_uniform<float>(prev, config.hidden_units, rng));
    ckpt.params.emplace_back("context" + std::to_string(l) + ".b",
                             ad::Tensor<float>(1, config.hidden_units));
    prev = config.hidden_units;
  }
  ckpt.params.emplace_back(
      "plain.w", ad::xavier_uniform<float>(prev, config.hidden_units, rng));
  ckpt.params.emplace_back("plain.b",
                           ad::Tensor<float>(1, config.hidden_units));
  ckpt.params.emplace_back(
      "output.w",
      ad::xavier_uniform<float>(config.hidden_units, config.output_dim, rng));
  ckpt.params.emplace_back("output.b",
                           ad::Tensor<float>(1, config.output_dim));
  ckpt.rng_state = Rng(derive_seed(seed, "tdnn-train")).state();
  return ckpt;
}

TdnnParams<float> bind_params(Checkpoint &ckpt, const TdnnConfig &config) {
  BoundModel m = bind(ckpt, config);
  return TdnnParams<float>{m.w, m.b};
}

void save_tdnn(const std::string &path, const Checkpoint &ckpt,
               const TdnnConfig &config) {
  save_checkpoint(path, ckpt);
  Json j;
  j["kind"] = config.softmax_output ? "classifier" : "regressor";
  j["contexts"] = config.contexts;
  j["hidden_units"] = config.hidden_units;
  j["input_dim"] = config.input_dim;
  j["output_dim"] = config.output_dim;
  std::ofstream os(path + ".json");
  if (!os) throw DataError("cannot write model sidecar: " + path + ".json");
  os << j.dump(2) << "\n";
}

std::pair<Checkpoint, TdnnConfig> load_tdnn(const std::string &path) {
  Checkpoint ckpt = load_checkpoint(path);
  std::ifstream is(path + ".json");
  if (!is) throw DataError("cannot open model sidecar: " + path + ".json");
  Json j;
  try {
    is >> j;
  } catch (const Json::exception &e) {
    throw DataError("malformed model sidecar " + path + ".json: " + e.what());
  }
  TdnnConfig config;
  config.contexts.clear();
  for (const auto &c : j.at("contexts"))
    config.contexts.push_back({c.at(0).get<int>(), c.at(1).get<int>(),
                               c.at(2).get<int>()});
  config.hidden_units = j.at("hidden_units").get<int>();
  config.input_dim = j.at("input_dim").get<int>();
  config.output_dim = j.at("output_dim").get<int>();
  config.softmax_output = j.at("kind").get<std::string>() == "classifier";
  return {std::move(ckpt), config};
}

std::vector<LabeledUtterance> load_labeled_utterances(
    const Manifest &manifest, const std::string &feat_dir) {
  std::vector<LabeledUtterance> out;
  out.reserve(manifest.entries.size());
  for (const auto &e : manifest.entries) {
    LabeledUtterance u;
    u.id = e.id;
    u.feats = read_feat(feat_dir + "/" + e.id + ".feat");
    u.labels = read_labels(e.labels, e.id);
    if (static_cast<int>(u.labels.size()) != u.feats.num_frames)
      throw DataError("utterance " + e.id + ": " +
                      std::to_string(u.labels.size()) + " labels vs " +
                      std::to_string(u.feats.num_frames) + " frames");
    out.push_back(std::move(u));
  }
  return out;
}

std::vector<FeaturePair> load_feature_pairs(const Manifest &in_manifest,
                                            const std::string &in_dir,
                                            const Manifest &target_manifest,
                                            const std::string &target_dir) {
  if (in_manifest.entries.size() != target_manifest.entries.size())
    throw DataError("parallel manifests differ in size");
  std::vector<FeaturePair> out;
  out.reserve(in_manifest.entries.size());
  for (size_t i = 0; i < in_manifest.entries.size(); ++i) {
    const auto &a = in_manifest.entries[i];
    const auto &b = target_manifest.entries[i];
    if (a.id != b.id)
      throw DataError("parallel manifests disagree at " + a.id + " vs " +
                      b.id);
    FeaturePair p;
    p.id = a.id;
    p.input = read_feat(in_dir + "/" + a.id + ".feat");
    p.target = read_feat(target_dir + "/" + b.id + ".feat");
    if (p.input.num_frames != p.target.num_frames)
      throw DataError("utterance " + a.id + ": pair lengths differ (" +
                      std::to_string(p.input.num_frames) + " vs " +
                      std::to_string(p.target.num_frames) + " frames)");
    out.push_back(std::move(p));
  }
  return out;
}

EpochLog run_classifier_epoch(Checkpoint *ckpt, const TdnnConfig &config,
                              const std::vector<LabeledUtterance> &train,
                              const std::vector<LabeledUtterance> &dev,
                              double step_size) {
  if (train.empty()) throw DataError("empty training set");
  BoundModel m = bind(*ckpt, config);
  Rng rng(0);
  rng.set_state(ckpt->rng_state);

  std::vector<int> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  shuffle_indices(&order, &rng);

  double loss_sum = 0.0;
  int64_t frame_count = 0;
  for (int i : order) {
    const LabeledUtterance &u = train[i];
    if (static_cast<int>(u.labels.size()) != u.feats.num_frames)
      throw DataError("utterance " + u.id + ": " +
                      std::to_string(u.labels.size()) + " labels vs " +
                      std::to_string(u.feats.num_frames) + " frames");
    if (u.feats.num_bins != config.input_dim)
      throw DataError("utterance " + u.id + ": feature dimension mismatch");
    for (int l : u.labels) {
      if (l < 0 || l >= config.output_dim)
        throw DataError("utterance " + u.id + ": label out of range");
    }
    ad::Graph<float> g;
    std::vector<ad::Node<float> *> w, b;
    for (size_t k = 0; k < m.w.size(); ++k) {
      w.push_back(g.leaf(*m.w[k]));
      b.push_back(g.leaf(*m.b[k]));
    }
    ad::Node<float> *logits =
        tdnn_forward(g, g.input(feats_to_tensor(u.feats)), config, w, b);
    ad::Node<float> *loss = g.softmax_cross_entropy(logits, u.labels);
    g.backward(loss);
    loss_sum += static_cast<double>(loss->val.v[0]) * u.feats.num_frames;
    frame_count += u.feats.num_frames;
    optim::clip_global_norm(m.all, ckpt->clip_norm > 0 ? ckpt->clip_norm : 5.0);
    for (auto *p : m.all)
      for (size_t k = 0; k < p->value.v.size(); ++k)
        p->value.v[k] -= static_cast<float>(step_size) * p->grad.v[k];
    optim::zero_grads(m.all);
    ++ckpt->steps_taken;
  }

  ckpt->opt_kind = kOptSgd;
  ckpt->step_size = step_size;
  if (ckpt->clip_norm <= 0) ckpt->clip_norm = 5.0;
  ckpt->rng_state = rng.state();

  EpochLog log;
  log.train_loss = loss_sum / static_cast<double>(frame_count);
  log.dev_metric = dataset_fer(*ckpt, config, dev);
  log.step_size = step_size;
  return log;
}

EpochLog run_regressor_epoch(Checkpoint *ckpt, const TdnnConfig &config,
                             const std::vector<FeaturePair> &train,
                             const std::vector<FeaturePair> &dev,
                             double step_size) {
  if (train.empty()) throw DataError("empty training set");
  BoundModel m = bind(*ckpt, config);
  Rng rng(0);
  rng.set_state(ckpt->rng_state);

  std::vector<int> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  shuffle_indices(&order, &rng);

  double loss_sum = 0.0;
  int64_t frame_count = 0;
  for (int i : order) {
    const FeaturePair &p = train[i];
    if (p.input.num_frames != p.target.num_frames)
      throw DataError("utterance " + p.id + ": pair lengths differ");
    if (p.input.num_bins != config.input_dim ||
        p.target.num_bins != config.output_dim)
      throw DataError("utterance " + p.id + ": feature dimension mismatch");
    ad::Graph<float> g;
    std::vector<ad::Node<float> *> w, b;
    for (size_t k = 0; k < m.w.size(); ++k) {
      w.push_back(g.leaf(*m.w[k]));
      b.push_back(g.leaf(*m.b[k]));
    }
    ad::Node<float> *pred =
        tdnn_forward(g, g.input(feats_to_tensor(p.input)), config, w, b);
    // Per-frame squared Euclidean distance (sum over bins, mean over
    // frames): the same gradient scale per frame as cross-entropy, so one
    // step-size regime serves both roles.
    ad::Node<float> *loss =
        g.scale(g.mse(pred, g.input(feats_to_tensor(p.target))),
                static_cast<float>(config.output_dim));
    g.backward(loss);
    loss_sum += static_cast<double>(loss->val.v[0]) * p.input.num_frames;
    frame_count += p.input.num_frames;
    optim::clip_global_norm(m.all, ckpt->clip_norm > 0 ? ckpt->clip_norm : 5.0);
    for (auto *q : m.all)
      for (size_t k = 0; k < q->value.v.size(); ++k)
        q->value.v[k] -= static_cast<float>(step_size) * q->grad.v[k];
    optim::zero_grads(m.all);
    ++ckpt->steps_taken;
  }

  ckpt->opt_kind = kOptSgd;
  ckpt->step_size = step_size;
  if (ckpt->clip_norm <= 0) ckpt->clip_norm = 5.0;
  ckpt->rng_state = rng.state();

  EpochLog log;
  log.train_loss = loss_sum / static_cast<double>(frame_count);
  log.dev_metric = dataset_mse(*ckpt, config, dev);
  log.step_size = step_size;
  return log;
}

namespace {

// Shared two-phase schedule: phase 1 at the fixed step size with best-epoch
// selection (strictly-better wins, so the earliest best epoch is kept),
// phase 2 from the selected state at step_size * decay^n.
template <class RunEpoch>
TrainResult run_schedule(Checkpoint init, const TrainOptions &opts,
                         RunEpoch run_epoch) {
  TrainResult res;
  res.ckpt = std::move(init);
  res.best_dev = std::numeric_limits<double>::infinity();
  Checkpoint best = res.ckpt;
  for (int e = 1; e <= opts.epochs; ++e) {
    EpochLog log = run_epoch(&res.ckpt, opts.step_size);
    log.epoch = e;
    log.phase = "train";
    res.log.push_back(log);
    if (log.dev_metric < res.best_dev) {
      res.best_dev = log.dev_metric;
      res.best_epoch = e;
      best = res.ckpt;
    }
  }
  res.ckpt = std::move(best);
  for (int n = 1; n <= opts.finetune_epochs; ++n) {
    double step = opts.step_size * std::pow(opts.finetune_decay, n);
    EpochLog log = run_epoch(&res.ckpt, step);
    log.epoch = opts.epochs + n;
    log.phase = "finetune";
    res.log.push_back(log);
  }
  return res;
}

}  // namespace

TrainResult train_acoustic_model(const std::vector<LabeledUtterance> &train,
                                 const std::vector<LabeledUtterance> &dev,
                                 const TdnnConfig &config,
                                 const TrainOptions &opts) {
  if (!config.softmax_output)
    throw UsageError("acoustic model requires a softmax output");
  Checkpoint ckpt = init_tdnn(config, opts.seed);
  ckpt.clip_norm = opts.clip_norm;
  return run_schedule(std::move(ckpt), opts,
                      [&](Checkpoint *c, double step) {
                        return run_classifier_epoch(c, config, train, dev,
                                                    step);
                      });
}

TrainResult train_enhancer(const std::vector<FeaturePair> &parallel,
                           const std::vector<FeaturePair> &identity,
                           const std::vector<FeaturePair> &dev,
                           const TdnnConfig &config, const TrainOptions &opts) {
  if (config.softmax_output)
    throw UsageError("enhancer requires a linear output");
  std::vector<FeaturePair> mixed = parallel;
  mixed.insert(mixed.end(), identity.begin(), identity.end());
  Checkpoint ckpt = init_tdnn(config, opts.seed);
  ckpt.clip_norm = opts.clip_norm;
  return run_schedule(std::move(ckpt), opts,
                      [&](Checkpoint *c, double step) {
                        return run_regressor_epoch(c, config, mixed, dev,
                                                   step);
                      });
}

Classification classify_frames(const FeatureMatrix &feats, Checkpoint &ckpt,
                               const TdnnConfig &config) {
  ad::Tensor<float> logits = forward_values(ckpt, config, feats);
  Classification out;
  out.posteriors = ad::softmax_rows(logits);
  out.labels.resize(logits.rows);
  for (int t = 0; t < logits.rows; ++t) {
    int arg = 0;
    for (int c = 1; c < logits.cols; ++c)
      if (out.posteriors.at(t, c) > out.posteriors.at(t, arg)) arg = c;
    out.labels[t] = arg;
  }
  return out;
}

FeatureMatrix enhance(const FeatureMatrix &feats, Checkpoint &ckpt,
                      const TdnnConfig &config) {
  ad::Tensor<float> pred = forward_values(ckpt, config, feats);
  FeatureMatrix out;
  out.num_frames = pred.rows;
  out.num_bins = pred.cols;
  out.frame_shift = feats.frame_shift;
  out.kind = feats.kind;
  out.source_id = feats.source_id;
  out.frames.resize(pred.v.size());
  for (size_t i = 0; i < pred.v.size(); ++i)
    out.frames[i] = static_cast<double>(pred.v[i]);
  return out;
}

double frame_error_rate(const std::vector<int> &predicted,
                        const std::vector<int> &reference) {
  if (predicted.size() != reference.size())
    throw DataError("frame_error_rate: length mismatch");
  if (predicted.empty()) throw DataError("frame_error_rate: empty input");
  int64_t wrong = 0;
  for (size_t i = 0; i < predicted.size(); ++i)
    wrong += predicted[i] != reference[i] ? 1 : 0;
  return 100.0 * static_cast<double>(wrong) /
         static_cast<double>(predicted.size());
}

double dataset_fer(Checkpoint &ckpt, const TdnnConfig &config,
                   const std::vector<LabeledUtterance> &data) {
  if (data.empty()) throw DataError("empty evaluation set");
  int64_t wrong = 0, total = 0;
  for (const auto &u : data) {
    Classification c = classify_frames(u.feats, ckpt, config);
    if (c.labels.size() != u.labels.size())
      throw DataError("utterance " + u.id + ": label/frame count mismatch");
    for (size_t i = 0; i < c.labels.size(); ++i)
      wrong += c.labels[i] != u.labels[i] ? 1 : 0;
    total += static_cast<int64_t>(c.labels.size());
  }
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(total);
}

// Per-frame mean squared Euclidean distance, the quantity the enhancer
// optimizes.
double dataset_mse(Checkpoint &ckpt, const TdnnConfig &config,
                   const std::vector<FeaturePair> &data) {
  if (data.empty()) throw DataError("empty evaluation set");
  double sq = 0.0;
  int64_t frames = 0;
  for (const auto &p : data) {
    FeatureMatrix pred = enhance(p.input, ckpt, config);
    for (size_t i = 0; i < pred.frames.size(); ++i) {
      double d = pred.frames[i] - p.target.frames[i];
      sq += d * d;
    }
    frames += pred.num_frames;
  }
  return sq / static_cast<double>(frames);
}

void write_train_log(const std::string &path, const std::vector<EpochLog> &log,
                     bool classifier) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write training log: " + path);
  for (const auto &e : log) {
    Json j;
    j["epoch"] = e.epoch;
    if (classifier) {
      j["train_ce"] = e.train_loss;
      j["dev_fer"] = e.dev_metric;
    } else {
      j["train_mse"] = e.train_loss;
      j["dev_mse"] = e.dev_metric;
    }
    j["step_size"] = e.step_size;
    j["phase"] = e.phase;
    os << j.dump() << "\n";
  }
}

}  // namespace tdnn
}  // namespace reverbkit
