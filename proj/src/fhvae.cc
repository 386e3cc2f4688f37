// src/fhvae.cc

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

#include "reverbkit/fhvae.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace reverbkit {
namespace fhvae {

namespace {

using Json = nlohmann::json;

constexpr int kExtractChunk = 64;

void check_config(const FhvaeConfig &cfg) {
  if (cfg.input_dim < 1 || cfg.segment_len < 1 || cfg.hidden < 1 ||
      cfg.d1 < 1 || cfg.d2 < 1)
    throw UsageError("fhvae: dimensions must be positive");
  if (cfg.var_z1 <= 0 || cfg.var_z2 <= 0 || cfg.var_mu2 <= 0)
    throw UsageError("fhvae: prior variances must be positive");
}

// LSTM bias init: zeros with +1 on the forget gate block.
ad::Tensor<float> lstm_bias(int hidden) {
  ad::Tensor<float> b(1, 4 * hidden);
  for (int i = hidden; i < 2 * hidden; ++i) b.v[i] = 1.0f;
  return b;
}

struct SegmentRef {
  int utt_index;
  int start;
  float inv_k;
};

int clamp_frame(int t, int num_frames) {
  return t < 0 ? 0 : (t >= num_frames ? num_frames - 1 : t);
}

// Copies segment rows (clamped) into the per-step batch tensors.
SegmentBatch<float> fill_batch(const std::vector<SegmentRef> &segs,
                               size_t begin, size_t end,
                               const std::vector<UttFeatures> &utts,
                               const FhvaeConfig &cfg) {
  SegmentBatch<float> mb;
  mb.batch = static_cast<int>(end - begin);
  mb.frames.assign(cfg.segment_len,
                   ad::Tensor<float>(mb.batch, cfg.input_dim));
  mb.utt_index.resize(mb.batch);
  mb.inv_segment_count.resize(mb.batch);
  for (size_t s = begin; s < end; ++s) {
    const SegmentRef &seg = segs[s];
    const FeatureMatrix &f = utts[seg.utt_index].feats;
    int b = static_cast<int>(s - begin);
    mb.utt_index[b] = seg.utt_index;
    mb.inv_segment_count[b] = seg.inv_k;
    for (int t = 0; t < cfg.segment_len; ++t) {
      const double *row = f.row(clamp_frame(seg.start + t, f.num_frames));
      float *dst = &mb.frames[t].at(b, 0);
      for (int c = 0; c < cfg.input_dim; ++c)
        dst[c] = static_cast<float>(row[c]);
    }
  }
  return mb;
}

void fill_noise(SegmentBatch<float> *mb, const FhvaeConfig &cfg, Rng *rng) {
  mb->eps1 = ad::Tensor<float>(mb->batch, cfg.d1);
  mb->eps2 = ad::Tensor<float>(mb->batch, cfg.d2);
  for (float &v : mb->eps1.v) v = static_cast<float>(rng->gaussian());
  for (float &v : mb->eps2.v) v = static_cast<float>(rng->gaussian());
}

std::vector<SegmentRef> training_segments(const std::vector<UttFeatures> &utts,
                                          const FhvaeConfig &cfg,
                                          const char *role) {
  std::vector<SegmentRef> refs;
  for (size_t u = 0; u < utts.size(); ++u) {
    const FeatureMatrix &f = utts[u].feats;
    if (f.num_bins != cfg.input_dim)
      throw DataError("utterance " + utts[u].id +
                      ": feature dimension mismatch");
    std::vector<Segment> segs =
        segment_stream(f, static_cast<int>(u), cfg.segment_len,
                       SegmentMode::kTraining);
    if (segs.empty())
      throw DataError(std::string(role) + " utterance " + utts[u].id +
                      " is shorter than one segment");
    float inv_k = 1.0f / static_cast<float>(segs.size());
    for (const Segment &s : segs)
      refs.push_back({s.utt_index, s.start, inv_k});
  }
  return refs;
}

// Deterministic per-utterance z2 prior means for data outside the table:
// the mean of the z2 posterior means over the utterance's segments.
std::vector<ad::Tensor<float>> infer_prior_means(
    Checkpoint &ckpt, const FhvaeConfig &cfg,
    const std::vector<UttFeatures> &utts,
    const std::vector<SegmentRef> &segs) {
  FhvaeParams<float> p = bind_fhvae(ckpt);
  std::vector<ad::Tensor<float>> means(utts.size(),
                                       ad::Tensor<float>(1, cfg.d2));
  std::vector<int> counts(utts.size(), 0);
  for (size_t begin = 0; begin < segs.size(); begin += kExtractChunk) {
    size_t end = std::min(segs.size(), begin + kExtractChunk);
    SegmentBatch<float> mb = fill_batch(segs, begin, end, utts, cfg);
    ad::Graph<float> g;
    std::vector<ad::Node<float> *> frames;
    for (const auto &t : mb.frames) frames.push_back(g.input(t));
    EncodeOut<float> enc =
        encode_segments(g, p, cfg, frames);
    for (int b = 0; b < mb.batch; ++b) {
      int u = mb.utt_index[b];
      for (int c = 0; c < cfg.d2; ++c)
        means[u].v[c] += enc.mu2->val.at(b, c);
      ++counts[u];
    }
  }
  for (size_t u = 0; u < utts.size(); ++u) {
    if (counts[u] == 0) continue;
    for (float &v : means[u].v) v /= static_cast<float>(counts[u]);
  }
  return means;
}

// Mean per-segment bound for utterances outside the table (discriminative
// term omitted; prior means inferred).  Noise is derived from a fixed seed
// so successive evaluations are comparable.
double held_out_elbo(Checkpoint &ckpt, const FhvaeConfig &cfg,
                     const std::vector<UttFeatures> &utts) {
  if (utts.empty()) throw DataError("empty evaluation set");
  std::vector<SegmentRef> segs = training_segments(utts, cfg, "evaluation");
  std::vector<ad::Tensor<float>> means =
      infer_prior_means(ckpt, cfg, utts, segs);
  FhvaeParams<float> p = bind_fhvae(ckpt);
  Rng noise(derive_seed(cfg.seed, "fhvae-eval-noise"));
  double loss_sum = 0.0;
  for (size_t begin = 0; begin < segs.size(); begin += kExtractChunk) {
    size_t end = std::min(segs.size(), begin + kExtractChunk);
    SegmentBatch<float> mb = fill_batch(segs, begin, end, utts, cfg);
    fill_noise(&mb, cfg, &noise);
    ad::Tensor<float> prior(mb.batch, cfg.d2);
    for (int b = 0; b < mb.batch; ++b)
      for (int c = 0; c < cfg.d2; ++c)
        prior.at(b, c) = means[mb.utt_index[b]].v[c];
    ad::Graph<float> g;
    ElboNodes<float> elbo = build_elbo(g, p, cfg, mb, &prior);
    loss_sum += static_cast<double>(elbo.loss->val.v[0]) * mb.batch;
  }
  return -loss_sum / static_cast<double>(segs.size());
}

// Raw (unnormalized) per-frame [mu1, logvar1] for one utterance.
std::vector<double> raw_z1(Checkpoint &ckpt, const FhvaeConfig &cfg,
                           const FeatureMatrix &feats) {
  if (feats.num_bins != cfg.input_dim)
    throw DataError("utterance " + feats.source_id +
                    ": feature dimension mismatch");
  if (feats.num_frames < 1)
    throw DataError("empty feature matrix for utterance " + feats.source_id);
  FhvaeParams<float> p = bind_fhvae(ckpt);
  std::vector<Segment> segs =
      segment_stream(feats, 0, cfg.segment_len, SegmentMode::kExtraction);
  std::vector<UttFeatures> wrap(1);
  wrap[0].id = feats.source_id;
  wrap[0].feats = feats;
  std::vector<SegmentRef> refs;
  refs.reserve(segs.size());
  for (const Segment &s : segs) refs.push_back({0, s.start, 1.0f});
  std::vector<double> out;
  out.reserve(segs.size() * 2 * cfg.d1);
  for (size_t begin = 0; begin < refs.size(); begin += kExtractChunk) {
    size_t end = std::min(refs.size(), begin + kExtractChunk);
    SegmentBatch<float> mb = fill_batch(refs, begin, end, wrap, cfg);
    ad::Graph<float> g;
    std::vector<ad::Node<float> *> frames;
    for (const auto &t : mb.frames) frames.push_back(g.input(t));
    EncodeOut<float> enc =
        encode_segments(g, p, cfg, frames);
    for (int b = 0; b < mb.batch; ++b) {
      for (int c = 0; c < cfg.d1; ++c)
        out.push_back(static_cast<double>(enc.mu1->val.at(b, c)));
      for (int c = 0; c < cfg.d1; ++c)
        out.push_back(static_cast<double>(enc.logvar1->val.at(b, c)));
    }
  }
  return out;
}

Json config_to_json(const FhvaeConfig &cfg) {
  Json j;
  j["input_dim"] = cfg.input_dim;
  j["segment_len"] = cfg.segment_len;
  j["hidden"] = cfg.hidden;
  j["d1"] = cfg.d1;
  j["d2"] = cfg.d2;
  j["alpha"] = cfg.alpha;
  j["var_z1"] = cfg.var_z1;
  j["var_z2"] = cfg.var_z2;
  j["var_mu2"] = cfg.var_mu2;
  j["batch_segments"] = cfg.batch_segments;
  j["max_epochs"] = cfg.max_epochs;
  j["patience"] = cfg.patience;
  j["seed"] = cfg.seed;
  j["adam"] = {{"beta1", cfg.adam.beta1},
               {"beta2", cfg.adam.beta2},
               {"eps", cfg.adam.eps},
               {"step_size", cfg.adam.step_size},
               {"clip_norm", cfg.adam.clip_norm}};
  return j;
}

FhvaeConfig config_from_json(const Json &j) {
  FhvaeConfig cfg;
  cfg.input_dim = j.at("input_dim").get<int>();
  cfg.segment_len = j.at("segment_len").get<int>();
  cfg.hidden = j.at("hidden").get<int>();
  cfg.d1 = j.at("d1").get<int>();
  cfg.d2 = j.at("d2").get<int>();
  cfg.alpha = j.at("alpha").get<double>();
  cfg.var_z1 = j.at("var_z1").get<double>();
  cfg.var_z2 = j.at("var_z2").get<double>();
  cfg.var_mu2 = j.at("var_mu2").get<double>();
  cfg.batch_segments = j.at("batch_segments").get<int>();
  cfg.max_epochs = j.at("max_epochs").get<int>();
  cfg.patience = j.at("patience").get<int>();
  cfg.seed = j.at("seed").get<uint64_t>();
  cfg.adam.beta1 = j.at("adam").at("beta1").get<double>();
  cfg.adam.beta2 = j.at("adam").at("beta2").get<double>();
  cfg.adam.eps = j.at("adam").at("eps").get<double>();
  cfg.adam.step_size = j.at("adam").at("step_size").get<double>();
  cfg.adam.clip_norm = j.at("adam").at("clip_norm").get<double>();
  return cfg;
}

}  // namespace

std::vector<Segment> segment_stream(const FeatureMatrix &feats, int utt_index,
                                    int segment_len, SegmentMode mode) {
  if (segment_len < 1) throw UsageError("segment_stream: bad segment length");
  std::vector<Segment> out;
  if (feats.num_frames < 1) return out;
  if (mode == SegmentMode::kTraining) {
    for (int s = 0; s + segment_len <= feats.num_frames; s += segment_len)
      out.push_back({utt_index, s});
  } else {
    for (int t = 0; t < feats.num_frames; ++t)
      out.push_back({utt_index, t - segment_len / 2});
  }
  return out;
}

Checkpoint init_fhvae(const FhvaeConfig &cfg, int n_utterances,
                      uint64_t seed) {
  check_config(cfg);
  if (n_utterances < 1) throw DataError("fhvae: empty utterance table");
  Rng rng(derive_seed(seed, "fhvae-init"));
  Checkpoint ckpt;
  auto add_lstm = [&](const std::string &prefix, int in_dim) {
    ckpt.params.emplace_back(
        prefix + ".lstm.w",
        ad::xavier_uniform<float>(in_dim + cfg.hidden, 4 * cfg.hidden, rng));
    ckpt.params.emplace_back(prefix + ".lstm.b", lstm_bias(cfg.hidden));
  };
  auto add_out = [&](const std::string &prefix, int out_dim) {
    ckpt.params.emplace_back(prefix + ".out.w",
                             ad::xavier_uniform<float>(cfg.hidden, out_dim,
                                                       rng));
    ckpt.params.emplace_back(prefix + ".out.b",
                             ad::Tensor<float>(1, out_dim));
  };
  add_lstm("enc2", cfg.input_dim);
  add_out("enc2", 2 * cfg.d2);
  add_lstm("enc1", cfg.input_dim + cfg.d2);
  add_out("enc1", 2 * cfg.d1);
  add_lstm("dec", cfg.d1 + cfg.d2);
  add_out("dec", 2 * cfg.input_dim);
  ad::Tensor<float> table(n_utterances, cfg.d2);
  for (float &v : table.v) v = static_cast<float>(0.01 * rng.gaussian());
  ckpt.params.emplace_back("table.mu2", std::move(table));
  ckpt.rng_state = Rng(derive_seed(seed, "fhvae-train")).state();
  return ckpt;
}

FhvaeParams<float> bind_fhvae(Checkpoint &ckpt) {
  FhvaeParams<float> p;
  p.enc2_lstm_w = &ckpt.require("enc2.lstm.w");
  p.enc2_lstm_b = &ckpt.require("enc2.lstm.b");
  p.enc2_out_w = &ckpt.require("enc2.out.w");
  p.enc2_out_b = &ckpt.require("enc2.out.b");
  p.enc1_lstm_w = &ckpt.require("enc1.lstm.w");
  p.enc1_lstm_b = &ckpt.require("enc1.lstm.b");
  p.enc1_out_w = &ckpt.require("enc1.out.w");
  p.enc1_out_b = &ckpt.require("enc1.out.b");
  p.dec_lstm_w = &ckpt.require("dec.lstm.w");
  p.dec_lstm_b = &ckpt.require("dec.lstm.b");
  p.dec_out_w = &ckpt.require("dec.out.w");
  p.dec_out_b = &ckpt.require("dec.out.b");
  p.table = &ckpt.require("table.mu2");
  return p;
}

std::vector<UttFeatures> load_features(const Manifest &manifest,
                                       const std::string &feat_dir) {
  std::vector<UttFeatures> out;
  out.reserve(manifest.entries.size());
  for (const auto &e : manifest.entries) {
    UttFeatures u;
    u.id = e.id;
    u.feats = read_feat(feat_dir + "/" + e.id + ".feat");
    out.push_back(std::move(u));
  }
  return out;
}

FhvaeTrainResult train_fhvae(const std::vector<UttFeatures> &train,
                             const std::vector<UttFeatures> &dev,
                             const FhvaeConfig &config) {
  check_config(config);
  if (train.empty()) throw DataError("empty training manifest");
  if (dev.empty()) throw DataError("empty dev manifest");

  std::vector<SegmentRef> segs = training_segments(train, config, "training");

  FhvaeTrainResult res;
  res.model.config = config;
  for (const auto &u : train) res.model.utt_ids.push_back(u.id);
  res.model.ckpt =
      init_fhvae(config, static_cast<int>(train.size()), config.seed);

  Checkpoint &ckpt = res.model.ckpt;
  FhvaeParams<float> p = bind_fhvae(ckpt);
  optim::Adam<float> adam(p.all(), config.adam);
  Rng rng(0);
  rng.set_state(ckpt.rng_state);

  Checkpoint best = ckpt;
  double best_dev = -std::numeric_limits<double>::infinity();
  int since_improve = 0;

  std::vector<size_t> order(segs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(rng.uniform_int(static_cast<int>(i)));
      std::swap(order[i - 1], order[j]);
    }
    std::vector<SegmentRef> shuffled(segs.size());
    for (size_t i = 0; i < order.size(); ++i) shuffled[i] = segs[order[i]];

    double loss_sum = 0.0;
    for (size_t begin = 0; begin < shuffled.size();
         begin += config.batch_segments) {
      size_t end = std::min(shuffled.size(),
                            begin + static_cast<size_t>(config.batch_segments));
      SegmentBatch<float> mb = fill_batch(shuffled, begin, end, train, config);
      fill_noise(&mb, config, &rng);
      ad::Graph<float> g;
      ElboNodes<float> elbo = build_elbo(g, p, config, mb);
      g.backward(elbo.loss);
      loss_sum += static_cast<double>(elbo.loss->val.v[0]) * mb.batch;
      adam.step();
      optim::zero_grads(p.all());
    }
    ckpt.rng_state = rng.state();
    ckpt.set_adam(adam);

    FhvaeEpochLog log;
    log.epoch = epoch;
    log.train_elbo = -loss_sum / static_cast<double>(segs.size());
    log.dev_elbo = held_out_elbo(ckpt, config, dev);
    res.log.push_back(log);

    if (log.dev_elbo > best_dev) {
      best_dev = log.dev_elbo;
      res.best_epoch = epoch;
      best = ckpt;
      since_improve = 0;
    } else if (++since_improve >= config.patience) {
      break;
    }
  }

  res.model.ckpt = std::move(best);

  // Extraction normalization statistics over the training set (raw
  // [mu1, logvar1] dimensions).
  int dims = 2 * config.d1;
  std::vector<double> sum(dims, 0.0), sumsq(dims, 0.0);
  int64_t count = 0;
  for (const auto &u : train) {
    std::vector<double> raw = raw_z1(res.model.ckpt, config, u.feats);
    for (size_t i = 0; i < raw.size(); i += dims) {
      for (int c = 0; c < dims; ++c) {
        sum[c] += raw[i + c];
        sumsq[c] += raw[i + c] * raw[i + c];
      }
      ++count;
    }
  }
  res.model.norm_mean.resize(dims);
  res.model.norm_std.resize(dims);
  std::vector<double> vars(dims, 0.0);
  double mean_var = 0.0;
  for (int c = 0; c < dims; ++c) {
    double mean = sum[c] / static_cast<double>(count);
    vars[c] = std::max(
        sumsq[c] / static_cast<double>(count) - mean * mean, 0.0);
    res.model.norm_mean[c] = mean;
    mean_var += vars[c];
  }
  mean_var /= static_cast<double>(dims);
  // A dimension the encoder barely uses has near-zero variance here; dividing
  // by its raw std would amplify it unboundedly on inputs unlike the training
  // set.  Floor every variance at a fraction of the average so collapsed
  // dimensions stay proportionally small instead of dominating distances.
  double var_floor = std::max(1e-2 * mean_var, 1e-12);
  for (int c = 0; c < dims; ++c)
    res.model.norm_std[c] = std::sqrt(std::max(vars[c], var_floor));
  return res;
}

FeatureMatrix extract_z1(const FhvaeModel &model, const FeatureMatrix &feats,
                         bool include_logvar) {
  const FhvaeConfig &cfg = model.config;
  if (model.norm_mean.empty() || model.norm_std.empty())
    throw DataError("model has no normalization statistics");
  // Binding registers parameter handles for value reads only; no backward
  // pass runs here, so the model is not mutated.
  Checkpoint &ckpt = const_cast<FhvaeModel &>(model).ckpt;
  std::vector<double> raw = raw_z1(ckpt, cfg, feats);

  int out_dims = include_logvar ? 2 * cfg.d1 : cfg.d1;
  FeatureMatrix out;
  out.num_frames = feats.num_frames;
  out.num_bins = out_dims;
  out.frame_shift = feats.frame_shift;
  out.kind =
      include_logvar ? FeatureKind::kZ1MeanLogvar : FeatureKind::kZ1Mean;
  out.source_id = feats.source_id;
  out.frames.resize(static_cast<size_t>(out.num_frames) * out_dims);
  int raw_dims = 2 * cfg.d1;
  for (int t = 0; t < out.num_frames; ++t) {
    for (int c = 0; c < out_dims; ++c) {
      double v = raw[static_cast<size_t>(t) * raw_dims + c];
      out.at(t, c) = (v - model.norm_mean[c]) / model.norm_std[c];
    }
  }
  return out;
}

double dataset_elbo(FhvaeModel &model, const std::vector<UttFeatures> &data) {
  return held_out_elbo(model.ckpt, model.config, data);
}

void save_fhvae(const std::string &path, const FhvaeModel &model) {
  save_checkpoint(path, model.ckpt);
  Json j;
  j["config"] = config_to_json(model.config);
  j["utt_ids"] = model.utt_ids;
  j["norm_mean"] = model.norm_mean;
  j["norm_std"] = model.norm_std;
  std::ofstream os(path + ".json");
  if (!os) throw DataError("cannot write model sidecar: " + path + ".json");
  os << j.dump(2) << "\n";
}

FhvaeModel load_fhvae(const std::string &path) {
  FhvaeModel model;
  model.ckpt = load_checkpoint(path);
  std::ifstream is(path + ".json");
  if (!is) throw DataError("cannot open model sidecar: " + path + ".json");
  Json j;
  try {
    is >> j;
  } catch (const Json::exception &e) {
    throw DataError("malformed model sidecar " + path + ".json: " + e.what());
  }
  model.config = config_from_json(j.at("config"));
  model.utt_ids = j.at("utt_ids").get<std::vector<std::string>>();
  model.norm_mean = j.at("norm_mean").get<std::vector<double>>();
  model.norm_std = j.at("norm_std").get<std::vector<double>>();
  return model;
}

void write_fhvae_log(const std::string &path,
                     const std::vector<FhvaeEpochLog> &log,
                     const FhvaeConfig &config) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write training log: " + path);
  Json head;
  head["adam"] = {{"beta1", config.adam.beta1},
                  {"beta2", config.adam.beta2},
                  {"eps", config.adam.eps},
                  {"step_size", config.adam.step_size}};
  os << head.dump() << "\n";
  for (const auto &e : log) {
    Json j;
    j["epoch"] = e.epoch;
    j["train_elbo"] = e.train_elbo;
    j["dev_elbo"] = e.dev_elbo;
    os << j.dump() << "\n";
  }
}

}  // namespace fhvae
}  // namespace reverbkit
