// tests/test_models.cc

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "reverbkit/autodiff.h"
#include "reverbkit/checkpoint.h"
#include "reverbkit/common.h"
#include "reverbkit/featio.h"
#include "reverbkit/fhvae.h"
#include "reverbkit/manifest.h"
#include "reverbkit/tdnn.h"

using namespace reverbkit;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const std::string &tag) {
  std::string dir = (fs::temp_directory_path() / ("reverbkit_" + tag)).string();
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Central finite differences against one reverse pass.  `loss` rebuilds the
// graph from the parameters' current values; loss(true) also runs backward.
void fd_check(const std::function<double(bool)> &loss,
              const std::vector<ad::Param<double> *> &params) {
  const double h = 1e-5, tol = 1e-4;
  for (auto *p : params) p->zero_grad();
  loss(true);
  for (auto *p : params) {
    size_t n = p->value.v.size();
    size_t stride = n <= 8 ? 1 : n / 7;
    for (size_t i = 0; i < n; i += stride) {
      double keep = p->value.v[i];
      p->value.v[i] = keep + h;
      double up = loss(false);
      p->value.v[i] = keep - h;
      double dn = loss(false);
      p->value.v[i] = keep;
      double fd = (up - dn) / (2.0 * h);
      double an = p->grad.v[i];
      double rel = std::abs(an - fd) /
                   std::max({std::abs(an), std::abs(fd), 1e-6});
      CAPTURE(p->name);
      CAPTURE(i);
      CHECK(rel < tol);
    }
  }
}

FeatureMatrix make_features(int frames, int bins) {
  FeatureMatrix m;
  m.num_frames = frames;
  m.num_bins = bins;
  m.frames.assign(static_cast<size_t>(frames) * bins, 0.0);
  return m;
}

// Temporally smooth features: an AR(1) walk per dimension plus an optional
// constant offset, the texture the context layers are built for.
FeatureMatrix ar1_features(Rng &rng, int frames, int bins, double offset) {
  FeatureMatrix m = make_features(frames, bins);
  std::vector<double> x(bins, 0.0);
  for (int t = 0; t < frames; ++t)
    for (int f = 0; f < bins; ++f) {
      x[f] = 0.9 * x[f] + 0.2 * (2.0 * rng.uniform() - 1.0);
      m.at(t, f) = x[f] + offset;
    }
  return m;
}

// Identity-stack checkpoint: every weight matrix is the identity, every bias
// zero, for square layer sizes.
Checkpoint identity_tdnn(const tdnn::TdnnConfig &config) {
  Checkpoint ckpt = tdnn::init_tdnn(config, 0);
  for (auto &p : ckpt.params) {
    p.value.fill(0.0f);
    if (p.value.rows == p.value.cols)
      for (int i = 0; i < p.value.rows; ++i) p.value.at(i, i) = 1.0f;
  }
  return ckpt;
}

// Toy classification corpus: class k puts a bump on feature dims 2k and
// 2k+1; units are 20-frame runs so the context windows see smooth labels.
std::vector<tdnn::LabeledUtterance> toy_labeled(Rng &rng, int n_utts,
                                                int n_classes, int bins) {
  std::vector<tdnn::LabeledUtterance> out;
  for (int u = 0; u < n_utts; ++u) {
    tdnn::LabeledUtterance lu;
    lu.id = "toy_" + std::to_string(u);
    lu.feats = ar1_features(rng, 60, bins, 0.0);
    for (int t = 0; t < 60; ++t) {
      int k = (t / 20 + u) % n_classes;
      lu.feats.at(t, 2 * k) += 2.0;
      lu.feats.at(t, 2 * k + 1) += 2.0;
      lu.labels.push_back(k);
    }
    out.push_back(std::move(lu));
  }
  return out;
}

double frame_mse(const FeatureMatrix &a, const FeatureMatrix &b) {
  REQUIRE(a.frames.size() == b.frames.size());
  double sq = 0.0;
  for (size_t i = 0; i < a.frames.size(); ++i) {
    double d = a.frames[i] - b.frames[i];
    sq += d * d;
  }
  return sq / a.num_frames;
}

}  // namespace

// ---- TDNN structure ----

TEST_CASE("receptive field counts the widest offset per context layer") {
  tdnn::TdnnConfig config;
  CHECK(tdnn::receptive_field(config) == 12);
  config.contexts = {{-2, 0, 1}, {-1, 0, 4}};
  CHECK(tdnn::receptive_field(config) == 6);
  config.contexts.clear();
  CHECK(tdnn::receptive_field(config) == 0);
}

TEST_CASE("identity-weight context layers triple constant rows exactly") {
  tdnn::TdnnConfig config;
  config.contexts = {{-1, 0, 1}, {-2, 0, 2}};
  config.input_dim = 4;
  config.hidden_units = 4;
  config.output_dim = 4;
  config.softmax_output = false;
  Checkpoint ckpt = identity_tdnn(config);

  FeatureMatrix in = make_features(9, 4);
  for (double &v : in.frames) v = 0.5;
  FeatureMatrix out = tdnn::enhance(in, ckpt, config);
  REQUIRE(out.num_frames == 9);
  REQUIRE(out.num_bins == 4);
  // Each context layer sums three equal neighbours (edges clamp to copies),
  // so two layers scale 0.5 by exactly 9.
  for (double v : out.frames) CHECK(v == 4.5);
}

TEST_CASE("a single frame sums its clamped context three times") {
  tdnn::TdnnConfig config;
  config.contexts = {{-1, 0, 1}};
  config.input_dim = 3;
  config.hidden_units = 5;
  config.output_dim = 2;
  config.softmax_output = false;
  Checkpoint ckpt = tdnn::init_tdnn(config, 11);

  FeatureMatrix in = make_features(1, 3);
  in.at(0, 0) = 0.3;
  in.at(0, 1) = -0.7;
  in.at(0, 2) = 1.1;
  FeatureMatrix out = tdnn::enhance(in, ckpt, config);

  // Independent recomputation in double: with one frame every context index
  // clamps to frame 0, so the layer is relu(3 (W x + b)).
  const auto &w0 = ckpt.require("context0.w").value;
  const auto &b0 = ckpt.require("context0.b").value;
  const auto &wp = ckpt.require("plain.w").value;
  const auto &bp = ckpt.require("plain.b").value;
  const auto &wo = ckpt.require("output.w").value;
  const auto &bo = ckpt.require("output.b").value;
  std::vector<double> h(5), h2(5), y(2);
  for (int j = 0; j < 5; ++j) {
    double s = b0.at(0, j);
    for (int i = 0; i < 3; ++i) s += in.at(0, i) * w0.at(i, j);
    h[j] = std::max(0.0, 3.0 * s);
  }
  for (int j = 0; j < 5; ++j) {
    double s = bp.at(0, j);
    for (int i = 0; i < 5; ++i) s += h[i] * wp.at(i, j);
    h2[j] = std::max(0.0, s);
  }
  for (int j = 0; j < 2; ++j) {
    double s = bo.at(0, j);
    for (int i = 0; i < 5; ++i) s += h2[i] * wo.at(i, j);
    y[j] = s;
  }
  for (int j = 0; j < 2; ++j)
    CHECK(out.at(0, j) == doctest::Approx(y[j]).epsilon(1e-5));
}

TEST_CASE("tdnn outputs are blind to perturbations beyond the receptive field") {
  tdnn::TdnnConfig config;  // default contexts: half-width 12
  config.input_dim = 5;
  config.hidden_units = 12;
  config.output_dim = 5;
  config.softmax_output = false;
  Checkpoint ckpt = tdnn::init_tdnn(config, 3);

  Rng rng(99);
  FeatureMatrix in = ar1_features(rng, 40, 5, 0.0);
  FeatureMatrix base = tdnn::enhance(in, ckpt, config);

  const int kick = 20;
  FeatureMatrix poked = in;
  for (int f = 0; f < 5; ++f) poked.at(kick, f) += 0.5;
  FeatureMatrix moved = tdnn::enhance(poked, ckpt, config);

  int radius = tdnn::receptive_field(config);
  REQUIRE(radius == 12);
  for (int t = 0; t < 40; ++t) {
    bool inside = std::abs(t - kick) <= radius;
    bool changed = false;
    for (int f = 0; f < 5; ++f)
      if (base.at(t, f) != moved.at(t, f)) changed = true;
    CAPTURE(t);
    CHECK(changed == inside);
  }
}

TEST_CASE("classifier forward matches an independent matrix recomputation") {
  tdnn::TdnnConfig config;
  config.input_dim = 6;
  config.hidden_units = 10;
  config.output_dim = 4;
  Checkpoint ckpt = tdnn::init_tdnn(config, 17);

  Rng rng(5);
  FeatureMatrix in = ar1_features(rng, 30, 6, 0.1);
  tdnn::Classification got = tdnn::classify_frames(in, ckpt, config);
  REQUIRE(got.posteriors.rows == 30);
  REQUIRE(got.posteriors.cols == 4);

  // Recompute h_t = ReLU(g_{t+lo} + g_t + g_{t+hi}) layer by layer in
  // double, then softmax.
  int T = in.num_frames;
  std::vector<std::vector<double>> h(T, std::vector<double>(6));
  for (int t = 0; t < T; ++t)
    for (int f = 0; f < 6; ++f) h[t][f] = in.at(t, f);
  int prev = 6;
  for (size_t l = 0; l < config.contexts.size(); ++l) {
    const auto &w =
        ckpt.require("context" + std::to_string(l) + ".w").value;
    const auto &b =
        ckpt.require("context" + std::to_string(l) + ".b").value;
    int width = config.hidden_units;
    std::vector<std::vector<double>> g(T, std::vector<double>(width));
    for (int t = 0; t < T; ++t)
      for (int j = 0; j < width; ++j) {
        double s = b.at(0, j);
        for (int i = 0; i < prev; ++i) s += h[t][i] * w.at(i, j);
        g[t][j] = s;
      }
    int lo = config.contexts[l][0], hi = config.contexts[l][2];
    std::vector<std::vector<double>> nh(T, std::vector<double>(width));
    for (int t = 0; t < T; ++t) {
      int ta = std::clamp(t + lo, 0, T - 1);
      int tb = std::clamp(t + hi, 0, T - 1);
      for (int j = 0; j < width; ++j)
        nh[t][j] = std::max(0.0, g[ta][j] + g[t][j] + g[tb][j]);
    }
    h = std::move(nh);
    prev = width;
  }
  const auto &wp = ckpt.require("plain.w").value;
  const auto &bp = ckpt.require("plain.b").value;
  const auto &wo = ckpt.require("output.w").value;
  const auto &bo = ckpt.require("output.b").value;
  for (int t = 0; t < T; ++t) {
    std::vector<double> h2(config.hidden_units), logits(4);
    for (int j = 0; j < config.hidden_units; ++j) {
      double s = bp.at(0, j);
      for (int i = 0; i < prev; ++i) s += h[t][i] * wp.at(i, j);
      h2[j] = std::max(0.0, s);
    }
    double mx = -1e300;
    for (int j = 0; j < 4; ++j) {
      double s = bo.at(0, j);
      for (int i = 0; i < config.hidden_units; ++i) s += h2[i] * wo.at(i, j);
      logits[j] = s;
      mx = std::max(mx, s);
    }
    double z = 0.0;
    for (int j = 0; j < 4; ++j) z += std::exp(logits[j] - mx);
    int arg = 0;
    for (int j = 0; j < 4; ++j) {
      double p = std::exp(logits[j] - mx) / z;
      CHECK(got.posteriors.at(t, j) == doctest::Approx(p).epsilon(1e-4));
      if (p > std::exp(logits[arg] - mx) / z) arg = j;
    }
    CHECK(got.labels[t] == arg);
  }
}

TEST_CASE("full tdnn gradient passes central finite differences") {
  for (uint64_t seed : {1u, 2u}) {
    tdnn::TdnnConfig config;
    config.contexts = {{-1, 0, 1}, {-2, 0, 2}};
    config.input_dim = 3;
    config.hidden_units = 4;
    config.output_dim = 3;
    Rng rng(seed);

    std::vector<std::unique_ptr<ad::Param<double>>> store;
    std::vector<ad::Param<double> *> params;
    auto add = [&](const std::string &name, int r, int c) {
      ad::Tensor<double> t(r, c);
      for (auto &v : t.v) v = rng.uniform(-0.5, 0.5);
      store.push_back(std::make_unique<ad::Param<double>>(name, std::move(t)));
      params.push_back(store.back().get());
      return store.back().get();
    };
    std::vector<ad::Param<double> *> w, b;
    int prev = config.input_dim;
    for (size_t l = 0; l < config.contexts.size(); ++l) {
      w.push_back(add("w" + std::to_string(l), prev, config.hidden_units));
      b.push_back(add("b" + std::to_string(l), 1, config.hidden_units));
      prev = config.hidden_units;
    }
    w.push_back(add("wp", prev, config.hidden_units));
    b.push_back(add("bp", 1, config.hidden_units));
    w.push_back(add("wo", config.hidden_units, config.output_dim));
    b.push_back(add("bo", 1, config.output_dim));

    ad::Tensor<double> x(6, 3);
    for (auto &v : x.v) v = rng.uniform(-1.0, 1.0);
    std::vector<int> labels = {0, 1, 2, 1, 0, 2};

    auto loss = [&](bool backward) {
      ad::Graph<double> g;
      std::vector<ad::Node<double> *> wn, bn;
      for (size_t i = 0; i < w.size(); ++i) {
        wn.push_back(g.leaf(*w[i]));
        bn.push_back(g.leaf(*b[i]));
      }
      ad::Node<double> *out = tdnn::tdnn_forward(g, g.input(x), config, wn, bn);
      ad::Node<double> *l = g.softmax_cross_entropy(out, labels);
      if (backward) g.backward(l);
      return l->val.at(0, 0);
    };
    fd_check(loss, params);
  }
}

// ---- Classifier behavior ----

TEST_CASE("an all-zero classifier emits uniform posteriors and class zero") {
  tdnn::TdnnConfig config;
  config.input_dim = 4;
  config.hidden_units = 6;
  config.output_dim = 5;
  Checkpoint ckpt = tdnn::init_tdnn(config, 1);
  for (auto &p : ckpt.params) p.value.fill(0.0f);

  Rng rng(2);
  FeatureMatrix in = ar1_features(rng, 12, 4, 0.0);
  tdnn::Classification c = tdnn::classify_frames(in, ckpt, config);
  for (int t = 0; t < 12; ++t) {
    CHECK(c.labels[t] == 0);
    for (int j = 0; j < 5; ++j)
      CHECK(c.posteriors.at(t, j) == doctest::Approx(0.2).epsilon(1e-6));
  }
}

TEST_CASE("posterior rows sum to one under a random model") {
  tdnn::TdnnConfig config;
  config.input_dim = 5;
  config.hidden_units = 9;
  config.output_dim = 7;
  Checkpoint ckpt = tdnn::init_tdnn(config, 21);
  Rng rng(3);
  FeatureMatrix in = ar1_features(rng, 25, 5, 0.3);
  tdnn::Classification c = tdnn::classify_frames(in, ckpt, config);
  for (int t = 0; t < 25; ++t) {
    double s = 0.0;
    for (int j = 0; j < 7; ++j) s += c.posteriors.at(t, j);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("frame error rate counts mismatches and rejects bad input") {
  CHECK(tdnn::frame_error_rate({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(tdnn::frame_error_rate({0, 0, 0}, {1, 2, 3}) == 100.0);
  CHECK(tdnn::frame_error_rate({1, 2, 3, 4}, {1, 0, 3, 0}) == 50.0);
  CHECK_THROWS_AS(tdnn::frame_error_rate({1}, {1, 2}), DataError);
  CHECK_THROWS_AS(tdnn::frame_error_rate({}, {}), DataError);
}

TEST_CASE("trainers reject a head of the wrong kind") {
  tdnn::TdnnConfig config;
  config.input_dim = 4;
  config.hidden_units = 4;
  config.output_dim = 4;
  tdnn::TrainOptions opts;
  config.softmax_output = false;
  CHECK_THROWS_AS(tdnn::train_acoustic_model({}, {}, config, opts),
                  UsageError);
  config.softmax_output = true;
  CHECK_THROWS_AS(tdnn::train_enhancer({}, {}, {}, config, opts), UsageError);
}

TEST_CASE("classifier training drives toy dev error toward zero") {
  Rng rng(31);
  auto train = toy_labeled(rng, 8, 3, 8);
  auto dev = toy_labeled(rng, 3, 3, 8);

  tdnn::TdnnConfig config;
  config.input_dim = 8;
  config.hidden_units = 8;
  config.output_dim = 3;
  tdnn::TrainOptions opts;
  opts.epochs = 5;
  opts.finetune_epochs = 0;
  opts.seed = 4;
  tdnn::TrainResult res = tdnn::train_acoustic_model(train, dev, config, opts);

  REQUIRE(res.log.size() == 5);
  CHECK(res.log.back().train_loss < res.log.front().train_loss);
  CHECK(res.best_dev <= 15.0);
  CHECK(tdnn::dataset_fer(res.ckpt, config, dev) == res.best_dev);
}

TEST_CASE("finetuning decays the step size and keeps counting epochs") {
  Rng rng(41);
  auto train = toy_labeled(rng, 6, 3, 8);
  auto dev = toy_labeled(rng, 2, 3, 8);

  tdnn::TdnnConfig config;
  config.input_dim = 8;
  config.hidden_units = 6;
  config.output_dim = 3;
  tdnn::TrainOptions opts;
  opts.step_size = 0.02;
  opts.epochs = 3;
  opts.finetune_epochs = 4;
  opts.seed = 9;
  tdnn::TrainResult res = tdnn::train_acoustic_model(train, dev, config, opts);

  REQUIRE(res.log.size() == 7);
  for (int e = 0; e < 3; ++e) {
    CHECK(res.log[e].phase == "train");
    CHECK(res.log[e].step_size == 0.02);
    CHECK(res.log[e].epoch == e + 1);
  }
  for (int n = 1; n <= 4; ++n) {
    const auto &e = res.log[2 + n];
    CHECK(e.phase == "finetune");
    CHECK(e.step_size == 0.02 * std::pow(0.75, n));
    CHECK(e.epoch == 3 + n);
  }
}

TEST_CASE("the selected epoch is the earliest dev minimum") {
  Rng rng(51);
  auto train = toy_labeled(rng, 8, 3, 8);
  auto dev = toy_labeled(rng, 3, 3, 8);

  tdnn::TdnnConfig config;
  config.input_dim = 8;
  config.hidden_units = 8;
  config.output_dim = 3;
  tdnn::TrainOptions opts;
  opts.epochs = 6;
  opts.finetune_epochs = 0;
  opts.seed = 12;
  tdnn::TrainResult res = tdnn::train_acoustic_model(train, dev, config, opts);

  double best = res.log[0].dev_metric;
  int first = 1;
  for (int e = 1; e < 6; ++e)
    if (res.log[e].dev_metric < best) {
      best = res.log[e].dev_metric;
      first = e + 1;
    }
  CHECK(res.best_dev == best);
  CHECK(res.best_epoch == first);
}

// ---- Enhancer behavior ----

TEST_CASE("the enhancer learns the identity map on smooth features") {
  Rng rng(61);
  std::vector<tdnn::FeaturePair> pairs, dev;
  for (int u = 0; u < 12; ++u) {
    FeatureMatrix f = ar1_features(rng, 50, 8, 0.0);
    pairs.push_back({"p" + std::to_string(u), f, f});
  }
  for (int u = 0; u < 3; ++u) {
    FeatureMatrix f = ar1_features(rng, 50, 8, 0.0);
    dev.push_back({"d" + std::to_string(u), f, f});
  }

  tdnn::TdnnConfig config;
  config.input_dim = 8;
  config.hidden_units = 32;
  config.output_dim = 8;
  config.softmax_output = false;
  tdnn::TrainOptions opts;
  opts.step_size = 0.01;
  opts.epochs = 60;
  opts.finetune_epochs = 0;
  opts.seed = 14;

  Checkpoint init = tdnn::init_tdnn(config, opts.seed);
  double before = tdnn::dataset_mse(init, config, dev);
  tdnn::TrainResult res = tdnn::train_enhancer(pairs, {}, dev, config, opts);
  double after = tdnn::dataset_mse(res.ckpt, config, dev);
  CHECK(after * 8.0 < before);
}

namespace {

// Features on a 2-D smooth manifold lifted by a fixed linear map: the
// low-rank structure a regression network can actually learn, unlike
// independent noise per dimension.
FeatureMatrix manifold_features(Rng &rng, int frames, int bins) {
  static std::vector<double> lift;  // bins x 2
  if (lift.empty()) {
    Rng wrng(7);
    lift.resize(static_cast<size_t>(bins) * 2);
    for (auto &w : lift) w = wrng.uniform(-1.0, 1.0);
  }
  FeatureMatrix m = make_features(frames, bins);
  double c0 = 0.0, c1 = 0.0;
  for (int t = 0; t < frames; ++t) {
    c0 = 0.9 * c0 + (2.0 * rng.uniform() - 1.0);
    c1 = 0.9 * c1 + (2.0 * rng.uniform() - 1.0);
    for (int f = 0; f < bins; ++f)
      m.at(t, f) = lift[f * 2] * c0 + lift[f * 2 + 1] * c1 +
                   0.05 * (2.0 * rng.uniform() - 1.0);
  }
  return m;
}

}  // namespace

TEST_CASE("the enhancer inverts a channel better than it distorts clean") {
  Rng rng(71);
  // Channel: causal 3-tap smear plus a level offset.
  auto corrupt = [](const FeatureMatrix &x) {
    FeatureMatrix y = x;
    for (int t = 0; t < x.num_frames; ++t)
      for (int f = 0; f < x.num_bins; ++f) {
        double v = 0.5 * x.at(t, f);
        if (t >= 1) v += 0.3 * x.at(t - 1, f);
        if (t >= 2) v += 0.2 * x.at(t - 2, f);
        y.at(t, f) = v + 1.0;
      }
    return y;
  };

  std::vector<tdnn::FeaturePair> parallel, identity, dev;
  std::vector<FeatureMatrix> dev_clean;
  for (int u = 0; u < 12; ++u) {
    FeatureMatrix f = manifold_features(rng, 50, 8);
    parallel.push_back({"p" + std::to_string(u), corrupt(f), f});
    identity.push_back({"i" + std::to_string(u), f, f});
  }
  for (int u = 0; u < 3; ++u) {
    FeatureMatrix f = manifold_features(rng, 50, 8);
    dev.push_back({"d" + std::to_string(u), corrupt(f), f});
    dev_clean.push_back(f);
  }

  tdnn::TdnnConfig config;
  config.input_dim = 8;
  config.hidden_units = 32;
  config.output_dim = 8;
  config.softmax_output = false;
  tdnn::TrainOptions opts;
  opts.step_size = 0.01;
  opts.epochs = 60;
  opts.finetune_epochs = 0;
  opts.seed = 15;
  tdnn::TrainResult res =
      tdnn::train_enhancer(parallel, identity, dev, config, opts);

  double copy_through = 0.0, inverted = 0.0, spared = 0.0, energy = 0.0;
  for (size_t u = 0; u < dev.size(); ++u) {
    copy_through += frame_mse(dev[u].input, dev[u].target);
    FeatureMatrix ed = tdnn::enhance(dev[u].input, res.ckpt, config);
    inverted += frame_mse(ed, dev[u].target);
    FeatureMatrix ec = tdnn::enhance(dev_clean[u], res.ckpt, config);
    spared += frame_mse(ec, dev_clean[u]);
    FeatureMatrix zero = make_features(50, 8);
    energy += frame_mse(dev_clean[u], zero);
  }
  // Enhancement recovers most of the corruption...
  CHECK(inverted < 0.5 * copy_through);
  // ...while the identity pairs keep the clean map anchored: the distortion
  // the enhancer adds to clean input stays below half the signal energy and
  // below the corruption it undoes.
  CHECK(spared < 0.5 * energy);
  CHECK(spared < copy_through);
}

// ---- FHVAE ----

TEST_CASE("segment streaming drops the remainder and centers extraction") {
  FeatureMatrix f45 = make_features(45, 3);
  auto tr = fhvae::segment_stream(f45, 2, 20, fhvae::SegmentMode::kTraining);
  REQUIRE(tr.size() == 2);
  CHECK(tr[0].start == 0);
  CHECK(tr[1].start == 20);
  CHECK(tr[0].utt_index == 2);

  FeatureMatrix f19 = make_features(19, 3);
  CHECK(fhvae::segment_stream(f19, 0, 20, fhvae::SegmentMode::kTraining)
            .empty());

  FeatureMatrix f40 = make_features(40, 3);
  CHECK(fhvae::segment_stream(f40, 0, 20, fhvae::SegmentMode::kTraining)
            .size() == 2);

  auto ex = fhvae::segment_stream(f45, 1, 20, fhvae::SegmentMode::kExtraction);
  REQUIRE(ex.size() == 45);
  for (int t = 0; t < 45; ++t) {
    CHECK(ex[t].start == t - 10);
    CHECK(ex[t].utt_index == 1);
  }
}

namespace {

// Double-precision FHVAE parameter set with small random values, wired into
// the pointer struct build_elbo expects.
struct ToyFhvae {
  std::vector<std::unique_ptr<ad::Param<double>>> store;
  fhvae::FhvaeParams<double> p;
  std::vector<ad::Param<double> *> all;

  ToyFhvae(const fhvae::FhvaeConfig &cfg, int n_utts, Rng &rng) {
    auto add = [&](const std::string &name, int r, int c) {
      ad::Tensor<double> t(r, c);
      for (auto &v : t.v) v = rng.uniform(-0.4, 0.4);
      store.push_back(
          std::make_unique<ad::Param<double>>(name, std::move(t)));
      all.push_back(store.back().get());
      return store.back().get();
    };
    int H = cfg.hidden;
    p.enc2_lstm_w = add("e2w", cfg.input_dim + H, 4 * H);
    p.enc2_lstm_b = add("e2b", 1, 4 * H);
    p.enc2_out_w = add("e2ow", H, 2 * cfg.d2);
    p.enc2_out_b = add("e2ob", 1, 2 * cfg.d2);
    p.enc1_lstm_w = add("e1w", cfg.input_dim + cfg.d2 + H, 4 * H);
    p.enc1_lstm_b = add("e1b", 1, 4 * H);
    p.enc1_out_w = add("e1ow", H, 2 * cfg.d1);
    p.enc1_out_b = add("e1ob", 1, 2 * cfg.d1);
    p.dec_lstm_w = add("dw", cfg.d1 + cfg.d2 + H, 4 * H);
    p.dec_lstm_b = add("db", 1, 4 * H);
    p.dec_out_w = add("dow", H, 2 * cfg.input_dim);
    p.dec_out_b = add("dob", 1, 2 * cfg.input_dim);
    p.table = add("table", n_utts, cfg.d2);
  }
};

fhvae::SegmentBatch<double> toy_batch(const fhvae::FhvaeConfig &cfg, Rng &rng) {
  fhvae::SegmentBatch<double> b;
  b.batch = 2;
  for (int t = 0; t < cfg.segment_len; ++t) {
    ad::Tensor<double> fr(2, cfg.input_dim);
    for (auto &v : fr.v) v = rng.uniform(-1.0, 1.0);
    b.frames.push_back(std::move(fr));
  }
  b.utt_index = {0, 1};
  b.inv_segment_count = {0.5, 1.0 / 3.0};
  b.eps1 = ad::Tensor<double>(2, cfg.d1);
  b.eps2 = ad::Tensor<double>(2, cfg.d2);
  for (auto &v : b.eps1.v) v = rng.gaussian();
  for (auto &v : b.eps2.v) v = rng.gaussian();
  return b;
}

}  // namespace

TEST_CASE("the fhvae bound's gradient passes central finite differences") {
  fhvae::FhvaeConfig cfg;
  cfg.input_dim = 3;
  cfg.segment_len = 4;
  cfg.hidden = 5;
  cfg.d1 = 2;
  cfg.d2 = 2;
  cfg.alpha = 2.0;

  Rng rng(81);
  ToyFhvae toy(cfg, 2, rng);
  fhvae::SegmentBatch<double> batch = toy_batch(cfg, rng);

  auto loss = [&](bool backward) {
    ad::Graph<double> g;
    fhvae::ElboNodes<double> e = fhvae::build_elbo(g, toy.p, cfg, batch);
    if (backward) g.backward(e.loss);
    return e.loss->val.at(0, 0);
  };
  fd_check(loss, toy.all);
}

TEST_CASE("a fixed prior overrides the table and drops the utterance score") {
  fhvae::FhvaeConfig cfg;
  cfg.input_dim = 3;
  cfg.segment_len = 4;
  cfg.hidden = 5;
  cfg.d1 = 2;
  cfg.d2 = 2;

  Rng rng(91);
  ToyFhvae toy(cfg, 2, rng);
  fhvae::SegmentBatch<double> batch = toy_batch(cfg, rng);
  ad::Tensor<double> prior(2, 2);
  for (auto &v : prior.v) v = rng.uniform(-0.3, 0.3);

  ad::Graph<double> g;
  fhvae::ElboNodes<double> e = fhvae::build_elbo(g, toy.p, cfg, batch, &prior);
  CHECK(e.disc_ce == nullptr);
  CHECK(std::isfinite(e.loss->val.at(0, 0)));

  // The table must not contribute: its gradient stays zero.
  auto loss = [&](bool backward) {
    ad::Graph<double> g2;
    fhvae::ElboNodes<double> e2 =
        fhvae::build_elbo(g2, toy.p, cfg, batch, &prior);
    if (backward) g2.backward(e2.loss);
    return e2.loss->val.at(0, 0);
  };
  fd_check(loss, toy.all);
  for (double v : toy.p.table->grad.v) CHECK(v == 0.0);
}

TEST_CASE("a single-row table makes the utterance score vanish") {
  fhvae::FhvaeConfig cfg;
  cfg.input_dim = 3;
  cfg.segment_len = 4;
  cfg.hidden = 5;
  cfg.d1 = 2;
  cfg.d2 = 2;
  Checkpoint ckpt = fhvae::init_fhvae(cfg, 1, 7);
  fhvae::FhvaeParams<float> p = fhvae::bind_fhvae(ckpt);

  Rng rng(101);
  fhvae::SegmentBatch<float> batch;
  batch.batch = 2;
  for (int t = 0; t < cfg.segment_len; ++t) {
    ad::Tensor<float> fr(2, cfg.input_dim);
    for (auto &v : fr.v) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    batch.frames.push_back(std::move(fr));
  }
  batch.utt_index = {0, 0};
  batch.inv_segment_count = {0.5f, 0.5f};
  batch.eps1 = ad::Tensor<float>(2, cfg.d1);
  batch.eps2 = ad::Tensor<float>(2, cfg.d2);

  ad::Graph<float> g;
  fhvae::ElboNodes<float> e = fhvae::build_elbo(g, p, cfg, batch);
  REQUIRE(e.disc_ce != nullptr);
  CHECK(e.disc_ce->val.at(0, 0) == 0.0f);
  CHECK(std::isfinite(e.loss->val.at(0, 0)));
}

namespace {

std::vector<fhvae::UttFeatures> toy_utterances(Rng &rng, int n, int frames,
                                               int bins) {
  std::vector<fhvae::UttFeatures> out;
  for (int u = 0; u < n; ++u) {
    double offset = (u % 2 == 0) ? -0.8 : 0.8;
    out.push_back(
        {"u" + std::to_string(u), ar1_features(rng, frames, bins, offset)});
  }
  return out;
}

fhvae::FhvaeConfig toy_fhvae_config() {
  fhvae::FhvaeConfig cfg;
  cfg.input_dim = 4;
  cfg.segment_len = 10;
  cfg.hidden = 8;
  cfg.d1 = 2;
  cfg.d2 = 2;
  cfg.batch_segments = 8;
  cfg.max_epochs = 6;
  cfg.patience = 5;
  cfg.seed = 19;
  return cfg;
}

}  // namespace

TEST_CASE("fhvae training improves the dev bound and keeps the best epoch") {
  Rng rng(111);
  auto train = toy_utterances(rng, 4, 100, 4);
  auto dev = toy_utterances(rng, 2, 100, 4);
  fhvae::FhvaeConfig cfg = toy_fhvae_config();

  fhvae::FhvaeTrainResult res = fhvae::train_fhvae(train, dev, cfg);
  REQUIRE(!res.log.empty());
  CHECK(res.log.size() <= static_cast<size_t>(cfg.max_epochs));

  double best = res.log[0].dev_elbo;
  int best_epoch = 1;
  for (const auto &e : res.log)
    if (e.dev_elbo > best) {
      best = e.dev_elbo;
      best_epoch = e.epoch;
    }
  CHECK(res.best_epoch == best_epoch);
  CHECK(best > res.log.front().dev_elbo - 1e-12);

  // The returned model is the best-epoch snapshot, not the last one.
  CHECK(fhvae::dataset_elbo(res.model, dev) == doctest::Approx(best));

  // Table rows exist for every training utterance, in manifest order.
  REQUIRE(res.model.utt_ids.size() == 4);
  CHECK(res.model.utt_ids[0] == "u0");
  const auto *table = res.model.ckpt.find("table.mu2");
  REQUIRE(table != nullptr);
  CHECK(table->value.rows == 4);
}

TEST_CASE("the fhvae log opens with the adam configuration") {
  std::string dir = temp_dir("fhvae_log");
  fhvae::FhvaeConfig cfg = toy_fhvae_config();
  std::vector<fhvae::FhvaeEpochLog> log = {{1, -5.0, -4.0}, {2, -3.0, -2.5}};
  fhvae::write_fhvae_log(dir + "/log.jsonl", log, cfg);

  std::ifstream is(dir + "/log.jsonl");
  REQUIRE(is.good());
  std::string line;
  REQUIRE(std::getline(is, line));
  nlohmann::json head = nlohmann::json::parse(line);
  REQUIRE(head.contains("adam"));
  CHECK(head["adam"]["beta1"] == 0.95);
  CHECK(head["adam"]["beta2"] == 0.999);
  CHECK(head["adam"]["eps"] == 1e-8);
  CHECK(head["adam"]["step_size"] == 1e-3);
  int rows = 0;
  while (std::getline(is, line)) {
    nlohmann::json j = nlohmann::json::parse(line);
    CHECK(j.contains("epoch"));
    CHECK(j.contains("train_elbo"));
    CHECK(j.contains("dev_elbo"));
    ++rows;
  }
  CHECK(rows == 2);
}

TEST_CASE("z1 extraction is frame-aligned, standardized, and deterministic") {
  Rng rng(121);
  auto train = toy_utterances(rng, 4, 80, 4);
  auto dev = toy_utterances(rng, 2, 80, 4);
  fhvae::FhvaeConfig cfg = toy_fhvae_config();
  cfg.max_epochs = 3;
  fhvae::FhvaeTrainResult res = fhvae::train_fhvae(train, dev, cfg);

  FeatureMatrix z = fhvae::extract_z1(res.model, train[0].feats, false);
  CHECK(z.num_frames == train[0].feats.num_frames);
  CHECK(z.num_bins == cfg.d1);
  CHECK(z.kind == FeatureKind::kZ1Mean);

  FeatureMatrix zlv = fhvae::extract_z1(res.model, train[0].feats, true);
  CHECK(zlv.num_bins == 2 * cfg.d1);
  CHECK(zlv.kind == FeatureKind::kZ1MeanLogvar);
  // The mean half agrees with the mean-only extraction.
  for (int t = 0; t < z.num_frames; ++t)
    for (int c = 0; c < cfg.d1; ++c) CHECK(zlv.at(t, c) == z.at(t, c));

  FeatureMatrix again = fhvae::extract_z1(res.model, train[0].feats, false);
  CHECK(again.frames == z.frames);

  // Normalization statistics come from the training set, so re-extracting it
  // yields unit moments per dimension.
  int dims = 2 * cfg.d1;
  std::vector<double> sum(dims, 0.0), sumsq(dims, 0.0);
  int64_t count = 0;
  for (const auto &u : train) {
    FeatureMatrix zu = fhvae::extract_z1(res.model, u.feats, true);
    for (int t = 0; t < zu.num_frames; ++t, ++count)
      for (int c = 0; c < dims; ++c) {
        sum[c] += zu.at(t, c);
        sumsq[c] += zu.at(t, c) * zu.at(t, c);
      }
  }
  // Every dimension is centered.  Dimensions above the variance floor are
  // scaled to exactly unit variance; floored (near-collapsed) dimensions come
  // out smaller, never larger.  The widest dimension is never floored.
  double max_var = 0.0;
  for (int c = 0; c < dims; ++c) {
    double mean = sum[c] / static_cast<double>(count);
    double var = sumsq[c] / static_cast<double>(count) - mean * mean;
    CHECK(std::abs(mean) < 1e-6);
    CHECK(var <= 1.0 + 1e-4);
    max_var = std::max(max_var, var);
  }
  CHECK(std::abs(max_var - 1.0) < 1e-4);

  fhvae::FhvaeModel crippled = res.model;
  crippled.norm_mean.clear();
  CHECK_THROWS_AS(fhvae::extract_z1(crippled, train[0].feats, false),
                  DataError);

  std::string dir = temp_dir("fhvae_roundtrip");
  fhvae::save_fhvae(dir + "/m.ckpt", res.model);
  fhvae::FhvaeModel loaded = fhvae::load_fhvae(dir + "/m.ckpt");
  FeatureMatrix z2 = fhvae::extract_z1(loaded, train[0].feats, false);
  REQUIRE(z2.frames.size() == z.frames.size());
  for (size_t i = 0; i < z.frames.size(); ++i)
    CHECK(std::abs(z2.frames[i] - z.frames[i]) < 1e-12);
}

// ---- Data loaders ----

TEST_CASE("labeled loaders validate alignment and pairing") {
  std::string dir = temp_dir("loaders");
  fs::create_directories(dir + "/in");
  fs::create_directories(dir + "/tgt");

  Rng rng(131);
  Manifest min, mtgt;
  for (std::string id : {"a", "b"}) {
    FeatureMatrix f = ar1_features(rng, 5, 3, 0.0);
    f.source_id = id;
    write_feat(f, dir + "/in/" + id + ".feat");
    write_feat(f, dir + "/tgt/" + id + ".feat");
    std::vector<int> labels(id == "a" ? 5 : 4, 0);
    write_labels(id, labels, dir + "/" + id + ".labels");
    min.add({id, dir + "/in/" + id + ".wav", "clean", dir + "/" + id +
             ".labels"});
    mtgt.add({id, dir + "/tgt/" + id + ".wav", "clean", dir + "/" + id +
              ".labels"});
  }
  min.sort_and_check();
  mtgt.sort_and_check();

  // Utterance b has 4 labels against 5 frames.
  CHECK_THROWS_WITH_AS(tdnn::load_labeled_utterances(min, dir + "/in"),
                       doctest::Contains("utterance b"), DataError);

  auto pairs = tdnn::load_feature_pairs(min, dir + "/in", mtgt, dir + "/tgt");
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].id == "a");
  CHECK(pairs[0].input.frames == pairs[0].target.frames);

  // Pair length mismatch is a data error naming the utterance.
  FeatureMatrix shorter = ar1_features(rng, 4, 3, 0.0);
  write_feat(shorter, dir + "/tgt/a.feat");
  CHECK_THROWS_WITH_AS(
      tdnn::load_feature_pairs(min, dir + "/in", mtgt, dir + "/tgt"),
      doctest::Contains("utterance a"), DataError);

  // Mismatched ids across the two manifests are rejected.
  Manifest other;
  other.add({"a", dir + "/in/a.wav", "clean", dir + "/a.labels"});
  other.add({"c", dir + "/in/c.wav", "clean", dir + "/c.labels"});
  other.sort_and_check();
  CHECK_THROWS_AS(
      tdnn::load_feature_pairs(min, dir + "/in", other, dir + "/tgt"),
      DataError);
}
