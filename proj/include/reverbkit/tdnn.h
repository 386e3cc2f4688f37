// reverbkit/tdnn.h

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

#ifndef REVERBKIT_TDNN_H_
#define REVERBKIT_TDNN_H_

// Time-delay network in two roles: frame classifier (softmax head) and
// feature regressor (linear head, used as enhancer/dereverberator).  Eight
// weight layers: six context layers h_t = ReLU(g_{t+i} + g_t + g_{t+k})
// with g = W h_prev + b and clamped frame indices, one plain affine+ReLU
// layer, and the output layer.

#include <array>
#include <string>
#include <vector>

#include "reverbkit/autodiff.h"
#include "reverbkit/checkpoint.h"
#include "reverbkit/featio.h"
#include "reverbkit/manifest.h"

namespace reverbkit {
namespace tdnn {

struct TdnnConfig {
  std::vector<std::array<int, 3>> contexts = {
      {-1, 0, 1}, {-1, 0, 1}, {-1, 0, 1}, {-3, 0, 3}, {-3, 0, 3}, {-3, 0, 3}};
  int hidden_units = 1000;
  int input_dim = 80;
  int output_dim = 0;
  bool softmax_output = true;
};

// Half-width of the frame window that can influence one output frame.
int receptive_field(const TdnnConfig &config);

// Parameter handles in graph order: context layers, plain layer, output.
template <class T>
struct TdnnParams {
  std::vector<ad::Param<T> *> w, b;
};

Checkpoint init_tdnn(const TdnnConfig &config, uint64_t seed);
TdnnParams<float> bind_params(Checkpoint &ckpt, const TdnnConfig &config);

void save_tdnn(const std::string &path, const Checkpoint &ckpt,
               const TdnnConfig &config);
std::pair<Checkpoint, TdnnConfig> load_tdnn(const std::string &path);

// One context layer: ReLU of the clamped three-way sum of affine outputs.
template <class T>
ad::Node<T> *tdnn_layer(ad::Graph<T> &g, ad::Node<T> *h, ad::Node<T> *w,
                        ad::Node<T> *b, int off_lo, int off_hi) {
  return g.relu(g.context_sum(g.affine(h, w, b), off_lo, off_hi));
}

// Full stack up to the (linear) output layer; the caller applies softmax
// cross entropy or a regression loss on top.
template <class T>
ad::Node<T> *tdnn_forward(ad::Graph<T> &g, ad::Node<T> *x,
                          const TdnnConfig &config,
                          const std::vector<ad::Node<T> *> &w,
                          const std::vector<ad::Node<T> *> &b) {
  size_t n_layers = config.contexts.size() + 2;
  if (w.size() != n_layers || b.size() != n_layers)
    throw UsageError("tdnn_forward: parameter count mismatch");
  ad::Node<T> *h = x;
  for (size_t l = 0; l < config.contexts.size(); ++l)
    h = tdnn_layer(g, h, w[l], b[l], config.contexts[l][0],
                   config.contexts[l][2]);
  size_t pl = config.contexts.size();
  h = g.relu(g.affine(h, w[pl], b[pl]));
  return g.affine(h, w[pl + 1], b[pl + 1]);
}

// ---- Training data ----

struct LabeledUtterance {
  std::string id;
  FeatureMatrix feats;
  std::vector<int> labels;
};

struct FeaturePair {
  std::string id;
  FeatureMatrix input, target;
};

// Loads FEAT1 features from feat_dir/<id>.feat plus the frame labels
// referenced by the manifest.  Length mismatches are data errors naming the
// utterance.
std::vector<LabeledUtterance> load_labeled_utterances(
    const Manifest &manifest, const std::string &feat_dir);

// Pairs input features (from in_dir) with target features (from target_dir)
// by utterance id; both manifests must cover identical ids, and pairs must
// be frame-aligned.
std::vector<FeaturePair> load_feature_pairs(const Manifest &in_manifest,
                                            const std::string &in_dir,
                                            const Manifest &target_manifest,
                                            const std::string &target_dir);

// ---- Training ----

struct TrainOptions {
  double step_size = 0.025;
  double clip_norm = 5.0;
  int epochs = 20;
  int finetune_epochs = 5;
  double finetune_decay = 0.75;
  uint64_t seed = 0;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_metric = 0.0;  // FER (%) for the classifier, MSE for the regressor
  double step_size = 0.0;
  std::string phase;  // "train" or "finetune"
};

struct TrainResult {
  Checkpoint ckpt;
  std::vector<EpochLog> log;
  int best_epoch = 0;      // 1-based epoch chosen by dev metric in phase 1
  double best_dev = 0.0;
};

// One full pass over the training set: per-utterance minibatches in a
// shuffled order drawn from the checkpoint's generator state, clipped SGD
// updates at the given step size, then a dev evaluation.  The checkpoint is
// the complete training state, so save/reload between calls is bit-exact.
EpochLog run_classifier_epoch(Checkpoint *ckpt, const TdnnConfig &config,
                              const std::vector<LabeledUtterance> &train,
                              const std::vector<LabeledUtterance> &dev,
                              double step_size);
EpochLog run_regressor_epoch(Checkpoint *ckpt, const TdnnConfig &config,
                             const std::vector<FeaturePair> &train,
                             const std::vector<FeaturePair> &dev,
                             double step_size);

// Cross-entropy training with the two-phase schedule: `epochs` at the fixed
// step size with best-epoch selection by dev frame error rate (earliest
// wins ties), then `finetune_epochs` from the selected checkpoint at
// step_size * decay^n, n = 1, 2, ...
TrainResult train_acoustic_model(const std::vector<LabeledUtterance> &train,
                                 const std::vector<LabeledUtterance> &dev,
                                 const TdnnConfig &config,
                                 const TrainOptions &opts);

// Regression training over parallel pairs (corrupted -> clean) mixed
// uniformly with identity pairs (clean -> clean); same two-phase schedule,
// selection by dev MSE.
TrainResult train_enhancer(const std::vector<FeaturePair> &parallel,
                           const std::vector<FeaturePair> &identity,
                           const std::vector<FeaturePair> &dev,
                           const TdnnConfig &config, const TrainOptions &opts);

// ---- Inference ----

struct Classification {
  std::vector<int> labels;
  ad::Tensor<float> posteriors;  // T x n_labels, rows sum to 1
};

Classification classify_frames(const FeatureMatrix &feats, Checkpoint &ckpt,
                               const TdnnConfig &config);
FeatureMatrix enhance(const FeatureMatrix &feats, Checkpoint &ckpt,
                      const TdnnConfig &config);

// Percent of frames whose predicted label differs from the reference.
double frame_error_rate(const std::vector<int> &predicted,
                        const std::vector<int> &reference);

// Dataset-level metrics used for epoch logs and reports.
double dataset_fer(Checkpoint &ckpt, const TdnnConfig &config,
                   const std::vector<LabeledUtterance> &data);
double dataset_mse(Checkpoint &ckpt, const TdnnConfig &config,
                   const std::vector<FeaturePair> &data);

void write_train_log(const std::string &path, const std::vector<EpochLog> &log,
                     bool classifier);

}  // namespace tdnn
}  // namespace reverbkit

#endif  // REVERBKIT_TDNN_H_
