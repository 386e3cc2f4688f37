// reverbkit/fhvae.h

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

#ifndef REVERBKIT_FHVAE_H_
#define REVERBKIT_FHVAE_H_

// Factorized hierarchical VAE over fixed-length feature segments.  Two
// latent levels: z2 captures sequence-level (utterance) factors via a
// per-utterance prior mean table, z1 captures residual segment content.
// The training objective is the discriminative segmental lower bound: per
// segment
//
//   -[ E log p(x|z1,z2) - KL(q(z1)||N(0, var_z1 I))
//      - KL(q(z2)||N(mu2_utt, var_z2 I)) + (1/K) log p(mu2_utt)
//      + alpha * log p(utt | mean(q(z2))) ]
//
// where the utterance score is the log-softmax over table rows of
// -||z2_mean - mu2_j||^2 / (2 var_z2) and K is the utterance's segment
// count.  Expectations use one reparameterized sample.

#include <memory>
#include <string>
#include <vector>

#include "reverbkit/autodiff.h"
#include "reverbkit/checkpoint.h"
#include "reverbkit/featio.h"
#include "reverbkit/manifest.h"
#include "reverbkit/optim.h"

namespace reverbkit {
namespace fhvae {

struct FhvaeConfig {
  int input_dim = 80;
  int segment_len = 20;
  int hidden = 256;
  int d1 = 32;
  int d2 = 32;
  double alpha = 10.0;
  double var_z1 = 1.0;
  double var_z2 = 0.25;
  double var_mu2 = 1.0;  // hyperprior over table rows
  int batch_segments = 32;
  int max_epochs = 50;
  int patience = 5;
  optim::AdamOptions adam;  // (0.95, 0.999, 1e-8, lr 1e-3) defaults
  uint64_t seed = 0;
};

// ---- Segments ----

struct Segment {
  int utt_index = 0;
  int start = 0;  // frame index of the segment's first row (may be negative
                  // in extraction mode; reads are clamped to [0, T-1])
};

enum class SegmentMode { kTraining, kExtraction };

// Training mode: non-overlapping whole segments, final partial dropped.
// Extraction mode: one segment per frame, centered, edges replicated.
std::vector<Segment> segment_stream(const FeatureMatrix &feats, int utt_index,
                                    int segment_len, SegmentMode mode);

// ---- Model parameters ----

template <class T>
struct FhvaeParams {
  ad::Param<T> *enc2_lstm_w, *enc2_lstm_b, *enc2_out_w, *enc2_out_b;
  ad::Param<T> *enc1_lstm_w, *enc1_lstm_b, *enc1_out_w, *enc1_out_b;
  ad::Param<T> *dec_lstm_w, *dec_lstm_b, *dec_out_w, *dec_out_b;
  ad::Param<T> *table;  // n_utterances x d2 prior means

  std::vector<ad::Param<T> *> all() const {
    return {enc2_lstm_w, enc2_lstm_b, enc2_out_w, enc2_out_b,
            enc1_lstm_w, enc1_lstm_b, enc1_out_w, enc1_out_b,
            dec_lstm_w,  dec_lstm_b,  dec_out_w,  dec_out_b,
            table};
  }
};

// Creates the parameter set inside `ckpt` for `n_utterances` table rows.
Checkpoint init_fhvae(const FhvaeConfig &config, int n_utterances,
                      uint64_t seed);
FhvaeParams<float> bind_fhvae(Checkpoint &ckpt);

// ---- Graph builders (templated for gradient checks in double) ----

template <class T>
struct SegmentBatch {
  int batch = 0;
  std::vector<ad::Tensor<T>> frames;  // segment_len tensors of B x input_dim
  std::vector<int> utt_index;         // B table rows
  std::vector<T> inv_segment_count;   // B values of 1/K
  ad::Tensor<T> eps1, eps2;           // B x d1, B x d2 reparameterization noise
};

template <class T>
struct EncodeOut {
  ad::Node<T> *mu2, *logvar2, *z2;
  ad::Node<T> *mu1, *logvar1, *z1;
};

template <class T>
struct ElboNodes {
  ad::Node<T> *loss;  // scalar, batch mean of the negated bound
  ad::Node<T> *recon_nll, *kl1, *kl2, *logprior, *disc_ce;
  EncodeOut<T> enc;
};

namespace detail {

template <class T>
std::vector<ad::Node<T> *> lstm_unroll(ad::Graph<T> &g,
                                       const std::vector<ad::Node<T> *> &xs,
                                       ad::Node<T> *w, ad::Node<T> *b,
                                       int batch, int hidden) {
  ad::LstmState<T> state;
  state.h = g.input(ad::Tensor<T>(batch, hidden));
  state.c = g.input(ad::Tensor<T>(batch, hidden));
  std::vector<ad::Node<T> *> hs;
  hs.reserve(xs.size());
  for (ad::Node<T> *x : xs) {
    state = ad::lstm_cell(g, x, state, w, b);
    hs.push_back(state.h);
  }
  return hs;
}

}  // namespace detail

// Runs both encoders over a batch of segments.  Null eps pointers disable
// sampling (z = posterior mean), which is the deterministic extraction path.
template <class T>
EncodeOut<T> encode_segments(ad::Graph<T> &g, const FhvaeParams<T> &p,
                             const FhvaeConfig &cfg,
                             const std::vector<ad::Node<T> *> &frames,
                             const ad::Tensor<T> *eps1 = nullptr,
                             const ad::Tensor<T> *eps2 = nullptr) {
  if (static_cast<int>(frames.size()) != cfg.segment_len)
    throw UsageError("encode_segments: wrong segment length");
  int batch = frames[0]->val.rows;
  EncodeOut<T> out;

  ad::Node<T> *w2 = g.leaf(*p.enc2_lstm_w), *b2 = g.leaf(*p.enc2_lstm_b);
  ad::Node<T> *h2 =
      detail::lstm_unroll(g, frames, w2, b2, batch, cfg.hidden).back();
  ad::Node<T> *stats2 =
      g.affine(h2, g.leaf(*p.enc2_out_w), g.leaf(*p.enc2_out_b));
  out.mu2 = g.slice_cols(stats2, 0, cfg.d2);
  out.logvar2 = g.slice_cols(stats2, cfg.d2, cfg.d2);
  if (eps2) {
    ad::Node<T> *std2 = g.exp(g.scale(out.logvar2, T(0.5)));
    out.z2 = g.add(out.mu2, g.mul(std2, g.input(*eps2)));
  } else {
    out.z2 = out.mu2;
  }

  ad::Node<T> *w1 = g.leaf(*p.enc1_lstm_w), *b1 = g.leaf(*p.enc1_lstm_b);
  std::vector<ad::Node<T> *> cond;
  cond.reserve(frames.size());
  for (ad::Node<T> *x : frames) cond.push_back(g.concat_cols(x, out.z2));
  ad::Node<T> *h1 =
      detail::lstm_unroll(g, cond, w1, b1, batch, cfg.hidden).back();
  ad::Node<T> *stats1 =
      g.affine(h1, g.leaf(*p.enc1_out_w), g.leaf(*p.enc1_out_b));
  out.mu1 = g.slice_cols(stats1, 0, cfg.d1);
  out.logvar1 = g.slice_cols(stats1, cfg.d1, cfg.d1);
  if (eps1) {
    ad::Node<T> *std1 = g.exp(g.scale(out.logvar1, T(0.5)));
    out.z1 = g.add(out.mu1, g.mul(std1, g.input(*eps1)));
  } else {
    out.z1 = out.mu1;
  }
  return out;
}

// Full objective on one batch.  `prior_mu2` overrides the table lookup for
// the KL/prior terms and suppresses the discriminative term (used for dev
// scoring of utterances outside the table); pass nullptr during training.
template <class T>
ElboNodes<T> build_elbo(ad::Graph<T> &g, const FhvaeParams<T> &p,
                        const FhvaeConfig &cfg, const SegmentBatch<T> &batch,
                        const ad::Tensor<T> *prior_mu2 = nullptr) {
  int b = batch.batch;
  if (b < 1) throw UsageError("build_elbo: empty batch");

  std::vector<ad::Node<T> *> frames;
  frames.reserve(batch.frames.size());
  for (const auto &t : batch.frames) frames.push_back(g.input(t));

  ElboNodes<T> out;
  out.enc = encode_segments(g, p, cfg, frames, &batch.eps1, &batch.eps2);

  // Decoder: [z1, z2] repeated at every step.
  ad::Node<T> *zin = g.concat_cols(out.enc.z1, out.enc.z2);
  std::vector<ad::Node<T> *> dec_in(cfg.segment_len, zin);
  ad::Node<T> *wd = g.leaf(*p.dec_lstm_w), *bd = g.leaf(*p.dec_lstm_b);
  std::vector<ad::Node<T> *> hd =
      detail::lstm_unroll(g, dec_in, wd, bd, b, cfg.hidden);
  ad::Node<T> *wo = g.leaf(*p.dec_out_w), *bo = g.leaf(*p.dec_out_b);
  std::vector<ad::Node<T> *> nll_steps;
  nll_steps.reserve(cfg.segment_len);
  for (int t = 0; t < cfg.segment_len; ++t) {
    ad::Node<T> *stats = g.affine(hd[t], wo, bo);
    ad::Node<T> *mean = g.slice_cols(stats, 0, cfg.input_dim);
    ad::Node<T> *logvar = g.slice_cols(stats, cfg.input_dim, cfg.input_dim);
    nll_steps.push_back(g.gaussian_nll(mean, logvar, frames[t]));
  }
  out.recon_nll = g.add_n(nll_steps);

  // KL(q(z1) || N(0, var_z1 I)).
  ad::Tensor<T> zeros1(b, cfg.d1);
  ad::Tensor<T> prior_lv1(b, cfg.d1);
  prior_lv1.fill(T(std::log(cfg.var_z1)));
  out.kl1 = g.kl_diag_gaussians(out.enc.mu1, out.enc.logvar1, g.input(zeros1),
                                g.input(prior_lv1));

  // KL(q(z2) || N(mu2_utt, var_z2 I)) and the prior terms.
  ad::Tensor<T> prior_lv2(b, cfg.d2);
  prior_lv2.fill(T(std::log(cfg.var_z2)));
  ad::Node<T> *mu2_rows;
  if (prior_mu2) {
    mu2_rows = g.input(*prior_mu2);
  } else {
    mu2_rows = g.gather_rows(g.leaf(*p.table), batch.utt_index);
  }
  out.kl2 = g.kl_diag_gaussians(out.enc.mu2, out.enc.logvar2, mu2_rows,
                                g.input(prior_lv2));
  out.logprior = g.weighted_row_logprior(mu2_rows, batch.inv_segment_count,
                                         T(cfg.var_mu2));

  std::vector<ad::Node<T> *> terms = {out.recon_nll, out.kl1, out.kl2,
                                      g.scale(out.logprior, T(-1))};
  if (!prior_mu2) {
    ad::Node<T> *logits = g.neg_sqdist_logits(
        out.enc.mu2, g.leaf(*p.table), T(1.0 / (2.0 * cfg.var_z2)));
    out.disc_ce = g.softmax_cross_entropy(logits, batch.utt_index);
    terms.push_back(g.scale(out.disc_ce, T(cfg.alpha) * T(b)));
  } else {
    out.disc_ce = nullptr;
  }
  out.loss = g.scale(g.add_n(terms), T(1) / T(b));
  return out;
}

// ---- Trained model ----

struct FhvaeModel {
  FhvaeConfig config;
  Checkpoint ckpt;
  std::vector<std::string> utt_ids;         // table row order
  std::vector<double> norm_mean, norm_std;  // over 2*d1 raw output dims
};

struct FhvaeEpochLog {
  int epoch = 0;
  double train_elbo = 0.0;
  double dev_elbo = 0.0;
};

struct FhvaeTrainResult {
  FhvaeModel model;
  std::vector<FhvaeEpochLog> log;
  int best_epoch = 0;
};

struct UttFeatures {
  std::string id;
  FeatureMatrix feats;
};

std::vector<UttFeatures> load_features(const Manifest &manifest,
                                       const std::string &feat_dir);

// Adam training with dev-ELBO early stopping; returns the best-dev model
// with extraction normalization statistics over the training set.
FhvaeTrainResult train_fhvae(const std::vector<UttFeatures> &train,
                             const std::vector<UttFeatures> &dev,
                             const FhvaeConfig &config);

// Per-frame z1 posterior stats from centered segments: mu1, optionally
// concatenated with logvar1; normalized by the model's training statistics.
FeatureMatrix extract_z1(const FhvaeModel &model, const FeatureMatrix &feats,
                         bool include_logvar);

// Batch dev/eval score: mean per-segment bound (higher is better) with
// per-utterance prior means inferred as the mean of z2 posterior means.
double dataset_elbo(FhvaeModel &model, const std::vector<UttFeatures> &data);

void save_fhvae(const std::string &path, const FhvaeModel &model);
FhvaeModel load_fhvae(const std::string &path);

void write_fhvae_log(const std::string &path,
                     const std::vector<FhvaeEpochLog> &log,
                     const FhvaeConfig &config);

}  // namespace fhvae
}  // namespace reverbkit

#endif  // REVERBKIT_FHVAE_H_
