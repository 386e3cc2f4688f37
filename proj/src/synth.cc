// src/synth.cc

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

#include "reverbkit/synth.h"

#include <cmath>
#include <filesystem>

#include "reverbkit/common.h"
#include "reverbkit/featio.h"

namespace reverbkit {
namespace synth {

namespace {

constexpr int kHop = 160;     // must match the front end
constexpr int kWindow = 400;

struct UnitClass {
  double center_hz;
  double tone_hz;
};

// Class frequencies spread log-uniformly across the usable band.  The tone
// sits at the band center: class identity is carried by one spectral peak
// well separated from its neighbours, so labels survive moderate smearing.
std::vector<UnitClass> class_bank(int n_classes) {
  std::vector<UnitClass> bank(n_classes);
  double lo = 300.0, hi = 3500.0;
  for (int k = 0; k < n_classes; ++k) {
    double frac = n_classes == 1 ? 0.0
                                 : static_cast<double>(k) / (n_classes - 1);
    bank[k].center_hz = lo * std::pow(hi / lo, frac);
    bank[k].tone_hz = bank[k].center_hz;
  }
  return bank;
}

// Two-pole resonator bandpass; state persists across calls so unit audio is
// continuous across the frame grid.
struct Resonator {
  double a1 = 0.0, a2 = 0.0;
  double y1 = 0.0, y2 = 0.0;

  void tune(double center_hz, int sample_rate) {
    double r = 0.98;
    a1 = 2.0 * r * std::cos(2.0 * M_PI * center_hz / sample_rate);
    a2 = -r * r;
    y1 = y2 = 0.0;
  }

  double step(double x) {
    double y = x + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

}  // namespace

SynthUtterance synth_utterance(const CorpusParams &params, uint64_t seed,
                               const std::string &id) {
  if (params.n_classes < 2)
    throw UsageError("synth: need at least 2 label classes");
  if (params.frames_per_utt < params.min_unit_frames ||
      params.min_unit_frames < 1 ||
      params.max_unit_frames < params.min_unit_frames)
    throw UsageError("synth: bad unit/utterance frame counts");

  Rng rng(seed);
  std::vector<UnitClass> bank = class_bank(params.n_classes);

  // Unit schedule: classes uniform, lengths uniform in the configured range,
  // until the nominal frame budget is covered.
  struct Unit {
    int klass;
    int frames;
  };
  std::vector<Unit> units;
  int total_frames = 0;
  while (total_frames < params.frames_per_utt) {
    int span = params.min_unit_frames +
               rng.uniform_int(params.max_unit_frames -
                               params.min_unit_frames + 1);
    units.push_back({rng.uniform_int(params.n_classes), span});
    total_frames += span;
  }

  SynthUtterance out;
  out.clip.id = id;
  out.clip.sample_rate = kSampleRate;
  int n_samples = (total_frames - 1) * kHop + kWindow;
  out.clip.samples.resize(n_samples);
  out.labels.reserve(total_frames);

  Resonator filt;
  size_t pos = 0;
  for (size_t u = 0; u < units.size(); ++u) {
    const Unit &unit = units[u];
    const UnitClass &k = bank[unit.klass];
    // Per-instance variability: small center jitter, a gain offset, and a
    // slow amplitude modulation.  Class identity lives in the peak location,
    // not the level, so frame-level energies vary within a class and
    // classifiers must earn level-invariant decision regions.
    double fc = k.center_hz * (1.0 + rng.uniform(-0.05, 0.05));
    double gain = std::pow(10.0, rng.uniform(-6.0, 0.0) / 20.0);
    double phase = rng.uniform(0.0, 2.0 * M_PI);
    double am_rate = 2.0 * M_PI * rng.uniform(2.0, 8.0) / kSampleRate;
    double am_phase = rng.uniform(0.0, 2.0 * M_PI);
    double am_depth = rng.uniform(0.3, 0.6);
    filt.tune(fc, kSampleRate);

    size_t span_samples = static_cast<size_t>(unit.frames) * kHop;
    if (u + 1 == units.size())
      span_samples = out.clip.samples.size() - pos;  // window tail
    double omega = 2.0 * M_PI * k.tone_hz / kSampleRate;
    for (size_t i = 0; i < span_samples; ++i) {
      double bp = filt.step(rng.gaussian());
      double tone = std::sin(phase + omega * static_cast<double>(i));
      double am = 1.0 + am_depth * std::sin(am_phase + am_rate * i);
      out.clip.samples[pos + i] = gain * am * (0.12 * bp + 0.5 * tone);
    }
    pos += span_samples;
    for (int f = 0; f < unit.frames; ++f) out.labels.push_back(unit.klass);
  }

  // Noise floor whose level wanders a few dB on a ~60 ms timescale, so the
  // quiet bins carry natural variance too; then peak normalization.
  double floor_lg = 0.0;
  for (double &s : out.clip.samples) {
    floor_lg = 0.999 * floor_lg + 0.022 * rng.gaussian();
    s += 0.008 * std::exp(floor_lg) * rng.gaussian();
  }
  double peak = 0.0;
  for (double s : out.clip.samples) peak = std::max(peak, std::abs(s));
  for (double &s : out.clip.samples) s *= 0.5 / peak;
  return out;
}

Corpus synth_corpus(const CorpusParams &params, uint64_t seed,
                    const std::string &out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "audio");
  fs::create_directories(fs::path(out_dir) / "labels");

  Corpus corpus;
  corpus.train.split = Split::kTrain;
  corpus.dev.split = Split::kDev;
  corpus.test.split = Split::kTest;

  auto build_split = [&](const char *name, int count, Manifest *manifest) {
    for (int i = 0; i < count; ++i) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%s_%03d", name, i);
      std::string id(buf);
      SynthUtterance utt =
          synth_utterance(params, derive_seed(seed, "utt:" + id), id);
      std::string audio = out_dir + "/audio/" + id + ".wav";
      std::string labels = out_dir + "/labels/" + id + ".labels";
      write_wav(utt.clip, audio);
      write_labels(id, utt.labels, labels);
      manifest->add({id, audio, "clean", labels});
    }
    manifest->sort_and_check();
    write_manifest(*manifest,
                   out_dir + "/clean_" + std::string(name) + ".jsonl");
  };

  build_split("train", params.train_utts, &corpus.train);
  build_split("dev", params.dev_utts, &corpus.dev);
  build_split("test", params.test_utts, &corpus.test);
  return corpus;
}

}  // namespace synth
}  // namespace reverbkit
