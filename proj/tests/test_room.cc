// tests/test_room.cc

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
#include <vector>

#include "reverbkit/augment.h"
#include "reverbkit/common.h"
#include "reverbkit/logmel.h"
#include "reverbkit/manifest.h"
#include "reverbkit/roomsim.h"
#include "reverbkit/synth.h"
#include "reverbkit/wav.h"

using namespace reverbkit;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const std::string &tag) {
  std::string dir = (fs::temp_directory_path() / ("reverbkit_" + tag)).string();
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<char> slurp(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  return std::vector<char>((std::istreambuf_iterator<char>(is)),
                           std::istreambuf_iterator<char>());
}

RoomSpec sqrt14_room() {
  RoomSpec spec;
  spec.dims = {5.0, 4.0, 3.0};
  spec.source = {1.0, 1.0, 1.0};
  spec.mic = {4.0, 3.0, 2.0};
  spec.reflection = 0.0;
  return spec;
}

// Independent image enumeration: every image index in the cube
// [-order, order]^3 with |mx|+|my|+|mz| <= order and all 8 parity vectors,
// nearest-sample placement.  Deliberately naive.
std::vector<double> brute_force_taps(const RoomSpec &s, double duration_s,
                                     int order) {
  int n = static_cast<int>(std::ceil(duration_s * s.sample_rate));
  std::vector<double> taps(n, 0.0);
  for (int mx = -order; mx <= order; ++mx) {
    for (int my = -order; my <= order; ++my) {
      for (int mz = -order; mz <= order; ++mz) {
        if (std::abs(mx) + std::abs(my) + std::abs(mz) > order) continue;
        for (int q = 0; q <= 1; ++q) {
          for (int j = 0; j <= 1; ++j) {
            for (int k = 0; k <= 1; ++k) {
              double ix = (1 - 2 * q) * s.source[0] + 2 * mx * s.dims[0];
              double iy = (1 - 2 * j) * s.source[1] + 2 * my * s.dims[1];
              double iz = (1 - 2 * k) * s.source[2] + 2 * mz * s.dims[2];
              double dx = ix - s.mic[0], dy = iy - s.mic[1], dz = iz - s.mic[2];
              double d = std::sqrt(dx * dx + dy * dy + dz * dz);
              int power = std::abs(mx - q) + std::abs(mx) + std::abs(my - j) +
                          std::abs(my) + std::abs(mz - k) + std::abs(mz);
              double amp = std::pow(s.reflection, power) / (4.0 * M_PI * d);
              int idx = static_cast<int>(
                  std::lround(d / s.speed_of_sound * s.sample_rate));
              if (idx >= 0 && idx < n) taps[idx] += amp;
            }
          }
        }
      }
    }
  }
  return taps;
}

}  // namespace

// ---- Room sampling ----

TEST_CASE("room sets draw dimensions from their stated ranges") {
  struct Range {
    const char *set;
    double lo, hi;
  };
  for (const Range r : {Range{"S1", 1.0, 10.0}, Range{"S2", 10.0, 30.0},
                        Range{"S3", 30.0, 50.0}}) {
    auto rooms = sample_rooms(r.set, 10, 3, 17);
    REQUIRE(rooms.size() == 30);
    for (const auto &room : rooms) {
      CHECK(room.dims[0] >= r.lo);
      CHECK(room.dims[0] <= r.hi);
      CHECK(room.dims[1] >= r.lo);
      CHECK(room.dims[1] <= r.hi);
      CHECK(room.dims[2] >= 2.0);
      CHECK(room.dims[2] <= 5.0);
      CHECK(room.reflection >= 0.2);
      CHECK(room.reflection <= 0.8);
      for (int d = 0; d < 3; ++d) {
        CHECK(room.source[d] >= 0.1);
        CHECK(room.source[d] <= room.dims[d] - 0.1);
        CHECK(room.mic[d] >= 0.1);
        CHECK(room.mic[d] <= room.dims[d] - 0.1);
      }
    }
    // One reflection coefficient per room, shared across its RIRs.
    for (size_t i = 0; i < rooms.size(); i += 3) {
      CHECK(rooms[i].reflection == rooms[i + 1].reflection);
      CHECK(rooms[i].reflection == rooms[i + 2].reflection);
      CHECK(rooms[i].dims == rooms[i + 1].dims);
    }
  }
}

TEST_CASE("room sampling is deterministic and seed-sensitive") {
  auto a = sample_rooms("S1", 5, 2, 7);
  auto b = sample_rooms("S1", 5, 2, 7);
  auto c = sample_rooms("S1", 5, 2, 8);
  REQUIRE(a.size() == b.size());
  bool all_equal = true, any_diff_seed = false;
  for (size_t i = 0; i < a.size(); ++i) {
    all_equal = all_equal && a[i].dims == b[i].dims &&
                a[i].source == b[i].source && a[i].mic == b[i].mic &&
                a[i].reflection == b[i].reflection;
    any_diff_seed = any_diff_seed || a[i].dims != c[i].dims;
  }
  CHECK(all_equal);
  CHECK(any_diff_seed);
}

TEST_CASE("unknown room set is a usage error") {
  CHECK_THROWS_AS(sample_rooms("S9", 1, 1, 0), UsageError);
}

// ---- Image method ----

TEST_CASE("direct path lands on the closed-form tap") {
  RoomSpec spec = sqrt14_room();
  Rir rir = image_method(spec, 0.1, 0);
  double dist = std::sqrt(14.0);
  int expect_idx = static_cast<int>(std::lround(dist / 343.0 * 16000.0));
  CHECK(expect_idx == 175);
  CHECK(rir.direct_index == 175);
  double expect_amp = 1.0 / (4.0 * M_PI * dist);
  CHECK(rir.taps[175] == doctest::Approx(expect_amp).epsilon(1e-12));
  // With beta = 0 only the direct image survives.
  int nonzero = 0;
  for (double t : rir.taps) nonzero += t != 0.0;
  CHECK(nonzero == 1);
}

TEST_CASE("zero reflection kills every reflected image at any order") {
  RoomSpec spec = sqrt14_room();
  Rir base = image_method(spec, 0.1, 0);
  Rir high = image_method(spec, 0.1, 7);
  CHECK(base.taps == high.taps);
}

TEST_CASE("brute-force oracle equivalence at low order") {
  Rng rng(5);
  auto rooms = sample_rooms("S1", 4, 1, 99);
  for (auto spec : rooms) {
    for (int order : {0, 1, 2}) {
      Rir rir = image_method(spec, 0.25, order);
      std::vector<double> oracle = brute_force_taps(spec, 0.25, order);
      REQUIRE(rir.taps.size() == oracle.size());
      for (size_t i = 0; i < oracle.size(); ++i)
        CHECK(std::abs(rir.taps[i] - oracle[i]) < 1e-9);
    }
  }
}

TEST_CASE("image method is deterministic and matches its serial reference") {
  auto rooms = sample_rooms("S2", 2, 1, 3);
  for (const auto &spec : rooms) {
    Rir a = image_method(spec, 0.3, 4);
    Rir b = image_method(spec, 0.3, 4);
    Rir c = image_method_serial(spec, 0.3, 4);
    CHECK(a.taps == b.taps);
    CHECK(a.taps == c.taps);
  }
}

TEST_CASE("direct path dominates on collision-free rirs") {
  // Two images landing on one sample can stack above the direct tap, so the
  // property is asserted only where every tap holds at most one image.
  // Large rooms at low order keep images sparse enough for that.
  auto rooms = sample_rooms("S3", 14, 1, 11);
  int checked = 0;
  for (const auto &spec : rooms) {
    int order = 1;
    double duration = 0.6;
    int n = static_cast<int>(std::ceil(duration * spec.sample_rate));
    std::vector<int> hits(n, 0);
    for (int mx = -order; mx <= order; ++mx)
      for (int my = -order; my <= order; ++my)
        for (int mz = -order; mz <= order; ++mz) {
          if (std::abs(mx) + std::abs(my) + std::abs(mz) > order) continue;
          for (int q = 0; q <= 1; ++q)
            for (int j = 0; j <= 1; ++j)
              for (int k = 0; k <= 1; ++k) {
                double ix = (1 - 2 * q) * spec.source[0] + 2 * mx * spec.dims[0];
                double iy = (1 - 2 * j) * spec.source[1] + 2 * my * spec.dims[1];
                double iz = (1 - 2 * k) * spec.source[2] + 2 * mz * spec.dims[2];
                double dx = ix - spec.mic[0], dy = iy - spec.mic[1],
                       dz = iz - spec.mic[2];
                double d = std::sqrt(dx * dx + dy * dy + dz * dz);
                int idx = static_cast<int>(
                    std::lround(d / spec.speed_of_sound * spec.sample_rate));
                if (idx >= 0 && idx < n) ++hits[idx];
              }
        }
    if (*std::max_element(hits.begin(), hits.end()) > 1) continue;
    Rir rir = image_method(spec, duration, order);
    REQUIRE(rir.direct_index >= 0);
    double direct = std::abs(rir.taps[rir.direct_index]);
    for (size_t i = 0; i < rir.taps.size(); ++i) {
      if (static_cast<int>(i) == rir.direct_index) continue;
      CHECK(std::abs(rir.taps[i]) <= direct + 1e-12);
    }
    ++checked;
  }
  CHECK(checked >= 3);
}

TEST_CASE("taps are finite and energy matches the analytic image sum") {
  auto rooms = sample_rooms("S1", 3, 1, 13);
  for (const auto &spec : rooms) {
    Rir rir = image_method(spec, 0.3, 5);
    double energy = 0.0;
    for (double t : rir.taps) {
      REQUIRE(std::isfinite(t));
      energy += t * t;
    }
    CHECK(energy > 0.0);
    // Bound: sum over images of amplitude^2 with collisions merged can only
    // exceed the per-image sum via cross terms, which are bounded by the
    // square of the total amplitude mass.
    std::vector<double> oracle = brute_force_taps(spec, 0.3, 5);
    double mass = 0.0;
    for (double t : oracle) mass += std::abs(t);
    CHECK(energy <= mass * mass + 1e-9);
  }
}

TEST_CASE("degenerate geometry is rejected") {
  RoomSpec spec = sqrt14_room();
  spec.mic = spec.source;
  CHECK_THROWS_AS(image_method(spec, 0.1, 0), UsageError);
  RoomSpec short_spec = sqrt14_room();
  // sqrt(14)/343 s ~ 10.9 ms direct delay; 5 ms cannot contain it.
  CHECK_THROWS_AS(image_method(short_spec, 0.005, 0), UsageError);
}

TEST_CASE("rir wav + sidecar round-trip preserves taps and metadata") {
  std::string dir = temp_dir("rir_io");
  auto rooms = sample_rooms("S1", 1, 1, 21);
  Rir rir = image_method(rooms[0], 0.2, 3);
  save_rir(rir, dir + "/r.wav");
  CHECK(fs::exists(dir + "/r.wav.json"));
  Rir back = load_rir(dir + "/r.wav");
  REQUIRE(back.taps.size() == rir.taps.size());
  for (size_t i = 0; i < rir.taps.size(); ++i)
    CHECK(back.taps[i] ==
          doctest::Approx(static_cast<float>(rir.taps[i])).epsilon(1e-7));
  CHECK(back.direct_index == rir.direct_index);
  CHECK(back.meta.dims == rir.meta.dims);
  CHECK(back.meta.reflection == rir.meta.reflection);
  CHECK(back.max_order == rir.max_order);
}

// ---- T60 ----

TEST_CASE("t60 grows with the reflection coefficient") {
  auto rooms = sample_rooms("S1", 20, 1, 31);
  int checked = 0;
  for (auto spec : rooms) {
    spec.reflection = 0.3;
    Rir low = image_method(spec, 1.0, -1);
    spec.reflection = 0.8;
    Rir high = image_method(spec, 1.0, -1);
    double t_low, t_high;
    try {
      t_low = t60(low);
      t_high = t60(high);
    } catch (const DataError &) {
      continue;  // decay range not reached; skip this room
    }
    CHECK(t_high > t_low);
    ++checked;
  }
  CHECK(checked >= 20);
}

TEST_CASE("t60 ignores overall tap scaling") {
  auto rooms = sample_rooms("S1", 1, 1, 33);
  RoomSpec spec = rooms[0];
  spec.reflection = 0.7;
  Rir rir = image_method(spec, 1.0, -1);
  double base = t60(rir);
  for (double &t : rir.taps) t *= 12.5;
  CHECK(t60(rir) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("single-tap rir has no decay curve") {
  RoomSpec spec = sqrt14_room();
  Rir rir = image_method(spec, 0.1, 0);
  CHECK_THROWS_AS(t60(rir), DataError);
}

// ---- Convolution / corruption ----

TEST_CASE("convolving with the unit impulse rir returns the input") {
  AudioClip clip;
  clip.id = "x";
  Rng rng(41);
  clip.samples.resize(3000);
  for (auto &v : clip.samples) v = rng.gaussian() * 0.1;
  Rir rir;
  rir.taps = {1.0};
  rir.direct_index = 0;
  AudioClip out = convolve(clip, rir, true);
  REQUIRE(out.samples.size() == clip.samples.size());
  for (size_t i = 0; i < out.samples.size(); ++i)
    CHECK(std::abs(out.samples[i] - clip.samples[i]) < 1e-12);
}

TEST_CASE("delay compensation folds out a shifted scaled impulse") {
  AudioClip clip;
  clip.id = "x";
  Rng rng(43);
  clip.samples.resize(2000);
  for (auto &v : clip.samples) v = rng.gaussian() * 0.1;
  Rir rir;
  rir.taps.assign(100, 0.0);
  rir.taps[37] = 0.5;
  rir.direct_index = 37;
  AudioClip out = convolve(clip, rir, true);
  REQUIRE(out.samples.size() == clip.samples.size());
  for (size_t i = 0; i < out.samples.size(); ++i)
    CHECK(std::abs(out.samples[i] - 0.5 * clip.samples[i]) < 1e-12);
}

TEST_CASE("convolve is linear in its input") {
  Rng rng(47);
  AudioClip a, b, sum;
  a.samples.resize(1500);
  b.samples.resize(1500);
  for (auto &v : a.samples) v = rng.gaussian() * 0.1;
  for (auto &v : b.samples) v = rng.gaussian() * 0.1;
  sum.samples.resize(1500);
  for (int i = 0; i < 1500; ++i) sum.samples[i] = a.samples[i] + b.samples[i];
  auto rooms = sample_rooms("S1", 1, 1, 49);
  Rir rir = image_method(rooms[0], 0.05, 2);
  AudioClip ca = convolve(a, rir, true);
  AudioClip cb = convolve(b, rir, true);
  AudioClip cs = convolve(sum, rir, true);
  for (int i = 0; i < 1500; ++i)
    CHECK(std::abs(cs.samples[i] - ca.samples[i] - cb.samples[i]) < 1e-9);
}

TEST_CASE("additive noise hits the requested snr") {
  AudioClip clip;
  clip.id = "x";
  Rng rng(53);
  clip.samples.resize(16000);
  for (auto &v : clip.samples) v = rng.gaussian() * 0.25;
  double signal_power = 0.0;
  for (double v : clip.samples) signal_power += v * v;
  for (double snr : {0.0, 15.0, 30.0}) {
    AudioClip noisy = add_noise(clip, snr, 7);
    double noise_power = 0.0;
    for (size_t i = 0; i < clip.samples.size(); ++i) {
      double d = noisy.samples[i] - clip.samples[i];
      noise_power += d * d;
    }
    double got_snr = 10.0 * std::log10(signal_power / noise_power);
    CHECK(got_snr == doctest::Approx(snr).epsilon(0.05));
  }
}

TEST_CASE("gain offset scales samples exactly") {
  AudioClip clip;
  clip.samples = {0.5, -0.25, 0.1};
  AudioClip out = apply_gain_db(clip, -6.0);
  double g = std::pow(10.0, -6.0 / 20.0);
  for (int i = 0; i < 3; ++i)
    CHECK(out.samples[i] == doctest::Approx(clip.samples[i] * g).epsilon(1e-12));
}

// ---- generate over a manifest ----

namespace {

Manifest tiny_corpus(const std::string &dir, int n_utts, uint64_t seed) {
  synth::CorpusParams params;
  params.train_utts = n_utts;
  params.dev_utts = 1;
  params.test_utts = 1;
  params.frames_per_utt = 60;
  params.n_classes = 3;
  synth::Corpus corpus = synth::synth_corpus(params, seed, dir);
  return corpus.train;
}

}  // namespace

TEST_CASE("empty pool and no extras reproduces the input audio") {
  std::string dir = temp_dir("gen_id");
  Manifest clean = tiny_corpus(dir, 3, 5);
  CorruptionSpec spec;
  spec.seed = 11;
  Manifest out = generate(clean, spec, dir + "/out");
  REQUIRE(out.entries.size() == clean.entries.size());
  for (size_t i = 0; i < out.entries.size(); ++i) {
    AudioClip a = read_wav(clean.entries[i].audio);
    AudioClip b = read_wav(out.entries[i].audio);
    CHECK(a.samples == b.samples);
    CHECK(out.entries[i].labels == clean.entries[i].labels);
  }
}

TEST_CASE("generation is deterministic in the seed") {
  std::string dir = temp_dir("gen_det");
  Manifest clean = tiny_corpus(dir, 3, 5);
  auto rooms = sample_rooms("S1", 3, 1, 55);
  std::vector<std::string> pool;
  for (size_t i = 0; i < rooms.size(); ++i) {
    Rir rir = image_method(rooms[i], 0.2, -1);
    std::string p = dir + "/rir" + std::to_string(i) + ".wav";
    save_rir(rir, p);
    pool.push_back(p);
  }
  CorruptionSpec spec;
  spec.rir_pool = pool;
  spec.snr_db = 20.0;
  spec.gain_db = -3.0;
  spec.seed = 77;
  Manifest out1 = generate(clean, spec, dir + "/o1");
  Manifest out2 = generate(clean, spec, dir + "/o2");
  for (size_t i = 0; i < out1.entries.size(); ++i)
    CHECK(slurp(out1.entries[i].audio) == slurp(out2.entries[i].audio));
  spec.seed = 78;
  Manifest out3 = generate(clean, spec, dir + "/o3");
  bool any_diff = false;
  for (size_t i = 0; i < out1.entries.size(); ++i)
    any_diff =
        any_diff || slurp(out1.entries[i].audio) != slurp(out3.entries[i].audio);
  CHECK(any_diff);
}

TEST_CASE("corrupted features stay frame-aligned with clean labels") {
  // An energy onset in the clean stream must land within one frame of the
  // onset in the delay-compensated corrupted stream.
  std::string dir = temp_dir("gen_align");
  AudioClip clip;
  clip.id = "onset";
  clip.samples.assign(16000, 0.0);
  Rng rng(61);
  for (size_t i = 8000; i < clip.samples.size(); ++i)
    clip.samples[i] = rng.gaussian() * 0.3;
  write_wav(clip, dir + "/onset.wav");
  Manifest m;
  m.add({"onset", dir + "/onset.wav", "clean", ""});
  auto rooms = sample_rooms("S2", 1, 1, 63);
  Rir rir = image_method(rooms[0], 0.4, -1);
  save_rir(rir, dir + "/r.wav");
  CorruptionSpec spec;
  spec.rir_pool = {dir + "/r.wav"};
  spec.seed = 3;
  Manifest out = generate(m, spec, dir + "/out");
  LogMelConfig cfg;
  FeatureMatrix fc = logmel(clip, cfg);
  FeatureMatrix fd = logmel(read_wav(out.entries[0].audio), cfg);
  auto onset_frame = [&](const FeatureMatrix &f) {
    // First frame with mean log energy 10 units above the first frame's.
    double base = 0.0;
    for (int k = 0; k < f.num_bins; ++k) base += f.at(0, k);
    base /= f.num_bins;
    for (int t = 0; t < f.num_frames; ++t) {
      double e = 0.0;
      for (int k = 0; k < f.num_bins; ++k) e += f.at(t, k);
      e /= f.num_bins;
      if (e > base + 10.0) return t;
    }
    return -1;
  };
  int tc = onset_frame(fc), td = onset_frame(fd);
  REQUIRE(tc > 0);
  REQUIRE(td > 0);
  CHECK(std::abs(tc - td) <= 1);
}

// ---- Synthetic corpus ----

TEST_CASE("corpus labels cover only the configured classes") {
  std::string dir = temp_dir("synth_labels");
  synth::CorpusParams params;
  params.train_utts = 4;
  params.dev_utts = 2;
  params.test_utts = 2;
  params.frames_per_utt = 80;
  params.n_classes = 5;
  synth::Corpus corpus = synth::synth_corpus(params, 9, dir);
  int seen_max = -1;
  for (const Manifest *m : {&corpus.train, &corpus.dev, &corpus.test}) {
    for (const auto &e : m->entries) {
      auto labels = read_labels(e.labels, e.id);
      REQUIRE(!labels.empty());
      for (int l : labels) {
        CHECK(l >= 0);
        CHECK(l < 5);
        seen_max = std::max(seen_max, l);
      }
      // Frame count promised by the label file matches the audio length.
      AudioClip clip = read_wav(e.audio);
      LogMelConfig cfg;
      CHECK(static_cast<int>(labels.size()) ==
            num_frames(static_cast<int>(clip.samples.size()), cfg.window,
                       cfg.hop));
    }
  }
  CHECK(seen_max == 4);
}

TEST_CASE("unit classes are separable in log-mel space") {
  // Average spectra of frames from different unit classes must peak on
  // different mel filters for at least most class pairs.
  std::string dir = temp_dir("synth_sep");
  synth::CorpusParams params;
  params.train_utts = 6;
  params.dev_utts = 1;
  params.test_utts = 1;
  params.frames_per_utt = 200;
  params.n_classes = 4;
  synth::Corpus corpus = synth::synth_corpus(params, 13, dir);
  LogMelConfig cfg;
  std::vector<std::vector<double>> mean_spec(
      params.n_classes, std::vector<double>(cfg.n_mels, 0.0));
  std::vector<int> count(params.n_classes, 0);
  for (const auto &e : corpus.train.entries) {
    AudioClip clip = read_wav(e.audio);
    clip.id = e.id;
    FeatureMatrix f = logmel(clip, cfg);
    auto labels = read_labels(e.labels, e.id);
    for (int t = 0; t < f.num_frames; ++t) {
      int l = labels[t];
      for (int k = 0; k < cfg.n_mels; ++k) mean_spec[l][k] += f.at(t, k);
      ++count[l];
    }
  }
  std::vector<int> argmax(params.n_classes);
  for (int c = 0; c < params.n_classes; ++c) {
    REQUIRE(count[c] > 0);
    int best = 0;
    for (int k = 1; k < cfg.n_mels; ++k)
      if (mean_spec[c][k] > mean_spec[c][best]) best = k;
    argmax[c] = best;
  }
  for (int a = 0; a < params.n_classes; ++a)
    for (int b = a + 1; b < params.n_classes; ++b)
      CHECK(argmax[a] != argmax[b]);
}

TEST_CASE("same seed gives a byte-identical corpus") {
  std::string d1 = temp_dir("synth_det1");
  std::string d2 = temp_dir("synth_det2");
  synth::CorpusParams params;
  params.train_utts = 2;
  params.dev_utts = 1;
  params.test_utts = 1;
  params.frames_per_utt = 50;
  params.n_classes = 3;
  synth::Corpus c1 = synth::synth_corpus(params, 21, d1);
  synth::Corpus c2 = synth::synth_corpus(params, 21, d2);
  for (size_t i = 0; i < c1.train.entries.size(); ++i) {
    CHECK(slurp(c1.train.entries[i].audio) == slurp(c2.train.entries[i].audio));
    CHECK(slurp(c1.train.entries[i].labels) ==
          slurp(c2.train.entries[i].labels));
  }
}

TEST_CASE("a corpus needs at least two label classes") {
  std::string dir = temp_dir("synth_bad");
  synth::CorpusParams params;
  params.n_classes = 1;
  CHECK_THROWS_AS(synth::synth_corpus(params, 1, dir), UsageError);
}
