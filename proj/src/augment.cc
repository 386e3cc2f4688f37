// src/augment.cc

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

#include "reverbkit/augment.h"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "reverbkit/common.h"
#include "reverbkit/fft.h"

namespace reverbkit {

namespace {

double peak(const std::vector<double> &v) {
  double p = 0.0;
  for (double x : v) p = std::max(p, std::abs(x));
  return p;
}

int count_nonzero(const std::vector<double> &v) {
  int n = 0;
  for (double x : v)
    if (x != 0.0) ++n;
  return n;
}

}  // namespace

AudioClip convolve(const AudioClip &clip, const Rir &rir, bool keep_gain) {
  if (clip.sample_rate != rir.sample_rate)
    throw UsageError("convolve: sample rate mismatch (" +
                     std::to_string(clip.sample_rate) + " vs " +
                     std::to_string(rir.sample_rate) + ")");
  if (rir.taps.empty()) throw UsageError("convolve: empty RIR");

  // Sparse RIRs convolve exactly in the time domain; dense ones go through
  // the FFT overlap-add path.
  std::vector<double> full = count_nonzero(rir.taps) <= 8
                                 ? direct_convolve(clip.samples, rir.taps)
                                 : fft_convolve(clip.samples, rir.taps);

  int direct = rir.direct_index;
  if (direct < 0) {
    direct = static_cast<int>(
        std::max_element(rir.taps.begin(), rir.taps.end(),
                         [](double a, double b) {
                           return std::abs(a) < std::abs(b);
                         }) -
        rir.taps.begin());
  }

  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.id = clip.id;
  out.samples.resize(clip.samples.size());
  for (size_t i = 0; i < out.samples.size(); ++i) {
    size_t j = i + direct;
    out.samples[i] = j < full.size() ? full[j] : 0.0;
  }

  if (!keep_gain) {
    double in_peak = peak(clip.samples);
    double out_peak = peak(out.samples);
    if (out_peak > 0.0 && in_peak > 0.0) {
      double scale = in_peak / out_peak;
      if (scale != 1.0) {
        for (double &s : out.samples) s *= scale;
      }
    }
  }
  return out;
}

AudioClip add_noise(const AudioClip &clip, double snr_db, uint64_t seed) {
  if (!std::isfinite(snr_db)) throw UsageError("add_noise: non-finite SNR");
  double power = 0.0;
  for (double s : clip.samples) power += s * s;
  power /= std::max<size_t>(clip.samples.size(), 1);
  double noise_power = power * std::pow(10.0, -snr_db / 10.0);
  double sigma = std::sqrt(noise_power);
  Rng rng(seed);
  AudioClip out = clip;
  for (double &s : out.samples) s += sigma * rng.gaussian();
  return out;
}

AudioClip apply_gain_db(const AudioClip &clip, double gain_db) {
  double scale = std::pow(10.0, gain_db / 20.0);
  AudioClip out = clip;
  for (double &s : out.samples) s *= scale;
  return out;
}

Manifest generate(const Manifest &manifest, const CorruptionSpec &spec,
                  const std::string &out_dir) {
  std::filesystem::create_directories(out_dir);

  std::vector<Rir> pool;
  pool.reserve(spec.rir_pool.size());
  for (const std::string &path : spec.rir_pool) pool.push_back(load_rir(path));

  int n = static_cast<int>(manifest.entries.size());
  std::vector<ManifestEntry> out_entries(n);
  std::vector<std::string> errors(n);

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const ManifestEntry &e = manifest.entries[i];
    try {
      Rng rng(derive_seed(spec.seed, e.id));
      AudioClip clip = read_wav(e.audio);
      clip.id = e.id;
      if (!pool.empty()) {
        const Rir &rir = pool[rng.uniform_int(static_cast<int>(pool.size()))];
        clip = convolve(clip, rir, spec.keep_gain);
      }
      if (spec.gain_db != 0.0) clip = apply_gain_db(clip, spec.gain_db);
      if (spec.snr_db.has_value())
        clip = add_noise(clip, *spec.snr_db, rng.raw());
      std::string out_path =
          (std::filesystem::path(out_dir) / (e.id + ".wav")).string();
      write_wav(clip, out_path);
      out_entries[i] = ManifestEntry{e.id, out_path, spec.domain_tag, e.labels};
    } catch (const std::exception &ex) {
      errors[i] = e.id + std::string(": ") + ex.what();
    }
  }

  for (int i = 0; i < n; ++i) {
    if (!errors[i].empty())
      throw DataError("generate: " + errors[i]);
  }

  Manifest out;
  out.split = manifest.split;
  for (ManifestEntry &e : out_entries) out.add(std::move(e));
  out.sort_and_check();
  return out;
}

}  // namespace reverbkit
