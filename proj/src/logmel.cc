// src/logmel.cc

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

#include "reverbkit/logmel.h"

#include <cmath>

#include "reverbkit/common.h"
#include "reverbkit/fft.h"

namespace reverbkit {

int num_frames(int n_samples, int window, int hop) {
  if (n_samples < window) return 0;
  return 1 + (n_samples - window) / hop;
}

std::vector<double> mel_center_frequencies(const LogMelConfig &config) {
  double mel_lo = hz_to_mel(config.fmin);
  double mel_hi = hz_to_mel(config.fmax);
  std::vector<double> centers(config.n_mels);
  // n_mels + 2 equally spaced mel points; inner points are the centers.
  for (int i = 0; i < config.n_mels; ++i) {
    double mel = mel_lo + (mel_hi - mel_lo) * (i + 1) / (config.n_mels + 1);
    centers[i] = mel_to_hz(mel);
  }
  return centers;
}

std::vector<std::vector<double>> mel_filterbank(const LogMelConfig &config,
                                                int sample_rate) {
  double mel_lo = hz_to_mel(config.fmin);
  double mel_hi = hz_to_mel(config.fmax);
  int n_bins = config.n_fft / 2 + 1;
  std::vector<double> edges(config.n_mels + 2);
  for (int i = 0; i < config.n_mels + 2; ++i) {
    edges[i] =
        mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (config.n_mels + 1));
  }
  std::vector<std::vector<double>> rows(config.n_mels,
                                        std::vector<double>(n_bins, 0.0));
  double bin_hz = static_cast<double>(sample_rate) / config.n_fft;
  for (int m = 0; m < config.n_mels; ++m) {
    double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      double f = k * bin_hz;
      if (f <= left || f >= right) continue;
      rows[m][k] = f <= center ? (f - left) / (center - left)
                               : (right - f) / (right - center);
    }
  }
  return rows;
}

namespace {

void logmel_frame(const AudioClip &clip, const LogMelConfig &config,
                  const std::vector<double> &window,
                  const std::vector<std::vector<double>> &bank, int t,
                  double *out) {
  std::vector<double> frame(config.window);
  const double *src = clip.samples.data() + static_cast<size_t>(t) * config.hop;
  for (int i = 0; i < config.window; ++i) frame[i] = src[i] * window[i];
  std::vector<double> power =
      power_spectrum(frame.data(), config.window, config.n_fft);
  for (size_t m = 0; m < bank.size(); ++m) {
    double e = 0.0;
    const std::vector<double> &row = bank[m];
    for (size_t k = 0; k < row.size(); ++k) e += row[k] * power[k];
    out[m] = std::log(std::max(e, config.floor));
  }
}

FeatureMatrix logmel_impl(const AudioClip &clip, const LogMelConfig &config,
                          bool parallel) {
  if (clip.sample_rate != kSampleRate)
    throw UsageError("logmel: expected 16 kHz input, got " +
                     std::to_string(clip.sample_rate));
  int n = static_cast<int>(clip.samples.size());
  if (n < config.window)
    throw DataError("logmel: clip " + clip.id + " shorter than one window");

  std::vector<double> window(config.window);
  for (int i = 0; i < config.window; ++i) {
    window[i] = 0.54 - 0.46 * std::cos(2.0 * M_PI * i / (config.window - 1));
  }
  std::vector<std::vector<double>> bank =
      mel_filterbank(config, clip.sample_rate);

  FeatureMatrix m;
  m.num_frames = num_frames(n, config.window, config.hop);
  m.num_bins = config.n_mels;
  m.frame_shift = static_cast<double>(config.hop) / clip.sample_rate;
  m.kind = FeatureKind::kLogMel;
  m.source_id = clip.id;
  m.frames.resize(static_cast<size_t>(m.num_frames) * m.num_bins);

  if (parallel) {
#pragma omp parallel for schedule(static)
    for (int t = 0; t < m.num_frames; ++t) {
      logmel_frame(clip, config, window, bank, t, &m.at(t, 0));
    }
  } else {
    for (int t = 0; t < m.num_frames; ++t) {
      logmel_frame(clip, config, window, bank, t, &m.at(t, 0));
    }
  }
  return m;
}

}  // namespace

FeatureMatrix logmel(const AudioClip &clip, const LogMelConfig &config) {
  return logmel_impl(clip, config, true);
}

FeatureMatrix logmel_serial(const AudioClip &clip, const LogMelConfig &config) {
  return logmel_impl(clip, config, false);
}

}  // namespace reverbkit
