// reverbkit/logmel.h

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

#ifndef REVERBKIT_LOGMEL_H_
#define REVERBKIT_LOGMEL_H_

#include <cmath>
#include <vector>

#include "reverbkit/featio.h"
#include "reverbkit/wav.h"

namespace reverbkit {

// Log Mel filterbank front end.  25 ms Hamming window, 10 ms hop, 512-point
// FFT, 80 triangular filters between 20 Hz and 8 kHz, energy floor before
// the log.  No pre-emphasis and no mean normalization at this layer.
struct LogMelConfig {
  int window = 400;  // samples (25 ms at 16 kHz)
  int hop = 160;     // samples (10 ms)
  int n_fft = 512;
  int n_mels = 80;
  double fmin = 20.0;
  double fmax = 8000.0;
  double floor = 1e-10;
};

inline double hz_to_mel(double hz) {
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}
inline double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

// Number of analysis frames: 1 + floor((n - window) / hop) for n >= window.
int num_frames(int n_samples, int window, int hop);

// Triangular filter rows sampled on the FFT bin grid, n_mels x (n_fft/2 + 1).
std::vector<std::vector<double>> mel_filterbank(const LogMelConfig &config,
                                                int sample_rate);

// Filter center frequencies in Hz (n_mels entries).
std::vector<double> mel_center_frequencies(const LogMelConfig &config);

FeatureMatrix logmel(const AudioClip &clip, const LogMelConfig &config);

// Serial reference; identical output to logmel.
FeatureMatrix logmel_serial(const AudioClip &clip, const LogMelConfig &config);

}  // namespace reverbkit

#endif  // REVERBKIT_LOGMEL_H_
