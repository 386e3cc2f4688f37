// reverbkit/wav.h

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

#ifndef REVERBKIT_WAV_H_
#define REVERBKIT_WAV_H_

#include <string>
#include <vector>

namespace reverbkit {

constexpr int kSampleRate = 16000;  // toolkit-wide

// Mono waveform; amplitudes are dimensionless, nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kSampleRate;
  std::string id;
};

// Reads a RIFF/WAVE file.  Accepts PCM16 and IEEE float32; multi-channel
// input keeps the first channel.  PCM16 samples are scaled by 1/32768.
AudioClip read_wav(const std::string &path);

// Writes a mono IEEE float32 WAV.  write_wav(read_wav(f)) reproduces the
// sample payload of a float32 mono f bit-exactly.
void write_wav(const AudioClip &clip, const std::string &path);

}  // namespace reverbkit

#endif  // REVERBKIT_WAV_H_
