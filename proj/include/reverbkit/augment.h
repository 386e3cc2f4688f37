// reverbkit/augment.h

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

#ifndef REVERBKIT_AUGMENT_H_
#define REVERBKIT_AUGMENT_H_

#include <optional>
#include <string>
#include <vector>

#include "reverbkit/manifest.h"
#include "reverbkit/roomsim.h"
#include "reverbkit/wav.h"

namespace reverbkit {

// Per-corpus corruption recipe.  Reverb picks one RIR from the pool per
// utterance; noise and gain are optional extras for channel simulation.
struct CorruptionSpec {
  std::vector<std::string> rir_pool;     // paths of saved RIRs; empty = no reverb
  std::optional<double> snr_db;          // additive white noise, off by default
  double gain_db = 0.0;                  // applied after reverb
  bool keep_gain = false;                // skip peak renormalization
  std::string domain_tag = "clean-r";
  uint64_t seed = 0;
};

// Linear convolution with the RIR, shifted left by the direct-path tap index
// and truncated to the input length, so frame t of the output stays aligned
// with frame t of the clean stream.  By default the output is renormalized
// to the clean clip's peak; keep_gain preserves the raw convolution gain.
AudioClip convolve(const AudioClip &clip, const Rir &rir,
                   bool keep_gain = false);

// White Gaussian noise at the given SNR (dB) relative to the clip's power.
AudioClip add_noise(const AudioClip &clip, double snr_db, uint64_t seed);

AudioClip apply_gain_db(const AudioClip &clip, double gain_db);

// One corrupted clip per manifest entry, written under out_dir with the
// spec's domain tag; label paths point at the clean stream's labels.  The
// output manifest is written only after every utterance succeeded.
Manifest generate(const Manifest &manifest, const CorruptionSpec &spec,
                  const std::string &out_dir);

}  // namespace reverbkit

#endif  // REVERBKIT_AUGMENT_H_
