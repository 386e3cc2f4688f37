// reverbkit/synth.h

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

#ifndef REVERBKIT_SYNTH_H_
#define REVERBKIT_SYNTH_H_

// Synthetic labeled corpus: each utterance is a sequence of "phone units",
// where unit class k is bandpass-filtered noise at a class-specific center
// frequency mixed with a class-specific tone.  Frame labels are unit ids.
// Everything is deterministic given the seed.

#include <string>
#include <vector>

#include "reverbkit/manifest.h"
#include "reverbkit/wav.h"

namespace reverbkit {
namespace synth {

struct CorpusParams {
  int train_utts = 40;
  int dev_utts = 10;
  int test_utts = 10;
  int frames_per_utt = 500;  // nominal; units round the total up slightly
  int n_classes = 8;
  int min_unit_frames = 10;
  int max_unit_frames = 40;
};

struct Corpus {
  Manifest train, dev, test;
};

// Generates one labeled utterance (samples sized for exactly the returned
// label count under the 400/160 analysis window).
struct SynthUtterance {
  AudioClip clip;
  std::vector<int> labels;
};
SynthUtterance synth_utterance(const CorpusParams &params, uint64_t seed,
                               const std::string &id);

// Writes WAVs under out_dir/audio, labels under out_dir/labels, and the
// three split manifests out_dir/clean_{train,dev,test}.jsonl.
Corpus synth_corpus(const CorpusParams &params, uint64_t seed,
                    const std::string &out_dir);

}  // namespace synth
}  // namespace reverbkit

#endif  // REVERBKIT_SYNTH_H_
