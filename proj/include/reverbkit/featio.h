// reverbkit/featio.h

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

#ifndef REVERBKIT_FEATIO_H_
#define REVERBKIT_FEATIO_H_

#include <functional>
#include <string>
#include <vector>

namespace reverbkit {

enum class FeatureKind { kLogMel, kZ1Mean, kZ1MeanLogvar };

// T x F frame matrix, row-major.
struct FeatureMatrix {
  std::vector<double> frames;
  int num_frames = 0;
  int num_bins = 0;
  double frame_shift = 0.010;  // seconds
  FeatureKind kind = FeatureKind::kLogMel;
  std::string source_id;

  double &at(int t, int f) { return frames[static_cast<size_t>(t) * num_bins + f]; }
  double at(int t, int f) const {
    return frames[static_cast<size_t>(t) * num_bins + f];
  }
  const double *row(int t) const {
    return frames.data() + static_cast<size_t>(t) * num_bins;
  }
};

// FEAT1 container: magic "FEAT", version u8 = 1, u32 T, u32 F, then T*F
// little-endian float32 values in row-major order.
void write_feat(const FeatureMatrix &m, const std::string &path);
FeatureMatrix read_feat(const std::string &path);

// Frame labels, one file per utterance: a single line of
// "<utterance-id> <label> <label> ...".
void write_labels(const std::string &utt_id, const std::vector<int> &labels,
                  const std::string &path);
std::vector<int> read_labels(const std::string &path, const std::string &expect_id);

// Test hook: observes every label path opened by read_labels.
void set_label_read_hook(std::function<void(const std::string &)> hook);

}  // namespace reverbkit

#endif  // REVERBKIT_FEATIO_H_
