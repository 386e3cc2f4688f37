// reverbkit/manifest.h

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

#ifndef REVERBKIT_MANIFEST_H_
#define REVERBKIT_MANIFEST_H_

#include <string>
#include <vector>

namespace reverbkit {

// Which experiment split a manifest belongs to.  Training entry points
// refuse manifests tagged Test, so test labels cannot leak into training.
enum class Split { kTrain, kDev, kTest };

struct ManifestEntry {
  std::string id;
  std::string audio;   // wav or feat path depending on the pipeline stage
  std::string domain;  // e.g. "clean", "distant", "clean-r"
  std::string labels;  // label file path; may be empty for unlabeled data
};

// Corpus index; entries are kept sorted by utterance id and ids are unique.
struct Manifest {
  std::vector<ManifestEntry> entries;
  Split split = Split::kTrain;

  void add(ManifestEntry entry);
  void sort_and_check();
  const ManifestEntry &find(const std::string &id) const;
  bool has(const std::string &id) const;
};

// Line-delimited JSON records {"id", "audio", "domain", "labels"}.
void write_manifest(const Manifest &m, const std::string &path);
Manifest read_manifest(const std::string &path, Split split = Split::kTrain);

}  // namespace reverbkit

#endif  // REVERBKIT_MANIFEST_H_
