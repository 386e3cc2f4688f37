// reverbkit/checkpoint.h

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

#ifndef REVERBKIT_CHECKPOINT_H_
#define REVERBKIT_CHECKPOINT_H_

// Binary checkpoint container "CKPT1": magic, version, named-parameter table
// (float32 payloads), optimizer state, generator state.  Reloading restores
// training bit-exactly: parameters train in float32, optimizer moments are
// stored at their native float64 width, and the generator state string
// resumes the exact draw sequence.  Model-specific hyperparameters live in a
// JSON sidecar written by the owning module.

#include <cstdint>
#include <string>
#include <vector>

#include "reverbkit/autodiff.h"
#include "reverbkit/optim.h"

namespace reverbkit {

enum OptKind : uint8_t { kOptNone = 0, kOptSgd = 1, kOptAdam = 2 };

struct Checkpoint {
  std::vector<ad::Param<float>> params;

  uint8_t opt_kind = kOptNone;
  double step_size = 0.0;
  double clip_norm = 0.0;
  int64_t steps_taken = 0;
  // Adam only.
  double beta1 = 0.0, beta2 = 0.0, eps = 0.0;
  std::vector<ad::Tensor<double>> adam_m, adam_v;

  std::string rng_state;

  ad::Param<float> *find(const std::string &name);
  const ad::Param<float> *find(const std::string &name) const;
  // As find(), but a missing name is a data error.
  ad::Param<float> &require(const std::string &name);

  void set_sgd(const optim::Sgd<float> &opt);
  void set_adam(const optim::Adam<float> &opt);
  // Pushes stored optimizer state into a freshly constructed optimizer whose
  // parameter list matches the checkpoint's parameter order.
  void restore_sgd(optim::Sgd<float> *opt) const;
  void restore_adam(optim::Adam<float> *opt) const;
};

void save_checkpoint(const std::string &path, const Checkpoint &ckpt);
Checkpoint load_checkpoint(const std::string &path);

}  // namespace reverbkit

#endif  // REVERBKIT_CHECKPOINT_H_
