// reverbkit/common.h

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

#ifndef REVERBKIT_COMMON_H_
#define REVERBKIT_COMMON_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace reverbkit {

// Error taxonomy mirrored by the CLI exit codes:
//   UsageError -> 1, DataError -> 2, NumericError -> 3.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string &msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string &msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string &msg) : std::runtime_error(msg) {}
};

// Seedable generator wrapper.  Distribution draws go through the helpers
// below instead of std:: distributions so that sampled values depend only
// on the engine state, not on the standard library version.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t raw() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return (engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
  }

  int uniform_int(int n) {  // uniform in [0, n)
    return static_cast<int>(uniform() * n) % n;
  }

  // Standard normal via Box-Muller.
  double gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  std::mt19937_64 &engine() { return engine_; }

  // Engine state as text; restoring it resumes the exact draw sequence.
  std::string state() const;
  void set_state(const std::string &s);

 private:
  std::mt19937_64 engine_;
};

// Stable sub-seed for per-item streams (global seed + item key).
uint64_t derive_seed(uint64_t seed, const std::string &key);

}  // namespace reverbkit

#endif  // REVERBKIT_COMMON_H_
