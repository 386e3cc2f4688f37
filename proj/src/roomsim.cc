// src/roomsim.cc

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

#include "reverbkit/roomsim.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "reverbkit/common.h"
#include "reverbkit/wav.h"

namespace reverbkit {

namespace {

constexpr double kWallMargin = 0.1;
constexpr int kOrderCap = 40;
constexpr double kResidualRatio = 1e-4;
constexpr int kSincHalfWidth = 8;

void check_spec(const RoomSpec &spec) {
  for (int i = 0; i < 3; ++i) {
    if (spec.dims[i] <= 0.0)
      throw UsageError("image_method: non-positive room dimension");
    if (spec.source[i] <= 0.0 || spec.source[i] >= spec.dims[i] ||
        spec.mic[i] <= 0.0 || spec.mic[i] >= spec.dims[i])
      throw UsageError("image_method: source/mic outside the room interior");
  }
  if (spec.reflection < 0.0 || spec.reflection >= 1.0)
    throw UsageError("image_method: reflection coefficient must be in [0, 1)");
  if (spec.source == spec.mic)
    throw UsageError("image_method: source coincides with microphone");
}

double direct_distance(const RoomSpec &spec) {
  double dx = spec.source[0] - spec.mic[0];
  double dy = spec.source[1] - spec.mic[1];
  double dz = spec.source[2] - spec.mic[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Contributions of one mx slice of the L1 image ball, accumulated into taps.
// Enumeration order within the slice is fixed (my, mz, q, j, k), so slice
// buffers summed in mx order give thread-count-independent results.
void accumulate_slice(const RoomSpec &spec, int mx, int max_order, double fs,
                      double duration_s, bool fractional_delay,
                      std::vector<double> *taps) {
  const double beta = spec.reflection;
  const double c = spec.speed_of_sound;
  const int len = static_cast<int>(taps->size());
  const int rem_x = max_order - std::abs(mx);
  for (int my = -rem_x; my <= rem_x; ++my) {
    const int rem_y = rem_x - std::abs(my);
    for (int mz = -rem_y; mz <= rem_y; ++mz) {
      for (int q = 0; q <= 1; ++q) {
        for (int j = 0; j <= 1; ++j) {
          for (int k = 0; k <= 1; ++k) {
            double ix = (1 - 2 * q) * spec.source[0] + 2.0 * mx * spec.dims[0];
            double iy = (1 - 2 * j) * spec.source[1] + 2.0 * my * spec.dims[1];
            double iz = (1 - 2 * k) * spec.source[2] + 2.0 * mz * spec.dims[2];
            double dx = ix - spec.mic[0];
            double dy = iy - spec.mic[1];
            double dz = iz - spec.mic[2];
            double d = std::sqrt(dx * dx + dy * dy + dz * dz);
            double delay = d / c;
            if (delay >= duration_s) continue;
            int power = std::abs(mx - q) + std::abs(mx) + std::abs(my - j) +
                        std::abs(my) + std::abs(mz - k) + std::abs(mz);
            double amp = (power == 0 ? 1.0 : std::pow(beta, power)) /
                         (4.0 * M_PI * d);
            if (amp == 0.0) continue;
            if (!fractional_delay) {
              int idx = static_cast<int>(std::lround(delay * fs));
              if (idx >= 0 && idx < len) (*taps)[idx] += amp;
            } else {
              double center = delay * fs;
              int lo = static_cast<int>(std::ceil(center)) - kSincHalfWidth;
              int hi = static_cast<int>(std::floor(center)) + kSincHalfWidth;
              for (int n = std::max(lo, 0); n <= std::min(hi, len - 1); ++n) {
                double x = n - center;
                double sinc = x == 0.0 ? 1.0 : std::sin(M_PI * x) / (M_PI * x);
                double hann =
                    0.5 * (1.0 + std::cos(M_PI * x / (kSincHalfWidth + 1)));
                (*taps)[n] += amp * sinc * hann;
              }
            }
          }
        }
      }
    }
  }
}

Rir image_method_impl(const RoomSpec &spec, double duration_s, int max_order,
                      bool fractional_delay, bool parallel) {
  check_spec(spec);
  if (max_order < 0) max_order = default_max_order(spec, duration_s);
  const double fs = spec.sample_rate;
  const double d0 = direct_distance(spec);
  if (duration_s <= d0 / spec.speed_of_sound)
    throw UsageError("image_method: duration shorter than the direct path");

  const int len = static_cast<int>(std::ceil(duration_s * fs));
  const int n_slices = 2 * max_order + 1;
  std::vector<std::vector<double>> slices(n_slices);

  if (parallel) {
#pragma omp parallel for schedule(static)
    for (int s = 0; s < n_slices; ++s) {
      slices[s].assign(len, 0.0);
      accumulate_slice(spec, s - max_order, max_order, fs, duration_s,
                       fractional_delay, &slices[s]);
    }
  } else {
    for (int s = 0; s < n_slices; ++s) {
      slices[s].assign(len, 0.0);
      accumulate_slice(spec, s - max_order, max_order, fs, duration_s,
                       fractional_delay, &slices[s]);
    }
  }

  Rir rir;
  rir.taps.assign(len, 0.0);
  for (int s = 0; s < n_slices; ++s) {
    for (int i = 0; i < len; ++i) rir.taps[i] += slices[s][i];
  }
  rir.sample_rate = spec.sample_rate;
  rir.meta = spec;
  rir.max_order = max_order;
  rir.direct_index = static_cast<int>(std::lround(d0 / spec.speed_of_sound * fs));
  for (double t : rir.taps) {
    if (!std::isfinite(t)) throw NumericError("image_method: non-finite tap");
  }
  return rir;
}

}  // namespace

std::vector<RoomSpec> sample_rooms(const std::string &set_id, int n_rooms,
                                   int n_rirs_per_room, uint64_t seed) {
  double lo_xy, hi_xy;
  if (set_id == "S1") {
    lo_xy = 1.0;
    hi_xy = 10.0;
  } else if (set_id == "S2") {
    lo_xy = 10.0;
    hi_xy = 30.0;
  } else if (set_id == "S3") {
    lo_xy = 30.0;
    hi_xy = 50.0;
  } else {
    throw UsageError("sample_rooms: unknown set id " + set_id);
  }
  if (n_rooms < 1 || n_rirs_per_room < 1)
    throw UsageError("sample_rooms: counts must be >= 1");

  std::vector<RoomSpec> specs;
  specs.reserve(static_cast<size_t>(n_rooms) * n_rirs_per_room);
  Rng rng(derive_seed(seed, "rooms:" + set_id));
  for (int r = 0; r < n_rooms; ++r) {
    std::array<double, 3> dims = {rng.uniform(lo_xy, hi_xy),
                                  rng.uniform(lo_xy, hi_xy),
                                  rng.uniform(2.0, 5.0)};
    double beta = rng.uniform(0.2, 0.8);
    for (int i = 0; i < n_rirs_per_room; ++i) {
      RoomSpec spec;
      spec.dims = dims;
      spec.reflection = beta;
      for (int a = 0; a < 3; ++a) {
        spec.source[a] =
            rng.uniform(kWallMargin, spec.dims[a] - kWallMargin);
        spec.mic[a] = rng.uniform(kWallMargin, spec.dims[a] - kWallMargin);
      }
      spec.seed = seed;
      spec.set_id = set_id;
      spec.room_index = r;
      spec.rir_index = i;
      specs.push_back(spec);
    }
  }
  return specs;
}

int default_max_order(const RoomSpec &spec, double duration_s) {
  check_spec(spec);
  double lmin = std::min({spec.dims[0], spec.dims[1], spec.dims[2]});
  int duration_cap = static_cast<int>(std::ceil(
                         duration_s * spec.speed_of_sound / (2.0 * lmin))) +
                     1;
  if (spec.reflection <= 0.0) return 0;
  double d0 = direct_distance(spec);
  for (int n = 1; n <= kOrderCap; ++n) {
    // Order-n images sit at least roughly n * lmin away.
    double dn = std::max(d0, n * lmin);
    if (std::pow(spec.reflection, n) * d0 / dn <= kResidualRatio)
      return std::min(n, duration_cap);
  }
  return std::min(kOrderCap, duration_cap);
}

Rir image_method(const RoomSpec &spec, double duration_s, int max_order,
                 bool fractional_delay) {
  return image_method_impl(spec, duration_s, max_order, fractional_delay,
                           true);
}

Rir image_method_serial(const RoomSpec &spec, double duration_s, int max_order,
                        bool fractional_delay) {
  return image_method_impl(spec, duration_s, max_order, fractional_delay,
                           false);
}

double t60(const Rir &rir) {
  double total = 0.0;
  for (double t : rir.taps) total += t * t;
  if (total <= 0.0) throw UsageError("t60: RIR has no energy");

  // Backward-integrated energy decay, in dB relative to the full energy.
  int n = static_cast<int>(rir.taps.size());
  std::vector<double> edc(n);
  double acc = 0.0;
  for (int i = n - 1; i >= 0; --i) {
    acc += rir.taps[i] * rir.taps[i];
    edc[i] = acc;
  }

  std::vector<std::pair<double, double>> pts;  // (sample index, dB)
  bool reached_bottom = false;
  for (int i = 0; i < n; ++i) {
    if (edc[i] <= 0.0) {
      reached_bottom = true;
      break;
    }
    double db = 10.0 * std::log10(edc[i] / total);
    if (db <= -25.0) reached_bottom = true;
    if (db <= -5.0 && db >= -25.0) pts.emplace_back(i, db);
  }
  if (!reached_bottom || pts.size() < 2)
    throw DataError("t60: decay range not reached within the RIR");

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto &[x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double m = pts.size();
  double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  if (!(slope < 0.0))
    throw DataError("t60: energy decay curve is not decreasing");
  return -60.0 / slope / rir.sample_rate;
}

void save_rir(const Rir &rir, const std::string &path) {
  AudioClip clip;
  clip.samples = rir.taps;
  clip.sample_rate = rir.sample_rate;
  write_wav(clip, path);

  nlohmann::json j;
  j["dims"] = rir.meta.dims;
  j["source"] = rir.meta.source;
  j["mic"] = rir.meta.mic;
  j["reflection"] = rir.meta.reflection;
  j["speed_of_sound"] = rir.meta.speed_of_sound;
  j["sample_rate"] = rir.sample_rate;
  j["seed"] = rir.meta.seed;
  j["set_id"] = rir.meta.set_id;
  j["room_index"] = rir.meta.room_index;
  j["rir_index"] = rir.meta.rir_index;
  j["max_order"] = rir.max_order;
  j["direct_index"] = rir.direct_index;
  std::ofstream os(path + ".json");
  if (!os) throw DataError("save_rir: cannot open " + path + ".json");
  os << j.dump(2) << '\n';
}

Rir load_rir(const std::string &path) {
  AudioClip clip = read_wav(path);
  std::ifstream is(path + ".json");
  if (!is) throw DataError("load_rir: missing sidecar " + path + ".json");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception &e) {
    throw DataError("load_rir: bad sidecar " + path + ".json: " + e.what());
  }
  Rir rir;
  rir.taps = clip.samples;
  rir.sample_rate = clip.sample_rate;
  rir.meta.dims = j.at("dims").get<std::array<double, 3>>();
  rir.meta.source = j.at("source").get<std::array<double, 3>>();
  rir.meta.mic = j.at("mic").get<std::array<double, 3>>();
  rir.meta.reflection = j.at("reflection").get<double>();
  rir.meta.speed_of_sound = j.at("speed_of_sound").get<double>();
  rir.meta.sample_rate = rir.sample_rate;
  rir.meta.seed = j.at("seed").get<uint64_t>();
  rir.meta.set_id = j.at("set_id").get<std::string>();
  rir.meta.room_index = j.at("room_index").get<int>();
  rir.meta.rir_index = j.at("rir_index").get<int>();
  rir.max_order = j.at("max_order").get<int>();
  rir.direct_index = j.at("direct_index").get<int>();
  return rir;
}

}  // namespace reverbkit
