// reverbkit/roomsim.h

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

#ifndef REVERBKIT_ROOMSIM_H_
#define REVERBKIT_ROOMSIM_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace reverbkit {

// Rectangular room with one source and one microphone.  A single pressure
// reflection coefficient is shared by all six surfaces; this is recorded in
// the RIR metadata so per-surface variants remain distinguishable later.
struct RoomSpec {
  std::array<double, 3> dims{};    // Lx, Ly, Lz in meters
  std::array<double, 3> source{};  // meters
  std::array<double, 3> mic{};     // meters
  double reflection = 0.0;         // beta in [0, 1)
  double speed_of_sound = 343.0;   // m/s
  int sample_rate = 16000;
  uint64_t seed = 0;
  std::string set_id;
  int room_index = 0;
  int rir_index = 0;
};

struct Rir {
  std::vector<double> taps;
  int sample_rate = 16000;
  RoomSpec meta;
  int max_order = 0;
  int direct_index = -1;  // tap index of the direct path
};

// Room size distributions for the three sampled sets:
//   S1: Lx, Ly ~ U(1, 10),  Lz ~ U(2, 5)
//   S2: Lx, Ly ~ U(10, 30), Lz ~ U(2, 5)
//   S3: Lx, Ly ~ U(30, 50), Lz ~ U(2, 5)
// Each room gets one reflection coefficient ~ U(0.2, 0.8); the source and
// microphone are placed uniformly with a 0.1 m margin from every wall.
std::vector<RoomSpec> sample_rooms(const std::string &set_id, int n_rooms,
                                   int n_rirs_per_room, uint64_t seed);

// Image-source RIR.  max_order bounds |mx| + |my| + |mz|; max_order < 0
// selects the smallest order whose residual image amplitude falls below
// 1e-4 of the direct path, capped at 40.  fractional_delay = false places
// each image on the nearest sample; true spreads it with a Hann-windowed
// sinc over +/- 8 samples.
Rir image_method(const RoomSpec &spec, double duration_s, int max_order,
                 bool fractional_delay = false);

// Serial reference with bit-identical output.
Rir image_method_serial(const RoomSpec &spec, double duration_s, int max_order,
                        bool fractional_delay = false);

int default_max_order(const RoomSpec &spec, double duration_s);

// Reverberation time from the Schroeder energy decay curve: a straight line
// is fit between -5 dB and -25 dB and extrapolated to -60 dB.
double t60(const Rir &rir);

// WAV float32 taps plus a JSON sidecar at path + ".json".
void save_rir(const Rir &rir, const std::string &path);
Rir load_rir(const std::string &path);

}  // namespace reverbkit

#endif  // REVERBKIT_ROOMSIM_H_
