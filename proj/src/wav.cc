// src/wav.cc

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

#include "reverbkit/wav.h"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "reverbkit/common.h"

namespace reverbkit {

namespace {

uint32_t read_u32(std::istream &is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char *>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

uint16_t read_u16(std::istream &is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char *>(b), 2);
  return static_cast<uint16_t>(b[0]) | (static_cast<uint16_t>(b[1]) << 8);
}

void write_u32(std::ostream &os, uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

void write_u16(std::ostream &os, uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  os.write(b, 2);
}

}  // namespace

AudioClip read_wav(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("read_wav: cannot open " + path);

  char tag[5] = {0};
  is.read(tag, 4);
  if (!is || std::strncmp(tag, "RIFF", 4) != 0)
    throw DataError("read_wav: " + path + ": missing RIFF header");
  read_u32(is);  // riff size
  is.read(tag, 4);
  if (!is || std::strncmp(tag, "WAVE", 4) != 0)
    throw DataError("read_wav: " + path + ": missing WAVE tag");

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  AudioClip clip;

  while (is.read(tag, 4)) {
    uint32_t chunk_size = read_u32(is);
    if (!is) throw DataError("read_wav: " + path + ": truncated chunk header");
    if (std::strncmp(tag, "fmt ", 4) == 0) {
      if (chunk_size < 16)
        throw DataError("read_wav: " + path + ": short fmt chunk");
      format = read_u16(is);
      channels = read_u16(is);
      rate = read_u32(is);
      read_u32(is);  // byte rate
      read_u16(is);  // block align
      bits = read_u16(is);
      is.ignore(chunk_size - 16 + (chunk_size & 1));
      have_fmt = true;
    } else if (std::strncmp(tag, "data", 4) == 0) {
      if (!have_fmt)
        throw DataError("read_wav: " + path + ": data chunk before fmt");
      if (channels == 0)
        throw DataError("read_wav: " + path + ": zero channels");
      if (format == 1 && bits == 16) {
        uint32_t n_frames = chunk_size / (2 * channels);
        clip.samples.resize(n_frames);
        std::vector<char> raw(chunk_size);
        is.read(raw.data(), chunk_size);
        if (!is) throw DataError("read_wav: " + path + ": truncated data");
        for (uint32_t i = 0; i < n_frames; ++i) {
          const unsigned char *p =
              reinterpret_cast<const unsigned char *>(raw.data()) +
              static_cast<size_t>(i) * 2 * channels;
          int16_t s = static_cast<int16_t>(p[0] | (p[1] << 8));
          clip.samples[i] = s / 32768.0;
        }
      } else if (format == 3 && bits == 32) {
        uint32_t n_frames = chunk_size / (4 * channels);
        clip.samples.resize(n_frames);
        std::vector<char> raw(chunk_size);
        is.read(raw.data(), chunk_size);
        if (!is) throw DataError("read_wav: " + path + ": truncated data");
        for (uint32_t i = 0; i < n_frames; ++i) {
          float f;
          std::memcpy(&f, raw.data() + static_cast<size_t>(i) * 4 * channels,
                      4);
          clip.samples[i] = f;
        }
      } else {
        throw DataError("read_wav: " + path + ": unsupported codec (format " +
                        std::to_string(format) + ", " + std::to_string(bits) +
                        " bits)");
      }
      clip.sample_rate = static_cast<int>(rate);
      for (double s : clip.samples) {
        if (!std::isfinite(s))
          throw DataError("read_wav: " + path + ": non-finite sample");
      }
      return clip;
    } else {
      is.ignore(chunk_size + (chunk_size & 1));
    }
  }
  throw DataError("read_wav: " + path + ": no data chunk");
}

void write_wav(const AudioClip &clip, const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("write_wav: cannot open " + path);
  uint32_t data_bytes = static_cast<uint32_t>(clip.samples.size() * 4);
  os.write("RIFF", 4);
  write_u32(os, 4 + 8 + 16 + 8 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  write_u32(os, 16);
  write_u16(os, 3);  // IEEE float
  write_u16(os, 1);  // mono
  write_u32(os, static_cast<uint32_t>(clip.sample_rate));
  write_u32(os, static_cast<uint32_t>(clip.sample_rate) * 4);
  write_u16(os, 4);
  write_u16(os, 32);
  os.write("data", 4);
  write_u32(os, data_bytes);
  for (double s : clip.samples) {
    float f = static_cast<float>(s);
    char b[4];
    std::memcpy(b, &f, 4);
    os.write(b, 4);
  }
  if (!os) throw DataError("write_wav: write failed for " + path);
}

}  // namespace reverbkit
