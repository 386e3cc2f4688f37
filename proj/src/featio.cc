// src/featio.cc

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

#include "reverbkit/featio.h"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "reverbkit/common.h"

namespace reverbkit {

namespace {
std::function<void(const std::string &)> g_label_hook;
}

void set_label_read_hook(std::function<void(const std::string &)> hook) {
  g_label_hook = std::move(hook);
}

void write_feat(const FeatureMatrix &m, const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("write_feat: cannot open " + path);
  os.write("FEAT", 4);
  char version = 1;
  os.write(&version, 1);
  uint32_t t = static_cast<uint32_t>(m.num_frames);
  uint32_t f = static_cast<uint32_t>(m.num_bins);
  char hdr[8] = {
      static_cast<char>(t & 0xff),         static_cast<char>((t >> 8) & 0xff),
      static_cast<char>((t >> 16) & 0xff), static_cast<char>((t >> 24) & 0xff),
      static_cast<char>(f & 0xff),         static_cast<char>((f >> 8) & 0xff),
      static_cast<char>((f >> 16) & 0xff), static_cast<char>((f >> 24) & 0xff)};
  os.write(hdr, 8);
  for (double v : m.frames) {
    float x = static_cast<float>(v);
    char b[4];
    std::memcpy(b, &x, 4);
    os.write(b, 4);
  }
  if (!os) throw DataError("write_feat: write failed for " + path);
}

FeatureMatrix read_feat(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("read_feat: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::strncmp(magic, "FEAT", 4) != 0)
    throw DataError("read_feat: " + path + ": bad magic");
  char version;
  is.read(&version, 1);
  if (!is || version != 1)
    throw DataError("read_feat: " + path + ": unsupported version");
  unsigned char hdr[8];
  is.read(reinterpret_cast<char *>(hdr), 8);
  if (!is) throw DataError("read_feat: " + path + ": truncated header");
  uint32_t t = hdr[0] | (hdr[1] << 8) | (hdr[2] << 16) |
               (static_cast<uint32_t>(hdr[3]) << 24);
  uint32_t f = hdr[4] | (hdr[5] << 8) | (hdr[6] << 16) |
               (static_cast<uint32_t>(hdr[7]) << 24);
  FeatureMatrix m;
  m.num_frames = static_cast<int>(t);
  m.num_bins = static_cast<int>(f);
  m.frames.resize(static_cast<size_t>(t) * f);
  std::vector<char> raw(static_cast<size_t>(t) * f * 4);
  is.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!is) throw DataError("read_feat: " + path + ": truncated payload");
  for (size_t i = 0; i < m.frames.size(); ++i) {
    float x;
    std::memcpy(&x, raw.data() + i * 4, 4);
    if (!std::isfinite(x))
      throw DataError("read_feat: " + path + ": non-finite value");
    m.frames[i] = x;
  }
  return m;
}

void write_labels(const std::string &utt_id, const std::vector<int> &labels,
                  const std::string &path) {
  std::ofstream os(path);
  if (!os) throw DataError("write_labels: cannot open " + path);
  os << utt_id;
  for (int l : labels) os << ' ' << l;
  os << '\n';
  if (!os) throw DataError("write_labels: write failed for " + path);
}

std::vector<int> read_labels(const std::string &path,
                             const std::string &expect_id) {
  if (g_label_hook) g_label_hook(path);
  std::ifstream is(path);
  if (!is) throw DataError("read_labels: cannot open " + path);
  std::string line;
  if (!std::getline(is, line))
    throw DataError("read_labels: " + path + ": empty file");
  std::istringstream ss(line);
  std::string id;
  ss >> id;
  if (!expect_id.empty() && id != expect_id)
    throw DataError("read_labels: " + path + ": utterance id mismatch (got " +
                    id + ", expected " + expect_id + ")");
  std::vector<int> labels;
  int v;
  while (ss >> v) labels.push_back(v);
  return labels;
}

}  // namespace reverbkit
