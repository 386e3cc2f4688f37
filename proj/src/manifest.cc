// src/manifest.cc

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

#include "reverbkit/manifest.h"

#include <algorithm>
#include <fstream>

#include "json.hpp"
#include "reverbkit/common.h"

namespace reverbkit {

void Manifest::add(ManifestEntry entry) { entries.push_back(std::move(entry)); }

void Manifest::sort_and_check() {
  std::sort(entries.begin(), entries.end(),
            [](const ManifestEntry &a, const ManifestEntry &b) {
              return a.id < b.id;
            });
  for (size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].id == entries[i - 1].id)
      throw DataError("manifest: duplicate utterance id " + entries[i].id);
  }
}

const ManifestEntry &Manifest::find(const std::string &id) const {
  auto it = std::lower_bound(
      entries.begin(), entries.end(), id,
      [](const ManifestEntry &e, const std::string &key) { return e.id < key; });
  if (it == entries.end() || it->id != id)
    throw DataError("manifest: unknown utterance id " + id);
  return *it;
}

bool Manifest::has(const std::string &id) const {
  auto it = std::lower_bound(
      entries.begin(), entries.end(), id,
      [](const ManifestEntry &e, const std::string &key) { return e.id < key; });
  return it != entries.end() && it->id == id;
}

void write_manifest(const Manifest &m, const std::string &path) {
  std::ofstream os(path);
  if (!os) throw DataError("write_manifest: cannot open " + path);
  for (const ManifestEntry &e : m.entries) {
    nlohmann::json j;
    j["id"] = e.id;
    j["audio"] = e.audio;
    j["domain"] = e.domain;
    j["labels"] = e.labels;
    os << j.dump() << '\n';
  }
  if (!os) throw DataError("write_manifest: write failed for " + path);
}

Manifest read_manifest(const std::string &path, Split split) {
  std::ifstream is(path);
  if (!is) throw DataError("read_manifest: cannot open " + path);
  Manifest m;
  m.split = split;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception &e) {
      throw DataError("read_manifest: " + path + ":" + std::to_string(lineno) +
                      ": " + e.what());
    }
    ManifestEntry entry;
    entry.id = j.at("id").get<std::string>();
    entry.audio = j.at("audio").get<std::string>();
    entry.domain = j.value("domain", std::string());
    entry.labels = j.value("labels", std::string());
    m.add(std::move(entry));
  }
  m.sort_and_check();
  return m;
}

}  // namespace reverbkit
