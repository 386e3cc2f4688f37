// src/checkpoint.cc

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

#include "reverbkit/checkpoint.h"

#include <cmath>
#include <cstring>
#include <fstream>

#include "reverbkit/common.h"

namespace reverbkit {

namespace {

constexpr char kMagic[4] = {'C', 'K', 'P', 'T'};
constexpr uint8_t kVersion = 1;

void put_bytes(std::ostream &os, const void *p, size_t n) {
  os.write(static_cast<const char *>(p), static_cast<std::streamsize>(n));
}

void get_bytes(std::istream &is, void *p, size_t n, const std::string &path) {
  is.read(static_cast<char *>(p), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(is.gcount()) != n)
    throw DataError("truncated checkpoint: " + path);
}

template <class T>
void put_pod(std::ostream &os, T v) {
  put_bytes(os, &v, sizeof(v));
}

template <class T>
T get_pod(std::istream &is, const std::string &path) {
  T v;
  get_bytes(is, &v, sizeof(v), path);
  return v;
}

void put_string(std::ostream &os, const std::string &s) {
  put_pod<uint32_t>(os, static_cast<uint32_t>(s.size()));
  put_bytes(os, s.data(), s.size());
}

std::string get_string(std::istream &is, const std::string &path) {
  uint32_t n = get_pod<uint32_t>(is, path);
  if (n > (1u << 24)) throw DataError("implausible string length: " + path);
  std::string s(n, '\0');
  if (n) get_bytes(is, s.data(), n, path);
  return s;
}

void put_f64_tensor(std::ostream &os, const ad::Tensor<double> &t) {
  put_pod<uint32_t>(os, static_cast<uint32_t>(t.rows));
  put_pod<uint32_t>(os, static_cast<uint32_t>(t.cols));
  put_bytes(os, t.v.data(), t.v.size() * sizeof(double));
}

ad::Tensor<double> get_f64_tensor(std::istream &is, const std::string &path) {
  uint32_t rows = get_pod<uint32_t>(is, path);
  uint32_t cols = get_pod<uint32_t>(is, path);
  ad::Tensor<double> t(static_cast<int>(rows), static_cast<int>(cols));
  get_bytes(is, t.v.data(), t.v.size() * sizeof(double), path);
  return t;
}

}  // namespace

ad::Param<float> *Checkpoint::find(const std::string &name) {
  for (auto &p : params)
    if (p.name == name) return &p;
  return nullptr;
}

const ad::Param<float> *Checkpoint::find(const std::string &name) const {
  for (const auto &p : params)
    if (p.name == name) return &p;
  return nullptr;
}

ad::Param<float> &Checkpoint::require(const std::string &name) {
  ad::Param<float> *p = find(name);
  if (!p) throw DataError("checkpoint missing parameter " + name);
  return *p;
}

void Checkpoint::set_sgd(const optim::Sgd<float> &opt) {
  opt_kind = kOptSgd;
  step_size = opt.step_size();
  clip_norm = opt.clip_norm();
  steps_taken = opt.steps_taken();
  adam_m.clear();
  adam_v.clear();
}

void Checkpoint::set_adam(const optim::Adam<float> &opt) {
  opt_kind = kOptAdam;
  const optim::AdamOptions &o = opt.options();
  step_size = o.step_size;
  clip_norm = o.clip_norm;
  beta1 = o.beta1;
  beta2 = o.beta2;
  eps = o.eps;
  steps_taken = opt.steps_taken();
  adam_m = opt.first_moments();
  adam_v = opt.second_moments();
}

void Checkpoint::restore_sgd(optim::Sgd<float> *opt) const {
  if (opt_kind != kOptSgd)
    throw DataError("checkpoint does not hold sgd optimizer state");
  opt->set_step_size(step_size);
  opt->set_steps_taken(steps_taken);
}

void Checkpoint::restore_adam(optim::Adam<float> *opt) const {
  if (opt_kind != kOptAdam)
    throw DataError("checkpoint does not hold adam optimizer state");
  if (adam_m.size() != opt->params().size())
    throw DataError("optimizer moment count does not match parameter count");
  opt->set_steps_taken(steps_taken);
  opt->first_moments() = adam_m;
  opt->second_moments() = adam_v;
}

void save_checkpoint(const std::string &path, const Checkpoint &ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write checkpoint: " + path);
  put_bytes(os, kMagic, 4);
  put_pod<uint8_t>(os, kVersion);

  put_pod<uint32_t>(os, static_cast<uint32_t>(ckpt.params.size()));
  for (const auto &p : ckpt.params) {
    put_string(os, p.name);
    put_pod<uint32_t>(os, static_cast<uint32_t>(p.value.rows));
    put_pod<uint32_t>(os, static_cast<uint32_t>(p.value.cols));
    put_bytes(os, p.value.v.data(), p.value.v.size() * sizeof(float));
  }

  put_pod<uint8_t>(os, ckpt.opt_kind);
  if (ckpt.opt_kind == kOptSgd) {
    put_pod<double>(os, ckpt.step_size);
    put_pod<double>(os, ckpt.clip_norm);
    put_pod<int64_t>(os, ckpt.steps_taken);
  } else if (ckpt.opt_kind == kOptAdam) {
    put_pod<double>(os, ckpt.step_size);
    put_pod<double>(os, ckpt.beta1);
    put_pod<double>(os, ckpt.beta2);
    put_pod<double>(os, ckpt.eps);
    put_pod<double>(os, ckpt.clip_norm);
    put_pod<int64_t>(os, ckpt.steps_taken);
    put_pod<uint32_t>(os, static_cast<uint32_t>(ckpt.adam_m.size()));
    for (size_t i = 0; i < ckpt.adam_m.size(); ++i) {
      put_f64_tensor(os, ckpt.adam_m[i]);
      put_f64_tensor(os, ckpt.adam_v[i]);
    }
  }

  put_string(os, ckpt.rng_state);
  if (!os) throw DataError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path);
  char magic[4];
  get_bytes(is, magic, 4, path);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("bad checkpoint magic: " + path);
  uint8_t version = get_pod<uint8_t>(is, path);
  if (version != kVersion)
    throw DataError("unsupported checkpoint version: " + path);

  Checkpoint ckpt;
  uint32_t n_params = get_pod<uint32_t>(is, path);
  if (n_params > (1u << 20))
    throw DataError("implausible parameter count: " + path);
  ckpt.params.reserve(n_params);
  for (uint32_t i = 0; i < n_params; ++i) {
    std::string name = get_string(is, path);
    uint32_t rows = get_pod<uint32_t>(is, path);
    uint32_t cols = get_pod<uint32_t>(is, path);
    ad::Tensor<float> val(static_cast<int>(rows), static_cast<int>(cols));
    get_bytes(is, val.v.data(), val.v.size() * sizeof(float), path);
    for (float v : val.v) {
      if (!std::isfinite(v))
        throw DataError("non-finite parameter " + name + " in " + path);
    }
    ckpt.params.emplace_back(std::move(name), std::move(val));
  }

  ckpt.opt_kind = get_pod<uint8_t>(is, path);
  if (ckpt.opt_kind == kOptSgd) {
    ckpt.step_size = get_pod<double>(is, path);
    ckpt.clip_norm = get_pod<double>(is, path);
    ckpt.steps_taken = get_pod<int64_t>(is, path);
  } else if (ckpt.opt_kind == kOptAdam) {
    ckpt.step_size = get_pod<double>(is, path);
    ckpt.beta1 = get_pod<double>(is, path);
    ckpt.beta2 = get_pod<double>(is, path);
    ckpt.eps = get_pod<double>(is, path);
    ckpt.clip_norm = get_pod<double>(is, path);
    ckpt.steps_taken = get_pod<int64_t>(is, path);
    uint32_t n = get_pod<uint32_t>(is, path);
    if (n != n_params)
      throw DataError("optimizer state count mismatch: " + path);
    for (uint32_t i = 0; i < n; ++i) {
      ckpt.adam_m.push_back(get_f64_tensor(is, path));
      ckpt.adam_v.push_back(get_f64_tensor(is, path));
    }
  } else if (ckpt.opt_kind != kOptNone) {
    throw DataError("unknown optimizer kind in " + path);
  }

  ckpt.rng_state = get_string(is, path);
  return ckpt;
}

}  // namespace reverbkit
