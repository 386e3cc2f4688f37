// src/fft.cc

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

#include "reverbkit/fft.h"

#include <algorithm>
#include <cmath>

#include "reverbkit/common.h"

namespace reverbkit {

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft_inplace(std::complex<double> *x, int n, bool inverse) {
  if (n <= 0 || (n & (n - 1)) != 0)
    throw UsageError("fft: size must be a power of two");
  // Bit-reversal permutation.
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * M_PI / len * (inverse ? 1.0 : -1.0);
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (int j = 0; j < len / 2; ++j) {
        std::complex<double> u = x[i + j];
        std::complex<double> v = x[i + j + len / 2] * w;
        x[i + j] = u + v;
        x[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    for (int i = 0; i < n; ++i) x[i] /= n;
  }
}

std::vector<double> power_spectrum(const double *frame, int len, int n_fft) {
  std::vector<std::complex<double>> buf(n_fft, {0.0, 0.0});
  int copy = std::min(len, n_fft);
  for (int i = 0; i < copy; ++i) buf[i] = frame[i];
  fft_inplace(buf.data(), n_fft, false);
  std::vector<double> out(n_fft / 2 + 1);
  for (int k = 0; k <= n_fft / 2; ++k) out[k] = std::norm(buf[k]);
  return out;
}

std::vector<double> direct_convolve(const std::vector<double> &a,
                                    const std::vector<double> &b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i) {
    double av = a[i];
    if (av == 0.0) continue;
    for (size_t j = 0; j < b.size(); ++j) out[i + j] += av * b[j];
  }
  return out;
}

std::vector<double> fft_convolve(const std::vector<double> &a,
                                 const std::vector<double> &b) {
  if (a.empty() || b.empty()) return {};
  const std::vector<double> &sig = a.size() >= b.size() ? a : b;
  const std::vector<double> &ker = a.size() >= b.size() ? b : a;
  const int nk = static_cast<int>(ker.size());
  const int ns = static_cast<int>(sig.size());
  const int n_fft = next_pow2(std::max(2 * nk, 256));
  const int seg = n_fft - (nk - 1);

  std::vector<std::complex<double>> kf(n_fft, {0.0, 0.0});
  for (int i = 0; i < nk; ++i) kf[i] = ker[i];
  fft_inplace(kf.data(), n_fft, false);

  const int n_blocks = (ns + seg - 1) / seg;
  std::vector<std::vector<double>> block_out(n_blocks);

#pragma omp parallel for schedule(static)
  for (int blk = 0; blk < n_blocks; ++blk) {
    int start = blk * seg;
    int count = std::min(seg, ns - start);
    std::vector<std::complex<double>> buf(n_fft, {0.0, 0.0});
    for (int i = 0; i < count; ++i) buf[i] = sig[start + i];
    fft_inplace(buf.data(), n_fft, false);
    for (int i = 0; i < n_fft; ++i) buf[i] *= kf[i];
    fft_inplace(buf.data(), n_fft, true);
    std::vector<double> &out = block_out[blk];
    out.resize(count + nk - 1);
    for (int i = 0; i < count + nk - 1; ++i) out[i] = buf[i].real();
  }

  std::vector<double> out(ns + nk - 1, 0.0);
  for (int blk = 0; blk < n_blocks; ++blk) {
    int start = blk * seg;
    const std::vector<double> &bo = block_out[blk];
    for (size_t i = 0; i < bo.size(); ++i) out[start + i] += bo[i];
  }
  return out;
}

}  // namespace reverbkit
