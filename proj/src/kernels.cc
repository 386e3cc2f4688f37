// src/kernels.cc

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

#include "reverbkit/kernels.h"

namespace reverbkit {
namespace kernels {

namespace {

// One row of the output; identical code drives the parallel and the serial
// entry points so the two stay bit-identical.
template <class T>
inline void matmul_row(const T *a, const T *b, T *c, int i, int k, int n,
                       int m, bool trans_a, bool trans_b, bool accumulate) {
  T *crow = c + static_cast<long>(i) * n;
  if (!accumulate) {
    for (int j = 0; j < n; ++j) crow[j] = T(0);
  }
  if (!trans_b) {
    // c[i][j] += a'[i][p] * b[p][j]; j innermost vectorizes.
    for (int p = 0; p < k; ++p) {
      T av = trans_a ? a[static_cast<long>(p) * m + i]
                     : a[static_cast<long>(i) * k + p];
      const T *brow = b + static_cast<long>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  } else {
    // c[i][j] += a'[i][p] * b[j][p]; contiguous dot products.
    for (int j = 0; j < n; ++j) {
      const T *brow = b + static_cast<long>(j) * k;
      T acc = T(0);
      for (int p = 0; p < k; ++p) {
        T av = trans_a ? a[static_cast<long>(p) * m + i]
                       : a[static_cast<long>(i) * k + p];
        acc += av * brow[p];
      }
      crow[j] += acc;
    }
  }
}

}  // namespace

template <class T>
void matmul(const T *a, const T *b, T *c, int m, int k, int n,
            bool trans_a, bool trans_b, bool accumulate) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    matmul_row(a, b, c, i, k, n, m, trans_a, trans_b, accumulate);
  }
}

template <class T>
void matmul_serial(const T *a, const T *b, T *c, int m, int k, int n,
                   bool trans_a, bool trans_b, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    matmul_row(a, b, c, i, k, n, m, trans_a, trans_b, accumulate);
  }
}

template <class T>
void col_sum(const T *x, T *out, int m, int n, bool accumulate) {
  if (!accumulate) {
    for (int j = 0; j < n; ++j) out[j] = T(0);
  }
  for (int i = 0; i < m; ++i) {
    const T *row = x + static_cast<long>(i) * n;
    for (int j = 0; j < n; ++j) out[j] += row[j];
  }
}

template void matmul<float>(const float *, const float *, float *, int, int,
                            int, bool, bool, bool);
template void matmul<double>(const double *, const double *, double *, int,
                             int, int, bool, bool, bool);
template void matmul_serial<float>(const float *, const float *, float *, int,
                                   int, int, bool, bool, bool);
template void matmul_serial<double>(const double *, const double *, double *,
                                    int, int, int, bool, bool, bool);
template void col_sum<float>(const float *, float *, int, int, bool);
template void col_sum<double>(const double *, double *, int, int, bool);

}  // namespace kernels
}  // namespace reverbkit
