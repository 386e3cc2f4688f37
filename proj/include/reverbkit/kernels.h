// reverbkit/kernels.h

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

#ifndef REVERBKIT_KERNELS_H_
#define REVERBKIT_KERNELS_H_

// Dense kernels used by the training graph.  Each kernel comes in an
// OpenMP-parallel flavor and a serial reference flavor.  Both compute every
// output element with the same accumulation order, so their results are
// bit-identical and independent of the thread count; tests and the
// kernel_bench tool compare the two.

namespace reverbkit {
namespace kernels {

// c (m x n) = op_a(a) * op_b(b) where op is optional transposition.
//   trans_a = false: a is m x k.   trans_a = true: a is k x m.
//   trans_b = false: b is k x n.   trans_b = true: b is n x k.
// If accumulate, adds into c instead of overwriting.
template <class T>
void matmul(const T *a, const T *b, T *c, int m, int k, int n,
            bool trans_a, bool trans_b, bool accumulate);

template <class T>
void matmul_serial(const T *a, const T *b, T *c, int m, int k, int n,
                   bool trans_a, bool trans_b, bool accumulate);

// out[j] += sum over rows of x (m x n); used for bias gradients.
template <class T>
void col_sum(const T *x, T *out, int m, int n, bool accumulate);

}  // namespace kernels
}  // namespace reverbkit

#endif  // REVERBKIT_KERNELS_H_
