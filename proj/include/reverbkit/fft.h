// reverbkit/fft.h

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

#ifndef REVERBKIT_FFT_H_
#define REVERBKIT_FFT_H_

#include <complex>
#include <vector>

namespace reverbkit {

int next_pow2(int n);

// Iterative radix-2 complex FFT; n must be a power of two.  The inverse
// transform includes the 1/n factor.
void fft_inplace(std::complex<double> *x, int n, bool inverse);

// |X_k|^2 for k = 0..n_fft/2 of the frame zero-padded to n_fft samples.
std::vector<double> power_spectrum(const double *frame, int len, int n_fft);

// Full linear convolution, length a.size() + b.size() - 1.
// fft_convolve runs FFT overlap-add with OpenMP over blocks; block outputs
// are summed serially in block order so results do not depend on the thread
// count.  direct_convolve is the serial time-domain reference.
std::vector<double> fft_convolve(const std::vector<double> &a,
                                 const std::vector<double> &b);
std::vector<double> direct_convolve(const std::vector<double> &a,
                                    const std::vector<double> &b);

}  // namespace reverbkit

#endif  // REVERBKIT_FFT_H_
