// Copyright 2026 Lyraline Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LYRALINE_FFT_HPP
#define LYRALINE_FFT_HPP

#include <complex>
#include <cstddef>
#include <vector>

namespace lyraline::fft {

// In-place iterative radix-2 transform; size must be a power of two.
void forward(std::vector<std::complex<double>>& x);
void inverse(std::vector<std::complex<double>>& x);

std::size_t next_pow2(std::size_t n);

// Linear cross-correlation r[l] = sum_t x[t] * y[t + l] for
// l in [-(x.size()-1), y.size()-1], returned with index offset x.size()-1.
std::vector<double> cross_correlate(const std::vector<double>& x,
                                    const std::vector<double>& y);

}  // namespace lyraline::fft

#endif  // LYRALINE_FFT_HPP
