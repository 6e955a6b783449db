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

#include "lyraline/fft.hpp"

#include <cmath>

#include "lyraline/errors.hpp"

namespace lyraline::fft {

namespace {

constexpr double kPi = 3.14159265358979323846;

void transform(std::vector<std::complex<double>>& x, bool invert) {
  const std::size_t n = x.size();
  if (n == 0) return;
  if ((n & (n - 1)) != 0) {
    throw ParameterError("fft: size must be a power of two, got " + std::to_string(n));
  }

  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = 2.0 * kPi / static_cast<double>(len) * (invert ? 1.0 : -1.0);
    const std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = x[i + k];
        const std::complex<double> v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }

  if (invert) {
    for (auto& value : x) value /= static_cast<double>(n);
  }
}

}  // namespace

void forward(std::vector<std::complex<double>>& x) { transform(x, false); }

void inverse(std::vector<std::complex<double>>& x) { transform(x, true); }

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<double> cross_correlate(const std::vector<double>& x,
                                    const std::vector<double>& y) {
  if (x.empty() || y.empty()) return {};
  const std::size_t out_len = x.size() + y.size() - 1;
  const std::size_t n = next_pow2(out_len);

  std::vector<std::complex<double>> fx(n), fy(n);
  // Correlation as convolution with x reversed.
  for (std::size_t i = 0; i < x.size(); ++i) fx[x.size() - 1 - i] = x[i];
  for (std::size_t i = 0; i < y.size(); ++i) fy[i] = y[i];
  forward(fx);
  forward(fy);
  for (std::size_t i = 0; i < n; ++i) fx[i] *= fy[i];
  inverse(fx);

  std::vector<double> out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) out[i] = fx[i].real();
  return out;
}

}  // namespace lyraline::fft
