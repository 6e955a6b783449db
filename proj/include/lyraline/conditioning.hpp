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

#ifndef LYRALINE_CONDITIONING_HPP
#define LYRALINE_CONDITIONING_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lyraline/matrix.hpp"

namespace lyraline::conditioning {

// Feature maps are W x H x C (time, frequency, channels).
using FeatureMap = Tensor3;

enum class FilmVariant { W_si, W_co, S_fv, S_cs, S_fs, S_rs };
enum class Placement { complete, bottleneck };

const char* variant_name(FilmVariant v);
std::optional<FilmVariant> variant_from_name(const std::string& name);

// Affine conditioning gamma * x + beta. W_si takes scalar gamma/beta
// (spans of length 1); W_co takes per-channel vectors of length C.
FeatureMap film_weak(const FeatureMap& x, std::span<const float> gamma,
                     std::span<const float> beta, FilmVariant variant);

// Per-variant basis tensors. Unused leading dimensions are size 1:
//   S_fv: H x C x P,  S_cs: 1 x C x P,  S_fs: 1 x H x P,  S_rs: 1 x 1 x P.
struct FilmBasis {
  FilmVariant variant = FilmVariant::S_rs;
  Tensor3 gamma;
  Tensor3 beta;
};

// FiLM(x, z) = (gamma x z) . x + (beta x z): the basis is contracted with the
// activation over P, broadcast across the dimensions the variant omits.
FeatureMap film_strong(const FeatureMap& x, const FilmBasis& basis,
                       const DenseMatrix& z_d);

// Max-pools a T x P activation onto target_w contiguous spans whose sizes
// differ by at most one frame (larger spans first).
DenseMatrix map_activation_time(const DenseMatrix& z, std::size_t target_w);

inline constexpr int kEncoderChannels[] = {16, 32, 64, 128, 256, 512};
inline constexpr int kEncoderFreqs[] = {256, 128, 64, 32, 16, 8};

// Added gamma/beta parameter count for a conditioning configuration.
long long count_parameters(FilmVariant variant, Placement placement,
                           std::span<const int> encoder_channels = kEncoderChannels,
                           std::span<const int> encoder_freqs = kEncoderFreqs,
                           int phonemes = 40);

}  // namespace lyraline::conditioning

#endif  // LYRALINE_CONDITIONING_HPP
