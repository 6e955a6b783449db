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

#ifndef LYRALINE_SSM_HPP
#define LYRALINE_SSM_HPP

#include <span>
#include <string>
#include <vector>

#include "lyraline/annotations.hpp"
#include "lyraline/matrix.hpp"

namespace lyraline::ssm {

enum class SsmSource { str, mfcc, chroma, other };

struct Ssm {
  DenseMatrix m;  // k x k, symmetric, unit diagonal, values in [0, 1]
  SsmSource source = SsmSource::other;
};

// Pairwise normalized string-edit similarity over lowercased,
// whitespace-collapsed lines.
Ssm text_ssm(std::span<const std::string> lines);

// Pairwise DTW similarity (1 - cost / path length) between feature segments;
// the diagonal is forced to exactly 1.
Ssm audio_ssm(std::span<const DenseMatrix> segments, SsmSource tag = SsmSource::other,
              int jobs = 1);

// k x k x C channel stack in the given order.
Tensor3 stack_ssms(std::span<const Ssm> ssms);

// Per-line patches of rows i-w .. i+w, zero-padded at the edges; patch i has
// shape (2w+1) x k x C.
std::vector<Tensor3> extract_patches(const Tensor3& stacked, std::size_t context_w);

// Slices a frame-level feature matrix into one segment per line span.
std::vector<DenseMatrix> segment_features(const DenseMatrix& features,
                                          const TimeGrid& grid,
                                          const annotations::GranularityLevel& lines);

}  // namespace lyraline::ssm

#endif  // LYRALINE_SSM_HPP
