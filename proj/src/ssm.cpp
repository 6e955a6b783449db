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

#include "lyraline/ssm.hpp"

#include <algorithm>
#include <cmath>

#include "lyraline/local_align.hpp"
#include "lyraline/parallel.hpp"
#include "lyraline/text.hpp"

namespace lyraline::ssm {

Ssm text_ssm(std::span<const std::string> lines) {
  if (lines.empty()) throw ParameterError("text_ssm: at least one line required");
  const std::size_t k = lines.size();

  std::vector<std::string> normalized(k);
  for (std::size_t i = 0; i < k; ++i) normalized[i] = text::normalize(lines[i]);

  Ssm out;
  out.source = SsmSource::str;
  out.m = DenseMatrix(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    out.m.at(i, i) = 1.0f;
    for (std::size_t j = i + 1; j < k; ++j) {
      const float s =
          static_cast<float>(text::str_similarity(normalized[i], normalized[j]));
      out.m.at(i, j) = s;
      out.m.at(j, i) = s;
    }
  }
  return out;
}

Ssm audio_ssm(std::span<const DenseMatrix> segments, SsmSource tag, int jobs) {
  if (segments.empty()) throw ParameterError("audio_ssm: at least one segment required");
  const std::size_t k = segments.size();
  for (std::size_t i = 0; i < k; ++i) {
    if (segments[i].rows() == 0) {
      throw ParameterError("audio_ssm: segment " + std::to_string(i) + " is empty");
    }
  }

  Ssm out;
  out.source = tag;
  out.m = DenseMatrix(k, k);
  for (std::size_t i = 0; i < k; ++i) out.m.at(i, i) = 1.0f;

  // Upper triangle, mirrored.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) pairs.emplace_back(i, j);
  }
  parallel_for(static_cast<std::size_t>(std::max(jobs, 1)), pairs.size(),
               [&](std::size_t n) {
                 const auto [i, j] = pairs[n];
                 const double s =
                     local_align::dtw(segments[i], segments[j]).similarity;
                 const float clamped = static_cast<float>(std::clamp(s, 0.0, 1.0));
                 out.m.at(i, j) = clamped;
                 out.m.at(j, i) = clamped;
               });
  return out;
}

Tensor3 stack_ssms(std::span<const Ssm> ssms) {
  if (ssms.empty()) throw ParameterError("stack_ssms: at least one SSM required");
  const std::size_t k = ssms[0].m.rows();
  for (const Ssm& s : ssms) {
    if (s.m.rows() != k || s.m.cols() != k) {
      throw ParameterError("stack_ssms: mismatched SSM sizes");
    }
  }
  Tensor3 out(k, k, ssms.size());
  for (std::size_t c = 0; c < ssms.size(); ++c) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) out.at(i, j, c) = ssms[c].m.at(i, j);
    }
  }
  return out;
}

std::vector<Tensor3> extract_patches(const Tensor3& stacked, std::size_t context_w) {
  const std::size_t k = stacked.d0();
  const std::size_t c = stacked.d2();
  std::vector<Tensor3> patches;
  patches.reserve(k);
  for (std::size_t line = 0; line < k; ++line) {
    Tensor3 patch(2 * context_w + 1, k, c, 0.0f);
    for (std::size_t r = 0; r < 2 * context_w + 1; ++r) {
      const long src = static_cast<long>(line) + static_cast<long>(r) -
                       static_cast<long>(context_w);
      if (src < 0 || src >= static_cast<long>(k)) continue;
      for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          patch.at(r, j, ch) = stacked.at(static_cast<std::size_t>(src), j, ch);
        }
      }
    }
    patches.push_back(std::move(patch));
  }
  return patches;
}

std::vector<DenseMatrix> segment_features(const DenseMatrix& features,
                                          const TimeGrid& grid,
                                          const annotations::GranularityLevel& lines) {
  std::vector<DenseMatrix> segments;
  segments.reserve(lines.segments.size());
  for (std::size_t k = 0; k < lines.segments.size(); ++k) {
    const auto& s = lines.segments[k];
    std::size_t begin = grid.n_frames, end = 0;
    for (std::size_t i = 0; i < std::min<std::size_t>(grid.n_frames, features.rows());
         ++i) {
      const double r = grid.time_at(i);
      if (r >= s.t0 && r < s.t1) {
        begin = std::min(begin, i);
        end = std::max(end, i + 1);
      }
    }
    if (begin >= end) {
      throw ParameterError("segment_features: line " + std::to_string(k) +
                           " covers no feature frames");
    }
    DenseMatrix seg(end - begin, features.cols());
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < features.cols(); ++j) {
        seg.at(i - begin, j) = features.at(i, j);
      }
    }
    segments.push_back(std::move(seg));
  }
  return segments;
}

}  // namespace lyraline::ssm
