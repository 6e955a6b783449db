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

#ifndef LYRALINE_TESTS_HELPERS_HPP
#define LYRALINE_TESTS_HELPERS_HPP

#include <random>
#include <string>
#include <vector>

#include "lyraline/annotations.hpp"
#include "lyraline/matrix.hpp"

namespace test_helpers {

inline lyraline::annotations::AlignedSegment segment(double t0, double t1,
                                                     double f = 440.0,
                                                     const std::string& text = "") {
  lyraline::annotations::AlignedSegment s;
  s.t0 = t0;
  s.t1 = t1;
  s.f_min = f;
  s.f_max = f;
  s.text = text;
  return s;
}

inline lyraline::annotations::GranularityLevel notes_level(
    std::vector<lyraline::annotations::AlignedSegment> segments) {
  lyraline::annotations::GranularityLevel level;
  level.level = lyraline::annotations::Granularity::notes;
  level.segments = std::move(segments);
  return level;
}

inline lyraline::DenseMatrix random_matrix(std::size_t rows, std::size_t cols,
                                           std::mt19937_64& rng, float lo = 0.0f,
                                           float hi = 1.0f) {
  lyraline::DenseMatrix m(rows, cols);
  std::uniform_real_distribution<float> dist(lo, hi);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

}  // namespace test_helpers

#endif  // LYRALINE_TESTS_HELPERS_HPP
