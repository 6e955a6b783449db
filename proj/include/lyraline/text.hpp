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

#ifndef LYRALINE_TEXT_HPP
#define LYRALINE_TEXT_HPP

#include <cstddef>
#include <string>

namespace lyraline::text {

std::size_t levenshtein(const std::string& a, const std::string& b);

// 1 - levenshtein(a, b) / max(|a|, |b|); both empty -> 1.
double str_similarity(const std::string& a, const std::string& b);

// Lowercase ASCII and collapse whitespace runs to single spaces, trimmed.
std::string normalize(const std::string& s);

// str_similarity on normalized strings.
double normalized_similarity(const std::string& a, const std::string& b);

}  // namespace lyraline::text

#endif  // LYRALINE_TEXT_HPP
