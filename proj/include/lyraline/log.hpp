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

#ifndef LYRALINE_LOG_HPP
#define LYRALINE_LOG_HPP

#include <string>

namespace lyraline::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

// Active level comes from the LYRALINE_LOG env var; defaults to warn.
Level level();
void set_level(Level lvl);

void write(Level lvl, const std::string& message);

inline void error(const std::string& m) { write(Level::error, m); }
inline void warn(const std::string& m) { write(Level::warn, m); }
inline void info(const std::string& m) { write(Level::info, m); }
inline void debug(const std::string& m) { write(Level::debug, m); }

}  // namespace lyraline::log

#endif  // LYRALINE_LOG_HPP
