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

#include "lyraline/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace lyraline::log {

namespace {

Level parse_env() {
  const char* value = std::getenv("LYRALINE_LOG");
  if (value == nullptr) return Level::warn;
  std::string s(value);
  if (s == "error") return Level::error;
  if (s == "warn") return Level::warn;
  if (s == "info") return Level::info;
  if (s == "debug") return Level::debug;
  return Level::warn;
}

Level g_level = parse_env();
std::mutex g_mutex;

const char* tag(Level lvl) {
  switch (lvl) {
    case Level::error: return "error";
    case Level::warn: return "warn";
    case Level::info: return "info";
    case Level::debug: return "debug";
  }
  return "?";
}

}  // namespace

Level level() { return g_level; }

void set_level(Level lvl) { g_level = lvl; }

void write(Level lvl, const std::string& message) {
  if (static_cast<int>(lvl) > static_cast<int>(g_level)) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << "[lyraline/" << tag(lvl) << "] " << message << "\n";
}

}  // namespace lyraline::log
