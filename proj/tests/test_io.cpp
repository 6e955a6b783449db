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

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "helpers.hpp"
#include "lyraline/dsp.hpp"
#include "lyraline/io.hpp"

using namespace lyraline;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("matrix round-trip is bit-exact") {
  std::mt19937_64 rng(21);
  const DenseMatrix m = test_helpers::random_matrix(3, 4, rng, -10.0f, 10.0f);
  const std::string path = temp_path("lyraline_rt.mmx");
  io::write_matrix(path, m);
  const DenseMatrix back = io::read_matrix(path);
  CHECK(back == m);
  std::remove(path.c_str());
}

TEST_CASE("empty matrix round-trips") {
  const DenseMatrix m(0, 0);
  const std::string path = temp_path("lyraline_empty.mmx");
  io::write_matrix(path, m);
  const DenseMatrix back = io::read_matrix(path);
  CHECK(back.rows() == 0);
  CHECK(back.cols() == 0);
  std::remove(path.c_str());
}

TEST_CASE("csv fallback parses comma-separated rows") {
  const std::string path = temp_path("lyraline_csv.csv");
  io::write_file_bytes(path, "1.0,2.0\n3.0,4.0\n");
  const DenseMatrix m = io::read_matrix(path);
  REQUIRE(m.rows() == 2);
  REQUIRE(m.cols() == 2);
  CHECK(m.at(0, 0) == 1.0f);
  CHECK(m.at(0, 1) == 2.0f);
  CHECK(m.at(1, 0) == 3.0f);
  CHECK(m.at(1, 1) == 4.0f);
  std::remove(path.c_str());
}

TEST_CASE("bad magic raises a format error with a byte offset") {
  const std::string path = temp_path("lyraline_bad.mmx");
  io::write_file_bytes(path, "NOPE\x01\x00\x00\x00\x01\x00\x00\x00");
  CHECK_THROWS_AS(io::read_matrix(path), FormatError);
  try {
    io::read_matrix(path);
  } catch (const FormatError& e) {
    CHECK(e.byte_offset() == 0);
  }
  std::remove(path.c_str());
}

TEST_CASE("truncated payload raises a format error") {
  const std::string path = temp_path("lyraline_trunc.mmx");
  std::string bytes = "MMX1";
  bytes += std::string("\x02\x00\x00\x00\x02\x00\x00\x00", 8);
  bytes += std::string(7, '\0');  // 16 payload bytes expected
  io::write_file_bytes(path, bytes);
  CHECK_THROWS_AS(io::read_matrix(path), FormatError);
  std::remove(path.c_str());
}

TEST_CASE("tensor round-trip is bit-exact") {
  std::mt19937_64 rng(22);
  Tensor3 t(2, 3, 4);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = dist(rng);
  const std::string path = temp_path("lyraline_rt.mmx3");
  io::write_tensor(path, t);
  CHECK(io::read_tensor(path) == t);
  std::remove(path.c_str());
}

TEST_CASE("annotations round-trip through JSON and gzip") {
  using namespace lyraline::annotations;
  SongAnnotations song;
  GranularityLevel notes;
  notes.level = Granularity::notes;
  auto n1 = test_helpers::segment(0.5, 0.75, 440.0, "la");
  n1.parent_index = 0;
  auto n2 = test_helpers::segment(0.8, 1.0, 493.88, "li");
  n2.parent_index = 0;
  notes.segments = {n1, n2};
  song.levels[Granularity::notes] = notes;
  GranularityLevel words;
  words.level = Granularity::words;
  auto w = test_helpers::segment(0.5, 1.0, 440.0, "lali");
  w.phonemes = {"L", "AA"};
  words.segments = {w};
  song.levels[Granularity::words] = words;
  song.metadata["artist"] = "test artist";

  for (const char* name : {"lyraline_ann.json", "lyraline_ann.json.gz"}) {
    const std::string path = temp_path(name);
    io::write_annotations(path, song);
    const SongAnnotations back = io::read_annotations(path);
    REQUIRE(back.levels.count(Granularity::notes) == 1);
    const auto& bn = back.levels.at(Granularity::notes).segments;
    REQUIRE(bn.size() == 2);
    CHECK(bn[0].t0 == doctest::Approx(0.5));
    CHECK(bn[1].f_min == doctest::Approx(493.88));
    CHECK(bn[0].parent_index == 0);
    CHECK(back.levels.at(Granularity::words).segments[0].phonemes.size() == 2);
    CHECK(back.metadata.at("artist") == "test artist");
    std::remove(path.c_str());
  }
}

TEST_CASE("annotation reader names the offending field") {
  const std::string path = temp_path("lyraline_badann.json");
  io::write_file_bytes(path, R"({"annotations": {"notes": [{"freq": [1, 2]}]}})");
  CHECK_THROWS_WITH_AS(io::read_annotations(path), doctest::Contains("time"),
                       SchemaError);
  std::remove(path.c_str());
}

TEST_CASE("gzip round-trip") {
  std::string payload;
  for (int i = 0; i < 1000; ++i) payload += "the quick brown fox ";
  const std::string packed = io::gzip_compress(payload);
  CHECK(packed.size() < payload.size());
  CHECK(io::gzip_decompress(packed) == payload);
}

TEST_CASE("wav round-trip and stereo downmix") {
  dsp::AudioBuffer a;
  a.sample_rate = 8000;
  for (int i = 0; i < 800; ++i) {
    a.samples.push_back(static_cast<float>(0.4 * std::sin(i * 0.05)));
  }
  const std::string path = temp_path("lyraline_mono.wav");
  dsp::write_wav(path, a);
  const dsp::AudioBuffer back = dsp::read_wav(path);
  CHECK(back.sample_rate == 8000);
  REQUIRE(back.samples.size() == a.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(std::abs(back.samples[i] - a.samples[i]) < 1e-4);
  }
  std::remove(path.c_str());
}
