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

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "lyraline/global_align.hpp"

using namespace lyraline;
using namespace lyraline::global_align;
using test_helpers::notes_level;
using test_helpers::segment;

namespace {

FrameSeries series(std::vector<float> values, double h = 0.014) {
  FrameSeries out;
  out.grid = TimeGrid{h, values.size()};
  out.values = std::move(values);
  return out;
}

// Direct quadratic-time NCC used as the oracle for the FFT path.
double direct_ncc(const FrameSeries& vas, const FrameSeries& phat, long lag) {
  double num = 0.0, nv = 0.0, np = 0.0;
  for (std::size_t t = 0; t < phat.values.size(); ++t) {
    const long u = static_cast<long>(t) - lag;
    if (u >= 0 && u < static_cast<long>(vas.values.size())) {
      num += static_cast<double>(vas.values[static_cast<std::size_t>(u)]) *
             phat.values[t];
    }
  }
  for (float v : vas.values) nv += static_cast<double>(v) * v;
  for (float v : phat.values) np += static_cast<double>(v) * v;
  return num / (std::sqrt(nv) * std::sqrt(np));
}

}  // namespace

TEST_CASE("ncc of identical binary pulses is one at lag zero") {
  const auto pulse = series({0, 0, 1, 1, 1, 0, 0, 0});
  const auto scan = ncc(pulse, pulse, {-7, 7});
  CHECK(scan.best_lag == 0);
  CHECK(scan.score == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ncc of disjoint supports is zero") {
  const auto a = series({1, 1, 0, 0, 0, 0, 0, 0});
  const auto b = series({0, 0, 0, 0, 0, 0, 1, 1});
  const auto scan = ncc(a, b, {-1, 1});
  CHECK(scan.score == doctest::Approx(0.0));
}

TEST_CASE("ncc recovers a ten-frame shift with score one") {
  std::vector<float> base(64, 0.0f);
  for (std::size_t i = 5; i < 12; ++i) base[i] = 1.0f;
  for (std::size_t i = 20; i < 30; ++i) base[i] = 1.0f;
  std::vector<float> shifted(64, 0.0f);
  for (std::size_t i = 0; i < 54; ++i) shifted[i + 10] = base[i];
  const auto scan = ncc(series(base), series(shifted), {-63, 63});
  CHECK(scan.best_lag == 10);
  CHECK(scan.score == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ncc matches the direct computation at every lag") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<float> dist(0.0f, 1.0f);
  std::vector<float> a(37), b(37);
  for (auto& v : a) v = dist(rng) > 0.6f ? 1.0f : 0.0f;
  for (auto& v : b) v = dist(rng);
  a[3] = 1.0f;  // ensure nonzero
  b[5] = std::max(b[5], 0.5f);
  const auto va = series(a), vb = series(b);

  // Oracle argmax with the same smallest-|lag| tie rule.
  long best_lag = 0;
  double best = -1.0;
  for (long lag = -36; lag <= 36; ++lag) {
    const double s = direct_ncc(va, vb, lag);
    if (s > best + 1e-15 ||
        (std::abs(s - best) <= 1e-15 && std::abs(lag) < std::abs(best_lag))) {
      best = s;
      best_lag = lag;
    }
  }
  const auto scan = ncc(va, vb, {-36, 36});
  CHECK(scan.best_lag == best_lag);
  CHECK(scan.score == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("ncc is invariant under positive scaling of phat") {
  const auto vas = series({0, 1, 1, 0, 0, 1, 0, 0});
  auto phat = series({0.1f, 0.9f, 0.8f, 0.2f, 0.1f, 0.7f, 0.2f, 0.1f});
  const auto before = ncc(vas, phat, {-7, 7});
  for (float& v : phat.values) v *= 3.5f;
  const auto after = ncc(vas, phat, {-7, 7});
  CHECK(after.best_lag == before.best_lag);
  // float32 storage of the scaled series costs a few ulps.
  CHECK(after.score == doctest::Approx(before.score).epsilon(1e-6));
}

TEST_CASE("ncc rejects all-zero inputs") {
  const auto zeros = series(std::vector<float>(16, 0.0f));
  const auto pulse = series({0, 1, 0});
  CHECK_THROWS_AS(ncc(zeros, pulse, {-3, 3}), DegenerateInputError);
  CHECK_THROWS_AS(ncc(pulse, zeros, {-3, 3}), DegenerateInputError);
}

TEST_CASE("align_global recovers an injected offset and frame rate") {
  // Notes in raw frame units at nominal fr.
  const double fr = 43.0;
  annotations::GranularityLevel raw;
  raw.level = annotations::Granularity::notes;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dur(8.0, 30.0), gap(4.0, 20.0);
  double cursor = 10.0;
  for (int k = 0; k < 60; ++k) {
    const double d = dur(rng);
    raw.segments.push_back(segment(cursor, cursor + d));
    cursor += d + gap(rng);
  }

  const double h = 0.014;
  const double true_fr = fr * 1.02;
  const double true_offset = 3.5;
  annotations::GranularityLevel truth = raw;
  for (auto& s : truth.segments) {
    s.t0 = true_offset + s.t0 / true_fr;
    s.t1 = true_offset + s.t1 / true_fr;
  }
  const double total = truth.segments.back().t1 + 5.0;
  TimeGrid grid{h, static_cast<std::size_t>(total / h)};
  const FrameSeries phat = annotations::rasterize_vas(truth, grid);

  GlobalAlignParams params;
  params.fr_nominal = fr;
  const NccResult result = align_global(raw, phat, params);
  CHECK(result.accepted);
  CHECK(std::abs(result.best_offset - true_offset) <= h);
  const double step = 2.0 * fr * params.alpha_fraction / (params.fr_grid_steps - 1);
  CHECK(std::abs(result.best_fr - true_fr) <= step);

  // The reported score is the NCC recomputed at the returned pair.
  annotations::GranularityLevel at_best = raw;
  for (auto& s : at_best.segments) {
    s.t0 = s.t0 / result.best_fr;
    s.t1 = s.t1 / result.best_fr;
  }
  const FrameSeries vas = annotations::rasterize_vas(at_best, grid);
  const double recomputed =
      direct_ncc(vas, phat, std::lround(result.best_offset / h));
  CHECK(result.score == doctest::Approx(recomputed).epsilon(1e-9));
}

TEST_CASE("align_global acceptance follows t_corr") {
  annotations::GranularityLevel raw;
  raw.level = annotations::Granularity::notes;
  raw.segments = {segment(0.0, 43.0), segment(86.0, 129.0)};  // raw frames, fr 43
  // phat only covers half of the annotated activity: score ~ 1/sqrt(2) = 0.707.
  std::vector<float> values(300, 0.0f);
  for (std::size_t i = 0; i < 72; ++i) values[i] = 1.0f;
  const FrameSeries phat = series(std::move(values));
  GlobalAlignParams params;
  params.fr_nominal = 43.0;
  params.fr_grid_steps = 1;
  params.alpha_fraction = 0.01;
  const NccResult result = align_global(raw, phat, params);
  CHECK(result.score < 0.8);
  CHECK_FALSE(result.accepted);
  GlobalAlignParams lax = params;
  lax.t_corr = 0.5;
  CHECK(align_global(raw, phat, lax).accepted);
}

TEST_CASE("select_candidate picks the argmax above threshold") {
  std::vector<float> proto(40, 0.0f);
  for (std::size_t i = 10; i < 20; ++i) proto[i] = 1.0f;
  const auto vas = series(proto);

  std::vector<FrameSeries> candidates;
  candidates.push_back(series(std::vector<float>(40, 0.02f)));  // weak match
  candidates.push_back(vas);                                    // exact
  std::vector<float> half(40, 0.0f);
  for (std::size_t i = 10; i < 15; ++i) half[i] = 1.0f;
  for (std::size_t i = 30; i < 35; ++i) half[i] = 1.0f;
  candidates.push_back(series(half));

  GlobalAlignParams params;
  params.fr_nominal = 43.0;
  const auto selection = select_candidate(vas, candidates, params);
  REQUIRE(selection.index.has_value());
  CHECK(*selection.index == 1);
  CHECK(selection.scores.size() == 3);
}

TEST_CASE("select_candidate returns none when every score is below t_corr") {
  std::vector<float> proto(40, 0.0f);
  for (std::size_t i = 0; i < 8; ++i) proto[i] = 1.0f;
  const auto vas = series(proto);
  std::vector<float> off(40, 0.0f);
  off[20] = 1.0f;
  std::vector<FrameSeries> candidates{series(off)};
  GlobalAlignParams params;
  params.fr_nominal = 43.0;
  const auto selection = select_candidate(vas, candidates, params);
  CHECK_FALSE(selection.index.has_value());
}

TEST_CASE("select_candidate breaks exact ties toward the lowest index") {
  const auto vas = series({0, 1, 1, 0});
  std::vector<FrameSeries> candidates{vas, vas};
  GlobalAlignParams params;
  params.fr_nominal = 43.0;
  const auto selection = select_candidate(vas, candidates, params);
  REQUIRE(selection.index.has_value());
  CHECK(*selection.index == 0);
}

namespace {

annotations::SongAnnotations three_paragraph_song() {
  using namespace lyraline::annotations;
  SongAnnotations song;
  GranularityLevel notes, paragraphs;
  notes.level = Granularity::notes;
  paragraphs.level = Granularity::paragraphs;
  double t = 2.0;
  for (int p = 0; p < 3; ++p) {
    const double start = t;
    for (int k = 0; k < 5; ++k) {
      auto note = segment(t, t + 0.4);
      note.parent_index = 0;  // note -> word links unused here
      notes.segments.push_back(note);
      t += 0.7;
    }
    paragraphs.segments.push_back(segment(start, t - 0.3));
    t += 6.0;  // inter-paragraph gap
  }
  song.levels[Granularity::notes] = notes;
  song.levels[Granularity::paragraphs] = paragraphs;
  return song;
}

}  // namespace

TEST_CASE("align_paragraph_local moves only the delayed paragraph") {
  using namespace lyraline::annotations;
  SongAnnotations song = three_paragraph_song();
  // Ground truth: paragraph 1 actually happens 0.5 s later than annotated.
  SongAnnotations shifted = song;
  const auto members = [&](std::size_t p) {
    std::vector<std::size_t> out;
    const auto& pars = song.levels.at(Granularity::paragraphs).segments;
    const auto& notes = song.levels.at(Granularity::notes).segments;
    for (std::size_t i = 0; i < notes.size(); ++i) {
      if (notes[i].t0 >= pars[p].t0 - 1e-9 && notes[i].t1 <= pars[p].t1 + 1e-9) {
        out.push_back(i);
      }
    }
    return out;
  };
  for (std::size_t i : members(1)) {
    shifted.levels[Granularity::notes].segments[i].t0 += 0.5;
    shifted.levels[Granularity::notes].segments[i].t1 += 0.5;
  }
  const double h = 0.014;
  const double total = 40.0;
  TimeGrid grid{h, static_cast<std::size_t>(total / h)};
  const FrameSeries phat =
      annotations::rasterize_vas(shifted.levels[Granularity::notes], grid);

  GlobalAlignParams params;
  params.fr_nominal = 43.0;
  const auto result = align_paragraph_local(song, phat, params);
  REQUIRE(result.corrections.size() == 3);
  CHECK(std::abs(result.corrections[0].offset_seconds) <= h);
  CHECK(result.corrections[1].applied);
  CHECK(result.corrections[1].offset_seconds == doctest::Approx(0.5).epsilon(0.05));
  CHECK(std::abs(result.corrections[2].offset_seconds) <= h);

  // Ordering preserved in the corrected song.
  const auto violations = validate(result.corrected);
  for (const auto& v : violations) CHECK(v.rule != "non-overlap");
}

TEST_CASE("align_paragraph_local keeps exact paragraphs untouched") {
  using namespace lyraline::annotations;
  SongAnnotations song = three_paragraph_song();
  const double h = 0.014;
  TimeGrid grid{h, static_cast<std::size_t>(40.0 / h)};
  const FrameSeries phat =
      annotations::rasterize_vas(song.levels[Granularity::notes], grid);
  GlobalAlignParams params;
  params.fr_nominal = 43.0;
  const auto result = align_paragraph_local(song, phat, params);
  for (const auto& c : result.corrections) {
    CHECK(std::abs(c.offset_seconds) <= h);
  }
}

TEST_CASE("align_paragraph_local rejects corrections that would overlap") {
  using namespace lyraline::annotations;
  SongAnnotations song;
  GranularityLevel notes, paragraphs;
  notes.level = Granularity::notes;
  paragraphs.level = Granularity::paragraphs;
  // Two abutting paragraphs with no slack.
  notes.segments = {segment(1.0, 2.0), segment(2.1, 3.1)};
  paragraphs.segments = {segment(1.0, 2.05), segment(2.06, 3.2)};
  song.levels[Granularity::notes] = notes;
  song.levels[Granularity::paragraphs] = paragraphs;

  // phat pushes paragraph 0 one second later, straight into paragraph 1.
  GranularityLevel moved = notes;
  moved.segments[0].t0 += 1.0;
  moved.segments[0].t1 += 1.0;
  TimeGrid grid{0.014, 600};
  FrameSeries phat = annotations::rasterize_vas(moved, grid);
  GlobalAlignParams params;
  params.fr_nominal = 43.0;
  const auto result = align_paragraph_local(song, phat, params);
  REQUIRE(result.corrections.size() == 2);
  CHECK_FALSE(result.corrections[0].applied);
  CHECK(result.corrected.levels.at(Granularity::paragraphs).segments[0].t0 ==
        doctest::Approx(1.0));
}

namespace {

std::vector<double> semitone_bins(int count) {
  std::vector<double> bins(count);
  for (int b = 0; b < count; ++b) bins[b] = 32.70 * std::exp2(b / 12.0);
  return bins;
}

}  // namespace

TEST_CASE("frequency_correlation finds zero shift for exact salience") {
  const auto bins = semitone_bins(72);
  TimeGrid grid{0.058, 100};
  annotations::GranularityLevel notes;
  notes.level = annotations::Granularity::notes;
  notes.segments = {segment(0.5, 1.5, bins[30]), segment(2.0, 3.0, bins[37]),
                    segment(3.5, 4.5, bins[25])};
  const auto yhat = annotations::note_matrix(notes, grid, bins);
  DenseMatrix salience(grid.n_frames, bins.size(), 0.0f);
  for (std::size_t i = 0; i < salience.rows(); ++i) {
    for (std::size_t j = 0; j < salience.cols(); ++j) {
      salience.at(i, j) = yhat.matrix.at(i, j);
    }
  }
  const auto result = frequency_correlation(notes, salience, grid, bins);
  CHECK(result.best_shift == 0);
}

TEST_CASE("frequency_correlation undoes an annotation transposition") {
  const auto bins = semitone_bins(72);
  TimeGrid grid{0.058, 100};
  annotations::GranularityLevel truth;
  truth.level = annotations::Granularity::notes;
  truth.segments = {segment(0.5, 1.5, bins[30]), segment(2.0, 3.0, bins[37]),
                    segment(3.5, 4.5, bins[25])};
  const auto yhat = annotations::note_matrix(truth, grid, bins);
  DenseMatrix salience(grid.n_frames, bins.size(), 0.0f);
  for (std::size_t i = 0; i < salience.rows(); ++i) {
    for (std::size_t j = 0; j < salience.cols(); ++j) {
      salience.at(i, j) = yhat.matrix.at(i, j);
    }
  }
  const auto transposed = annotations::transpose_frequency(truth, 5);
  const auto result = frequency_correlation(transposed, salience, grid, bins);
  CHECK(result.best_shift == -5);

  // Brute-force oracle over all shifts.
  const auto shifted_yhat = annotations::note_matrix(transposed, grid, bins);
  double best_energy = -1.0;
  int best_shift = 0;
  for (int s = -71; s <= 71; ++s) {
    double e = 0.0;
    for (std::size_t i = 0; i < grid.n_frames; ++i) {
      for (std::size_t j = 0; j < bins.size(); ++j) {
        const long jj = static_cast<long>(j) + s;
        if (shifted_yhat.matrix.at(i, j) != 0.0f && jj >= 0 &&
            jj < static_cast<long>(bins.size())) {
          e += salience.at(i, static_cast<std::size_t>(jj));
        }
      }
    }
    if (e > best_energy + 1e-12 ||
        (std::abs(e - best_energy) <= 1e-12 && std::abs(s) < std::abs(best_shift))) {
      best_energy = e;
      best_shift = s;
    }
  }
  CHECK(result.best_shift == best_shift);
  CHECK(result.energy == doctest::Approx(best_energy));
}

TEST_CASE("frequency_correlation ties on uniform salience resolve to zero shift") {
  const auto bins = semitone_bins(24);
  TimeGrid grid{0.058, 20};
  annotations::GranularityLevel notes;
  notes.level = annotations::Granularity::notes;
  notes.segments = {segment(0.1, 0.9, bins[12])};
  DenseMatrix salience(grid.n_frames, bins.size(), 0.25f);
  const auto result = frequency_correlation(notes, salience, grid, bins);
  CHECK(result.best_shift == 0);
}

TEST_CASE("detect_vocal_tracks applies the two-percent tolerance") {
  const std::vector<double> means{0.9, 0.1, 0.89};
  const auto vocal = detect_vocal_tracks(means);
  CHECK(vocal == std::set<std::size_t>{0, 2});
  CHECK(detect_vocal_tracks(std::vector<double>{0.42}) == std::set<std::size_t>{0});
  CHECK(detect_vocal_tracks(std::vector<double>{0.5, 0.5}) ==
        std::set<std::size_t>{0, 1});
}
