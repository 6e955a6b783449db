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
#include <map>
#include <random>
#include <set>

#include "helpers.hpp"
#include "lyraline/annotations.hpp"
#include "lyraline/cleansing.hpp"
#include "lyraline/io.hpp"

using namespace lyraline;
using namespace lyraline::cleansing;
using test_helpers::segment;

namespace {

FrameSeries series_of(std::vector<float> values, double h = 0.0116) {
  FrameSeries out;
  out.grid = TimeGrid{h, values.size()};
  out.values = std::move(values);
  return out;
}

std::vector<double> semitone_bins(int count) {
  std::vector<double> bins(count);
  for (int b = 0; b < count; ++b) bins[b] = 32.70 * std::exp2(b / 12.0);
  return bins;
}

}  // namespace

TEST_CASE("agreement picks the salience under the active bin") {
  DenseMatrix yhat(3, 4, 0.0f), salience(3, 4, 0.0f);
  yhat.at(1, 2) = 1.0f;
  salience.at(1, 2) = 0.7f;
  salience.at(1, 3) = 0.9f;  // not annotated, must not count
  const AgreementScores s = agreement(yhat, salience, 1);
  CHECK(s.kappa_l.values[0] == 0.0f);
  CHECK(s.kappa_l.values[1] == doctest::Approx(0.7f));
  CHECK(s.kappa_l.values[2] == 0.0f);
}

TEST_CASE("agreement moving average of a constant is the constant") {
  DenseMatrix yhat(50, 2, 1.0f), salience(50, 2, 0.6f);
  const AgreementScores s = agreement(yhat, salience, 20);
  for (float v : s.kappa_p.values) CHECK(v == doctest::Approx(0.6f));
}

TEST_CASE("agreement rejects shape mismatches") {
  CHECK_THROWS_AS(agreement(DenseMatrix(3, 4), DenseMatrix(4, 3)), ParameterError);
}

TEST_CASE("select_likely_correct applies the paper thresholds") {
  // Three frames: clear test-set, clear train-set, and a mixed case that
  // satisfies neither (kappa_l in the test range but kappa_p in the train one).
  AgreementScores s;
  s.kappa_l = series_of({0.9995f, 0.95f, 0.9995f});
  s.kappa_p = series_of({0.9f, 0.8f, 0.8f});
  const auto test_set = select_likely_correct(s, Split::test);
  const auto train_set = select_likely_correct(s, Split::train);
  CHECK(test_set == std::vector<std::size_t>{0});
  CHECK(train_set == std::vector<std::size_t>{1});
}

TEST_CASE("train and test selections are disjoint on adversarial grids") {
  // Sweep a dense grid across every threshold boundary.
  std::vector<float> kl, kp;
  for (int i = 0; i <= 40; ++i) {
    for (int j = 0; j <= 40; ++j) {
      kl.push_back(static_cast<float>(0.85 + 0.005 * i));  // 0.85 .. 1.05
      kp.push_back(static_cast<float>(0.60 + 0.008 * j));  // 0.60 .. 0.92
    }
  }
  AgreementScores s;
  s.kappa_l = series_of(kl);
  s.kappa_p = series_of(kp);
  const auto test_set = select_likely_correct(s, Split::test);
  const auto train_set = select_likely_correct(s, Split::train);
  std::set<std::size_t> overlap;
  std::set<std::size_t> test_sorted(test_set.begin(), test_set.end());
  for (std::size_t i : train_set) {
    if (test_sorted.count(i)) overlap.insert(i);
  }
  CHECK(overlap.empty());
}

TEST_CASE("select_silence_correct excludes frames near annotations") {
  const std::size_t t = 600;
  DenseMatrix yhat(t, 4, 0.0f);
  for (std::size_t i = 300; i < 320; ++i) yhat.at(i, 1) = 1.0f;
  std::vector<float> energy(t, -60.0f);  // everything quiet
  const auto selected =
      select_silence_correct(series_of(energy), yhat, 200, -25.0);
  std::set<std::size_t> sel(selected.begin(), selected.end());
  CHECK(sel.count(100) == 1);           // far from the note
  CHECK(sel.count(250) == 0);           // within V/2 = 100 of the note
  CHECK(sel.count(299) == 0);
  CHECK(sel.count(310) == 0);           // inside the note
  CHECK(sel.count(450) == 1);           // clear again past 320 + 100
}

TEST_CASE("select_silence_correct of a fully annotated track is empty") {
  DenseMatrix yhat(100, 4, 0.0f);
  for (std::size_t i = 0; i < 100; ++i) yhat.at(i, 0) = 1.0f;
  std::vector<float> energy(100, -60.0f);
  CHECK(select_silence_correct(series_of(energy), yhat, 200).empty());
}

TEST_CASE("select_silence_correct with V=1 degenerates to the per-frame test") {
  DenseMatrix yhat(5, 2, 0.0f);
  yhat.at(2, 0) = 1.0f;
  std::vector<float> energy{-60.0f, -10.0f, -60.0f, -60.0f, -60.0f};
  const auto selected = select_silence_correct(series_of(energy), yhat, 1);
  CHECK(selected == std::vector<std::size_t>{0, 3, 4});
}

TEST_CASE("deform transpose shifts the support by whole rows") {
  DenseMatrix patch(72, 81, 0.0f);
  for (std::size_t c = 30; c <= 50; ++c) patch.at(40, c) = 1.0f;
  DeformationSpec spec;
  spec.op = DeformOp::transpose;
  spec.semitones = {2};
  const auto deformed = deform(patch, spec, 7);
  REQUIRE(deformed.has_value());
  for (std::size_t c = 0; c < 81; ++c) {
    CHECK(deformed->at(42, c) == patch.at(40, c));
  }
  // Center column differs from the source.
  bool center_differs = false;
  for (std::size_t r = 0; r < 72; ++r) {
    if (deformed->at(r, 40) != patch.at(r, 40)) center_differs = true;
  }
  CHECK(center_differs);
}

TEST_CASE("deform shift_onset keeps notes legal and flips the center when it applies") {
  DenseMatrix patch(72, 81, 0.0f);
  for (std::size_t c = 36; c <= 55; ++c) patch.at(20, c) = 1.0f;  // 20-frame note
  DeformationSpec spec;
  spec.op = DeformOp::shift_onset;
  spec.min_shift_frames = 5;
  spec.max_shift_frames = 5;
  const auto deformed = deform(patch, spec, 3);
  REQUIRE(deformed.has_value());
  // Exactly one contiguous run remains, never longer than the patch.
  std::size_t active = 0;
  for (std::size_t c = 0; c < 81; ++c) active += deformed->at(20, c) != 0.0f ? 1 : 0;
  CHECK((active == 15 || active == 25));
  bool center_differs = false;
  for (std::size_t r = 0; r < 72; ++r) {
    if (deformed->at(r, 40) != patch.at(r, 40)) center_differs = true;
  }
  CHECK(center_differs);
}

TEST_CASE("deform insert_note adds a contiguous block into silence") {
  DenseMatrix patch(72, 81, 0.0f);
  DeformationSpec spec;
  spec.op = DeformOp::insert_note;
  const auto deformed = deform(patch, spec, 11);
  REQUIRE(deformed.has_value());
  std::size_t active_frames = 0;
  for (std::size_t c = 0; c < 81; ++c) {
    int per_frame = 0;
    for (std::size_t r = 0; r < 72; ++r) per_frame += deformed->at(r, c) != 0.0f;
    CHECK(per_frame <= 1);
    active_frames += per_frame;
  }
  CHECK(active_frames >= static_cast<std::size_t>(spec.min_note_frames));
}

TEST_CASE("deform is deterministic in the seed") {
  // Note ending just past the center so offset shifts can cross it.
  DenseMatrix patch(72, 81, 0.0f);
  for (std::size_t c = 20; c <= 44; ++c) patch.at(33, c) = 1.0f;
  DeformationSpec spec;
  spec.op = DeformOp::shift_offset;
  const auto a = deform(patch, spec, 99);
  const auto b = deform(patch, spec, 99);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(*a == *b);
}

TEST_CASE("deform gives up politely when no legal move exists") {
  DenseMatrix patch(72, 81, 0.0f);  // nothing to shift or delete
  DeformationSpec spec;
  spec.op = DeformOp::delete_note;
  CHECK_FALSE(deform(patch, spec, 5).has_value());
}

namespace {

TrackInputs toy_track(std::size_t t_frames = 300) {
  TrackInputs track;
  track.bins = semitone_bins(72);
  track.grid = TimeGrid{0.0116, t_frames};
  track.notes.level = annotations::Granularity::notes;
  // A few well-separated notes.
  const double h = track.grid.spacing_h;
  for (std::size_t start = 40; start + 30 < t_frames; start += 70) {
    track.notes.segments.push_back(
        segment(start * h, (start + 20) * h, track.bins[30 + (start / 70) % 5]));
  }
  const DenseMatrix yhat =
      annotations::note_matrix(track.notes, track.grid, track.bins).matrix;
  track.salience = DenseMatrix(t_frames, 72, 0.0f);
  track.cqt_mix = DenseMatrix(t_frames, 72, 0.01f);
  track.cqt_vox = DenseMatrix(t_frames, 72, 0.0f);
  for (std::size_t i = 0; i < t_frames; ++i) {
    for (std::size_t j = 0; j < 72; ++j) {
      if (yhat.at(i, j) != 0.0f) {
        track.salience.at(i, j) = 0.95f;  // train-band agreement
        track.cqt_vox.at(i, j) = 1.0f;
        track.cqt_mix.at(i, j) = 1.0f;
      }
    }
  }
  return track;
}

}  // namespace

TEST_CASE("assemble_dataset balances positives and negatives with 72x81 patches") {
  const TrackInputs track = toy_track();
  AssembleConfig config;
  config.seed = 7;
  config.k_window = 5;
  config.silence_window = 20;
  AssembleDiagnostics diag;
  const auto examples = assemble_dataset(track, config, &diag);
  REQUIRE(!examples.empty());
  std::size_t positives = 0, negatives = 0;
  for (const auto& ex : examples) {
    CHECK(ex.x_mix.rows() == 72);
    CHECK(ex.x_mix.cols() == 81);
    CHECK(ex.x_vox.rows() == 72);
    CHECK(ex.x_vox.cols() == 81);
    CHECK(ex.y.rows() == 72);
    CHECK(ex.y.cols() == 81);
    if (ex.z == 0) ++positives;
    else ++negatives;
  }
  CHECK(positives == diag.agreement_positives + diag.silence_positives);
  CHECK(negatives == diag.negatives);
  CHECK(negatives == positives);  // balance 1.0 with legal deformations available
}

TEST_CASE("assemble_dataset z=1 patches differ from their source at the center") {
  const TrackInputs track = toy_track();
  AssembleConfig config;
  config.seed = 13;
  config.k_window = 5;
  config.silence_window = 20;
  const auto examples = assemble_dataset(track, config);
  // Index positives by center for lookup.
  std::map<std::size_t, const CleansingExample*> positives;
  for (const auto& ex : examples) {
    if (ex.z == 0) positives[ex.center_index] = &ex;
  }
  std::size_t checked = 0;
  for (const auto& ex : examples) {
    if (ex.z != 1) continue;
    REQUIRE(positives.count(ex.center_index) == 1);
    const auto* source = positives[ex.center_index];
    bool differs = false;
    for (std::size_t r = 0; r < 72; ++r) {
      if (ex.y.at(r, 40) != source->y.at(r, 40)) differs = true;
    }
    CHECK(differs);
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("assemble_dataset skips tracks shorter than a patch") {
  TrackInputs track = toy_track(60);
  AssembleConfig config;
  AssembleDiagnostics diag;
  CHECK(assemble_dataset(track, config, &diag).empty());
  REQUIRE(diag.notes.size() == 1);
}

TEST_CASE("assemble_dataset is deterministic and round-trips through dataset files") {
  const TrackInputs track = toy_track();
  AssembleConfig config;
  config.seed = 21;
  config.k_window = 5;
  config.silence_window = 20;
  const auto a = assemble_dataset(track, config);
  const auto b = assemble_dataset(track, config);
  REQUIRE(a.size() == b.size());
  const auto path =
      (std::filesystem::temp_directory_path() / "lyraline_ds.bin").string();
  write_dataset(path, a);
  const std::string bytes_a = io::read_file_bytes(path);
  write_dataset(path, b);
  CHECK(io::read_file_bytes(path) == bytes_a);

  const auto back = read_dataset(path);
  REQUIRE(back.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(back[i].y == a[i].y);
    CHECK(back[i].z == a[i].z);
    CHECK(back[i].center_index == a[i].center_index);
  }
  std::remove(path.c_str());
}

TEST_CASE("deformed patches map back to legal note events") {
  DenseMatrix patch(72, 81, 0.0f);
  for (std::size_t c = 10; c <= 25; ++c) patch.at(20, c) = 1.0f;
  for (std::size_t c = 40; c <= 60; ++c) patch.at(25, c) = 1.0f;
  const auto bins = semitone_bins(72);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (DeformOp op : {DeformOp::shift_onset, DeformOp::shift_offset,
                        DeformOp::transpose, DeformOp::delete_note,
                        DeformOp::insert_note}) {
      DeformationSpec spec;
      spec.op = op;
      const auto deformed = deform(patch, spec, seed);
      if (!deformed) continue;
      // Rebuild note events from the patch and validate them.
      annotations::GranularityLevel notes;
      notes.level = annotations::Granularity::notes;
      TimeGrid grid{0.0116, 81};
      long current_bin = -1;
      std::size_t start = 0;
      for (std::size_t c = 0; c <= 81; ++c) {
        long bin = -1;
        if (c < 81) {
          for (std::size_t r = 0; r < 72; ++r) {
            if (deformed->at(r, c) != 0.0f) {
              bin = static_cast<long>(r);
              break;
            }
          }
        }
        if (bin != current_bin) {
          if (current_bin >= 0) {
            notes.segments.push_back(segment(grid.time_at(start), grid.time_at(c),
                                             bins[current_bin]));
          }
          current_bin = bin;
          start = c;
        }
      }
      annotations::SongAnnotations song;
      song.levels[annotations::Granularity::notes] = notes;
      CHECK(annotations::validate(song).empty());
    }
  }
}

TEST_CASE("filter_frames, sample_weights and error_rate follow the binarization") {
  const FrameSeries g = series_of({0.2f, 0.7f});
  CHECK(filter_frames(g) == std::vector<std::size_t>{0});
  const FrameSeries w = sample_weights(g);
  CHECK(w.values[0] == doctest::Approx(0.8f));
  CHECK(w.values[1] == doctest::Approx(0.3f));

  const FrameSeries zeros = series_of({0.0f, 0.0f, 0.0f});
  CHECK(filter_frames(zeros).size() == 3);
  CHECK(error_rate(zeros) == 0.0);
  const FrameSeries ones = series_of({1.0f, 1.0f});
  CHECK(filter_frames(ones).empty());
  CHECK(error_rate(ones) == 1.0);

  const FrameSeries mixed = series_of({0.6f, 0.4f, 0.5f, 0.1f});
  CHECK(error_rate(mixed) == doctest::Approx(0.5));

  // filter_frames and its complement partition the index set.
  std::set<std::size_t> all;
  for (std::size_t i : filter_frames(mixed)) all.insert(i);
  for (std::size_t i = 0; i < mixed.values.size(); ++i) {
    if (mixed.values[i] >= 0.5f) {
      CHECK(all.count(i) == 0);
      all.insert(i);
    }
  }
  CHECK(all.size() == mixed.values.size());
}
