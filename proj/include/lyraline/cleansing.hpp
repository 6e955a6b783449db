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

#ifndef LYRALINE_CLEANSING_HPP
#define LYRALINE_CLEANSING_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lyraline/annotations.hpp"
#include "lyraline/matrix.hpp"

namespace lyraline::cleansing {

struct AgreementScores {
  FrameSeries kappa_l;   // per-frame agreement in [0, 1]
  FrameSeries kappa_p;   // k-point moving average of kappa_l, edge-truncated
  std::size_t k_window = 20;
};

// kappa_l(i) = max_j yhat(i, j) * salience(i, j) on T x J inputs.
AgreementScores agreement(const DenseMatrix& yhat, const DenseMatrix& salience,
                          std::size_t k_window = 20, TimeGrid grid = {});

enum class Split { train, test };

// test:  kappa_l > .999 and kappa_p > .85
// train: 0.9 < kappa_l <= .999 and 0.7 < kappa_p <= .85
// The two sets are disjoint by construction.
std::vector<std::size_t> select_likely_correct(const AgreementScores& scores,
                                               Split split);

// Frames with sub-threshold vocal energy and no annotation inside a window of
// length v centered on them.
std::vector<std::size_t> select_silence_correct(const FrameSeries& vocals_energy_db,
                                                const DenseMatrix& yhat,
                                                std::size_t window_v = 200,
                                                double threshold_db = -25.0);

enum class DeformOp { shift_onset, shift_offset, transpose, delete_note, insert_note };

struct DeformationSpec {
  DeformOp op = DeformOp::transpose;
  int min_shift_frames = 3;
  int max_shift_frames = 15;
  std::vector<int> semitones = {1, -1, 2, -2, 3, -3, 4, -4, 5, -5, 7, -7, 12, -12};
  int min_note_frames = 3;
  int max_note_frames = 30;
  int max_retries = 16;
};

// Applies a label deformation to a bins x frames binary patch. The result
// keeps notes ordered, non-overlapping and at least one frame long, and must
// differ from the source at the center frame; nullopt when no legal
// deformation was found within max_retries.
std::optional<DenseMatrix> deform(const DenseMatrix& patch_y,
                                  const DeformationSpec& spec, std::uint64_t seed);

enum class Provenance { agreement, silence, deformed };

struct CleansingExample {
  DenseMatrix x_mix;  // 72 x 81 CQT patch of the mixture
  DenseMatrix x_vox;  // 72 x 81 CQT patch of the isolated vocals
  DenseMatrix y;      // 72 x 81 binary label patch
  int z = 0;          // 1 when the center-frame label is wrong
  std::size_t center_index = 0;
  Provenance provenance = Provenance::agreement;
};

struct TrackInputs {
  DenseMatrix cqt_mix;   // T x J
  DenseMatrix cqt_vox;   // T x J
  DenseMatrix salience;  // T x J
  annotations::GranularityLevel notes;
  TimeGrid grid;
  std::vector<double> bins;  // CQT bin centers
};

struct AssembleConfig {
  std::size_t context_n = 40;  // patch = 2n + 1 frames
  std::uint64_t seed = 0;
  std::uint64_t track_id = 0;  // per-track RNG: seed ^ track_id
  double balance = 1.0;        // negatives per positive
  std::size_t k_window = 20;
  std::size_t silence_window = 200;
  double silence_threshold_db = -25.0;
  Split split = Split::train;
  std::vector<DeformOp> ops = {DeformOp::shift_onset, DeformOp::shift_offset,
                               DeformOp::transpose, DeformOp::delete_note};
  DeformationSpec deform_spec;
};

struct AssembleDiagnostics {
  std::size_t agreement_positives = 0;
  std::size_t silence_positives = 0;
  std::size_t negatives = 0;
  std::size_t skipped_deformations = 0;
  std::vector<std::string> notes;
};

// Self-supervised example stream: likely-correct frames become z=0 patches,
// their deformations become z=1 patches. Deterministic for a fixed seed.
std::vector<CleansingExample> assemble_dataset(const TrackInputs& track,
                                               const AssembleConfig& config,
                                               AssembleDiagnostics* diag = nullptr);

void write_dataset(const std::string& path,
                   const std::vector<CleansingExample>& examples);
std::vector<CleansingExample> read_dataset(const std::string& path);

// F = frames whose error likelihood is below the threshold.
std::vector<std::size_t> filter_frames(const FrameSeries& g, double threshold = 0.5);

// Per-frame loss weights 1 - g.
FrameSeries sample_weights(const FrameSeries& g);

// Fraction of frames with g >= threshold.
double error_rate(const FrameSeries& g, double threshold = 0.5);

}  // namespace lyraline::cleansing

#endif  // LYRALINE_CLEANSING_HPP
