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

#ifndef LYRALINE_GLOBAL_ALIGN_HPP
#define LYRALINE_GLOBAL_ALIGN_HPP

#include <optional>
#include <set>
#include <span>
#include <vector>

#include "lyraline/annotations.hpp"
#include "lyraline/matrix.hpp"

namespace lyraline::global_align {

struct GlobalAlignParams {
  double fr_nominal = 0.0;      // 1/seconds, annotation frame rate
  double alpha_fraction = 0.05; // search half-width as a fraction of fr
  int fr_grid_steps = 101;      // uniform points over [fr-alpha, fr+alpha]
  double t_corr = 0.8;          // acceptance threshold on the NCC score
};

struct NccResult {
  double best_offset = 0.0;  // seconds
  double best_fr = 0.0;      // 1/seconds
  double score = 0.0;        // in [0, 1]
  bool accepted = false;     // score >= t_corr
};

struct LagRange {
  long min_lag = 0;
  long max_lag = 0;  // inclusive
};

struct NccScan {
  long best_lag = 0;
  double score = 0.0;
};

// NCC(l) = sum_t vas(t - l) * phat(t) / (||vas|| * ||phat||), maximized over
// the lag range; full-sequence norms. Ties break toward the smaller |lag|.
NccScan ncc(const FrameSeries& vas, const FrameSeries& phat, const LagRange& range);

// Brute-force search over the fr grid; for each fr the raw-frame-unit notes
// (t0/t1 counted in annotation frames) are rasterized and scanned over all
// offsets. Returns the argmax pair with the acceptance flag.
NccResult align_global(const annotations::GranularityLevel& raw_notes,
                       const FrameSeries& phat, const GlobalAlignParams& params,
                       int jobs = 1);

struct CandidateSelection {
  std::optional<std::size_t> index;  // absent when every score is below t_corr
  std::vector<NccScan> scores;
};

// Scores every candidate phat against the vas; argmax wins if it clears
// t_corr, ties go to the lowest index.
CandidateSelection select_candidate(const FrameSeries& vas,
                                    std::span<const FrameSeries> candidates,
                                    const GlobalAlignParams& params, int jobs = 1);

struct ParagraphCorrection {
  std::size_t paragraph_index = 0;
  double offset_seconds = 0.0;
  double score = 0.0;
  bool applied = false;
  std::string note;  // reason when not applied
};

struct ParagraphAlignResult {
  std::vector<ParagraphCorrection> corrections;
  annotations::SongAnnotations corrected;
};

// Paragraph-local NCC: each paragraph's note-level vas is correlated against
// the phat window around the paragraph (padded by window_pad seconds).
// Corrections that would break segment ordering are rejected.
ParagraphAlignResult align_paragraph_local(const annotations::SongAnnotations& song,
                                           const FrameSeries& phat,
                                           const GlobalAlignParams& params,
                                           double window_pad = 5.0);

struct ShiftMetrics {
  int shift = 0;  // semitones
  double energy = 0.0;
  double overall_accuracy = 0.0;
  double raw_pitch_accuracy = 0.0;
  double raw_chroma_accuracy = 0.0;
  double voicing_recall = 0.0;
  double voicing_false_alarm = 0.0;
};

struct FrequencyCorrelation {
  int best_shift = 0;
  double energy = 0.0;
  std::vector<ShiftMetrics> per_shift;
};

// Scans integer semitone transpositions of the annotated notes against an F0
// salience matrix (frames x bins), maximizing the summed salience at the
// shifted note positions. Ties prefer the smaller |shift|.
FrequencyCorrelation frequency_correlation(const annotations::GranularityLevel& notes,
                                           const DenseMatrix& salience,
                                           const TimeGrid& grid,
                                           std::span<const double> bins,
                                           double voicing_threshold = 0.5);

// Tracks whose mean phat clears (1 - tolerance) * max are considered vocal.
std::set<std::size_t> detect_vocal_tracks(std::span<const double> track_means,
                                          double tolerance = 0.02);

}  // namespace lyraline::global_align

#endif  // LYRALINE_GLOBAL_ALIGN_HPP
