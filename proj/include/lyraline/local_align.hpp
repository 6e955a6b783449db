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

#ifndef LYRALINE_LOCAL_ALIGN_HPP
#define LYRALINE_LOCAL_ALIGN_HPP

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lyraline/annotations.hpp"
#include "lyraline/matrix.hpp"

namespace lyraline::local_align {

struct DtwResult {
  double cost = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> path;
  std::size_t path_len = 0;
  double similarity = 0.0;  // 1 - cost / path_len
};

// Three-step DTW over feature sequences (rows = frames) with the distance
// d = 1 - |cosine|; zero-norm frames score distance 1.
DtwResult dtw(const DenseMatrix& a, const DenseMatrix& b);

// T x (J+1) per-frame state probabilities; the last column is the silence
// state. Built as silence = 1 - max over bins, then a per-frame softmax.
DenseMatrix build_observation(const DenseMatrix& salience);

enum class GraphMode { pitch, text, joint };

struct NoteState {
  bool blank = true;
  int pitch_bin = -1;           // quantized semitone bin (pitch/joint modes)
  int text_symbol = -1;         // alphabet index (text/joint modes)
  std::size_t note_index = 0;   // position in the source note list
};

struct NoteStateGraph {
  std::vector<NoteState> states;  // alternating, first and last are blank
  GraphMode mode = GraphMode::pitch;
  bool octave_fold = false;
  std::size_t note_count = 0;
};

struct GraphConfig {
  GraphMode mode = GraphMode::pitch;
  bool octave_fold = false;
  // Semitone ladder used for pitch quantization.
  double f_min = 32.70;
  int bins_per_octave = 12;
  int n_bins = 72;
  // Required for text/joint modes: note text to symbol index.
  std::span<const std::string> alphabet = {};
};

// epsilon-interleaved state sequence; consecutive equal-pitch notes stay
// distinct states. Pitch is quantized to the nearest semitone on the ladder.
NoteStateGraph build_graph(const annotations::GranularityLevel& notes,
                           const GraphConfig& cfg);

struct ViterbiConfig {
  int pitch_tolerance = 1;            // +- bins summed when scoring a note state
  bool octave_neighbors = false;      // add bins one octave up and down
  double octave_neighbor_weight = 0.5;
  double annotation_prior = 0.0;      // in (0,1]: off-annotation cells scaled by it
  double duration_prior = 0.0;        // exponent on relative-duration transition prior
  double duration_backtrack_delta = 0.0;  // near-optimal margin favoring durations
  double joint_lambda = 0.5;          // pitch weight for joint mode
};

struct ViterbiResult {
  annotations::GranularityLevel corrected;  // same notes, new times
  std::vector<std::size_t> state_path;      // state index per frame
  double log_likelihood = 0.0;
  std::vector<double> duration_ratio;       // corrected / original per note
};

// Blank-state Viterbi decodes obs into per-note spans. The path starts in the
// leading blank and ends in the trailing blank, so T >= note_count + 2.
ViterbiResult viterbi_align(const NoteStateGraph& graph, const DenseMatrix& obs,
                            const TimeGrid& grid,
                            const annotations::GranularityLevel& original_notes,
                            const ViterbiConfig& cfg,
                            const DenseMatrix* text_obs = nullptr);

// Log-likelihood of an arbitrary legal frame-to-state path, for comparing
// decoded paths against constructed ones.
double path_log_likelihood(const NoteStateGraph& graph, const DenseMatrix& obs,
                           std::span<const std::size_t> state_path,
                           const ViterbiConfig& cfg,
                           const DenseMatrix* text_obs = nullptr);

struct BeamVariantResult {
  NoteStateGraph graph;                 // best variant
  std::vector<int> substitutions;       // semitones per note, 0 = unchanged
  double score = 0.0;                   // Viterbi log-likelihood
};

// Beam search over per-note pitch substitutions drawn from the interval set.
// With a beam wide enough to cover the space it matches exhaustive search.
BeamVariantResult beam_variants(const NoteStateGraph& graph, const DenseMatrix& obs,
                                const TimeGrid& grid,
                                const annotations::GranularityLevel& notes,
                                const ViterbiConfig& cfg,
                                std::span<const int> intervals,
                                std::size_t beam_width);

std::vector<int> default_intervals();  // +-12, +-7, +-5, +-4

}  // namespace lyraline::local_align

#endif  // LYRALINE_LOCAL_ALIGN_HPP
