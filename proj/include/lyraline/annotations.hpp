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

#ifndef LYRALINE_ANNOTATIONS_HPP
#define LYRALINE_ANNOTATIONS_HPP

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lyraline/matrix.hpp"

namespace lyraline::annotations {

enum class Granularity { notes = 0, words = 1, lines = 2, paragraphs = 3 };

const char* granularity_name(Granularity g);
std::optional<Granularity> granularity_from_name(const std::string& name);

// One time-aligned event. Segments at note granularity carry a single musical
// note (f_min == f_max); coarser levels carry the frequency range covered by
// their member notes. parent_index links to the next-coarser level.
struct AlignedSegment {
  double t0 = 0.0;  // seconds
  double t1 = 0.0;  // seconds
  double f_min = 0.0;  // Hz
  double f_max = 0.0;  // Hz
  std::string text;
  std::vector<std::string> phonemes;
  std::optional<std::size_t> parent_index;
};

struct GranularityLevel {
  Granularity level = Granularity::notes;
  std::vector<AlignedSegment> segments;
};

struct SongAnnotations {
  std::map<Granularity, GranularityLevel> levels;
  std::map<std::string, std::string> metadata;

  const GranularityLevel* find(Granularity g) const {
    auto it = levels.find(g);
    return it == levels.end() ? nullptr : &it->second;
  }
};

struct Violation {
  Granularity level;
  std::size_t index;
  std::string rule;
};

// Structural diagnostics; returns one entry per broken invariant, never throws.
std::vector<Violation> validate(const SongAnnotations& song);

// Karaoke raw frame units to seconds: offset_o + frame_index / frame_rate_fr.
double raw_to_seconds(double frame_index, double offset_o, double frame_rate_fr);

// Binary voice-activity series: frame i is 1 iff some segment has t0 <= r_i < t1.
FrameSeries rasterize_vas(const GranularityLevel& level, const TimeGrid& grid);

struct NoteMatrixResult {
  DenseMatrix matrix;                      // T x J binary
  std::vector<std::size_t> out_of_range;   // indices of skipped notes
};

// Binary note-event matrix: cell (i, j) is 1 iff some note k satisfies
// t_k0 <= r_i <= t_k1 and q_{j-1} < f_k <= q_j. Notes whose frequency falls
// outside [q_0, q_{J-1}] are skipped and reported.
NoteMatrixResult note_matrix(const GranularityLevel& notes, const TimeGrid& grid,
                             std::span<const double> bins);

// Fixed phoneme alphabet with P slots (CMUdict symbols at indices 0..38).
class PhonemeAlphabet {
 public:
  static const PhonemeAlphabet& cmudict();  // P = 40

  explicit PhonemeAlphabet(std::vector<std::string> symbols, std::size_t slots);
  std::optional<std::size_t> index_of(const std::string& symbol) const;
  std::size_t slots() const { return slots_; }

 private:
  std::vector<std::string> symbols_;
  std::map<std::string, std::size_t> index_;
  std::size_t slots_;
};

// T x (P+1) binary activation matrix. Every phoneme of a word is active over
// the word's whole [t0, t1) span; the last column marks frames with no
// phoneme active.
DenseMatrix phoneme_matrix(const GranularityLevel& words, const TimeGrid& grid,
                           const PhonemeAlphabet& alphabet = PhonemeAlphabet::cmudict());

// Row-wise softmax; rows sum to 1 and per-row argmax order is preserved.
DenseMatrix softmax_phoneme_prep(const DenseMatrix& z);

struct MergeParagraphsResult {
  GranularityLevel paragraphs;
  GranularityLevel lines;  // input lines with parent_index set
};

// Groups consecutive melody lines into paragraphs so that each paragraph is
// maximally similar to some target paragraph (mean of per-paragraph best
// string similarity, optimized exactly over contiguous partitions).
MergeParagraphsResult merge_paragraphs(
    const GranularityLevel& melody_lines,
    const std::vector<std::vector<std::string>>& target_paragraphs);

// min over DALI paragraphs of max over target paragraphs of str similarity.
double merge_score(const std::vector<std::string>& dali_paragraphs,
                   const std::vector<std::string>& target_paragraphs);

enum class MergeClass { MPlus, MZero, MMinus };

const char* merge_class_name(MergeClass c);

// Boundaries at 0.90 and 0.52 belong to the upper class.
MergeClass partition_by_merge(double score);
std::vector<MergeClass> partition_by_merge(std::span<const double> scores);

// y_i = 1 iff line i is the last line of its paragraph.
std::vector<int> boundary_labels(const SongAnnotations& song);

// Multiplies every frequency by 2^(semitones/12); times and text unchanged.
GranularityLevel transpose_frequency(const GranularityLevel& notes, int semitones);

}  // namespace lyraline::annotations

#endif  // LYRALINE_ANNOTATIONS_HPP
