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

#include "lyraline/annotations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lyraline/log.hpp"
#include "lyraline/text.hpp"

namespace lyraline::annotations {

namespace {

// First frame index i with grid.time_at(i) >= t, clamped to [0, n_frames].
std::size_t first_frame_at_or_after(const TimeGrid& grid, double t) {
  if (t <= 0.0) return 0;
  double guess = std::ceil(t / grid.spacing_h);
  std::size_t i = guess < 0.0 ? 0 : static_cast<std::size_t>(guess);
  while (i > 0 && grid.time_at(i - 1) >= t) --i;
  while (i < grid.n_frames && grid.time_at(i) < t) ++i;
  return std::min(i, grid.n_frames);
}

// One past the last frame index i with grid.time_at(i) <= t.
std::size_t end_frame_after(const TimeGrid& grid, double t) {
  if (t < 0.0) return 0;
  double guess = std::floor(t / grid.spacing_h) + 1.0;
  std::size_t i = guess < 0.0 ? 0 : static_cast<std::size_t>(guess);
  while (i > 0 && grid.time_at(i - 1) > t) --i;
  while (i < grid.n_frames && grid.time_at(i) <= t) ++i;
  return std::min(i, grid.n_frames);
}

std::string join_lines(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += parts[i];
  }
  return out;
}

}  // namespace

const char* granularity_name(Granularity g) {
  switch (g) {
    case Granularity::notes: return "notes";
    case Granularity::words: return "words";
    case Granularity::lines: return "lines";
    case Granularity::paragraphs: return "paragraphs";
  }
  return "?";
}

std::optional<Granularity> granularity_from_name(const std::string& name) {
  if (name == "notes") return Granularity::notes;
  if (name == "words") return Granularity::words;
  if (name == "lines") return Granularity::lines;
  if (name == "paragraphs") return Granularity::paragraphs;
  return std::nullopt;
}

std::vector<Violation> validate(const SongAnnotations& song) {
  std::vector<Violation> out;
  for (const auto& [g, level] : song.levels) {
    const auto& segs = level.segments;
    const GranularityLevel* parent_level = nullptr;
    if (g != Granularity::paragraphs) {
      parent_level = song.find(static_cast<Granularity>(static_cast<int>(g) + 1));
    }
    for (std::size_t k = 0; k < segs.size(); ++k) {
      const AlignedSegment& s = segs[k];
      if (!(s.t0 < s.t1)) {
        out.push_back({g, k, "t0<t1"});
      }
      if (s.f_min > s.f_max) {
        out.push_back({g, k, "f_min<=f_max"});
      }
      if (g == Granularity::notes && s.f_min != s.f_max) {
        out.push_back({g, k, "note f_min==f_max"});
      }
      if (k + 1 < segs.size() && segs[k].t1 > segs[k + 1].t0) {
        out.push_back({g, k, "non-overlap"});
      }
      if (s.parent_index) {
        if (parent_level == nullptr) {
          out.push_back({g, k, "parent level missing"});
        } else if (*s.parent_index >= parent_level->segments.size()) {
          out.push_back({g, k, "parent index out of range"});
        }
      } else if (parent_level != nullptr && !parent_level->segments.empty()) {
        out.push_back({g, k, "missing parent link"});
      }
    }
  }
  return out;
}

double raw_to_seconds(double frame_index, double offset_o, double frame_rate_fr) {
  if (!(frame_rate_fr > 0.0)) {
    throw ParameterError("raw_to_seconds: frame rate must be positive");
  }
  return offset_o + frame_index / frame_rate_fr;
}

FrameSeries rasterize_vas(const GranularityLevel& level, const TimeGrid& grid) {
  FrameSeries out(grid, 0.0f);
  for (const AlignedSegment& s : level.segments) {
    const std::size_t begin = first_frame_at_or_after(grid, s.t0);
    const std::size_t end = first_frame_at_or_after(grid, s.t1);
    for (std::size_t i = begin; i < end; ++i) out.values[i] = 1.0f;
  }
  return out;
}

NoteMatrixResult note_matrix(const GranularityLevel& notes, const TimeGrid& grid,
                             std::span<const double> bins) {
  if (bins.empty()) throw ParameterError("note_matrix: empty bin centers");
  for (std::size_t j = 1; j < bins.size(); ++j) {
    if (!(bins[j - 1] < bins[j])) {
      throw ParameterError("note_matrix: bin centers must be strictly increasing");
    }
  }

  NoteMatrixResult result;
  result.matrix = DenseMatrix(grid.n_frames, bins.size(), 0.0f);
  for (std::size_t k = 0; k < notes.segments.size(); ++k) {
    const AlignedSegment& s = notes.segments[k];
    const double f = s.f_min;
    if (f < bins.front() || f > bins.back()) {
      result.out_of_range.push_back(k);
      log::warn("note_matrix: note " + std::to_string(k) + " at " +
                std::to_string(f) + " Hz is outside the bin range, skipped");
      continue;
    }
    // Right-closed bins: smallest j with f <= q_j.
    const auto it = std::lower_bound(bins.begin(), bins.end(), f);
    const std::size_t j = static_cast<std::size_t>(it - bins.begin());
    const std::size_t begin = first_frame_at_or_after(grid, s.t0);
    const std::size_t end = end_frame_after(grid, s.t1);
    for (std::size_t i = begin; i < end; ++i) result.matrix.at(i, j) = 1.0f;
  }
  return result;
}

namespace {

const char* kCmudictSymbols[] = {
    "AA", "AE", "AH", "AO", "AW", "AY", "B",  "CH", "D",  "DH",
    "EH", "ER", "EY", "F",  "G",  "HH", "IH", "IY", "JH", "K",
    "L",  "M",  "N",  "NG", "OW", "OY", "P",  "R",  "S",  "SH",
    "T",  "TH", "UH", "UW", "V",  "W",  "Y",  "Z",  "ZH"};

}  // namespace

PhonemeAlphabet::PhonemeAlphabet(std::vector<std::string> symbols, std::size_t slots)
    : symbols_(std::move(symbols)), slots_(slots) {
  if (symbols_.size() > slots_) {
    throw ParameterError("PhonemeAlphabet: more symbols than slots");
  }
  for (std::size_t i = 0; i < symbols_.size(); ++i) index_[symbols_[i]] = i;
}

const PhonemeAlphabet& PhonemeAlphabet::cmudict() {
  static const PhonemeAlphabet instance(
      std::vector<std::string>(std::begin(kCmudictSymbols), std::end(kCmudictSymbols)),
      40);
  return instance;
}

std::optional<std::size_t> PhonemeAlphabet::index_of(const std::string& symbol) const {
  auto it = index_.find(symbol);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

DenseMatrix phoneme_matrix(const GranularityLevel& words, const TimeGrid& grid,
                           const PhonemeAlphabet& alphabet) {
  const std::size_t p = alphabet.slots();
  DenseMatrix z(grid.n_frames, p + 1, 0.0f);
  for (std::size_t k = 0; k < words.segments.size(); ++k) {
    const AlignedSegment& s = words.segments[k];
    const std::size_t begin = first_frame_at_or_after(grid, s.t0);
    const std::size_t end = first_frame_at_or_after(grid, s.t1);
    for (const std::string& symbol : s.phonemes) {
      const auto col = alphabet.index_of(symbol);
      if (!col) {
        throw SchemaError("phoneme_matrix: unknown phoneme symbol '" + symbol +
                          "' in word " + std::to_string(k));
      }
      for (std::size_t i = begin; i < end; ++i) z.at(i, *col) = 1.0f;
    }
  }
  for (std::size_t i = 0; i < z.rows(); ++i) {
    bool any = false;
    for (std::size_t j = 0; j < p; ++j) {
      if (z.at(i, j) != 0.0f) {
        any = true;
        break;
      }
    }
    if (!any) z.at(i, p) = 1.0f;
  }
  return z;
}

DenseMatrix softmax_phoneme_prep(const DenseMatrix& z) {
  DenseMatrix out(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double max_value = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < z.cols(); ++j) {
      max_value = std::max(max_value, static_cast<double>(z.at(i, j)));
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < z.cols(); ++j) {
      denom += std::exp(static_cast<double>(z.at(i, j)) - max_value);
    }
    for (std::size_t j = 0; j < z.cols(); ++j) {
      out.at(i, j) = static_cast<float>(
          std::exp(static_cast<double>(z.at(i, j)) - max_value) / denom);
    }
  }
  return out;
}

MergeParagraphsResult merge_paragraphs(
    const GranularityLevel& melody_lines,
    const std::vector<std::vector<std::string>>& target_paragraphs) {
  if (melody_lines.segments.empty()) {
    throw ParameterError("merge_paragraphs: no melody lines");
  }
  const std::size_t n = melody_lines.segments.size();

  std::vector<std::string> targets;
  targets.reserve(target_paragraphs.size());
  for (const auto& p : target_paragraphs) targets.push_back(join_lines(p));

  std::vector<std::size_t> boundaries;  // group start indices, first is 0
  if (targets.empty()) {
    boundaries = {0};
  } else {
    // score[j][i] = best target similarity of the group holding lines j..i.
    std::vector<std::vector<double>> score(n, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
      std::string acc;
      for (std::size_t i = j; i < n; ++i) {
        if (i > j) acc.push_back(' ');
        acc += melody_lines.segments[i].text;
        double best = 0.0;
        for (const std::string& t : targets) {
          best = std::max(best, text::normalized_similarity(acc, t));
        }
        score[j][i] = best;
      }
    }

    // Exact contiguous partition maximizing the line-weighted similarity sum
    // (every line counts its paragraph's best target match). Ties prefer the
    // longer last group, keeping paragraphs coarse.
    const double neg = -std::numeric_limits<double>::infinity();
    std::vector<double> dp(n + 1, neg);
    std::vector<std::size_t> from(n + 1, 0);
    dp[0] = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        const double candidate =
            dp[j] + static_cast<double>(i - j) * score[j][i - 1];
        if (candidate > dp[i] + 1e-12) {
          dp[i] = candidate;
          from[i] = j;
        }
      }
    }
    std::vector<std::size_t> rev;
    for (std::size_t i = n; i > 0; i = from[i]) rev.push_back(from[i]);
    boundaries.assign(rev.rbegin(), rev.rend());
  }

  MergeParagraphsResult result;
  result.lines = melody_lines;
  result.paragraphs.level = Granularity::paragraphs;
  for (std::size_t p = 0; p < boundaries.size(); ++p) {
    const std::size_t begin = boundaries[p];
    const std::size_t end = p + 1 < boundaries.size() ? boundaries[p + 1] : n;
    AlignedSegment seg;
    seg.t0 = std::numeric_limits<double>::infinity();
    seg.t1 = -std::numeric_limits<double>::infinity();
    seg.f_min = std::numeric_limits<double>::infinity();
    seg.f_max = -std::numeric_limits<double>::infinity();
    std::vector<std::string> texts;
    for (std::size_t i = begin; i < end; ++i) {
      const AlignedSegment& line = melody_lines.segments[i];
      seg.t0 = std::min(seg.t0, line.t0);
      seg.t1 = std::max(seg.t1, line.t1);
      seg.f_min = std::min(seg.f_min, line.f_min);
      seg.f_max = std::max(seg.f_max, line.f_max);
      texts.push_back(line.text);
      result.lines.segments[i].parent_index = p;
    }
    seg.text = join_lines(texts);
    result.paragraphs.segments.push_back(std::move(seg));
  }
  return result;
}

double merge_score(const std::vector<std::string>& dali_paragraphs,
                   const std::vector<std::string>& target_paragraphs) {
  if (dali_paragraphs.empty() || target_paragraphs.empty()) {
    throw ParameterError("merge_score: paragraph lists must be non-empty");
  }
  double worst = 1.0;
  for (const std::string& d : dali_paragraphs) {
    double best = 0.0;
    for (const std::string& w : target_paragraphs) {
      best = std::max(best, text::normalized_similarity(d, w));
    }
    worst = std::min(worst, best);
  }
  return worst;
}

const char* merge_class_name(MergeClass c) {
  switch (c) {
    case MergeClass::MPlus: return "M+";
    case MergeClass::MZero: return "M0";
    case MergeClass::MMinus: return "M-";
  }
  return "?";
}

MergeClass partition_by_merge(double score) {
  if (score >= 0.90) return MergeClass::MPlus;
  if (score >= 0.52) return MergeClass::MZero;
  return MergeClass::MMinus;
}

std::vector<MergeClass> partition_by_merge(std::span<const double> scores) {
  std::vector<MergeClass> out;
  out.reserve(scores.size());
  for (double s : scores) out.push_back(partition_by_merge(s));
  return out;
}

std::vector<int> boundary_labels(const SongAnnotations& song) {
  const GranularityLevel* lines = song.find(Granularity::lines);
  const GranularityLevel* paragraphs = song.find(Granularity::paragraphs);
  if (lines == nullptr || paragraphs == nullptr) {
    throw SchemaError("boundary_labels: lines and paragraphs levels are required");
  }
  const std::size_t n = lines->segments.size();
  std::vector<std::optional<std::size_t>> last_line(paragraphs->segments.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& parent = lines->segments[i].parent_index;
    if (!parent || *parent >= paragraphs->segments.size()) {
      throw SchemaError("boundary_labels: line " + std::to_string(i) +
                        " has no valid paragraph link");
    }
    last_line[*parent] = i;
  }
  std::vector<int> y(n, 0);
  for (const auto& idx : last_line) {
    if (idx) y[*idx] = 1;
  }
  return y;
}

GranularityLevel transpose_frequency(const GranularityLevel& notes, int semitones) {
  GranularityLevel out = notes;
  const double factor = std::exp2(static_cast<double>(semitones) / 12.0);
  for (AlignedSegment& s : out.segments) {
    s.f_min *= factor;
    s.f_max *= factor;
  }
  return out;
}

}  // namespace lyraline::annotations
