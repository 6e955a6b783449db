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

#include "lyraline/global_align.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "lyraline/fft.hpp"
#include "lyraline/log.hpp"
#include "lyraline/parallel.hpp"

namespace lyraline::global_align {

namespace {

using annotations::AlignedSegment;
using annotations::Granularity;
using annotations::GranularityLevel;
using annotations::SongAnnotations;

double l2_norm(const std::vector<float>& v) {
  double acc = 0.0;
  for (float x : v) acc += static_cast<double>(x) * x;
  return std::sqrt(acc);
}

}  // namespace

namespace {

// Spectrum of the phat side, reusable across many vas scans of equal length.
struct PreparedPhat {
  std::vector<std::complex<double>> spectrum;
  std::size_t y_len = 0;
  std::size_t x_len = 0;
  std::size_t pad = 0;
  double norm = 0.0;
};

PreparedPhat prepare_phat(const FrameSeries& phat, std::size_t vas_len) {
  PreparedPhat p;
  p.y_len = phat.values.size();
  p.x_len = vas_len;
  p.pad = fft::next_pow2(vas_len + p.y_len - 1);
  p.norm = l2_norm(phat.values);
  p.spectrum.assign(p.pad, {0.0, 0.0});
  for (std::size_t i = 0; i < p.y_len; ++i) p.spectrum[i] = phat.values[i];
  fft::forward(p.spectrum);
  return p;
}

// sum_t vas(t - l) * phat(t) = sum_u vas(u) * phat(u + l), which is the
// correlation of reversed vas with phat at index l + (|vas| - 1).
NccScan scan_against(const std::vector<float>& vas, const PreparedPhat& phat,
                     const LagRange& range) {
  const double norm_vas = l2_norm(vas);
  if (norm_vas == 0.0 || phat.norm == 0.0) {
    throw DegenerateInputError("ncc: zero-norm input (all-silent vas or phat)");
  }
  if (vas.size() != phat.x_len) {
    throw ParameterError("ncc: vas length does not match the prepared phat");
  }

  std::vector<std::complex<double>> fx(phat.pad, {0.0, 0.0});
  for (std::size_t i = 0; i < vas.size(); ++i) {
    fx[vas.size() - 1 - i] = vas[i];
  }
  fft::forward(fx);
  for (std::size_t i = 0; i < phat.pad; ++i) fx[i] *= phat.spectrum[i];
  fft::inverse(fx);

  const long offset = static_cast<long>(vas.size()) - 1;
  const long lo = std::max(range.min_lag, -offset);
  const long hi = std::min(range.max_lag, static_cast<long>(phat.y_len) - 1);

  NccScan best;
  bool found = false;
  for (long lag = lo; lag <= hi; ++lag) {
    const double value = fx[static_cast<std::size_t>(lag + offset)].real();
    const double score = std::clamp(value / (norm_vas * phat.norm), 0.0, 1.0);
    const bool better =
        !found || score > best.score + 1e-15 ||
        (std::abs(score - best.score) <= 1e-15 &&
         (std::llabs(lag) < std::llabs(best.best_lag) ||
          (std::llabs(lag) == std::llabs(best.best_lag) && lag < best.best_lag)));
    if (better) {
      best.best_lag = lag;
      best.score = score;
      found = true;
    }
  }
  if (!found) throw ParameterError("ncc: empty lag range");
  return best;
}

}  // namespace

NccScan ncc(const FrameSeries& vas, const FrameSeries& phat, const LagRange& range) {
  if (vas.values.empty() || phat.values.empty()) {
    throw DegenerateInputError("ncc: empty input series");
  }
  if (l2_norm(vas.values) == 0.0 || l2_norm(phat.values) == 0.0) {
    throw DegenerateInputError("ncc: zero-norm input (all-silent vas or phat)");
  }
  return scan_against(vas.values, prepare_phat(phat, vas.values.size()), range);
}

namespace {

GranularityLevel raw_notes_in_seconds(const GranularityLevel& raw_notes, double fr) {
  GranularityLevel out = raw_notes;
  for (AlignedSegment& s : out.segments) {
    s.t0 = annotations::raw_to_seconds(s.t0, 0.0, fr);
    s.t1 = annotations::raw_to_seconds(s.t1, 0.0, fr);
  }
  return out;
}

}  // namespace

NccResult align_global(const GranularityLevel& raw_notes, const FrameSeries& phat,
                       const GlobalAlignParams& params, int jobs) {
  if (params.fr_nominal <= 0.0) {
    throw ParameterError("align_global: fr_nominal must be positive");
  }
  if (params.fr_grid_steps < 1) {
    throw ParameterError("align_global: fr_grid_steps must be >= 1");
  }
  const double alpha = params.fr_nominal * params.alpha_fraction;
  const int steps = params.fr_grid_steps;

  struct Point {
    double fr = 0.0;
    NccScan scan;
  };
  std::vector<Point> points(static_cast<std::size_t>(steps));
  const LagRange full{-(static_cast<long>(phat.values.size()) - 1),
                      static_cast<long>(phat.values.size()) - 1};
  if (l2_norm(phat.values) == 0.0) {
    throw DegenerateInputError("align_global: all-silent phat");
  }
  const PreparedPhat prepared = prepare_phat(phat, phat.values.size());
  parallel_for(static_cast<std::size_t>(std::max(jobs, 1)),
               points.size(), [&](std::size_t s) {
                 const double fr =
                     steps == 1
                         ? params.fr_nominal
                         : params.fr_nominal - alpha +
                               2.0 * alpha * static_cast<double>(s) / (steps - 1);
                 const GranularityLevel seconds = raw_notes_in_seconds(raw_notes, fr);
                 const FrameSeries vas = annotations::rasterize_vas(seconds, phat.grid);
                 points[s].fr = fr;
                 points[s].scan = scan_against(vas.values, prepared, full);
               });

  std::size_t best = 0;
  for (std::size_t s = 1; s < points.size(); ++s) {
    if (points[s].scan.score > points[best].scan.score) best = s;
  }
  NccResult result;
  result.best_fr = points[best].fr;
  result.best_offset = static_cast<double>(points[best].scan.best_lag) * phat.grid.spacing_h;
  result.score = points[best].scan.score;
  result.accepted = result.score >= params.t_corr;
  return result;
}

CandidateSelection select_candidate(const FrameSeries& vas,
                                    std::span<const FrameSeries> candidates,
                                    const GlobalAlignParams& params, int jobs) {
  if (candidates.empty()) {
    throw ParameterError("select_candidate: at least one candidate required");
  }
  CandidateSelection out;
  out.scores.resize(candidates.size());
  parallel_for(static_cast<std::size_t>(std::max(jobs, 1)), candidates.size(),
               [&](std::size_t i) {
                 const LagRange full{
                     -(static_cast<long>(candidates[i].values.size()) - 1),
                     static_cast<long>(candidates[i].values.size()) - 1};
                 out.scores[i] = ncc(vas, candidates[i], full);
               });
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.scores.size(); ++i) {
    if (out.scores[i].score > out.scores[best].score) best = i;
  }
  if (out.scores[best].score >= params.t_corr) out.index = best;
  return out;
}

namespace {

// Member indices of each level assigned to each paragraph, via parent chains
// when present, else by time containment.
std::vector<std::vector<std::size_t>> paragraph_members(
    const SongAnnotations& song, Granularity g,
    const GranularityLevel& paragraphs) {
  const GranularityLevel* level = song.find(g);
  std::vector<std::vector<std::size_t>> members(paragraphs.segments.size());
  if (level == nullptr) return members;

  for (std::size_t i = 0; i < level->segments.size(); ++i) {
    // Walk parent links up to the paragraph level.
    std::optional<std::size_t> index = i;
    Granularity at = g;
    while (at != Granularity::paragraphs && index) {
      const GranularityLevel* current = song.find(at);
      if (current == nullptr || *index >= current->segments.size()) {
        index.reset();
        break;
      }
      index = current->segments[*index].parent_index;
      at = static_cast<Granularity>(static_cast<int>(at) + 1);
    }
    if (index && *index < members.size()) {
      members[*index].push_back(i);
      continue;
    }
    // Fallback: containment in the paragraph span.
    const AlignedSegment& s = level->segments[i];
    for (std::size_t p = 0; p < paragraphs.segments.size(); ++p) {
      if (s.t0 >= paragraphs.segments[p].t0 - 1e-9 &&
          s.t1 <= paragraphs.segments[p].t1 + 1e-9) {
        members[p].push_back(i);
        break;
      }
    }
  }
  return members;
}

}  // namespace

ParagraphAlignResult align_paragraph_local(const SongAnnotations& song,
                                           const FrameSeries& phat,
                                           [[maybe_unused]] const GlobalAlignParams& params,
                                           double window_pad) {
  const GranularityLevel* paragraphs = song.find(Granularity::paragraphs);
  const GranularityLevel* notes = song.find(Granularity::notes);
  if (paragraphs == nullptr || notes == nullptr) {
    throw SchemaError("align_paragraph_local: notes and paragraphs levels required");
  }

  ParagraphAlignResult result;
  result.corrected = song;
  const double h = phat.grid.spacing_h;
  const auto note_members = paragraph_members(song, Granularity::notes, *paragraphs);
  const long max_lag = static_cast<long>(std::floor(window_pad / h));

  double previous_end = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < paragraphs->segments.size(); ++p) {
    const AlignedSegment& par = paragraphs->segments[p];
    ParagraphCorrection corr;
    corr.paragraph_index = p;

    if (note_members[p].empty()) {
      corr.note = "empty paragraph, skipped";
      log::warn("align_paragraph_local: paragraph " + std::to_string(p) +
                " has no notes, skipped");
      result.corrections.push_back(corr);
      previous_end = std::max(previous_end, par.t1);
      continue;
    }

    // Window of phat around the paragraph span.
    const double w0 = std::max(0.0, par.t0 - window_pad);
    const long f0 = static_cast<long>(std::floor(w0 / h));
    const long f1 = std::min<long>(static_cast<long>(phat.values.size()),
                                   static_cast<long>(std::ceil((par.t1 + window_pad) / h)) + 1);
    if (f1 <= f0 + 1) {
      corr.note = "window outside phat, skipped";
      result.corrections.push_back(corr);
      previous_end = std::max(previous_end, par.t1);
      continue;
    }

    TimeGrid local_grid{h, static_cast<std::size_t>(f1 - f0)};
    GranularityLevel local_notes;
    local_notes.level = Granularity::notes;
    for (std::size_t i : note_members[p]) {
      AlignedSegment s = notes->segments[i];
      s.t0 -= static_cast<double>(f0) * h;
      s.t1 -= static_cast<double>(f0) * h;
      local_notes.segments.push_back(s);
    }
    FrameSeries local_vas = annotations::rasterize_vas(local_notes, local_grid);
    FrameSeries local_phat;
    local_phat.grid = local_grid;
    local_phat.values.assign(phat.values.begin() + f0, phat.values.begin() + f1);

    NccScan scan;
    try {
      scan = ncc(local_vas, local_phat, {-max_lag, max_lag});
    } catch (const DegenerateInputError&) {
      corr.note = "degenerate window, skipped";
      result.corrections.push_back(corr);
      previous_end = std::max(previous_end, par.t1);
      continue;
    }
    corr.offset_seconds = static_cast<double>(scan.best_lag) * h;
    corr.score = scan.score;

    // Ordering guard: the shifted span must stay clear of its neighbors.
    const double new_t0 = par.t0 + corr.offset_seconds;
    const double new_t1 = par.t1 + corr.offset_seconds;
    const double next_start = p + 1 < paragraphs->segments.size()
                                  ? paragraphs->segments[p + 1].t0
                                  : std::numeric_limits<double>::infinity();
    if (new_t0 < 0.0 || new_t0 < previous_end || new_t1 > next_start) {
      corr.applied = false;
      corr.note = "correction would break paragraph ordering, kept original";
      result.corrections.push_back(corr);
      previous_end = std::max(previous_end, par.t1);
      continue;
    }

    corr.applied = true;
    auto& corrected_pars = result.corrected.levels[Granularity::paragraphs].segments;
    corrected_pars[p].t0 = new_t0;
    corrected_pars[p].t1 = new_t1;
    for (Granularity g : {Granularity::notes, Granularity::words, Granularity::lines}) {
      if (song.find(g) == nullptr) continue;
      const auto members = paragraph_members(song, g, *paragraphs);
      auto& segs = result.corrected.levels[g].segments;
      for (std::size_t i : members[p]) {
        segs[i].t0 += corr.offset_seconds;
        segs[i].t1 += corr.offset_seconds;
      }
    }
    previous_end = new_t1;
    result.corrections.push_back(corr);
  }
  return result;
}

FrequencyCorrelation frequency_correlation(const GranularityLevel& notes,
                                           const DenseMatrix& salience,
                                           const TimeGrid& grid,
                                           std::span<const double> bins,
                                           double voicing_threshold) {
  if (salience.rows() != grid.n_frames || salience.cols() != bins.size()) {
    throw ParameterError("frequency_correlation: salience shape does not match grid/bins");
  }
  const auto rasterized = annotations::note_matrix(notes, grid, bins);
  const DenseMatrix& yhat = rasterized.matrix;
  const long j_bins = static_cast<long>(bins.size());

  // Annotated cells, gathered once.
  std::vector<std::pair<std::size_t, long>> cells;
  std::vector<long> ref_bin(grid.n_frames, -1);
  for (std::size_t i = 0; i < yhat.rows(); ++i) {
    for (long j = 0; j < j_bins; ++j) {
      if (yhat.at(i, static_cast<std::size_t>(j)) != 0.0f) {
        cells.emplace_back(i, j);
        ref_bin[i] = j;
      }
    }
  }

  // Salience-side estimate, independent of the shift.
  std::vector<long> est_bin(grid.n_frames, 0);
  std::vector<bool> est_voiced(grid.n_frames, false);
  for (std::size_t i = 0; i < grid.n_frames; ++i) {
    float best = -1.0f;
    for (long j = 0; j < j_bins; ++j) {
      const float v = salience.at(i, static_cast<std::size_t>(j));
      if (v > best) {
        best = v;
        est_bin[i] = j;
      }
    }
    est_voiced[i] = best >= static_cast<float>(voicing_threshold);
  }

  FrequencyCorrelation out;
  for (long shift = -(j_bins - 1); shift <= j_bins - 1; ++shift) {
    ShiftMetrics m;
    m.shift = static_cast<int>(shift);
    double energy = 0.0;
    for (const auto& [i, j] : cells) {
      const long jj = j + shift;
      if (jj >= 0 && jj < j_bins) {
        energy += salience.at(i, static_cast<std::size_t>(jj));
      }
    }
    m.energy = energy;

    std::size_t ref_voiced_n = 0, ref_unvoiced_n = 0;
    std::size_t pitch_ok = 0, chroma_ok = 0, both_voiced = 0, false_alarm = 0;
    std::size_t overall_ok = 0;
    for (std::size_t i = 0; i < grid.n_frames; ++i) {
      const bool rv = ref_bin[i] >= 0;
      if (rv) {
        ++ref_voiced_n;
        const long target = ref_bin[i] + shift;
        const bool in_range = target >= 0 && target < j_bins;
        const bool pitch_match = in_range && est_bin[i] == target;
        const bool chroma_match =
            in_range && ((est_bin[i] % 12) == ((target % 12) + 12) % 12);
        if (pitch_match) ++pitch_ok;
        if (chroma_match) ++chroma_ok;
        if (est_voiced[i]) {
          ++both_voiced;
          if (pitch_match) ++overall_ok;
        }
      } else {
        ++ref_unvoiced_n;
        if (est_voiced[i]) {
          ++false_alarm;
        } else {
          ++overall_ok;
        }
      }
    }
    const double t = static_cast<double>(grid.n_frames);
    m.raw_pitch_accuracy = ref_voiced_n ? static_cast<double>(pitch_ok) / ref_voiced_n : 0.0;
    m.raw_chroma_accuracy = ref_voiced_n ? static_cast<double>(chroma_ok) / ref_voiced_n : 0.0;
    m.voicing_recall = ref_voiced_n ? static_cast<double>(both_voiced) / ref_voiced_n : 0.0;
    m.voicing_false_alarm =
        ref_unvoiced_n ? static_cast<double>(false_alarm) / ref_unvoiced_n : 0.0;
    m.overall_accuracy = t > 0.0 ? static_cast<double>(overall_ok) / t : 0.0;
    out.per_shift.push_back(m);
  }

  // Argmax energy; ties prefer the smaller |shift|, then the smaller shift.
  std::size_t best = 0;
  for (std::size_t s = 1; s < out.per_shift.size(); ++s) {
    const ShiftMetrics& a = out.per_shift[s];
    const ShiftMetrics& b = out.per_shift[best];
    const bool better = a.energy > b.energy + 1e-12 ||
                        (std::abs(a.energy - b.energy) <= 1e-12 &&
                         (std::abs(a.shift) < std::abs(b.shift) ||
                          (std::abs(a.shift) == std::abs(b.shift) && a.shift < b.shift)));
    if (better) best = s;
  }
  out.best_shift = out.per_shift[best].shift;
  out.energy = out.per_shift[best].energy;
  return out;
}

std::set<std::size_t> detect_vocal_tracks(std::span<const double> track_means,
                                          double tolerance) {
  if (track_means.empty()) {
    throw ParameterError("detect_vocal_tracks: at least one track required");
  }
  double max_mean = track_means[0];
  for (double m : track_means) max_mean = std::max(max_mean, m);
  std::set<std::size_t> vocal;
  for (std::size_t i = 0; i < track_means.size(); ++i) {
    if (track_means[i] >= (1.0 - tolerance) * max_mean) vocal.insert(i);
  }
  return vocal;
}

}  // namespace lyraline::global_align
