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

#include "lyraline/local_align.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lyraline::local_align {

namespace {

using annotations::AlignedSegment;
using annotations::GranularityLevel;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogFloor = 1e-12;

double cosine_distance(std::span<const float> u, std::span<const float> v) {
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<double>(u[i]) * v[i];
    nu += static_cast<double>(u[i]) * u[i];
    nv += static_cast<double>(v[i]) * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 1.0;
  return 1.0 - std::abs(dot) / (std::sqrt(nu) * std::sqrt(nv));
}

}  // namespace

DtwResult dtw(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() == 0 || b.rows() == 0) {
    throw ParameterError("dtw: empty feature sequence");
  }
  if (a.cols() != b.cols()) {
    throw ParameterError("dtw: feature dimensionality mismatch");
  }
  const std::size_t p = a.rows(), q = b.rows();

  std::vector<double> dist(p * q);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      dist[i * q + j] = cosine_distance(a.row(i), b.row(j));
    }
  }

  std::vector<double> cum(p * q);
  std::vector<std::uint8_t> step(p * q, 0);  // 0 diag, 1 up, 2 left
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      const double d = dist[i * q + j];
      if (i == 0 && j == 0) {
        cum[0] = d;
      } else if (i == 0) {
        cum[j] = cum[j - 1] + d;
        step[j] = 2;
      } else if (j == 0) {
        cum[i * q] = cum[(i - 1) * q] + d;
        step[i * q] = 1;
      } else {
        const double diag = cum[(i - 1) * q + (j - 1)];
        const double up = cum[(i - 1) * q + j];
        const double left = cum[i * q + (j - 1)];
        double best = diag;
        std::uint8_t how = 0;
        if (up < best) {
          best = up;
          how = 1;
        }
        if (left < best) {
          best = left;
          how = 2;
        }
        cum[i * q + j] = best + d;
        step[i * q + j] = how;
      }
    }
  }

  DtwResult result;
  result.cost = cum[p * q - 1];
  std::size_t i = p - 1, j = q - 1;
  for (;;) {
    result.path.emplace_back(i, j);
    if (i == 0 && j == 0) break;
    switch (step[i * q + j]) {
      case 0: --i; --j; break;
      case 1: --i; break;
      default: --j; break;
    }
  }
  std::reverse(result.path.begin(), result.path.end());
  result.path_len = result.path.size();
  result.similarity = 1.0 - result.cost / static_cast<double>(result.path_len);
  return result;
}

DenseMatrix build_observation(const DenseMatrix& salience) {
  const std::size_t t_frames = salience.rows();
  const std::size_t j_bins = salience.cols();
  DenseMatrix obs(t_frames, j_bins + 1);
  for (std::size_t t = 0; t < t_frames; ++t) {
    double max_bin = 0.0;
    for (std::size_t j = 0; j < j_bins; ++j) {
      max_bin = std::max(max_bin, static_cast<double>(salience.at(t, j)));
    }
    const double silence = 1.0 - max_bin;
    // Stable softmax over bins plus the silence column.
    double max_value = silence;
    for (std::size_t j = 0; j < j_bins; ++j) {
      max_value = std::max(max_value, static_cast<double>(salience.at(t, j)));
    }
    double denom = std::exp(silence - max_value);
    for (std::size_t j = 0; j < j_bins; ++j) {
      denom += std::exp(static_cast<double>(salience.at(t, j)) - max_value);
    }
    for (std::size_t j = 0; j < j_bins; ++j) {
      obs.at(t, j) = static_cast<float>(
          std::exp(static_cast<double>(salience.at(t, j)) - max_value) / denom);
    }
    obs.at(t, j_bins) = static_cast<float>(std::exp(silence - max_value) / denom);
  }
  return obs;
}

NoteStateGraph build_graph(const GranularityLevel& notes, const GraphConfig& cfg) {
  if (notes.segments.empty()) {
    throw ParameterError("build_graph: at least one note required");
  }
  NoteStateGraph graph;
  graph.mode = cfg.mode;
  graph.octave_fold = cfg.octave_fold;
  graph.note_count = notes.segments.size();

  graph.states.push_back(NoteState{});  // leading blank
  for (std::size_t k = 0; k < notes.segments.size(); ++k) {
    const AlignedSegment& s = notes.segments[k];
    NoteState state;
    state.blank = false;
    state.note_index = k;
    if (cfg.mode == GraphMode::pitch || cfg.mode == GraphMode::joint) {
      if (s.f_min <= 0.0) {
        throw SchemaError("build_graph: note " + std::to_string(k) +
                          " has a non-positive frequency");
      }
      const double bin_real =
          cfg.bins_per_octave * std::log2(s.f_min / cfg.f_min);
      const long bin = std::lround(bin_real);
      if (bin < 0 || bin >= cfg.n_bins) {
        throw SchemaError("build_graph: note " + std::to_string(k) + " at " +
                          std::to_string(s.f_min) + " Hz quantizes outside the ladder");
      }
      state.pitch_bin = cfg.octave_fold
                            ? static_cast<int>(bin % cfg.bins_per_octave)
                            : static_cast<int>(bin);
    }
    if (cfg.mode == GraphMode::text || cfg.mode == GraphMode::joint) {
      const auto it = std::find(cfg.alphabet.begin(), cfg.alphabet.end(), s.text);
      if (it == cfg.alphabet.end()) {
        throw SchemaError("build_graph: note " + std::to_string(k) + " text '" +
                          s.text + "' is not in the alphabet");
      }
      state.text_symbol = static_cast<int>(it - cfg.alphabet.begin());
    }
    graph.states.push_back(state);
    graph.states.push_back(NoteState{});  // blank after each note
  }
  return graph;
}

namespace {

// Annotation-prior factor for an observation cell (frame, column).
struct AnnotationPrior {
  bool enabled = false;
  double weight = 1.0;
  std::vector<std::vector<bool>> active;  // [frame][column], silence included

  double factor(std::size_t t, std::size_t col) const {
    if (!enabled) return 1.0;
    return active[t][col] ? 1.0 : weight;
  }
};

AnnotationPrior make_prior(const GranularityLevel& original_notes,
                           const NoteStateGraph& graph, const TimeGrid& grid,
                           std::size_t n_cols, const ViterbiConfig& cfg) {
  AnnotationPrior prior;
  if (cfg.annotation_prior <= 0.0 || cfg.annotation_prior >= 1.0) return prior;
  prior.enabled = true;
  prior.weight = cfg.annotation_prior;
  prior.active.assign(grid.n_frames, std::vector<bool>(n_cols, false));
  const std::size_t silence_col = n_cols - 1;
  std::vector<bool> voiced(grid.n_frames, false);
  for (std::size_t k = 0; k < original_notes.segments.size(); ++k) {
    const AlignedSegment& s = original_notes.segments[k];
    const int bin = graph.states[2 * k + 1].pitch_bin;
    for (std::size_t t = 0; t < grid.n_frames; ++t) {
      const double r = grid.time_at(t);
      if (r >= s.t0 && r < s.t1) {
        voiced[t] = true;
        if (bin >= 0 && static_cast<std::size_t>(bin) < silence_col) {
          prior.active[t][static_cast<std::size_t>(bin)] = true;
        }
      }
    }
  }
  for (std::size_t t = 0; t < grid.n_frames; ++t) {
    if (!voiced[t]) prior.active[t][silence_col] = true;
  }
  return prior;
}

double note_emission(const DenseMatrix& obs, std::size_t t, int bin,
                     const ViterbiConfig& cfg, bool octave_fold,
                     const AnnotationPrior& prior) {
  const std::size_t j_bins = obs.cols() - 1;
  double acc = 0.0;
  auto add_window = [&](int center, double weight) {
    for (int j = center - cfg.pitch_tolerance; j <= center + cfg.pitch_tolerance; ++j) {
      if (j < 0 || static_cast<std::size_t>(j) >= j_bins) continue;
      acc += weight * obs.at(t, static_cast<std::size_t>(j)) *
             prior.factor(t, static_cast<std::size_t>(j));
    }
  };
  if (octave_fold) {
    for (int base = bin; static_cast<std::size_t>(base) < j_bins; base += 12) {
      add_window(base, 1.0);
    }
  } else {
    add_window(bin, 1.0);
    if (cfg.octave_neighbors) {
      add_window(bin - 12, cfg.octave_neighbor_weight);
      add_window(bin + 12, cfg.octave_neighbor_weight);
    }
  }
  return acc;
}

double state_emission_log(const NoteStateGraph& graph, const DenseMatrix& obs,
                          const DenseMatrix* text_obs, std::size_t state,
                          std::size_t t, const ViterbiConfig& cfg,
                          const AnnotationPrior& prior) {
  const NoteState& s = graph.states[state];
  if (s.blank) {
    const std::size_t silence_col = obs.cols() - 1;
    double value = obs.at(t, silence_col) * prior.factor(t, silence_col);
    if (graph.mode == GraphMode::joint && text_obs != nullptr) {
      const double text_sil = text_obs->at(t, text_obs->cols() - 1);
      return cfg.joint_lambda * std::log(std::max(value, kLogFloor)) +
             (1.0 - cfg.joint_lambda) * std::log(std::max(text_sil, kLogFloor));
    }
    return std::log(std::max(value, kLogFloor));
  }

  double pitch_part = 0.0;
  if (graph.mode == GraphMode::pitch || graph.mode == GraphMode::joint) {
    pitch_part = note_emission(obs, t, s.pitch_bin, cfg, graph.octave_fold, prior);
  }
  double text_part = 0.0;
  if (graph.mode == GraphMode::text) {
    text_part = obs.at(t, static_cast<std::size_t>(s.text_symbol));
    return std::log(std::max(text_part, kLogFloor));
  }
  if (graph.mode == GraphMode::joint) {
    const DenseMatrix& tm = text_obs != nullptr ? *text_obs : obs;
    text_part = tm.at(t, static_cast<std::size_t>(s.text_symbol));
    return cfg.joint_lambda * std::log(std::max(pitch_part, kLogFloor)) +
           (1.0 - cfg.joint_lambda) * std::log(std::max(text_part, kLogFloor));
  }
  return std::log(std::max(pitch_part, kLogFloor));
}

// Predecessors of each state in the blank-interleaved chain.
std::vector<std::size_t> predecessors(const NoteStateGraph& graph, std::size_t state) {
  std::vector<std::size_t> from{state};  // self-loop always legal
  if (graph.states[state].blank) {
    if (state > 0) from.push_back(state - 1);  // previous note
  } else {
    from.push_back(state - 1);                 // previous blank
    if (state >= 2) from.push_back(state - 2); // previous note, blank skipped
  }
  return from;
}

// Relative-duration transition prior, normalized over each source's fan-out.
struct DurationPrior {
  bool enabled = false;
  std::vector<std::vector<double>> log_factor;  // [to][slot matching predecessors()]

  double get(std::size_t to, std::size_t slot) const {
    return enabled ? log_factor[to][slot] : 0.0;
  }
};

DurationPrior make_duration_prior(const NoteStateGraph& graph,
                                  const GranularityLevel& original_notes,
                                  const ViterbiConfig& cfg) {
  DurationPrior prior;
  if (cfg.duration_prior <= 0.0) return prior;
  prior.enabled = true;

  double total = 0.0;
  for (const auto& s : original_notes.segments) total += s.t1 - s.t0;
  const std::size_t n_states = graph.states.size();
  std::vector<double> base(n_states, 1.0 / static_cast<double>(n_states));
  for (std::size_t s = 0; s < n_states; ++s) {
    if (!graph.states[s].blank && total > 0.0) {
      const auto& seg = original_notes.segments[graph.states[s].note_index];
      base[s] = std::max((seg.t1 - seg.t0) / total, 1e-6);
    }
  }

  // weight(from -> to) = base(to)^lambda, normalized over the successors of
  // `from`; stored per destination in predecessor-slot order.
  std::vector<std::vector<std::size_t>> succ(n_states);
  for (std::size_t to = 0; to < n_states; ++to) {
    for (std::size_t from : predecessors(graph, to)) succ[from].push_back(to);
  }
  std::vector<double> norm(n_states, 0.0);
  for (std::size_t from = 0; from < n_states; ++from) {
    for (std::size_t to : succ[from]) {
      norm[from] += std::pow(base[to], cfg.duration_prior);
    }
  }
  prior.log_factor.resize(n_states);
  for (std::size_t to = 0; to < n_states; ++to) {
    const auto preds = predecessors(graph, to);
    prior.log_factor[to].resize(preds.size(), 0.0);
    for (std::size_t slot = 0; slot < preds.size(); ++slot) {
      const std::size_t from = preds[slot];
      const double w = std::pow(base[to], cfg.duration_prior) / norm[from];
      prior.log_factor[to][slot] = std::log(std::max(w, kLogFloor));
    }
  }
  return prior;
}

}  // namespace

ViterbiResult viterbi_align(const NoteStateGraph& graph, const DenseMatrix& obs,
                            const TimeGrid& grid,
                            const GranularityLevel& original_notes,
                            const ViterbiConfig& cfg, const DenseMatrix* text_obs) {
  const std::size_t n_states = graph.states.size();
  const std::size_t t_frames = obs.rows();
  if (obs.rows() != grid.n_frames) {
    throw ParameterError("viterbi_align: obs rows must match the grid");
  }
  if (original_notes.segments.size() != graph.note_count) {
    throw ParameterError("viterbi_align: note list does not match the graph");
  }
  // The decoded path is pinned to the leading and trailing blanks, so every
  // note plus both end blanks needs a frame.
  if (t_frames < graph.note_count + 2) {
    throw DegenerateInputError("viterbi_align: observation too short (" +
                               std::to_string(t_frames) + " frames for " +
                               std::to_string(graph.note_count) + " notes)");
  }

  const AnnotationPrior prior =
      make_prior(original_notes, graph, grid, obs.cols(), cfg);
  const DurationPrior duration = make_duration_prior(graph, original_notes, cfg);

  std::vector<double> score(n_states * t_frames, kNegInf);
  std::vector<std::uint32_t> back(n_states * t_frames, 0);
  score[0] = state_emission_log(graph, obs, text_obs, 0, 0, cfg, prior);

  for (std::size_t t = 1; t < t_frames; ++t) {
    for (std::size_t s = 0; s < n_states; ++s) {
      const auto preds = predecessors(graph, s);
      double best = kNegInf;
      std::uint32_t best_from = 0;
      for (std::size_t slot = 0; slot < preds.size(); ++slot) {
        const std::size_t from = preds[slot];
        const double prev = score[(t - 1) * n_states + from];
        if (prev == kNegInf) continue;
        const double candidate = prev + duration.get(s, slot);
        if (candidate > best) {
          best = candidate;
          best_from = static_cast<std::uint32_t>(from);
        }
      }
      if (best == kNegInf) continue;
      score[t * n_states + s] =
          best + state_emission_log(graph, obs, text_obs, s, t, cfg, prior);
      back[t * n_states + s] = best_from;
    }
  }

  const std::size_t final_state = n_states - 1;
  const double total = score[(t_frames - 1) * n_states + final_state];
  if (total == kNegInf) {
    throw DegenerateInputError("viterbi_align: no feasible path");
  }

  // Backtrack; with duration_backtrack_delta, near-optimal predecessors that
  // keep note durations closer to the annotated ones are preferred.
  std::vector<std::size_t> path(t_frames);
  path[t_frames - 1] = final_state;
  std::vector<double> ann_frames(graph.note_count, 0.0);
  for (std::size_t k = 0; k < graph.note_count; ++k) {
    ann_frames[k] =
        (original_notes.segments[k].t1 - original_notes.segments[k].t0) /
        grid.spacing_h;
  }
  std::size_t run_length = 1;
  for (std::size_t t = t_frames - 1; t > 0; --t) {
    const std::size_t s = path[t];
    std::size_t chosen = back[t * n_states + s];
    if (cfg.duration_backtrack_delta > 0.0) {
      const auto preds = predecessors(graph, s);
      const double here = score[t * n_states + s];
      const double emit = state_emission_log(graph, obs, text_obs, s, t, cfg, prior);
      // Feasible near-optimal predecessors.
      std::vector<std::size_t> close;
      for (std::size_t slot = 0; slot < preds.size(); ++slot) {
        const double prev = score[(t - 1) * n_states + preds[slot]];
        if (prev == kNegInf) continue;
        if (prev + duration.get(s, slot) + emit >= here - cfg.duration_backtrack_delta) {
          close.push_back(preds[slot]);
        }
      }
      if (close.size() > 1 && !graph.states[s].blank) {
        const double want = ann_frames[graph.states[s].note_index];
        const bool prefer_stay = static_cast<double>(run_length) < want;
        for (std::size_t c : close) {
          if ((c == s) == prefer_stay) {
            chosen = c;
            break;
          }
        }
      }
    }
    path[t - 1] = chosen;
    run_length = chosen == s ? run_length + 1 : 1;
  }

  ViterbiResult result;
  result.state_path = path;
  result.log_likelihood = total;
  result.corrected = original_notes;
  result.duration_ratio.assign(graph.note_count, 0.0);

  std::vector<long> first(graph.note_count, -1), last(graph.note_count, -1);
  for (std::size_t t = 0; t < t_frames; ++t) {
    const NoteState& s = graph.states[path[t]];
    if (s.blank) continue;
    if (first[s.note_index] < 0) first[s.note_index] = static_cast<long>(t);
    last[s.note_index] = static_cast<long>(t);
  }
  for (std::size_t k = 0; k < graph.note_count; ++k) {
    if (first[k] < 0) {
      throw DegenerateInputError("viterbi_align: decoded path skipped note " +
                                 std::to_string(k));
    }
    auto& seg = result.corrected.segments[k];
    const double old_duration = seg.t1 - seg.t0;
    seg.t0 = grid.time_at(static_cast<std::size_t>(first[k]));
    seg.t1 = grid.time_at(static_cast<std::size_t>(last[k]) + 1);
    result.duration_ratio[k] =
        old_duration > 0.0 ? (seg.t1 - seg.t0) / old_duration : 0.0;
  }
  return result;
}

double path_log_likelihood(const NoteStateGraph& graph, const DenseMatrix& obs,
                           std::span<const std::size_t> state_path,
                           const ViterbiConfig& cfg, const DenseMatrix* text_obs) {
  if (state_path.size() != obs.rows()) {
    throw ParameterError("path_log_likelihood: path length must equal frame count");
  }
  if (state_path.empty()) throw ParameterError("path_log_likelihood: empty path");
  if (state_path.front() != 0 || state_path.back() != graph.states.size() - 1) {
    throw ParameterError("path_log_likelihood: path must span both end blanks");
  }
  const AnnotationPrior no_prior;  // priors belong to the decode under test
  double acc = 0.0;
  for (std::size_t t = 0; t < state_path.size(); ++t) {
    if (t > 0) {
      const auto preds = predecessors(graph, state_path[t]);
      if (std::find(preds.begin(), preds.end(), state_path[t - 1]) == preds.end()) {
        throw ParameterError("path_log_likelihood: illegal transition at frame " +
                             std::to_string(t));
      }
    }
    acc += state_emission_log(graph, obs, text_obs, state_path[t], t, cfg, no_prior);
  }
  return acc;
}

std::vector<int> default_intervals() { return {12, -12, 7, -7, 5, -5, 4, -4}; }

BeamVariantResult beam_variants(const NoteStateGraph& graph, const DenseMatrix& obs,
                                const TimeGrid& grid, const GranularityLevel& notes,
                                const ViterbiConfig& cfg, std::span<const int> intervals,
                                std::size_t beam_width) {
  if (beam_width == 0) throw ParameterError("beam_variants: beam_width must be >= 1");
  const std::size_t n_notes = graph.note_count;
  const std::size_t j_bins = obs.cols() - 1;

  std::vector<int> options{0};
  for (int v : intervals) options.push_back(v);

  struct Hypothesis {
    std::vector<int> subs;
    double score = kNegInf;
  };

  auto apply_subs = [&](const std::vector<int>& subs) {
    NoteStateGraph variant = graph;
    for (std::size_t k = 0; k < subs.size(); ++k) {
      variant.states[2 * k + 1].pitch_bin += subs[k];
    }
    return variant;
  };
  auto evaluate = [&](const std::vector<int>& subs) -> double {
    NoteStateGraph variant = apply_subs(subs);
    for (std::size_t k = 0; k < subs.size(); ++k) {
      const int bin = variant.states[2 * k + 1].pitch_bin;
      if (bin < 0 || static_cast<std::size_t>(bin) >= j_bins) return kNegInf;
    }
    try {
      return viterbi_align(variant, obs, grid, notes, cfg).log_likelihood;
    } catch (const DegenerateInputError&) {
      return kNegInf;
    }
  };

  std::vector<Hypothesis> beam{{std::vector<int>(), 0.0}};
  for (std::size_t k = 0; k < n_notes; ++k) {
    std::vector<Hypothesis> expanded;
    for (const Hypothesis& h : beam) {
      for (int option : options) {
        Hypothesis next;
        next.subs = h.subs;
        next.subs.push_back(option);
        // Unchosen notes keep their original pitch while scoring the prefix.
        std::vector<int> full = next.subs;
        full.resize(n_notes, 0);
        next.score = evaluate(full);
        expanded.push_back(std::move(next));
      }
    }
    std::stable_sort(expanded.begin(), expanded.end(),
                     [](const Hypothesis& a, const Hypothesis& b) {
                       return a.score > b.score;
                     });
    if (expanded.size() > beam_width) expanded.resize(beam_width);
    beam = std::move(expanded);
  }

  const Hypothesis& best = beam.front();
  BeamVariantResult result;
  result.graph = apply_subs(best.subs);
  result.substitutions = best.subs;
  result.score = best.score;
  return result;
}

}  // namespace lyraline::local_align
