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

#include "lyraline/cleansing.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "lyraline/dsp.hpp"
#include "lyraline/io.hpp"
#include "lyraline/log.hpp"

namespace lyraline::cleansing {

AgreementScores agreement(const DenseMatrix& yhat, const DenseMatrix& salience,
                          std::size_t k_window, TimeGrid grid) {
  check_same_shape(yhat, salience, "agreement");
  if (k_window == 0) throw ParameterError("agreement: k_window must be >= 1");
  const std::size_t t_frames = yhat.rows();
  if (grid.n_frames == 0) grid.n_frames = t_frames;
  if (grid.n_frames != t_frames) {
    throw ParameterError("agreement: grid frame count does not match matrices");
  }

  AgreementScores scores;
  scores.k_window = k_window;
  scores.kappa_l = FrameSeries(grid, 0.0f);
  scores.kappa_p = FrameSeries(grid, 0.0f);
  for (std::size_t i = 0; i < t_frames; ++i) {
    float best = 0.0f;
    for (std::size_t j = 0; j < yhat.cols(); ++j) {
      best = std::max(best, yhat.at(i, j) * salience.at(i, j));
    }
    scores.kappa_l.values[i] = best;
  }

  // Centered k-point moving average, truncated at the track edges.
  const long before = static_cast<long>((k_window - 1) / 2);
  const long after = static_cast<long>(k_window - 1) - before;
  for (long i = 0; i < static_cast<long>(t_frames); ++i) {
    const long lo = std::max(0L, i - before);
    const long hi = std::min(static_cast<long>(t_frames) - 1, i + after);
    double acc = 0.0;
    for (long j = lo; j <= hi; ++j) {
      acc += scores.kappa_l.values[static_cast<std::size_t>(j)];
    }
    scores.kappa_p.values[static_cast<std::size_t>(i)] =
        static_cast<float>(acc / static_cast<double>(hi - lo + 1));
  }
  return scores;
}

std::vector<std::size_t> select_likely_correct(const AgreementScores& scores,
                                               Split split) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scores.kappa_l.values.size(); ++i) {
    const double kl = scores.kappa_l.values[i];
    const double kp = scores.kappa_p.values[i];
    const bool selected = split == Split::test
                              ? (kl > 0.999 && kp > 0.85)
                              : (kl > 0.9 && kl <= 0.999 && kp > 0.7 && kp <= 0.85);
    if (selected) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> select_silence_correct(const FrameSeries& vocals_energy_db,
                                                const DenseMatrix& yhat,
                                                std::size_t window_v,
                                                double threshold_db) {
  if (window_v == 0) throw ParameterError("select_silence_correct: window must be >= 1");
  const std::size_t t_frames = yhat.rows();
  std::vector<bool> annotated(t_frames, false);
  for (std::size_t i = 0; i < t_frames; ++i) {
    for (std::size_t j = 0; j < yhat.cols(); ++j) {
      if (yhat.at(i, j) != 0.0f) {
        annotated[i] = true;
        break;
      }
    }
  }
  const long half = static_cast<long>(window_v / 2);
  std::vector<std::size_t> out;
  for (long i = 0; i < static_cast<long>(t_frames); ++i) {
    if (i >= static_cast<long>(vocals_energy_db.values.size())) break;
    if (vocals_energy_db.values[static_cast<std::size_t>(i)] >= threshold_db) continue;
    const long lo = std::max(0L, i - half);
    const long hi = std::min(static_cast<long>(t_frames) - 1, i + half);
    bool clean = true;
    for (long j = lo; j <= hi && clean; ++j) {
      clean = !annotated[static_cast<std::size_t>(j)];
    }
    if (clean) out.push_back(static_cast<std::size_t>(i));
  }
  return out;
}

namespace {

struct NoteRun {
  std::size_t bin = 0;
  long start = 0;  // first frame
  long end = 0;    // last frame, inclusive
};

// Active bin per frame; -1 means silent. Patches follow Eq-style rasters, so
// at most one bin per frame is expected; the lowest wins otherwise.
std::vector<long> active_bins(const DenseMatrix& patch) {
  std::vector<long> bins(patch.cols(), -1);
  for (std::size_t c = 0; c < patch.cols(); ++c) {
    for (std::size_t b = 0; b < patch.rows(); ++b) {
      if (patch.at(b, c) != 0.0f) {
        bins[c] = static_cast<long>(b);
        break;
      }
    }
  }
  return bins;
}

std::vector<NoteRun> parse_runs(const DenseMatrix& patch) {
  const std::vector<long> bins = active_bins(patch);
  std::vector<NoteRun> runs;
  for (std::size_t c = 0; c < bins.size(); ++c) {
    if (bins[c] < 0) continue;
    if (!runs.empty() && runs.back().end == static_cast<long>(c) - 1 &&
        runs.back().bin == static_cast<std::size_t>(bins[c])) {
      runs.back().end = static_cast<long>(c);
    } else {
      runs.push_back({static_cast<std::size_t>(bins[c]), static_cast<long>(c),
                      static_cast<long>(c)});
    }
  }
  return runs;
}

DenseMatrix render_runs(const std::vector<NoteRun>& runs, std::size_t n_bins,
                        std::size_t n_frames) {
  DenseMatrix patch(n_bins, n_frames, 0.0f);
  for (const NoteRun& r : runs) {
    for (long c = std::max(0L, r.start);
         c <= std::min(static_cast<long>(n_frames) - 1, r.end); ++c) {
      patch.at(r.bin, static_cast<std::size_t>(c)) = 1.0f;
    }
  }
  return patch;
}

bool column_equal(const DenseMatrix& a, const DenseMatrix& b, std::size_t col) {
  for (std::size_t r = 0; r < a.rows(); ++r) {
    if (a.at(r, col) != b.at(r, col)) return false;
  }
  return true;
}

}  // namespace

std::optional<DenseMatrix> deform(const DenseMatrix& patch_y,
                                  const DeformationSpec& spec, std::uint64_t seed) {
  if (patch_y.rows() == 0 || patch_y.cols() == 0) {
    throw ParameterError("deform: empty patch");
  }
  const std::size_t n_bins = patch_y.rows();
  const std::size_t n_frames = patch_y.cols();
  const std::size_t center = n_frames / 2;
  std::mt19937_64 rng(seed);

  for (int attempt = 0; attempt < spec.max_retries; ++attempt) {
    std::vector<NoteRun> runs = parse_runs(patch_y);
    bool changed = false;

    switch (spec.op) {
      case DeformOp::shift_onset:
      case DeformOp::shift_offset: {
        if (runs.empty()) break;
        const std::size_t pick =
            std::uniform_int_distribution<std::size_t>(0, runs.size() - 1)(rng);
        const int magnitude = std::uniform_int_distribution<int>(
            spec.min_shift_frames, spec.max_shift_frames)(rng);
        const int sign = std::uniform_int_distribution<int>(0, 1)(rng) ? 1 : -1;
        NoteRun& r = runs[pick];
        if (spec.op == DeformOp::shift_onset) {
          const long new_start = r.start + sign * magnitude;
          const long prev_end = pick > 0 ? runs[pick - 1].end : -1;
          if (new_start > prev_end && new_start >= 0 && new_start <= r.end) {
            r.start = new_start;
            changed = true;
          }
        } else {
          const long new_end = r.end + sign * magnitude;
          const long next_start = pick + 1 < runs.size()
                                      ? runs[pick + 1].start
                                      : static_cast<long>(n_frames);
          if (new_end < next_start && new_end >= r.start &&
              new_end < static_cast<long>(n_frames)) {
            r.end = new_end;
            changed = true;
          }
        }
        break;
      }
      case DeformOp::transpose: {
        if (runs.empty() || spec.semitones.empty()) break;
        const std::size_t pick =
            std::uniform_int_distribution<std::size_t>(0, runs.size() - 1)(rng);
        const int semitone = spec.semitones[std::uniform_int_distribution<std::size_t>(
            0, spec.semitones.size() - 1)(rng)];
        const long new_bin = static_cast<long>(runs[pick].bin) + semitone;
        if (new_bin >= 0 && new_bin < static_cast<long>(n_bins)) {
          runs[pick].bin = static_cast<std::size_t>(new_bin);
          changed = true;
        }
        break;
      }
      case DeformOp::delete_note: {
        if (runs.empty()) break;
        const std::size_t pick =
            std::uniform_int_distribution<std::size_t>(0, runs.size() - 1)(rng);
        runs.erase(runs.begin() + static_cast<long>(pick));
        changed = true;
        break;
      }
      case DeformOp::insert_note: {
        // Candidate gaps able to hold at least a minimum-length note.
        struct Gap {
          long start, end;  // inclusive frame range
        };
        std::vector<Gap> gaps;
        long cursor = 0;
        for (const NoteRun& r : runs) {
          if (r.start - cursor >= spec.min_note_frames) {
            gaps.push_back({cursor, r.start - 1});
          }
          cursor = r.end + 1;
        }
        if (static_cast<long>(n_frames) - cursor >= spec.min_note_frames) {
          gaps.push_back({cursor, static_cast<long>(n_frames) - 1});
        }
        if (gaps.empty()) break;
        const Gap gap = gaps[std::uniform_int_distribution<std::size_t>(
            0, gaps.size() - 1)(rng)];
        const long gap_len = gap.end - gap.start + 1;
        const long length = std::uniform_int_distribution<long>(
            spec.min_note_frames,
            std::min<long>(gap_len, spec.max_note_frames))(rng);
        const long start = std::uniform_int_distribution<long>(
            gap.start, gap.end - length + 1)(rng);
        const std::size_t bin =
            std::uniform_int_distribution<std::size_t>(0, n_bins - 1)(rng);
        NoteRun inserted{bin, start, start + length - 1};
        auto where = std::upper_bound(
            runs.begin(), runs.end(), inserted,
            [](const NoteRun& a, const NoteRun& b) { return a.start < b.start; });
        runs.insert(where, inserted);
        changed = true;
        break;
      }
    }

    if (!changed) continue;
    DenseMatrix result = render_runs(runs, n_bins, n_frames);
    if (!column_equal(result, patch_y, center)) return result;
  }
  return std::nullopt;
}

namespace {

// bins x frames patch around `center`, zero-padded at track edges.
DenseMatrix cut_patch(const DenseMatrix& track, std::size_t center, std::size_t n) {
  const std::size_t n_frames = 2 * n + 1;
  DenseMatrix patch(track.cols(), n_frames, 0.0f);
  for (std::size_t c = 0; c < n_frames; ++c) {
    const long src = static_cast<long>(center) - static_cast<long>(n) +
                     static_cast<long>(c);
    if (src < 0 || src >= static_cast<long>(track.rows())) continue;
    for (std::size_t b = 0; b < track.cols(); ++b) {
      patch.at(b, c) = track.at(static_cast<std::size_t>(src), b);
    }
  }
  return patch;
}

}  // namespace

std::vector<CleansingExample> assemble_dataset(const TrackInputs& track,
                                               const AssembleConfig& config,
                                               AssembleDiagnostics* diag) {
  AssembleDiagnostics local;
  AssembleDiagnostics& d = diag != nullptr ? *diag : local;

  check_same_shape(track.cqt_mix, track.cqt_vox, "assemble_dataset");
  check_same_shape(track.cqt_mix, track.salience, "assemble_dataset");
  const std::size_t t_frames = track.cqt_mix.rows();
  const std::size_t patch_frames = 2 * config.context_n + 1;
  if (t_frames < patch_frames) {
    d.notes.push_back("track shorter than " + std::to_string(patch_frames) +
                      " frames, skipped");
    log::warn("assemble_dataset: " + d.notes.back());
    return {};
  }
  TimeGrid grid = track.grid;
  if (grid.n_frames == 0) grid.n_frames = t_frames;

  const DenseMatrix yhat =
      annotations::note_matrix(track.notes, grid, track.bins).matrix;
  const AgreementScores scores =
      agreement(yhat, track.salience, config.k_window, grid);
  const std::vector<std::size_t> agree =
      select_likely_correct(scores, config.split);
  const FrameSeries vocals_energy = dsp::frame_energy_db(track.cqt_vox, grid);
  const std::vector<std::size_t> silence = select_silence_correct(
      vocals_energy, yhat, config.silence_window, config.silence_threshold_db);

  std::set<std::size_t> agree_set(agree.begin(), agree.end());
  std::set<std::size_t> silence_set(silence.begin(), silence.end());

  std::vector<CleansingExample> out;
  std::vector<std::size_t> positive_centers;
  for (std::size_t i : agree_set) {
    CleansingExample ex;
    ex.x_mix = cut_patch(track.cqt_mix, i, config.context_n);
    ex.x_vox = cut_patch(track.cqt_vox, i, config.context_n);
    ex.y = cut_patch(yhat, i, config.context_n);
    ex.z = 0;
    ex.center_index = i;
    ex.provenance = Provenance::agreement;
    positive_centers.push_back(i);
    out.push_back(std::move(ex));
  }
  d.agreement_positives = positive_centers.size();
  for (std::size_t i : silence_set) {
    if (agree_set.count(i) != 0) continue;
    CleansingExample ex;
    ex.x_mix = cut_patch(track.cqt_mix, i, config.context_n);
    ex.x_vox = cut_patch(track.cqt_vox, i, config.context_n);
    ex.y = cut_patch(yhat, i, config.context_n);
    ex.z = 0;
    ex.center_index = i;
    ex.provenance = Provenance::silence;
    positive_centers.push_back(i);
    out.push_back(std::move(ex));
  }
  d.silence_positives = positive_centers.size() - d.agreement_positives;

  const std::size_t n_positives = out.size();
  const std::size_t wanted_negatives = static_cast<std::size_t>(
      std::llround(config.balance * static_cast<double>(n_positives)));
  std::mt19937_64 rng(config.seed ^ config.track_id);
  std::size_t produced = 0;
  std::size_t attempts = 0;
  const std::size_t max_attempts = wanted_negatives * 8 + 8;
  while (produced < wanted_negatives && n_positives > 0 && attempts < max_attempts) {
    ++attempts;
    const std::size_t pick =
        std::uniform_int_distribution<std::size_t>(0, n_positives - 1)(rng);
    const CleansingExample& source = out[pick];

    DeformationSpec spec = config.deform_spec;
    if (source.provenance == Provenance::silence) {
      spec.op = DeformOp::insert_note;  // silence negatives gain a fake note
    } else if (!config.ops.empty()) {
      spec.op = config.ops[std::uniform_int_distribution<std::size_t>(
          0, config.ops.size() - 1)(rng)];
    }
    const std::uint64_t sub_seed = rng();
    auto deformed = deform(source.y, spec, sub_seed);
    if (!deformed) {
      ++d.skipped_deformations;
      continue;
    }
    CleansingExample negative;
    negative.x_mix = source.x_mix;
    negative.x_vox = source.x_vox;
    negative.y = std::move(*deformed);
    negative.z = 1;
    negative.center_index = source.center_index;
    negative.provenance = Provenance::deformed;
    out.push_back(std::move(negative));
    ++produced;
  }
  d.negatives = produced;
  if (produced < wanted_negatives) {
    d.notes.push_back("only " + std::to_string(produced) + " of " +
                      std::to_string(wanted_negatives) + " negatives were legal");
  }
  return out;
}

void write_dataset(const std::string& path,
                   const std::vector<CleansingExample>& examples) {
  std::string bytes;
  for (const CleansingExample& ex : examples) {
    bytes += io::matrix_to_bytes(ex.x_mix);
    bytes += io::matrix_to_bytes(ex.x_vox);
    bytes += io::matrix_to_bytes(ex.y);
    bytes.push_back(static_cast<char>(ex.z));
    for (int b = 0; b < 4; ++b) {
      bytes.push_back(static_cast<char>((ex.center_index >> (8 * b)) & 0xffu));
    }
  }
  io::write_file_bytes(path, bytes);
}

std::vector<CleansingExample> read_dataset(const std::string& path) {
  const std::string bytes = io::read_file_bytes(path);
  std::vector<CleansingExample> out;
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    CleansingExample ex;
    ex.x_mix = io::matrix_from_bytes(bytes, offset);
    ex.x_vox = io::matrix_from_bytes(bytes, offset);
    ex.y = io::matrix_from_bytes(bytes, offset);
    if (offset + 5 > bytes.size()) {
      throw FormatError("read_dataset: truncated record tail", offset);
    }
    ex.z = static_cast<unsigned char>(bytes[offset]);
    ++offset;
    std::size_t center = 0;
    for (int b = 3; b >= 0; --b) {
      center = (center << 8) |
               static_cast<unsigned char>(bytes[offset + static_cast<std::size_t>(b)]);
    }
    offset += 4;
    ex.center_index = center;
    ex.provenance = ex.z == 1 ? Provenance::deformed : Provenance::agreement;
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<std::size_t> filter_frames(const FrameSeries& g, double threshold) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    if (g.values[i] < threshold) out.push_back(i);
  }
  return out;
}

FrameSeries sample_weights(const FrameSeries& g) {
  FrameSeries out = g;
  for (float& v : out.values) v = 1.0f - v;
  return out;
}

double error_rate(const FrameSeries& g, double threshold) {
  if (g.values.empty()) return 0.0;
  std::size_t n = 0;
  for (float v : g.values) {
    if (v >= threshold) ++n;
  }
  return static_cast<double>(n) / static_cast<double>(g.values.size());
}

}  // namespace lyraline::cleansing
