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

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lyraline/annotations.hpp"
#include "lyraline/cleansing.hpp"
#include "lyraline/conditioning.hpp"
#include "lyraline/dsp.hpp"
#include "lyraline/errors.hpp"
#include "lyraline/global_align.hpp"
#include "lyraline/io.hpp"
#include "lyraline/local_align.hpp"
#include "lyraline/log.hpp"
#include "lyraline/metrics.hpp"
#include "lyraline/ssm.hpp"

namespace {

using nlohmann::json;
using namespace lyraline;

constexpr const char* kVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitDegenerate = 3;

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

FrameSeries read_series(const std::string& path, double spacing_h) {
  const DenseMatrix m = io::read_matrix(path);
  if (m.cols() != 1 && m.rows() != 1) {
    throw SchemaError(path + ": a frame series must be a T x 1 or 1 x T matrix");
  }
  FrameSeries out;
  out.grid = TimeGrid{spacing_h, m.size()};
  out.values.assign(m.data(), m.data() + m.size());
  return out;
}

void write_series(const std::string& path, const FrameSeries& s) {
  DenseMatrix m(s.values.size(), 1);
  for (std::size_t i = 0; i < s.values.size(); ++i) m.at(i, 0) = s.values[i];
  io::write_matrix(path, m);
}

// The report carries the resolved parameters plus timing; timing makes the
// report file itself not part of the deterministic artifact set.
struct RunContext {
  std::string command;
  json parameters = json::object();
  std::string report_path;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  void finish(json payload) {
    if (report_path.empty()) return;
    json report;
    report["version"] = kVersion;
    report["command"] = command;
    report["parameters"] = parameters;
    report["elapsed_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
    report["result"] = std::move(payload);
    std::ofstream out(report_path);
    if (!out) throw SchemaError("cannot write report: " + report_path);
    out << report.dump(2) << "\n";
  }
};

// Resolved-config copy written next to the primary output.
void write_resolved_config(CLI::App* sub, const std::string& out_path) {
  if (out_path.empty()) return;
  io::write_file_bytes(out_path + ".config", sub->config_to_str(true, false));
}

std::vector<double> default_bins(double f_min, int n_bins) {
  std::vector<double> bins(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b) {
    bins[static_cast<std::size_t>(b)] = f_min * std::exp2(b / 12.0);
  }
  return bins;
}

annotations::Granularity parse_level(const std::string& name) {
  // Accept both singular and plural spellings.
  std::string plural = name;
  if (!plural.empty() && plural.back() != 's') plural += 's';
  const auto g = annotations::granularity_from_name(plural);
  if (!g) throw ParameterError("unknown granularity level: " + name);
  return *g;
}

json violations_to_json(const std::vector<annotations::Violation>& violations) {
  json arr = json::array();
  for (const auto& v : violations) {
    arr.push_back({{"level", annotations::granularity_name(v.level)},
                   {"index", v.index},
                   {"rule", v.rule}});
  }
  return arr;
}

// ---------------------------------------------------------------------------
// validate

int run_validate(const std::string& annotations_path, RunContext& ctx) {
  const auto song = io::read_annotations(annotations_path);
  const auto violations = annotations::validate(song);
  ctx.finish({{"violations", violations_to_json(violations)}});
  if (!violations.empty()) {
    for (const auto& v : violations) {
      std::cerr << annotations_path << ": " << annotations::granularity_name(v.level)
                << "[" << v.index << "]: " << v.rule << "\n";
    }
    return kExitInput;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// rasterize

int run_rasterize(CLI::App* sub, const std::string& annotations_path,
                  const std::string& level_name, double h, std::size_t frames,
                  const std::string& out, RunContext& ctx) {
  const auto song = io::read_annotations(annotations_path);
  const auto level = parse_level(level_name);
  const auto* segments = song.find(level);
  if (segments == nullptr) {
    throw SchemaError(annotations_path + ": level '" + level_name + "' not present");
  }
  std::size_t n = frames;
  if (n == 0) {
    double end = 0.0;
    for (const auto& s : segments->segments) end = std::max(end, s.t1);
    n = static_cast<std::size_t>(std::ceil(end / h)) + 1;
  }
  const FrameSeries vas = annotations::rasterize_vas(*segments, TimeGrid{h, n});
  write_series(out, vas);
  write_resolved_config(sub, out);
  std::size_t active = 0;
  for (float v : vas.values) active += v != 0.0f ? 1 : 0;
  ctx.finish({{"frames", n}, {"active_frames", active}, {"out", out}});
  return kExitOk;
}

// ---------------------------------------------------------------------------
// align-global

int run_align_global(CLI::App* sub, const std::string& annotations_path,
                     const std::string& phat_csv, double fr, double alpha,
                     double tcorr, int steps, double h, double offset0,
                     const std::string& out, int jobs, RunContext& ctx) {
  auto song = io::read_annotations(annotations_path);
  const auto* notes = song.find(annotations::Granularity::notes);
  if (notes == nullptr) {
    throw SchemaError(annotations_path + ": notes level required");
  }

  // Times in the file are seconds minted with (offset0, fr); recover the raw
  // frame units the search rescales.
  annotations::GranularityLevel raw = *notes;
  for (auto& s : raw.segments) {
    s.t0 = (s.t0 - offset0) * fr;
    s.t1 = (s.t1 - offset0) * fr;
  }

  global_align::GlobalAlignParams params;
  params.fr_nominal = fr;
  params.alpha_fraction = alpha;
  params.t_corr = tcorr;
  params.fr_grid_steps = steps;

  const auto candidates = split_list(phat_csv);
  if (candidates.empty()) throw ParameterError("align-global: --phat is required");

  json table = json::array();
  std::optional<std::size_t> best;
  global_align::NccResult best_result;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const FrameSeries phat = read_series(candidates[i], h);
    const auto result = global_align::align_global(raw, phat, params, jobs);
    table.push_back({{"candidate", candidates[i]},
                     {"score", result.score},
                     {"offset", result.best_offset},
                     {"fr", result.best_fr},
                     {"accepted", result.accepted}});
    if (!best || result.score > best_result.score) {
      best = i;
      best_result = result;
    }
  }

  json payload = {{"candidates", table},
                  {"best_candidate", candidates[*best]},
                  {"score", best_result.score},
                  {"offset", best_result.best_offset},
                  {"fr", best_result.best_fr},
                  {"accepted", best_result.accepted}};

  if (!out.empty()) {
    // Re-mint every level's times from the recovered pair.
    for (auto& [g, level] : song.levels) {
      for (auto& s : level.segments) {
        s.t0 = best_result.best_offset + (s.t0 - offset0) * fr / best_result.best_fr;
        s.t1 = best_result.best_offset + (s.t1 - offset0) * fr / best_result.best_fr;
      }
    }
    song.metadata["offset"] = std::to_string(best_result.best_offset);
    song.metadata["frame_rate"] = std::to_string(best_result.best_fr);
    song.metadata["ncc"] = std::to_string(best_result.score);
    io::write_annotations(out, song);
    write_resolved_config(sub, out);
  }
  ctx.finish(std::move(payload));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// align-local

int run_align_local(CLI::App* sub, const std::string& annotations_path,
                    const std::string& obs_path, const std::string& level_name,
                    double h, const local_align::ViterbiConfig& cfg,
                    bool octave_fold, const std::string& out,
                    const std::string& diag_path, RunContext& ctx) {
  auto song = io::read_annotations(annotations_path);
  const auto* notes = song.find(annotations::Granularity::notes);
  if (notes == nullptr) {
    throw SchemaError(annotations_path + ": notes level required");
  }
  const DenseMatrix obs = io::read_matrix(obs_path);
  const TimeGrid grid{h, obs.rows()};

  local_align::GraphConfig graph_cfg;
  graph_cfg.octave_fold = octave_fold;
  graph_cfg.n_bins = static_cast<int>(obs.cols()) - 1;

  // Alignment units: the whole song, or one unit per line / paragraph.
  struct Unit {
    std::vector<std::size_t> note_indices;
    std::size_t frame_begin = 0;
    std::size_t frame_end = 0;  // exclusive
  };
  std::vector<Unit> units;
  if (level_name == "song") {
    Unit u;
    for (std::size_t i = 0; i < notes->segments.size(); ++i) {
      u.note_indices.push_back(i);
    }
    u.frame_end = grid.n_frames;
    units.push_back(std::move(u));
  } else {
    const auto level = parse_level(level_name);
    const auto* groups = song.find(level);
    if (groups == nullptr) {
      throw SchemaError(annotations_path + ": level '" + level_name +
                        "' not present");
    }
    for (std::size_t gi = 0; gi < groups->segments.size(); ++gi) {
      const auto& span = groups->segments[gi];
      Unit u;
      for (std::size_t i = 0; i < notes->segments.size(); ++i) {
        const auto& n = notes->segments[i];
        if (n.t0 >= span.t0 - 1e-9 && n.t1 <= span.t1 + 1e-9) {
          u.note_indices.push_back(i);
        }
      }
      // Window extends to the midpoint toward the neighbors.
      const double prev_end = gi > 0 ? groups->segments[gi - 1].t1 : 0.0;
      const double next_start = gi + 1 < groups->segments.size()
                                    ? groups->segments[gi + 1].t0
                                    : grid.time_at(grid.n_frames);
      const double w0 = (prev_end + span.t0) / 2.0;
      const double w1 = (span.t1 + next_start) / 2.0;
      u.frame_begin = static_cast<std::size_t>(std::max(0.0, std::floor(w0 / h)));
      u.frame_end = std::min<std::size_t>(
          grid.n_frames, static_cast<std::size_t>(std::ceil(w1 / h)) + 1);
      units.push_back(std::move(u));
    }
  }

  auto corrected_song = song;
  json diag = json::array();
  for (std::size_t ui = 0; ui < units.size(); ++ui) {
    const Unit& u = units[ui];
    json unit_report;
    unit_report["unit"] = ui;
    if (u.note_indices.empty() || u.frame_end <= u.frame_begin) {
      unit_report["skipped"] = "no notes or empty window";
      diag.push_back(std::move(unit_report));
      continue;
    }
    annotations::GranularityLevel local;
    local.level = annotations::Granularity::notes;
    for (std::size_t i : u.note_indices) {
      auto s = notes->segments[i];
      s.t0 -= grid.time_at(u.frame_begin);
      s.t1 -= grid.time_at(u.frame_begin);
      local.segments.push_back(s);
    }
    DenseMatrix local_obs(u.frame_end - u.frame_begin, obs.cols());
    for (std::size_t t = u.frame_begin; t < u.frame_end; ++t) {
      for (std::size_t j = 0; j < obs.cols(); ++j) {
        local_obs.at(t - u.frame_begin, j) = obs.at(t, j);
      }
    }
    const TimeGrid local_grid{h, local_obs.rows()};
    try {
      const auto graph = local_align::build_graph(local, graph_cfg);
      const auto result =
          local_align::viterbi_align(graph, local_obs, local_grid, local, cfg);
      for (std::size_t k = 0; k < u.note_indices.size(); ++k) {
        auto& dst = corrected_song.levels[annotations::Granularity::notes]
                        .segments[u.note_indices[k]];
        dst.t0 = result.corrected.segments[k].t0 + grid.time_at(u.frame_begin);
        dst.t1 = result.corrected.segments[k].t1 + grid.time_at(u.frame_begin);
      }
      unit_report["log_likelihood"] = result.log_likelihood;
      unit_report["duration_ratio"] = result.duration_ratio;
    } catch (const DegenerateInputError& e) {
      unit_report["skipped"] = e.what();
    }
    diag.push_back(std::move(unit_report));
  }

  if (!out.empty()) {
    io::write_annotations(out, corrected_song);
    write_resolved_config(sub, out);
  }
  if (!diag_path.empty()) {
    std::ofstream f(diag_path);
    if (!f) throw SchemaError("cannot write diagnostics: " + diag_path);
    f << json({{"units", diag}}).dump(2) << "\n";
  }
  ctx.finish({{"units", diag.size()}, {"out", out}});
  return kExitOk;
}

// ---------------------------------------------------------------------------
// freq-correlate

int run_freq_correlate(const std::string& annotations_path,
                       const std::string& salience_path, double h, double f_min,
                       double voicing_threshold, RunContext& ctx) {
  const auto song = io::read_annotations(annotations_path);
  const auto* notes = song.find(annotations::Granularity::notes);
  if (notes == nullptr) {
    throw SchemaError(annotations_path + ": notes level required");
  }
  const DenseMatrix salience = io::read_matrix(salience_path);
  const TimeGrid grid{h, salience.rows()};
  const auto bins = default_bins(f_min, static_cast<int>(salience.cols()));
  const auto result = global_align::frequency_correlation(*notes, salience, grid,
                                                          bins, voicing_threshold);
  json shifts = json::array();
  for (const auto& m : result.per_shift) {
    shifts.push_back({{"shift", m.shift},
                      {"energy", m.energy},
                      {"overall_accuracy", m.overall_accuracy},
                      {"raw_pitch_accuracy", m.raw_pitch_accuracy},
                      {"raw_chroma_accuracy", m.raw_chroma_accuracy},
                      {"voicing_recall", m.voicing_recall},
                      {"voicing_false_alarm", m.voicing_false_alarm}});
  }
  std::cout << result.best_shift << "\n";
  ctx.finish({{"best_shift", result.best_shift},
              {"energy", result.energy},
              {"per_shift", shifts}});
  return kExitOk;
}

// ---------------------------------------------------------------------------
// build-ssm

int run_build_ssm(CLI::App* sub, const std::string& annotations_path,
                  const std::string& features_csv, const std::string& segments_from,
                  bool include_text, double h, std::size_t context,
                  const std::string& out, const std::string& patches_path, int jobs,
                  RunContext& ctx) {
  const auto song = io::read_annotations(annotations_path);
  const auto level = parse_level(segments_from);
  const auto* lines = song.find(level);
  if (lines == nullptr) {
    throw SchemaError(annotations_path + ": level '" + segments_from +
                      "' not present");
  }

  std::vector<ssm::Ssm> ssms;
  if (include_text) {
    std::vector<std::string> texts;
    for (const auto& s : lines->segments) texts.push_back(s.text);
    ssms.push_back(ssm::text_ssm(texts));
  }
  for (const auto& path : split_list(features_csv)) {
    const DenseMatrix features = io::read_matrix(path);
    const TimeGrid grid{h, features.rows()};
    const auto segments = ssm::segment_features(features, grid, *lines);
    ssms.push_back(ssm::audio_ssm(segments, ssm::SsmSource::other, jobs));
  }
  if (ssms.empty()) {
    throw ParameterError("build-ssm: need --text or at least one --features file");
  }

  const Tensor3 stacked = ssm::stack_ssms(ssms);
  if (stacked.d2() == 1) {
    DenseMatrix m(stacked.d0(), stacked.d1());
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < m.cols(); ++j) m.at(i, j) = stacked.at(i, j, 0);
    }
    io::write_matrix(out, m);
  } else {
    io::write_tensor(out, stacked);
  }
  write_resolved_config(sub, out);

  json payload = {{"lines", stacked.d0()}, {"channels", stacked.d2()}, {"out", out}};
  if (!patches_path.empty()) {
    const auto patches = ssm::extract_patches(stacked, context);
    // All patches concatenated along the first dimension.
    Tensor3 packed(patches.size() * (2 * context + 1), stacked.d1(), stacked.d2());
    for (std::size_t p = 0; p < patches.size(); ++p) {
      for (std::size_t r = 0; r < patches[p].d0(); ++r) {
        for (std::size_t jcol = 0; jcol < patches[p].d1(); ++jcol) {
          for (std::size_t ch = 0; ch < patches[p].d2(); ++ch) {
            packed.at(p * (2 * context + 1) + r, jcol, ch) =
                patches[p].at(r, jcol, ch);
          }
        }
      }
    }
    io::write_tensor(patches_path, packed);
    try {
      payload["boundary_labels"] = annotations::boundary_labels(song);
    } catch (const SchemaError&) {
      payload["boundary_labels"] = nullptr;  // no paragraph links available
    }
    payload["patches"] = patches_path;
  }
  ctx.finish(std::move(payload));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gen-cleansing

int run_gen_cleansing(CLI::App* sub, const std::string& mix_path,
                      const std::string& vox_path, const std::string& notes_path,
                      const std::string& salience_path, std::uint64_t seed,
                      const std::string& split, double balance, std::size_t kwindow,
                      std::size_t vwindow, std::size_t context, double upsilon,
                      double f_min, const std::string& out, RunContext& ctx) {
  cleansing::TrackInputs track;
  track.cqt_mix = io::read_matrix(mix_path);
  track.cqt_vox = io::read_matrix(vox_path);
  track.salience = io::read_matrix(salience_path);
  const auto song = io::read_annotations(notes_path);
  const auto* notes = song.find(annotations::Granularity::notes);
  if (notes == nullptr) throw SchemaError(notes_path + ": notes level required");
  track.notes = *notes;
  track.grid = TimeGrid{upsilon, track.cqt_mix.rows()};
  track.bins = default_bins(f_min, static_cast<int>(track.cqt_mix.cols()));

  cleansing::AssembleConfig config;
  config.seed = seed;
  config.balance = balance;
  config.k_window = kwindow;
  config.silence_window = vwindow;
  config.context_n = context;
  config.split = split == "test" ? cleansing::Split::test : cleansing::Split::train;

  cleansing::AssembleDiagnostics diag;
  const auto examples = cleansing::assemble_dataset(track, config, &diag);
  cleansing::write_dataset(out, examples);
  write_resolved_config(sub, out);
  ctx.finish({{"examples", examples.size()},
              {"agreement_positives", diag.agreement_positives},
              {"silence_positives", diag.silence_positives},
              {"negatives", diag.negatives},
              {"skipped_deformations", diag.skipped_deformations},
              {"notes", diag.notes},
              {"out", out}});
  return kExitOk;
}

// ---------------------------------------------------------------------------
// epf-apply

int run_epf_apply(CLI::App* sub, const std::string& scores_path,
                  const std::string& mode, double threshold, const std::string& out,
                  RunContext& ctx) {
  const FrameSeries g = read_series(scores_path, 0.0116);
  json payload;
  if (mode == "filter") {
    const auto kept = cleansing::filter_frames(g, threshold);
    DenseMatrix m(kept.size(), 1);
    for (std::size_t i = 0; i < kept.size(); ++i) {
      m.at(i, 0) = static_cast<float>(kept[i]);
    }
    if (out.empty()) throw ParameterError("epf-apply filter: --out required");
    io::write_matrix(out, m);
    write_resolved_config(sub, out);
    payload = {{"kept", kept.size()}, {"total", g.values.size()}, {"out", out}};
  } else if (mode == "weight") {
    if (out.empty()) throw ParameterError("epf-apply weight: --out required");
    write_series(out, cleansing::sample_weights(g));
    write_resolved_config(sub, out);
    payload = {{"total", g.values.size()}, {"out", out}};
  } else if (mode == "rate") {
    const double rate = cleansing::error_rate(g, threshold);
    std::cout << rate << "\n";
    payload = {{"error_rate", rate}};
  } else {
    throw ParameterError("epf-apply: mode must be filter, weight or rate");
  }
  ctx.finish(std::move(payload));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// film-params / film-apply

conditioning::FilmVariant parse_variant(const std::string& name) {
  const auto v = conditioning::variant_from_name(name);
  if (!v) throw ParameterError("unknown FiLM variant: " + name);
  return *v;
}

int run_film_params(const std::string& variant, const std::string& placement,
                    int phonemes, RunContext& ctx) {
  const auto v = parse_variant(variant);
  if (placement != "complete" && placement != "bottleneck") {
    throw ParameterError("film-params: placement must be complete or bottleneck");
  }
  const auto p = placement == "bottleneck" ? conditioning::Placement::bottleneck
                                           : conditioning::Placement::complete;
  const long long count = conditioning::count_parameters(
      v, p, conditioning::kEncoderChannels, conditioning::kEncoderFreqs, phonemes);
  std::cout << count << "\n";
  ctx.finish({{"variant", variant}, {"placement", placement}, {"parameters", count}});
  return kExitOk;
}

int run_film_apply(CLI::App* sub, const std::string& x_path,
                   const std::string& basis_path, const std::string& z_path,
                   const std::string& variant_name, const std::string& out,
                   RunContext& ctx) {
  const Tensor3 x = io::read_tensor(x_path);
  const auto variant = parse_variant(variant_name);

  Tensor3 result;
  if (variant == conditioning::FilmVariant::W_si ||
      variant == conditioning::FilmVariant::W_co) {
    // Weak basis: gamma then beta stacked along the first dimension.
    const Tensor3 basis = io::read_tensor(basis_path);
    if (basis.d0() != 2) {
      throw ParameterError("film-apply: weak basis must stack gamma/beta, d0 = 2");
    }
    std::vector<float> gamma(basis.d1() * basis.d2()), beta(gamma.size());
    for (std::size_t i = 0; i < basis.d1(); ++i) {
      for (std::size_t j = 0; j < basis.d2(); ++j) {
        gamma[i * basis.d2() + j] = basis.at(0, i, j);
        beta[i * basis.d2() + j] = basis.at(1, i, j);
      }
    }
    result = conditioning::film_weak(x, gamma, beta, variant);
  } else {
    const Tensor3 packed = io::read_tensor(basis_path);
    if (packed.d0() % 2 != 0) {
      throw ParameterError("film-apply: basis must stack gamma/beta along d0");
    }
    conditioning::FilmBasis basis;
    basis.variant = variant;
    const std::size_t half = packed.d0() / 2;
    basis.gamma = Tensor3(half, packed.d1(), packed.d2());
    basis.beta = Tensor3(half, packed.d1(), packed.d2());
    for (std::size_t i = 0; i < half; ++i) {
      for (std::size_t j = 0; j < packed.d1(); ++j) {
        for (std::size_t k = 0; k < packed.d2(); ++k) {
          basis.gamma.at(i, j, k) = packed.at(i, j, k);
          basis.beta.at(i, j, k) = packed.at(half + i, j, k);
        }
      }
    }
    if (z_path.empty()) {
      throw ParameterError("film-apply: strong variants need --z");
    }
    DenseMatrix z = io::read_matrix(z_path);
    if (z.rows() > x.d0()) {
      z = conditioning::map_activation_time(z, x.d0());
    }
    result = conditioning::film_strong(x, basis, z);
  }
  io::write_tensor(out, result);
  write_resolved_config(sub, out);
  ctx.finish(
      {{"out", out}, {"shape", {result.d0(), result.d1(), result.d2()}}});
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval / eval-rank / detect-vocals

int run_eval(const std::string& pred_path, const std::string& target_path,
             const std::string& metric, double threshold, double epsilon,
             double silence_db, RunContext& ctx) {
  if (metric == "pes_eps") {
    const DenseMatrix pred = io::read_matrix(pred_path);
    const DenseMatrix target = io::read_matrix(target_path);
    metrics::EnergyMetricConfig cfg;
    cfg.epsilon = epsilon;
    cfg.silent_threshold_db = silence_db;
    const auto result = metrics::pes_eps(pred, target, cfg);
    std::cout << "PES " << result.pes_db << " dB, EPS " << result.eps_db << " dB\n";
    ctx.finish({{"pes_db", result.pes_db}, {"eps_db", result.eps_db}});
    return kExitOk;
  }
  if (metric == "accuracy") {
    const FrameSeries pred = read_series(pred_path, 0.014);
    const FrameSeries target = read_series(target_path, 0.014);
    const double acc = metrics::frame_accuracy(pred, target, threshold);
    std::cout << acc << "\n";
    ctx.finish({{"accuracy", acc}, {"threshold", threshold}});
    return kExitOk;
  }
  throw ParameterError("eval: metric must be pes_eps or accuracy");
}

int run_eval_rank(const std::string& systems_path, const std::string& truth_path,
                  RunContext& ctx) {
  json systems_doc, truth_doc;
  try {
    systems_doc = json::parse(io::read_file_bytes(systems_path));
    truth_doc = json::parse(io::read_file_bytes(truth_path));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("eval-rank: invalid JSON: ") + e.what());
  }
  if (!systems_doc.contains("systems") || !truth_doc.contains("truth")) {
    throw SchemaError("eval-rank: need {\"systems\": [...]} and {\"truth\": [...]}");
  }
  std::vector<std::string> names;
  std::vector<std::vector<double>> estimates;
  for (const auto& sys : systems_doc["systems"]) {
    names.push_back(sys.value("name", "system" + std::to_string(names.size())));
    estimates.push_back(sys.at("estimates").get<std::vector<double>>());
  }
  const auto truth = truth_doc["truth"].get<std::vector<double>>();
  const auto report = metrics::deviation_ranks(estimates, truth);
  json payload = json::array();
  for (std::size_t s = 0; s < names.size(); ++s) {
    payload.push_back({{"name", names[s]},
                       {"mean_rank", report.mean_rank[s]},
                       {"position", report.position[s]},
                       {"mean_deviation", report.mean_deviation[s]}});
    std::cout << names[s] << ": mean rank " << report.mean_rank[s] << ", position "
              << report.position[s] << "\n";
  }
  ctx.finish({{"systems", payload}});
  return kExitOk;
}

int run_detect_vocals(const std::string& means_csv, const std::string& phat_csv,
                      double tolerance, RunContext& ctx) {
  std::vector<double> means;
  for (const auto& item : split_list(means_csv)) means.push_back(std::stod(item));
  for (const auto& path : split_list(phat_csv)) {
    const FrameSeries s = read_series(path, 0.014);
    double acc = 0.0;
    for (float v : s.values) acc += v;
    means.push_back(s.values.empty() ? 0.0 : acc / s.values.size());
  }
  const auto vocal = global_align::detect_vocal_tracks(means, tolerance);
  json indices = json::array();
  for (std::size_t i : vocal) {
    indices.push_back(i);
    std::cout << i << "\n";
  }
  ctx.finish({{"vocal_tracks", indices}, {"means", means}});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lyraline: lyrics-to-audio alignment and dataset toolkit"};
  app.set_config("--config")->configurable(false);
  app.allow_config_extras(false);
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  int jobs = 1;
  app.add_option("--jobs", jobs, "worker threads for independent units")
      ->capture_default_str();

  // --- validate
  auto* validate = app.add_subcommand("validate", "check annotation invariants");
  std::string v_ann, v_report;
  validate->add_option("--annotations", v_ann, "annotation JSON")->required();
  validate->add_option("--report", v_report, "JSON report path");

  // --- rasterize
  auto* rasterize = app.add_subcommand("rasterize", "annotations to a vas series");
  std::string r_ann, r_level = "notes", r_out, r_report;
  double r_h = 0.014;
  std::size_t r_frames = 0;
  rasterize->add_option("--annotations", r_ann)->required();
  rasterize->add_option("--level", r_level)->capture_default_str();
  rasterize->add_option("--spacing", r_h, "grid spacing in seconds")->capture_default_str();
  rasterize->add_option("--frames", r_frames, "frame count (default: derived)");
  rasterize->add_option("--out", r_out)->required();
  rasterize->add_option("--report", r_report);

  // --- align-global
  auto* ag = app.add_subcommand("align-global", "NCC over offset and frame rate");
  std::string ag_ann, ag_phat, ag_out, ag_report;
  double ag_fr = 0.0, ag_alpha = 0.05, ag_tcorr = 0.8, ag_h = 0.014, ag_offset0 = 0.0;
  int ag_steps = 101;
  ag->add_option("--annotations", ag_ann)->required();
  ag->add_option("--phat", ag_phat, "phat series (comma list = candidates)")
      ->required();
  ag->add_option("--fr", ag_fr, "nominal annotation frame rate")->required();
  ag->add_option("--alpha", ag_alpha)->capture_default_str();
  ag->add_option("--tcorr", ag_tcorr)->capture_default_str();
  ag->add_option("--steps", ag_steps)->capture_default_str();
  ag->add_option("--spacing", ag_h)->capture_default_str();
  ag->add_option("--offset0", ag_offset0, "offset used to mint the input times")
      ->capture_default_str();
  ag->add_option("--out", ag_out, "aligned annotations JSON");
  ag->add_option("--report", ag_report);

  // --- align-local
  auto* al = app.add_subcommand("align-local", "blank-state Viterbi alignment");
  std::string al_ann, al_obs, al_level = "song", al_out, al_diag, al_report;
  double al_h = 0.0116;
  local_align::ViterbiConfig al_cfg;
  bool al_octave_neighbors = false, al_fold = false;
  al->add_option("--annotations", al_ann)->required();
  al->add_option("--obs", al_obs, "observation matrix (T x bins+1)")->required();
  al->add_option("--level", al_level, "song, line or paragraph")
      ->capture_default_str();
  al->add_option("--spacing", al_h)->capture_default_str();
  al->add_option("--tolerance", al_cfg.pitch_tolerance)->capture_default_str();
  al->add_flag("--octave-neighbors", al_octave_neighbors);
  al->add_flag("--octave-fold", al_fold);
  al->add_option("--annotation-prior", al_cfg.annotation_prior)
      ->capture_default_str();
  al->add_option("--duration-prior", al_cfg.duration_prior)->capture_default_str();
  al->add_option("--backtrack-delta", al_cfg.duration_backtrack_delta)
      ->capture_default_str();
  al->add_option("--out", al_out);
  al->add_option("--diag", al_diag);
  al->add_option("--report", al_report);

  // --- freq-correlate
  auto* fc = app.add_subcommand("freq-correlate", "frequency transposition search");
  std::string fc_ann, fc_sal, fc_report;
  double fc_h = 0.058, fc_fmin = 32.70, fc_voicing = 0.5;
  fc->add_option("--annotations", fc_ann)->required();
  fc->add_option("--salience", fc_sal)->required();
  fc->add_option("--spacing", fc_h)->capture_default_str();
  fc->add_option("--fmin", fc_fmin)->capture_default_str();
  fc->add_option("--voicing-threshold", fc_voicing)->capture_default_str();
  fc->add_option("--report", fc_report);

  // --- build-ssm
  auto* bs = app.add_subcommand("build-ssm", "self-similarity matrices and patches");
  std::string bs_ann, bs_features, bs_from = "lines", bs_out, bs_patches, bs_report;
  bool bs_text = false;
  double bs_h = 0.014;
  std::size_t bs_context = 2;
  bs->add_option("--annotations", bs_ann)->required();
  bs->add_option("--features", bs_features, "comma list of feature matrices");
  bs->add_flag("--text", bs_text, "include the string-similarity channel");
  bs->add_option("--segments-from", bs_from)->capture_default_str();
  bs->add_option("--spacing", bs_h)->capture_default_str();
  bs->add_option("--context", bs_context)->capture_default_str();
  bs->add_option("--out", bs_out)->required();
  bs->add_option("--patches", bs_patches);
  bs->add_option("--report", bs_report);

  // --- gen-cleansing
  auto* gc = app.add_subcommand("gen-cleansing", "self-supervised cleansing dataset");
  std::string gc_mix, gc_vox, gc_notes, gc_sal, gc_out, gc_report;
  std::string gc_split = "train";
  std::uint64_t gc_seed = 0;
  double gc_balance = 1.0, gc_upsilon = 0.0116, gc_fmin = 32.70;
  std::size_t gc_kwindow = 20, gc_vwindow = 200, gc_context = 40;
  auto* gc_seed_opt =
      gc->add_option("--seed", gc_seed, "RNG seed (required, no wall-clock default)");
  gc->add_option("--cqt-mix", gc_mix)->required();
  gc->add_option("--cqt-vox", gc_vox)->required();
  gc->add_option("--notes", gc_notes)->required();
  gc->add_option("--salience", gc_sal)->required();
  gc->add_option("--split", gc_split)->capture_default_str();
  gc->add_option("--balance", gc_balance)->capture_default_str();
  gc->add_option("--kwindow", gc_kwindow)->capture_default_str();
  gc->add_option("--vwindow", gc_vwindow)->capture_default_str();
  gc->add_option("--context", gc_context)->capture_default_str();
  gc->add_option("--upsilon", gc_upsilon)->capture_default_str();
  gc->add_option("--fmin", gc_fmin)->capture_default_str();
  gc->add_option("--out", gc_out)->required();
  gc->add_option("--report", gc_report);

  // --- epf-apply
  auto* ea = app.add_subcommand("epf-apply", "filter/weight/rate from EPF scores");
  std::string ea_scores, ea_mode, ea_out, ea_report;
  double ea_threshold = 0.5;
  ea->add_option("--scores", ea_scores)->required();
  ea->add_option("--mode", ea_mode, "filter, weight or rate")->required();
  ea->add_option("--threshold", ea_threshold)->capture_default_str();
  ea->add_option("--out", ea_out);
  ea->add_option("--report", ea_report);

  // --- film-params
  auto* fp = app.add_subcommand("film-params", "conditioning parameter counts");
  std::string fp_variant, fp_placement = "complete", fp_report;
  int fp_phonemes = 40;
  fp->add_option("--variant", fp_variant)->required();
  fp->add_option("--placement", fp_placement)->capture_default_str();
  fp->add_option("--phonemes", fp_phonemes)->capture_default_str();
  fp->add_option("--report", fp_report);

  // --- film-apply
  auto* fa = app.add_subcommand("film-apply", "apply FiLM conditioning to a map");
  std::string fa_x, fa_basis, fa_z, fa_variant, fa_out, fa_report;
  fa->add_option("--x", fa_x, "feature map, W x H x C mmx3")->required();
  fa->add_option("--basis", fa_basis, "gamma/beta stacked along d0")->required();
  fa->add_option("--z", fa_z, "activation matrix T x P (strong variants)");
  fa->add_option("--variant", fa_variant)->required();
  fa->add_option("--out", fa_out)->required();
  fa->add_option("--report", fa_report);

  // --- eval
  auto* ev = app.add_subcommand("eval", "separation / detection metrics");
  std::string ev_pred, ev_target, ev_metric = "pes_eps", ev_report;
  double ev_threshold = 0.5, ev_epsilon = 1e-9, ev_silence = -25.0;
  ev->add_option("--pred", ev_pred)->required();
  ev->add_option("--target", ev_target)->required();
  ev->add_option("--metric", ev_metric)->capture_default_str();
  ev->add_option("--threshold", ev_threshold)->capture_default_str();
  ev->add_option("--epsilon", ev_epsilon)->capture_default_str();
  ev->add_option("--silence-db", ev_silence)->capture_default_str();
  ev->add_option("--report", ev_report);

  // --- eval-rank
  auto* er = app.add_subcommand("eval-rank", "alignment deviation rank statistics");
  std::string er_systems, er_truth, er_report;
  er->add_option("--systems", er_systems)->required();
  er->add_option("--truth", er_truth)->required();
  er->add_option("--report", er_report);

  // --- detect-vocals
  auto* dv = app.add_subcommand("detect-vocals", "find vocal tracks by mean phat");
  std::string dv_means, dv_phat, dv_report;
  double dv_tolerance = 0.02;
  dv->add_option("--means", dv_means, "comma list of mean phat values");
  dv->add_option("--phat", dv_phat, "comma list of phat series files");
  dv->add_option("--tolerance", dv_tolerance)->capture_default_str();
  dv->add_option("--report", dv_report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return kExitInput;
  }

  RunContext ctx;
  try {
    if (validate->parsed()) {
      ctx.command = "validate";
      ctx.report_path = v_report;
      ctx.parameters = {{"annotations", v_ann}};
      return run_validate(v_ann, ctx);
    }
    if (rasterize->parsed()) {
      ctx.command = "rasterize";
      ctx.report_path = r_report;
      ctx.parameters = {{"annotations", r_ann}, {"level", r_level}, {"h", r_h}};
      return run_rasterize(rasterize, r_ann, r_level, r_h, r_frames, r_out, ctx);
    }
    if (ag->parsed()) {
      ctx.command = "align-global";
      ctx.report_path = ag_report;
      ctx.parameters = {{"annotations", ag_ann}, {"phat", ag_phat},
                        {"fr", ag_fr},           {"alpha", ag_alpha},
                        {"tcorr", ag_tcorr},     {"steps", ag_steps},
                        {"h", ag_h},             {"offset0", ag_offset0}};
      return run_align_global(ag, ag_ann, ag_phat, ag_fr, ag_alpha, ag_tcorr,
                              ag_steps, ag_h, ag_offset0, ag_out, jobs, ctx);
    }
    if (al->parsed()) {
      ctx.command = "align-local";
      ctx.report_path = al_report;
      al_cfg.octave_neighbors = al_octave_neighbors;
      ctx.parameters = {{"annotations", al_ann},
                        {"obs", al_obs},
                        {"level", al_level},
                        {"h", al_h},
                        {"tolerance", al_cfg.pitch_tolerance},
                        {"octave_neighbors", al_cfg.octave_neighbors},
                        {"annotation_prior", al_cfg.annotation_prior},
                        {"duration_prior", al_cfg.duration_prior}};
      return run_align_local(al, al_ann, al_obs, al_level, al_h, al_cfg, al_fold,
                             al_out, al_diag, ctx);
    }
    if (fc->parsed()) {
      ctx.command = "freq-correlate";
      ctx.report_path = fc_report;
      ctx.parameters = {{"annotations", fc_ann},
                        {"salience", fc_sal},
                        {"h", fc_h},
                        {"fmin", fc_fmin}};
      return run_freq_correlate(fc_ann, fc_sal, fc_h, fc_fmin, fc_voicing, ctx);
    }
    if (bs->parsed()) {
      ctx.command = "build-ssm";
      ctx.report_path = bs_report;
      ctx.parameters = {{"annotations", bs_ann},
                        {"features", bs_features},
                        {"text", bs_text},
                        {"segments_from", bs_from},
                        {"context", bs_context}};
      return run_build_ssm(bs, bs_ann, bs_features, bs_from, bs_text, bs_h,
                           bs_context, bs_out, bs_patches, jobs, ctx);
    }
    if (gc->parsed()) {
      if (gc_seed_opt->count() == 0) {
        std::cerr << "gen-cleansing: --seed is required for reproducibility\n";
        return kExitInput;
      }
      ctx.command = "gen-cleansing";
      ctx.report_path = gc_report;
      ctx.parameters = {{"cqt_mix", gc_mix},     {"cqt_vox", gc_vox},
                        {"notes", gc_notes},     {"salience", gc_sal},
                        {"seed", gc_seed},       {"split", gc_split},
                        {"balance", gc_balance}, {"kwindow", gc_kwindow},
                        {"vwindow", gc_vwindow}, {"context", gc_context}};
      return run_gen_cleansing(gc, gc_mix, gc_vox, gc_notes, gc_sal, gc_seed,
                               gc_split, gc_balance, gc_kwindow, gc_vwindow,
                               gc_context, gc_upsilon, gc_fmin, gc_out, ctx);
    }
    if (ea->parsed()) {
      ctx.command = "epf-apply";
      ctx.report_path = ea_report;
      ctx.parameters = {{"scores", ea_scores},
                        {"mode", ea_mode},
                        {"threshold", ea_threshold}};
      return run_epf_apply(ea, ea_scores, ea_mode, ea_threshold, ea_out, ctx);
    }
    if (fp->parsed()) {
      ctx.command = "film-params";
      ctx.report_path = fp_report;
      ctx.parameters = {{"variant", fp_variant},
                        {"placement", fp_placement},
                        {"phonemes", fp_phonemes}};
      return run_film_params(fp_variant, fp_placement, fp_phonemes, ctx);
    }
    if (fa->parsed()) {
      ctx.command = "film-apply";
      ctx.report_path = fa_report;
      ctx.parameters = {{"x", fa_x},
                        {"basis", fa_basis},
                        {"z", fa_z},
                        {"variant", fa_variant}};
      return run_film_apply(fa, fa_x, fa_basis, fa_z, fa_variant, fa_out, ctx);
    }
    if (ev->parsed()) {
      ctx.command = "eval";
      ctx.report_path = ev_report;
      ctx.parameters = {{"pred", ev_pred},
                        {"target", ev_target},
                        {"metric", ev_metric}};
      return run_eval(ev_pred, ev_target, ev_metric, ev_threshold, ev_epsilon,
                      ev_silence, ctx);
    }
    if (er->parsed()) {
      ctx.command = "eval-rank";
      ctx.report_path = er_report;
      ctx.parameters = {{"systems", er_systems}, {"truth", er_truth}};
      return run_eval_rank(er_systems, er_truth, ctx);
    }
    if (dv->parsed()) {
      ctx.command = "detect-vocals";
      ctx.report_path = dv_report;
      ctx.parameters = {{"means", dv_means},
                        {"phat", dv_phat},
                        {"tolerance", dv_tolerance}};
      return run_detect_vocals(dv_means, dv_phat, dv_tolerance, ctx);
    }
  } catch (const DegenerateInputError& e) {
    std::cerr << "error (degenerate input): " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const ParameterError& e) {
    std::cerr << "error (parameters): " << e.what() << "\n";
    return kExitInput;
  } catch (const SchemaError& e) {
    std::cerr << "error (input): " << e.what() << "\n";
    return kExitInput;
  } catch (const FormatError& e) {
    std::cerr << "error (format): " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
