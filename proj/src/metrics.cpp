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

#include "lyraline/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lyraline::metrics {

namespace {

// Sum-of-squares frame energies, scaled so the loudest frame is 1.
std::vector<double> relative_frame_energies(const DenseMatrix& m) {
  std::vector<double> e(m.rows(), 0.0);
  double peak = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      acc += static_cast<double>(m.at(i, j)) * m.at(i, j);
    }
    e[i] = acc;
    peak = std::max(peak, acc);
  }
  if (peak > 0.0) {
    for (double& v : e) v /= peak;
  }
  return e;
}

}  // namespace

PesEps pes_eps(const DenseMatrix& prediction, const DenseMatrix& target,
               const EnergyMetricConfig& cfg) {
  check_same_shape(prediction, target, "pes_eps");
  const std::vector<double> pred_energy = relative_frame_energies(prediction);
  const std::vector<double> target_energy = relative_frame_energies(target);
  const double silent_ratio = std::pow(10.0, cfg.silent_threshold_db / 10.0);

  double pes_sum = 0.0, eps_sum = 0.0;
  std::size_t pes_n = 0, eps_n = 0;
  for (std::size_t i = 0; i < pred_energy.size(); ++i) {
    const bool target_silent = target_energy[i] < silent_ratio;
    const bool pred_silent = pred_energy[i] < silent_ratio;
    if (target_silent) {
      pes_sum += pred_energy[i];
      ++pes_n;
    }
    if (pred_silent && !target_silent) {
      eps_sum += target_energy[i];
      ++eps_n;
    }
  }

  PesEps out;
  out.pes_db = 10.0 * std::log10(cfg.epsilon + (pes_n ? pes_sum / pes_n : 0.0));
  out.eps_db = 10.0 * std::log10(cfg.epsilon + (eps_n ? eps_sum / eps_n : 0.0));
  return out;
}

double frame_accuracy(const FrameSeries& phat, const FrameSeries& labels,
                      double threshold) {
  if (phat.values.size() != labels.values.size()) {
    throw ParameterError("frame_accuracy: series lengths differ");
  }
  if (phat.values.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < phat.values.size(); ++i) {
    const int predicted = phat.values[i] >= threshold ? 1 : 0;
    const int label = labels.values[i] >= 0.5f ? 1 : 0;
    if (predicted == label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(phat.values.size());
}

double choose_threshold(
    std::span<const std::pair<FrameSeries, FrameSeries>> validation) {
  if (validation.empty()) {
    throw ParameterError("choose_threshold: validation set is empty");
  }
  double best_threshold = 0.0;
  double best_accuracy = -1.0;
  for (int step = 0; step <= 100; ++step) {
    const double threshold = step / 100.0;
    double acc = 0.0;
    for (const auto& [phat, labels] : validation) {
      acc += frame_accuracy(phat, labels, threshold);
    }
    acc /= static_cast<double>(validation.size());
    if (acc > best_accuracy + 1e-12) {
      best_accuracy = acc;
      best_threshold = threshold;
    }
  }
  return best_threshold;
}

DeviationReport deviation_ranks(const std::vector<std::vector<double>>& estimates,
                                std::span<const double> truth) {
  if (estimates.empty()) {
    throw ParameterError("deviation_ranks: at least one system required");
  }
  const std::size_t n_systems = estimates.size();
  const std::size_t n_songs = truth.size();
  if (n_songs == 0) throw ParameterError("deviation_ranks: at least one song required");
  for (const auto& sys : estimates) {
    if (sys.size() != n_songs) {
      throw ParameterError("deviation_ranks: estimate row length mismatch");
    }
  }

  DeviationReport report;
  report.ranks.assign(n_songs, std::vector<int>(n_systems, 0));
  report.mean_rank.assign(n_systems, 0.0);
  report.mean_deviation.assign(n_systems, 0.0);

  for (std::size_t song = 0; song < n_songs; ++song) {
    std::vector<double> deviations(n_systems);
    for (std::size_t sys = 0; sys < n_systems; ++sys) {
      deviations[sys] = std::abs(estimates[sys][song] - truth[song]);
      report.mean_deviation[sys] += deviations[sys];
    }
    // Dense ranking: sorted unique deviations get consecutive ranks.
    std::vector<double> unique = deviations;
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    for (std::size_t sys = 0; sys < n_systems; ++sys) {
      const auto it = std::lower_bound(unique.begin(), unique.end(), deviations[sys]);
      report.ranks[song][sys] = static_cast<int>(it - unique.begin()) + 1;
      report.mean_rank[sys] += report.ranks[song][sys];
    }
  }
  for (std::size_t sys = 0; sys < n_systems; ++sys) {
    report.mean_rank[sys] /= static_cast<double>(n_songs);
    report.mean_deviation[sys] /= static_cast<double>(n_songs);
  }

  // Position: dense rank of the mean ranks.
  std::vector<double> unique = report.mean_rank;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  report.position.resize(n_systems);
  for (std::size_t sys = 0; sys < n_systems; ++sys) {
    const auto it = std::lower_bound(unique.begin(), unique.end(), report.mean_rank[sys]);
    report.position[sys] = static_cast<int>(it - unique.begin()) + 1;
  }
  return report;
}

}  // namespace lyraline::metrics
