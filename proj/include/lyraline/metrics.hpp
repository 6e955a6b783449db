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

#ifndef LYRALINE_METRICS_HPP
#define LYRALINE_METRICS_HPP

#include <span>
#include <utility>
#include <vector>

#include "lyraline/matrix.hpp"

namespace lyraline::metrics {

struct EnergyMetricConfig {
  double epsilon = 1e-9;
  double silent_threshold_db = -25.0;
};

struct PesEps {
  double pes_db = 0.0;  // predicted energy at silence
  double eps_db = 0.0;  // energy at predicted silence
};

// Frame energies are sums of squares relative to the loudest frame of each
// matrix; empty frame sets report the epsilon floor.
PesEps pes_eps(const DenseMatrix& prediction, const DenseMatrix& target,
               const EnergyMetricConfig& cfg = {});

// Fraction of frames where (phat >= threshold) matches the binary label.
double frame_accuracy(const FrameSeries& phat, const FrameSeries& labels,
                      double threshold);

// Scans thresholds 0.00 .. 1.00 in 0.01 steps, maximizing the mean accuracy
// over the validation pairs; ties resolve to the lower threshold.
double choose_threshold(
    std::span<const std::pair<FrameSeries, FrameSeries>> validation);

struct DeviationReport {
  std::vector<std::vector<int>> ranks;  // [song][system], dense, ties share rank
  std::vector<double> mean_rank;        // per system
  std::vector<int> position;            // systems ordered by mean rank
  std::vector<double> mean_deviation;   // per system
};

// estimates[system][song] against truth[song]; ranks use |estimate - truth|
// with dense ranking (1, 2, 2, 3).
DeviationReport deviation_ranks(const std::vector<std::vector<double>>& estimates,
                                std::span<const double> truth);

}  // namespace lyraline::metrics

#endif  // LYRALINE_METRICS_HPP
