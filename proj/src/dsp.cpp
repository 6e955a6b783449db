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

#include "lyraline/dsp.hpp"

#include <cmath>
#include <complex>
#include <limits>

#include "lyraline/errors.hpp"
#include "lyraline/fft.hpp"
#include "lyraline/log.hpp"

namespace lyraline::dsp {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / static_cast<double>(n));
  }
  return w;
}

double hz_to_mel(double hz) {
  // Slaney mel: linear below 1 kHz, logarithmic above.
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  constexpr double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (hz < min_log_hz) return hz / f_sp;
  return min_log_mel + std::log(hz / min_log_hz) / logstep;
}

double mel_to_hz(double mel) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  constexpr double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (mel < min_log_mel) return mel * f_sp;
  return min_log_hz * std::exp(logstep * (mel - min_log_mel));
}

}  // namespace

DenseMatrix stft_magnitude(const AudioBuffer& audio, std::size_t window,
                           std::size_t hop) {
  if (window == 0 || (window & (window - 1)) != 0) {
    throw ParameterError("stft_magnitude: window must be a power of two");
  }
  if (hop == 0 || hop > window) {
    throw ParameterError("stft_magnitude: hop must be in [1, window]");
  }
  const std::size_t n = audio.samples.size();
  const std::size_t n_bins = window / 2 + 1;
  if (n < window) {
    log::warn("stft_magnitude: signal shorter than one window, empty output");
    return DenseMatrix(0, n_bins);
  }
  const std::size_t frames = (n - window) / hop + 1;
  const std::vector<double> w = hann_window(window);

  DenseMatrix out(frames, n_bins);
  std::vector<std::complex<double>> buffer(window);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * hop;
    for (std::size_t i = 0; i < window; ++i) {
      buffer[i] = audio.samples[start + i] * w[i];
    }
    fft::forward(buffer);
    for (std::size_t k = 0; k < n_bins; ++k) {
      out.at(t, k) = static_cast<float>(std::abs(buffer[k]));
    }
  }
  if (audio.sample_rate > 0) {
    out.row_times.resize(frames);
    for (std::size_t t = 0; t < frames; ++t) {
      out.row_times[t] = static_cast<double>(t * hop) / audio.sample_rate;
    }
    out.col_freqs.resize(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
      out.col_freqs[k] = static_cast<double>(k) * audio.sample_rate / window;
    }
  }
  return out;
}

DenseMatrix mel_filterbank(std::size_t n_mels, std::size_t n_bins, int sample_rate) {
  if (n_mels == 0) throw ParameterError("mel_filterbank: n_mels must be positive");
  if (n_mels > n_bins) {
    throw ParameterError("mel_filterbank: n_mels exceeds spectral bins");
  }
  const double nyquist = sample_rate / 2.0;
  const double mel_max = hz_to_mel(nyquist);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_max * static_cast<double>(i) / (n_mels + 1));
  }

  DenseMatrix fb(n_mels, n_bins, 0.0f);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    const double norm = 2.0 / (hi - lo);  // area normalization
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * nyquist / (n_bins - 1);
      double weight = 0.0;
      if (f >= lo && f <= mid && mid > lo) {
        weight = (f - lo) / (mid - lo);
      } else if (f > mid && f <= hi && hi > mid) {
        weight = (hi - f) / (hi - mid);
      }
      fb.at(m, k) = static_cast<float>(weight * norm);
    }
  }
  return fb;
}

DenseMatrix log_mel(const DenseMatrix& spec, std::size_t n_mels, int sample_rate) {
  const DenseMatrix fb = mel_filterbank(n_mels, spec.cols(), sample_rate);
  DenseMatrix out(spec.rows(), n_mels);
  for (std::size_t t = 0; t < spec.rows(); ++t) {
    for (std::size_t m = 0; m < n_mels; ++m) {
      double acc = 0.0;
      for (std::size_t k = 0; k < spec.cols(); ++k) {
        const double mag = spec.at(t, k);
        acc += fb.at(m, k) * mag * mag;
      }
      out.at(t, m) = static_cast<float>(std::log1p(acc));
    }
  }
  out.row_times = spec.row_times;
  return out;
}

double CqtConfig::bin_center(int b) const {
  return f_min * std::exp2(static_cast<double>(b) / bins_per_octave);
}

std::vector<double> CqtConfig::bin_centers() const {
  std::vector<double> centers(n_bins());
  for (int b = 0; b < n_bins(); ++b) centers[static_cast<std::size_t>(b)] = bin_center(b);
  return centers;
}

double CqtConfig::q_factor() const {
  return 1.0 / (std::exp2(1.0 / bins_per_octave) - 1.0);
}

double CqtConfig::frame_spacing() const {
  return static_cast<double>(hop) / sample_rate;
}

void CqtConfig::validate() const {
  if (f_min <= 0.0) throw ParameterError("cqt: f_min must be positive");
  if (bins_per_octave < 1 || n_octaves < 1) {
    throw ParameterError("cqt: bins_per_octave and n_octaves must be >= 1");
  }
  if (sample_rate <= 0 || hop <= 0) {
    throw ParameterError("cqt: sample_rate and hop must be positive");
  }
  const double f_max = f_min * std::exp2(static_cast<double>(n_octaves));
  if (f_max >= sample_rate / 2.0) {
    throw ParameterError("cqt: f_max " + std::to_string(f_max) +
                         " Hz reaches the Nyquist frequency");
  }
}

DenseMatrix cqt(const AudioBuffer& audio, const CqtConfig& cfg) {
  cfg.validate();
  const int j_bins = cfg.n_bins();
  const double q = cfg.q_factor();

  // Longest analysis window belongs to the lowest bin.
  const std::size_t max_len = static_cast<std::size_t>(
      std::ceil(q * cfg.sample_rate / cfg.bin_center(0)));
  const std::size_t n_fft = fft::next_pow2(max_len);

  // Sparse frequency-domain kernels: conj(FFT(windowed exponential)) per bin.
  struct SparseKernel {
    std::vector<std::size_t> index;
    std::vector<std::complex<double>> value;
  };
  std::vector<SparseKernel> kernels(static_cast<std::size_t>(j_bins));
  for (int b = 0; b < j_bins; ++b) {
    const double f = cfg.bin_center(b);
    const std::size_t len = std::min<std::size_t>(
        n_fft, static_cast<std::size_t>(std::ceil(q * cfg.sample_rate / f)));
    std::vector<std::complex<double>> kernel(n_fft, 0.0);
    const std::size_t offset = (n_fft - len) / 2;  // center within the FFT frame
    const std::vector<double> w = hann_window(len);
    for (std::size_t i = 0; i < len; ++i) {
      const double phase = 2.0 * kPi * f *
                           (static_cast<double>(offset + i) -
                            static_cast<double>(n_fft) / 2.0) /
                           cfg.sample_rate;
      kernel[offset + i] = w[i] / static_cast<double>(len) *
                           std::complex<double>(std::cos(phase), std::sin(phase));
    }
    fft::forward(kernel);
    double max_mag = 0.0;
    for (const auto& v : kernel) max_mag = std::max(max_mag, std::abs(v));
    SparseKernel sparse;
    for (std::size_t i = 0; i < n_fft; ++i) {
      if (std::abs(kernel[i]) >= cfg.kernel_threshold * max_mag) {
        sparse.index.push_back(i);
        sparse.value.push_back(std::conj(kernel[i]) / static_cast<double>(n_fft));
      }
    }
    kernels[static_cast<std::size_t>(b)] = std::move(sparse);
  }

  const std::size_t n = audio.samples.size();
  const std::size_t frames = n / static_cast<std::size_t>(cfg.hop) + 1;
  DenseMatrix out(frames, static_cast<std::size_t>(j_bins));
  std::vector<std::complex<double>> buffer(n_fft);
  const long half = static_cast<long>(n_fft) / 2;
  for (std::size_t t = 0; t < frames; ++t) {
    const long center = static_cast<long>(t) * cfg.hop;
    std::fill(buffer.begin(), buffer.end(), std::complex<double>(0.0, 0.0));
    const long lo = center - half;
    for (std::size_t i = 0; i < n_fft; ++i) {
      const long src = lo + static_cast<long>(i);
      if (src >= 0 && src < static_cast<long>(n)) {
        buffer[i] = audio.samples[static_cast<std::size_t>(src)];
      }
    }
    fft::forward(buffer);
    for (int b = 0; b < j_bins; ++b) {
      const SparseKernel& kernel = kernels[static_cast<std::size_t>(b)];
      std::complex<double> acc(0.0, 0.0);
      for (std::size_t i = 0; i < kernel.index.size(); ++i) {
        acc += buffer[kernel.index[i]] * kernel.value[i];
      }
      out.at(t, static_cast<std::size_t>(b)) = static_cast<float>(std::abs(acc));
    }
  }

  out.row_times.resize(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    out.row_times[t] = static_cast<double>(t) * cfg.frame_spacing();
  }
  out.col_freqs = cfg.bin_centers();
  return out;
}

DenseMatrix normalize_loglike(const DenseMatrix& m) {
  DenseMatrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) {
    out.data()[i] = static_cast<float>(std::log1p(static_cast<double>(m.data()[i])));
  }
  if (m.size() == 0) return out;
  // Min-max over the stored values so the extremes land exactly on 0 and 1.
  float lo = out.data()[0], hi = out.data()[0];
  for (std::size_t i = 1; i < m.size(); ++i) {
    lo = std::min(lo, out.data()[i]);
    hi = std::max(hi, out.data()[i]);
  }
  const double range = static_cast<double>(hi) - lo;
  for (std::size_t i = 0; i < m.size(); ++i) {
    out.data()[i] = range > 0.0
                        ? static_cast<float>((out.data()[i] - lo) / range)
                        : 0.0f;
  }
  out.row_times = m.row_times;
  out.col_freqs = m.col_freqs;
  return out;
}

namespace {

FrameSeries energies_to_relative_db(std::vector<double> energies, const TimeGrid& grid) {
  FrameSeries out(grid, 0.0f);
  double max_energy = 0.0;
  for (double e : energies) max_energy = std::max(max_energy, e);
  constexpr double kFloorDb = -300.0;
  for (std::size_t i = 0; i < out.values.size() && i < energies.size(); ++i) {
    if (max_energy <= 0.0 || energies[i] <= 0.0) {
      out.values[i] = static_cast<float>(kFloorDb);
    } else {
      out.values[i] = static_cast<float>(
          std::max(kFloorDb, 10.0 * std::log10(energies[i] / max_energy)));
    }
  }
  for (std::size_t i = energies.size(); i < out.values.size(); ++i) {
    out.values[i] = static_cast<float>(kFloorDb);
  }
  return out;
}

}  // namespace

FrameSeries frame_energy_db(const AudioBuffer& audio, const TimeGrid& grid) {
  std::vector<double> energies(grid.n_frames, 0.0);
  if (audio.sample_rate > 0) {
    const double samples_per_frame = grid.spacing_h * audio.sample_rate;
    for (std::size_t i = 0; i < grid.n_frames; ++i) {
      const std::size_t lo = static_cast<std::size_t>(i * samples_per_frame);
      const std::size_t hi = std::min(
          audio.samples.size(), static_cast<std::size_t>((i + 1) * samples_per_frame));
      double acc = 0.0;
      for (std::size_t s = lo; s < hi; ++s) {
        acc += static_cast<double>(audio.samples[s]) * audio.samples[s];
      }
      energies[i] = acc;
    }
  }
  return energies_to_relative_db(std::move(energies), grid);
}

FrameSeries frame_energy_db(const DenseMatrix& frames, const TimeGrid& grid) {
  std::vector<double> energies(frames.rows(), 0.0);
  for (std::size_t i = 0; i < frames.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < frames.cols(); ++j) {
      acc += static_cast<double>(frames.at(i, j)) * frames.at(i, j);
    }
    energies[i] = acc;
  }
  return energies_to_relative_db(std::move(energies), grid);
}

std::vector<bool> silent_mask(const FrameSeries& energy_db, double threshold_db) {
  std::vector<bool> mask(energy_db.values.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = energy_db.values[i] < threshold_db;
  }
  return mask;
}

}  // namespace lyraline::dsp
