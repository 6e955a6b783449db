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

#ifndef LYRALINE_DSP_HPP
#define LYRALINE_DSP_HPP

#include <string>
#include <vector>

#include "lyraline/matrix.hpp"

namespace lyraline::dsp {

struct AudioBuffer {
  std::vector<float> samples;  // mono, [-1, 1]
  int sample_rate = 0;

  double duration() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

// WAV PCM16 or float32, mono or stereo (stereo is averaged down to mono).
AudioBuffer read_wav(const std::string& path);
void write_wav(const std::string& path, const AudioBuffer& audio);

// Band-limited windowed-sinc (Kaiser) resampler. quality = half-width in
// output samples of the sinc kernel.
AudioBuffer resample(const AudioBuffer& audio, int target_rate, int quality = 16);

// Hann-windowed magnitude spectrogram, T x (window/2 + 1) with
// T = floor((N - window) / hop) + 1. Returns an empty matrix if the signal is
// shorter than one window.
DenseMatrix stft_magnitude(const AudioBuffer& audio, std::size_t window,
                           std::size_t hop);

// Slaney-style mel filterbank, n_mels x n_bins, area-normalized triangles.
DenseMatrix mel_filterbank(std::size_t n_mels, std::size_t n_bins, int sample_rate);

// Triangular mel filterbank on the power spectrum followed by log(1 + x).
DenseMatrix log_mel(const DenseMatrix& spec, std::size_t n_mels, int sample_rate);

struct CqtConfig {
  double f_min = 32.70;      // Hz
  int bins_per_octave = 12;  // p
  int n_octaves = 6;
  int sample_rate = 22050;
  int hop = 256;
  double kernel_threshold = 0.01;  // sparsity cutoff on kernel magnitude

  int n_bins() const { return bins_per_octave * n_octaves; }
  double bin_center(int b) const;           // f_min * 2^(b / p)
  std::vector<double> bin_centers() const;  // all n_bins() centers
  double q_factor() const;                  // 1 / (2^(1/p) - 1)
  double frame_spacing() const;             // hop / sample_rate seconds

  void validate() const;  // throws ParameterError on bad values
};

// Constant-Q magnitude transform, T x n_bins with frames centered at
// i * hop. Frequency-domain sparse kernels per bin.
DenseMatrix cqt(const AudioBuffer& audio, const CqtConfig& cfg);

// log(1 + x) then min-max scaling to [0, 1]; a constant input maps to zeros.
DenseMatrix normalize_loglike(const DenseMatrix& m);

// Per-frame energy (sum of squares) in dB relative to the loudest frame.
FrameSeries frame_energy_db(const AudioBuffer& audio, const TimeGrid& grid);
FrameSeries frame_energy_db(const DenseMatrix& frames, const TimeGrid& grid);

// True where the relative level is below threshold_db.
std::vector<bool> silent_mask(const FrameSeries& energy_db, double threshold_db = -25.0);

}  // namespace lyraline::dsp

#endif  // LYRALINE_DSP_HPP
