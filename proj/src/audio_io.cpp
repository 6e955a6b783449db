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

#include <cmath>
#include <cstdint>
#include <cstring>

#include "lyraline/dsp.hpp"
#include "lyraline/errors.hpp"
#include "lyraline/io.hpp"

namespace lyraline::dsp {

namespace {

std::uint32_t u32_le(const std::string& b, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) {
    v = (v << 8) | static_cast<unsigned char>(b[off + static_cast<std::size_t>(i)]);
  }
  return v;
}

std::uint16_t u16_le(const std::string& b, std::size_t off) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[off]) |
                                    (static_cast<unsigned char>(b[off + 1]) << 8));
}

void put_u32_le(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_u16_le(std::string& b, std::uint16_t v) {
  b.push_back(static_cast<char>(v & 0xffu));
  b.push_back(static_cast<char>((v >> 8) & 0xffu));
}

}  // namespace

AudioBuffer read_wav(const std::string& path) {
  const std::string b = io::read_file_bytes(path);
  if (b.size() < 12 || b.compare(0, 4, "RIFF") != 0 || b.compare(8, 4, "WAVE") != 0) {
    throw FormatError("read_wav: not a RIFF/WAVE file: " + path, 0);
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  std::size_t data_offset = 0, data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const std::string chunk_id = b.substr(pos, 4);
    const std::uint32_t chunk_size = u32_le(b, pos + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > b.size()) {
      throw FormatError("read_wav: truncated chunk '" + chunk_id + "' in " + path, pos);
    }
    if (chunk_id == "fmt ") {
      if (chunk_size < 16) throw FormatError("read_wav: short fmt chunk", body);
      format = u16_le(b, body);
      channels = u16_le(b, body + 2);
      sample_rate = u32_le(b, body + 4);
      bits = u16_le(b, body + 14);
    } else if (chunk_id == "data") {
      data_offset = body;
      data_size = chunk_size;
    }
    pos = body + chunk_size + (chunk_size & 1);
  }

  if (sample_rate == 0 || channels == 0) {
    throw FormatError("read_wav: missing fmt chunk in " + path, 12);
  }
  if (data_offset == 0) {
    throw FormatError("read_wav: missing data chunk in " + path, 12);
  }
  const bool pcm16 = format == 1 && bits == 16;
  const bool f32 = format == 3 && bits == 32;
  if (!pcm16 && !f32) {
    throw FormatError("read_wav: only PCM16 and float32 are supported", data_offset);
  }

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t n_frames = data_size / (bytes_per_sample * channels);
  AudioBuffer out;
  out.sample_rate = static_cast<int>(sample_rate);
  out.samples.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      const std::size_t off = data_offset + (i * channels + c) * bytes_per_sample;
      if (pcm16) {
        const std::int16_t raw =
            static_cast<std::int16_t>(u16_le(b, off));
        acc += static_cast<double>(raw) / 32768.0;
      } else {
        const std::uint32_t raw = u32_le(b, off);
        float f;
        std::memcpy(&f, &raw, sizeof(f));
        acc += f;
      }
    }
    out.samples[i] = static_cast<float>(acc / channels);
  }
  return out;
}

void write_wav(const std::string& path, const AudioBuffer& audio) {
  std::string b;
  const std::uint32_t data_size = static_cast<std::uint32_t>(audio.samples.size() * 2);
  b += "RIFF";
  put_u32_le(b, 36 + data_size);
  b += "WAVEfmt ";
  put_u32_le(b, 16);
  put_u16_le(b, 1);  // PCM
  put_u16_le(b, 1);  // mono
  put_u32_le(b, static_cast<std::uint32_t>(audio.sample_rate));
  put_u32_le(b, static_cast<std::uint32_t>(audio.sample_rate) * 2);
  put_u16_le(b, 2);
  put_u16_le(b, 16);
  b += "data";
  put_u32_le(b, data_size);
  for (float s : audio.samples) {
    const double clamped = std::max(-1.0, std::min(1.0, static_cast<double>(s)));
    const std::int16_t raw = static_cast<std::int16_t>(std::lround(clamped * 32767.0));
    put_u16_le(b, static_cast<std::uint16_t>(raw));
  }
  io::write_file_bytes(path, b);
}

namespace {

double bessel_i0(double x) {
  // Series expansion; converges quickly for the beta values used here.
  double sum = 1.0, term = 1.0;
  for (int k = 1; k < 64; ++k) {
    term *= (x / (2.0 * k)) * (x / (2.0 * k));
    sum += term;
    if (term < 1e-16 * sum) break;
  }
  return sum;
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = 3.14159265358979323846 * x;
  return std::sin(px) / px;
}

}  // namespace

AudioBuffer resample(const AudioBuffer& audio, int target_rate, int quality) {
  if (audio.sample_rate <= 0 || target_rate <= 0) {
    throw ParameterError("resample: sample rates must be positive");
  }
  if (quality < 1) throw ParameterError("resample: quality must be >= 1");
  if (audio.sample_rate == target_rate) return audio;

  const double ratio = static_cast<double>(target_rate) / audio.sample_rate;
  const double cutoff = std::min(1.0, ratio);  // band-limit when decimating
  const double beta = 8.6;                     // Kaiser shape, ~90 dB stopband
  const double i0_beta = bessel_i0(beta);
  const std::size_t n_out =
      static_cast<std::size_t>(std::floor(audio.samples.size() * ratio));

  AudioBuffer out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);
  const double half_width = quality / cutoff;  // input samples per side
  for (std::size_t i = 0; i < n_out; ++i) {
    const double center = static_cast<double>(i) / ratio;
    const long lo = static_cast<long>(std::ceil(center - half_width));
    const long hi = static_cast<long>(std::floor(center + half_width));
    double acc = 0.0;
    for (long n = std::max(lo, 0L);
         n <= std::min(hi, static_cast<long>(audio.samples.size()) - 1); ++n) {
      const double d = (static_cast<double>(n) - center) * cutoff;
      const double window_arg = d / quality;
      if (window_arg <= -1.0 || window_arg >= 1.0) continue;
      const double kaiser =
          bessel_i0(beta * std::sqrt(1.0 - window_arg * window_arg)) / i0_beta;
      acc += audio.samples[static_cast<std::size_t>(n)] * sinc(d) * kaiser * cutoff;
    }
    out.samples[i] = static_cast<float>(acc);
  }
  return out;
}

}  // namespace lyraline::dsp
