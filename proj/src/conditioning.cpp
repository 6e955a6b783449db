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

#include "lyraline/conditioning.hpp"

#include <algorithm>

namespace lyraline::conditioning {

const char* variant_name(FilmVariant v) {
  switch (v) {
    case FilmVariant::W_si: return "W_si";
    case FilmVariant::W_co: return "W_co";
    case FilmVariant::S_fv: return "S_fv";
    case FilmVariant::S_cs: return "S_cs";
    case FilmVariant::S_fs: return "S_fs";
    case FilmVariant::S_rs: return "S_rs";
  }
  return "?";
}

std::optional<FilmVariant> variant_from_name(const std::string& name) {
  if (name == "W_si") return FilmVariant::W_si;
  if (name == "W_co") return FilmVariant::W_co;
  if (name == "S_fv") return FilmVariant::S_fv;
  if (name == "S_cs") return FilmVariant::S_cs;
  if (name == "S_fs") return FilmVariant::S_fs;
  if (name == "S_rs") return FilmVariant::S_rs;
  return std::nullopt;
}

FeatureMap film_weak(const FeatureMap& x, std::span<const float> gamma,
                     std::span<const float> beta, FilmVariant variant) {
  const std::size_t c = x.d2();
  std::size_t expected = 0;
  if (variant == FilmVariant::W_si) {
    expected = 1;
  } else if (variant == FilmVariant::W_co) {
    expected = c;
  } else {
    throw ParameterError("film_weak: variant must be W_si or W_co");
  }
  if (gamma.size() != expected || beta.size() != expected) {
    throw ParameterError("film_weak: gamma/beta must have " +
                         std::to_string(expected) + " entries");
  }

  FeatureMap out(x.d0(), x.d1(), x.d2());
  for (std::size_t w = 0; w < x.d0(); ++w) {
    for (std::size_t h = 0; h < x.d1(); ++h) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const std::size_t k = variant == FilmVariant::W_si ? 0 : ch;
        out.at(w, h, ch) = gamma[k] * x.at(w, h, ch) + beta[k];
      }
    }
  }
  return out;
}

namespace {

void check_basis_shape(const FilmBasis& basis, std::size_t h, std::size_t c,
                       const char* where) {
  const Tensor3& g = basis.gamma;
  const Tensor3& b = basis.beta;
  if (g.d0() != b.d0() || g.d1() != b.d1() || g.d2() != b.d2()) {
    throw ParameterError(std::string(where) + ": gamma and beta shapes differ");
  }
  switch (basis.variant) {
    case FilmVariant::S_fv:
      if (g.d0() != h || g.d1() != c) {
        throw ParameterError(std::string(where) + ": S_fv basis must be H x C x P");
      }
      break;
    case FilmVariant::S_cs:
      if (g.d0() != 1 || g.d1() != c) {
        throw ParameterError(std::string(where) + ": S_cs basis must be 1 x C x P");
      }
      break;
    case FilmVariant::S_fs:
      if (g.d0() != 1 || g.d1() != h) {
        throw ParameterError(std::string(where) + ": S_fs basis must be 1 x H x P");
      }
      break;
    case FilmVariant::S_rs:
      if (g.d0() != 1 || g.d1() != 1) {
        throw ParameterError(std::string(where) + ": S_rs basis must be 1 x 1 x P");
      }
      break;
    default:
      throw ParameterError(std::string(where) + ": strong variants only");
  }
}

// Basis value for (h, c, p) with the variant's missing dimensions broadcast.
inline float basis_at(const Tensor3& t, FilmVariant v, std::size_t h, std::size_t c,
                      std::size_t p) {
  switch (v) {
    case FilmVariant::S_fv: return t.at(h, c, p);
    case FilmVariant::S_cs: return t.at(0, c, p);
    case FilmVariant::S_fs: return t.at(0, h, p);
    default: return t.at(0, 0, p);
  }
}

}  // namespace

FeatureMap film_strong(const FeatureMap& x, const FilmBasis& basis,
                       const DenseMatrix& z_d) {
  const std::size_t w_dim = x.d0(), h_dim = x.d1(), c_dim = x.d2();
  check_basis_shape(basis, h_dim, c_dim, "film_strong");
  const std::size_t p_dim = basis.gamma.d2();
  if (z_d.rows() != w_dim || z_d.cols() != p_dim) {
    throw ParameterError("film_strong: activation must be W x P = " +
                         std::to_string(w_dim) + " x " + std::to_string(p_dim));
  }

  FeatureMap out(w_dim, h_dim, c_dim);
  for (std::size_t w = 0; w < w_dim; ++w) {
    for (std::size_t h = 0; h < h_dim; ++h) {
      for (std::size_t c = 0; c < c_dim; ++c) {
        double gamma = 0.0, beta = 0.0;
        for (std::size_t p = 0; p < p_dim; ++p) {
          const double activation = z_d.at(w, p);
          gamma += basis_at(basis.gamma, basis.variant, h, c, p) * activation;
          beta += basis_at(basis.beta, basis.variant, h, c, p) * activation;
        }
        out.at(w, h, c) =
            static_cast<float>(gamma * static_cast<double>(x.at(w, h, c)) + beta);
      }
    }
  }
  return out;
}

DenseMatrix map_activation_time(const DenseMatrix& z, std::size_t target_w) {
  const std::size_t t = z.rows();
  if (target_w == 0) throw ParameterError("map_activation_time: target_w must be >= 1");
  if (target_w > t) {
    throw ParameterError("map_activation_time: target_w " + std::to_string(target_w) +
                         " exceeds source frames " + std::to_string(t));
  }
  DenseMatrix out(target_w, z.cols(), 0.0f);
  // First (t mod w) spans hold ceil(t / w) frames, the rest floor(t / w).
  const std::size_t base = t / target_w;
  const std::size_t extra = t % target_w;
  std::size_t cursor = 0;
  for (std::size_t w = 0; w < target_w; ++w) {
    const std::size_t len = base + (w < extra ? 1 : 0);
    for (std::size_t i = cursor; i < cursor + len; ++i) {
      for (std::size_t p = 0; p < z.cols(); ++p) {
        out.at(w, p) = std::max(out.at(w, p), z.at(i, p));
      }
    }
    cursor += len;
  }
  return out;
}

long long count_parameters(FilmVariant variant, Placement placement,
                           std::span<const int> encoder_channels,
                           std::span<const int> encoder_freqs, int phonemes) {
  if (encoder_channels.size() != encoder_freqs.size() || encoder_channels.empty()) {
    throw ParameterError("count_parameters: encoder shape lists must match");
  }
  const long long p = phonemes;
  const long long depths = static_cast<long long>(encoder_channels.size());
  long long sum_c = 0, sum_h = 0, sum_hc = 0;
  for (std::size_t d = 0; d < encoder_channels.size(); ++d) {
    sum_c += encoder_channels[d];
    sum_h += encoder_freqs[d];
    sum_hc += static_cast<long long>(encoder_channels[d]) * encoder_freqs[d];
  }
  const long long last_c = encoder_channels.back();
  const long long last_h = encoder_freqs.back();
  const bool bottleneck = placement == Placement::bottleneck;

  switch (variant) {
    case FilmVariant::W_si:
      return 2 * (bottleneck ? 1 : depths);
    case FilmVariant::W_co:
      return 2 * (bottleneck ? last_c : sum_c);
    case FilmVariant::S_fv:
      return 2 * p * (bottleneck ? last_h * last_c : sum_hc);
    case FilmVariant::S_cs:
      return 2 * p * (bottleneck ? last_c : sum_c);
    case FilmVariant::S_fs:
      return 2 * p * (bottleneck ? last_h : sum_h);
    case FilmVariant::S_rs:
      return 2 * p * (bottleneck ? 1 : depths);
  }
  throw ParameterError("count_parameters: unknown variant");
}

}  // namespace lyraline::conditioning
