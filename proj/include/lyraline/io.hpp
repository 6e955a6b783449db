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

#ifndef LYRALINE_IO_HPP
#define LYRALINE_IO_HPP

#include <string>
#include <vector>

#include "lyraline/annotations.hpp"
#include "lyraline/matrix.hpp"

namespace lyraline::io {

// MMX1: magic "MMX1", u32 LE rows, u32 LE cols, float32 LE row-major payload.
// Files ending in ".csv" are parsed as comma-separated rows instead.
DenseMatrix read_matrix(const std::string& path);
void write_matrix(const std::string& path, const DenseMatrix& m);

// MMX3: magic "MMX3" plus a third u32 dimension in the header.
Tensor3 read_tensor(const std::string& path);
void write_tensor(const std::string& path, const Tensor3& t);

// In-memory MMX1 records, used by composite file formats.
std::string matrix_to_bytes(const DenseMatrix& m);
DenseMatrix matrix_from_bytes(const std::string& bytes, std::size_t& offset);

// Annotation JSON: {"info": {...}, "annotations": {"notes": [...], ...}} with
// segments {"time":[t0,t1], "freq":[fmin,fmax], "text":..., "phonemes":[...],
// "index": k}. Paths ending in ".gz" are gzip-compressed.
annotations::SongAnnotations read_annotations(const std::string& path);
void write_annotations(const std::string& path, const annotations::SongAnnotations& song);

std::string read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::string& bytes);

std::string gzip_compress(const std::string& bytes);
std::string gzip_decompress(const std::string& bytes);

}  // namespace lyraline::io

#endif  // LYRALINE_IO_HPP
