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

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "lyraline/errors.hpp"
#include "lyraline/io.hpp"

namespace lyraline::io {

namespace {

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::uint32_t read_u32_le(const std::string& bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int b = 3; b >= 0; --b) {
    v = (v << 8) | static_cast<unsigned char>(bytes[offset + static_cast<std::size_t>(b)]);
  }
  return v;
}

void append_u32_le(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) {
    out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
  }
}

float read_f32_le(const std::string& bytes, std::size_t offset) {
  std::uint32_t v = read_u32_le(bytes, offset);
  float f;
  std::memcpy(&f, &v, sizeof(f));
  return f;
}

void append_f32_le(std::string& out, float f) {
  std::uint32_t v;
  std::memcpy(&v, &f, sizeof(v));
  append_u32_le(out, v);
}

DenseMatrix parse_csv(const std::string& bytes, const std::string& path) {
  std::vector<std::vector<float>> rows;
  std::istringstream in(bytes);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<float> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        row.push_back(std::stof(cell));
      } catch (const std::exception&) {
        throw SchemaError("read_matrix: bad CSV value '" + cell + "' in " + path);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw SchemaError("read_matrix: ragged CSV rows in " + path);
    }
    rows.push_back(std::move(row));
  }
  DenseMatrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) m.at(r, c) = rows[r][c];
  }
  return m;
}

std::vector<std::uint32_t> parse_header(const std::string& bytes, const char* magic,
                                        std::size_t n_dims, const std::string& path) {
  const std::size_t header = 4 + 4 * n_dims;
  if (bytes.size() < 4 || bytes.compare(0, 4, magic) != 0) {
    throw FormatError("read: bad magic in " + path + ", expected " + magic, 0);
  }
  if (bytes.size() < header) {
    throw FormatError("read: truncated header in " + path, bytes.size());
  }
  std::vector<std::uint32_t> dims(n_dims);
  std::size_t count = 1;
  for (std::size_t d = 0; d < n_dims; ++d) {
    dims[d] = read_u32_le(bytes, 4 + 4 * d);
    count *= dims[d];
  }
  const std::size_t expected = header + 4 * count;
  if (bytes.size() < expected) {
    throw FormatError("read: truncated payload in " + path + ", expected " +
                          std::to_string(expected) + " bytes",
                      bytes.size());
  }
  return dims;
}

}  // namespace

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SchemaError("cannot open file for writing: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw SchemaError("short write to " + path);
}

std::string matrix_to_bytes(const DenseMatrix& m) {
  std::string bytes;
  bytes.reserve(12 + 4 * m.size());
  bytes += "MMX1";
  append_u32_le(bytes, static_cast<std::uint32_t>(m.rows()));
  append_u32_le(bytes, static_cast<std::uint32_t>(m.cols()));
  for (std::size_t i = 0; i < m.size(); ++i) append_f32_le(bytes, m.data()[i]);
  return bytes;
}

DenseMatrix matrix_from_bytes(const std::string& bytes, std::size_t& offset) {
  if (offset + 12 > bytes.size() || bytes.compare(offset, 4, "MMX1") != 0) {
    throw FormatError("matrix_from_bytes: bad MMX1 record", offset);
  }
  const std::uint32_t rows = read_u32_le(bytes, offset + 4);
  const std::uint32_t cols = read_u32_le(bytes, offset + 8);
  const std::size_t payload = static_cast<std::size_t>(rows) * cols * 4;
  if (offset + 12 + payload > bytes.size()) {
    throw FormatError("matrix_from_bytes: truncated MMX1 record", bytes.size());
  }
  DenseMatrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) {
    m.data()[i] = read_f32_le(bytes, offset + 12 + 4 * i);
  }
  offset += 12 + payload;
  return m;
}

DenseMatrix read_matrix(const std::string& path) {
  const std::string bytes = read_file_bytes(path);
  if (has_suffix(path, ".csv")) return parse_csv(bytes, path);
  parse_header(bytes, "MMX1", 2, path);
  std::size_t offset = 0;
  return matrix_from_bytes(bytes, offset);
}

void write_matrix(const std::string& path, const DenseMatrix& m) {
  if (has_suffix(path, ".csv")) {
    std::ostringstream out;
    out.precision(9);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < m.cols(); ++c) {
        if (c > 0) out << ',';
        out << m.at(r, c);
      }
      out << '\n';
    }
    write_file_bytes(path, out.str());
    return;
  }
  write_file_bytes(path, matrix_to_bytes(m));
}

Tensor3 read_tensor(const std::string& path) {
  const std::string bytes = read_file_bytes(path);
  const auto dims = parse_header(bytes, "MMX3", 3, path);
  Tensor3 t(dims[0], dims[1], dims[2]);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t.data()[i] = read_f32_le(bytes, 16 + 4 * i);
  }
  return t;
}

void write_tensor(const std::string& path, const Tensor3& t) {
  std::string bytes;
  bytes.reserve(16 + 4 * t.size());
  bytes += "MMX3";
  append_u32_le(bytes, static_cast<std::uint32_t>(t.d0()));
  append_u32_le(bytes, static_cast<std::uint32_t>(t.d1()));
  append_u32_le(bytes, static_cast<std::uint32_t>(t.d2()));
  for (std::size_t i = 0; i < t.size(); ++i) append_f32_le(bytes, t.data()[i]);
  write_file_bytes(path, bytes);
}

}  // namespace lyraline::io
