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

#include <zlib.h>

#include <json.hpp>

#include "lyraline/errors.hpp"
#include "lyraline/io.hpp"

namespace lyraline::io {

namespace {

using nlohmann::json;
using annotations::AlignedSegment;
using annotations::Granularity;
using annotations::GranularityLevel;
using annotations::SongAnnotations;

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

constexpr Granularity kAllLevels[] = {Granularity::notes, Granularity::words,
                                      Granularity::lines, Granularity::paragraphs};

GranularityLevel parse_level(const json& arr, Granularity g, const std::string& path) {
  GranularityLevel level;
  level.level = g;
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const json& obj = arr[k];
    if (!obj.is_object() || !obj.contains("time") || !obj["time"].is_array() ||
        obj["time"].size() != 2) {
      throw SchemaError(path + ": segment " + std::to_string(k) + " of level '" +
                        annotations::granularity_name(g) +
                        "' needs a two-element \"time\" array");
    }
    AlignedSegment seg;
    seg.t0 = obj["time"][0].get<double>();
    seg.t1 = obj["time"][1].get<double>();
    if (obj.contains("freq")) {
      if (!obj["freq"].is_array() || obj["freq"].size() != 2) {
        throw SchemaError(path + ": segment " + std::to_string(k) +
                          " has a malformed \"freq\" field");
      }
      seg.f_min = obj["freq"][0].get<double>();
      seg.f_max = obj["freq"][1].get<double>();
    }
    if (obj.contains("text")) seg.text = obj["text"].get<std::string>();
    if (obj.contains("phonemes")) {
      for (const auto& p : obj["phonemes"]) seg.phonemes.push_back(p.get<std::string>());
    }
    if (obj.contains("index") && !obj["index"].is_null()) {
      const long long idx = obj["index"].get<long long>();
      if (idx < 0) {
        throw SchemaError(path + ": segment " + std::to_string(k) +
                          " has a negative \"index\"");
      }
      seg.parent_index = static_cast<std::size_t>(idx);
    }
    level.segments.push_back(std::move(seg));
  }
  return level;
}

}  // namespace

std::string gzip_compress(const std::string& bytes) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, 15 + 16, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK) {
    throw SchemaError("gzip_compress: deflateInit2 failed");
  }
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(bytes.data()));
  zs.avail_in = static_cast<uInt>(bytes.size());
  std::string out;
  char buffer[1 << 15];
  int ret;
  do {
    zs.next_out = reinterpret_cast<Bytef*>(buffer);
    zs.avail_out = sizeof(buffer);
    ret = deflate(&zs, Z_FINISH);
    out.append(buffer, sizeof(buffer) - zs.avail_out);
  } while (ret == Z_OK);
  deflateEnd(&zs);
  if (ret != Z_STREAM_END) throw SchemaError("gzip_compress: deflate failed");
  return out;
}

std::string gzip_decompress(const std::string& bytes) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 32) != Z_OK) {
    throw SchemaError("gzip_decompress: inflateInit2 failed");
  }
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(bytes.data()));
  zs.avail_in = static_cast<uInt>(bytes.size());
  std::string out;
  char buffer[1 << 15];
  int ret;
  do {
    zs.next_out = reinterpret_cast<Bytef*>(buffer);
    zs.avail_out = sizeof(buffer);
    ret = inflate(&zs, Z_NO_FLUSH);
    if (ret != Z_OK && ret != Z_STREAM_END) {
      inflateEnd(&zs);
      throw SchemaError("gzip_decompress: corrupt gzip stream");
    }
    out.append(buffer, sizeof(buffer) - zs.avail_out);
  } while (ret != Z_STREAM_END);
  inflateEnd(&zs);
  return out;
}

annotations::SongAnnotations read_annotations(const std::string& path) {
  std::string bytes = read_file_bytes(path);
  if (has_suffix(path, ".gz")) bytes = gzip_decompress(bytes);

  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::exception& e) {
    throw SchemaError(path + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("annotations") ||
      !doc["annotations"].is_object()) {
    throw SchemaError(path + ": top-level \"annotations\" object is required");
  }

  SongAnnotations song;
  if (doc.contains("info") && doc["info"].is_object()) {
    for (const auto& [key, value] : doc["info"].items()) {
      song.metadata[key] = value.is_string() ? value.get<std::string>() : value.dump();
    }
  }
  for (Granularity g : kAllLevels) {
    const char* name = annotations::granularity_name(g);
    if (doc["annotations"].contains(name)) {
      if (!doc["annotations"][name].is_array()) {
        throw SchemaError(path + ": level '" + name + "' must be an array");
      }
      song.levels[g] = parse_level(doc["annotations"][name], g, path);
    }
  }
  return song;
}

void write_annotations(const std::string& path, const annotations::SongAnnotations& song) {
  json doc;
  doc["info"] = json::object();
  for (const auto& [key, value] : song.metadata) doc["info"][key] = value;
  doc["annotations"] = json::object();
  for (const auto& [g, level] : song.levels) {
    json arr = json::array();
    for (const AlignedSegment& seg : level.segments) {
      json obj;
      obj["time"] = {seg.t0, seg.t1};
      obj["freq"] = {seg.f_min, seg.f_max};
      obj["text"] = seg.text;
      if (!seg.phonemes.empty()) obj["phonemes"] = seg.phonemes;
      if (seg.parent_index) obj["index"] = *seg.parent_index;
      arr.push_back(std::move(obj));
    }
    doc["annotations"][annotations::granularity_name(g)] = std::move(arr);
  }
  std::string bytes = doc.dump(2);
  bytes.push_back('\n');
  if (has_suffix(path, ".gz")) bytes = gzip_compress(bytes);
  write_file_bytes(path, bytes);
}

}  // namespace lyraline::io
