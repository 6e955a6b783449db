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

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "helpers.hpp"
#include "lyraline/annotations.hpp"
#include "lyraline/io.hpp"

using namespace lyraline;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string command = std::string(LYRALINE_CLI_PATH) + " " + args +
                              " > /dev/null 2> /dev/null";
  const int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

fs::path make_workdir() {
  const fs::path dir = fs::temp_directory_path() / "lyraline_cli_test";
  fs::create_directories(dir);
  return dir;
}

annotations::SongAnnotations small_song() {
  using namespace lyraline::annotations;
  SongAnnotations song;
  GranularityLevel notes;
  notes.level = Granularity::notes;
  for (int k = 0; k < 4; ++k) {
    auto s = test_helpers::segment(1.0 + 0.8 * k, 1.5 + 0.8 * k,
                                   220.0 * std::exp2(k / 12.0), "la");
    s.parent_index = 0;
    notes.segments.push_back(s);
  }
  song.levels[Granularity::notes] = notes;
  GranularityLevel words;
  words.level = Granularity::words;
  auto word = test_helpers::segment(1.0, 4.0, 220.0, "lalalala");
  word.parent_index = 0;
  words.segments = {word};
  song.levels[Granularity::words] = words;
  GranularityLevel lines;
  lines.level = Granularity::lines;
  auto line = test_helpers::segment(1.0, 4.0, 220.0, "la la la la");
  line.parent_index = 0;
  lines.segments = {line};
  song.levels[Granularity::lines] = lines;
  GranularityLevel paragraphs;
  paragraphs.level = Granularity::paragraphs;
  paragraphs.segments = {test_helpers::segment(1.0, 4.0, 220.0, "la la la la")};
  song.levels[Granularity::paragraphs] = paragraphs;
  return song;
}

}  // namespace

TEST_CASE("cli validate exits 0 on a well-formed file and 2 on violations") {
  const fs::path dir = make_workdir();
  const std::string good = (dir / "good.json").string();
  io::write_annotations(good, small_song());
  CHECK(run_cli("validate --annotations " + good) == 0);

  auto bad_song = small_song();
  bad_song.levels[annotations::Granularity::notes].segments[0].t1 = 0.1;
  const std::string bad = (dir / "bad.json").string();
  io::write_annotations(bad, bad_song);
  CHECK(run_cli("validate --annotations " + bad) == 2);
}

TEST_CASE("cli rejects unknown flags with exit 2") {
  CHECK(run_cli("validate --annotations x.json --no-such-flag") == 2);
  CHECK(run_cli("no-such-command") == 2);
}

TEST_CASE("cli film-params prints the table values") {
  CHECK(run_cli("film-params --variant S_rs") == 0);
  CHECK(run_cli("film-params --variant Q_zz") == 2);
}

TEST_CASE("cli missing input file exits 2") {
  CHECK(run_cli("validate --annotations /nonexistent/of/course.json") == 2);
}

TEST_CASE("cli align-global degenerate input exits 3") {
  const fs::path dir = make_workdir();
  const std::string ann = (dir / "degenerate.json").string();
  io::write_annotations(ann, small_song());
  // All-zero phat: zero norm.
  DenseMatrix zeros(400, 1, 0.0f);
  const std::string phat = (dir / "zeros.mmx").string();
  io::write_matrix(phat, zeros);
  CHECK(run_cli("align-global --annotations " + ann + " --phat " + phat +
                " --fr 43.0 --steps 3") == 3);
}

TEST_CASE("cli rasterize writes a series and a resolved config") {
  const fs::path dir = make_workdir();
  const std::string ann = (dir / "raster.json").string();
  io::write_annotations(ann, small_song());
  const std::string out = (dir / "vas.mmx").string();
  CHECK(run_cli("rasterize --annotations " + ann + " --out " + out) == 0);
  const DenseMatrix vas = io::read_matrix(out);
  CHECK(vas.rows() > 0);
  CHECK(fs::exists(out + ".config"));
}

TEST_CASE("cli align-global writes aligned annotations and a report") {
  const fs::path dir = make_workdir();
  const auto song = small_song();
  const std::string ann = (dir / "song.json").string();
  io::write_annotations(ann, song);

  // phat from the song itself, shifted by 0.7 s.
  auto shifted = song.levels.at(annotations::Granularity::notes);
  for (auto& s : shifted.segments) {
    s.t0 += 0.7;
    s.t1 += 0.7;
  }
  TimeGrid grid{0.014, 450};
  const FrameSeries phat = annotations::rasterize_vas(shifted, grid);
  DenseMatrix phat_m(phat.values.size(), 1);
  for (std::size_t i = 0; i < phat.values.size(); ++i) {
    phat_m.at(i, 0) = phat.values[i];
  }
  const std::string phat_path = (dir / "phat.mmx").string();
  io::write_matrix(phat_path, phat_m);

  const std::string out = (dir / "aligned.json").string();
  const std::string report = (dir / "report.json").string();
  CHECK(run_cli("align-global --annotations " + ann + " --phat " + phat_path +
                " --fr 43.0 --steps 41 --out " + out + " --report " + report) == 0);

  const auto aligned = io::read_annotations(out);
  const auto& notes = aligned.levels.at(annotations::Granularity::notes).segments;
  CHECK(std::abs(notes[0].t0 - (song.levels.at(annotations::Granularity::notes)
                                    .segments[0]
                                    .t0 +
                                0.7)) < 0.03);

  const auto report_doc =
      nlohmann::json::parse(io::read_file_bytes(report));
  CHECK(report_doc.contains("version"));
  CHECK(report_doc.contains("parameters"));
  CHECK(report_doc["result"]["accepted"].get<bool>());
  CHECK(report_doc["result"]["score"].get<double>() > 0.95);
}

TEST_CASE("cli config file sets defaults and rejects unknown keys") {
  const fs::path dir = make_workdir();
  const std::string ann = (dir / "cfg_song.json").string();
  io::write_annotations(ann, small_song());
  const std::string out = (dir / "cfg_vas.mmx").string();

  const std::string good_cfg = (dir / "good.cfg").string();
  {
    std::ofstream f(good_cfg);
    f << "[rasterize]\n";
    f << "spacing=0.01\n";
  }
  CHECK(run_cli("--config " + good_cfg + " rasterize --annotations " + ann +
                " --out " + out) == 0);
  const std::string resolved = io::read_file_bytes(out + ".config");
  CHECK(resolved.find("0.01") != std::string::npos);

  const std::string bad_cfg = (dir / "bad.cfg").string();
  {
    std::ofstream f(bad_cfg);
    f << "[rasterize]\n";
    f << "definitely_not_a_key=1\n";
  }
  CHECK(run_cli("--config " + bad_cfg + " rasterize --annotations " + ann +
                " --out " + out) == 2);
}

TEST_CASE("cli gen-cleansing requires a seed") {
  const fs::path dir = make_workdir();
  // Inputs do not even need to be read for the seed check to fire, but make
  // them valid anyway.
  DenseMatrix m(100, 72, 0.1f);
  const std::string mix = (dir / "mix.mmx").string();
  const std::string vox = (dir / "vox.mmx").string();
  const std::string sal = (dir / "sal.mmx").string();
  io::write_matrix(mix, m);
  io::write_matrix(vox, m);
  io::write_matrix(sal, m);
  const std::string ann = (dir / "gc_song.json").string();
  io::write_annotations(ann, small_song());
  const std::string out = (dir / "ds.bin").string();
  CHECK(run_cli("gen-cleansing --cqt-mix " + mix + " --cqt-vox " + vox +
                " --notes " + ann + " --salience " + sal + " --out " + out) == 2);
}

TEST_CASE("cli epf-apply modes work end to end") {
  const fs::path dir = make_workdir();
  DenseMatrix g(4, 1);
  g.at(0, 0) = 0.6f;
  g.at(1, 0) = 0.4f;
  g.at(2, 0) = 0.5f;
  g.at(3, 0) = 0.1f;
  const std::string scores = (dir / "g.mmx").string();
  io::write_matrix(scores, g);
  CHECK(run_cli("epf-apply --scores " + scores + " --mode rate") == 0);
  const std::string weights = (dir / "w.mmx").string();
  CHECK(run_cli("epf-apply --scores " + scores + " --mode weight --out " + weights) ==
        0);
  const DenseMatrix w = io::read_matrix(weights);
  CHECK(w.at(0, 0) == doctest::Approx(0.4f));
  const std::string kept = (dir / "kept.mmx").string();
  CHECK(run_cli("epf-apply --scores " + scores + " --mode filter --out " + kept) == 0);
  const DenseMatrix k = io::read_matrix(kept);
  CHECK(k.rows() == 2);  // frames 1 and 3
}
