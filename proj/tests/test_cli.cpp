/*
 * Copyright 2026 The dronefuse Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <json.hpp>
#include <regex>
#include <sys/wait.h>

#include "dronefuse/config.hpp"
#include "dronefuse/error.hpp"
#include "dronefuse/synthgen.hpp"
#include "test_util.hpp"

using namespace dronefuse;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string cli() {
  const char* p = std::getenv("DRONEFUSE_CLI");
  REQUIRE_MESSAGE(p != nullptr, "DRONEFUSE_CLI must point at the dronefuse binary");
  return p;
}

Run run(const std::string& args) {
  static int counter = 0;
  const auto err_path = fs::temp_directory_path() / ("dronefuse_cli_err_" + std::to_string(counter++));
  const std::string cmd = cli() + " " + args + " 2>" + err_path.string();
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  const auto e = testutil::file_bytes(err_path);
  r.err.assign(e.begin(), e.end());
  fs::remove(err_path);
  return r;
}

// Small, fast settings layered on the toy preset.
const std::string kFast =
    " --preset toy --quiet --set train.epochs=1 --set train.batch_size=8 --set synth.n_per_class=6";

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_SUITE("configuration") {
  TEST_CASE("paper preset carries the published hyperparameters") {
    const auto c = preset("paper");
    CHECK(c.train.epochs == 60);
    CHECK(c.train.batch_size == 64);
    CHECK(c.train.learning_rate == 5e-5);
    CHECK(c.train.weight_decay == 0.4);
    CHECK(c.model.dropout == 0.4);
    CHECK(c.train.test_fraction == 0.15);
    CHECK(c.model.fusion.n_heads == 8);
    CHECK(c.model.fusion.embed_dim == 128);
    CHECK(c.model.acoustic.small_kernel == 7);
    CHECK(c.model.acoustic.large_kernel == 107);
    CHECK(c.model.acoustic.num_se_blocks == 5);
    CHECK(c.model.range_doppler.kernels == std::vector<std::size_t>{3, 3, 5, 7});
    CHECK(c.snr_list == std::vector<double>{6, 12, 18, 24});
    CHECK_NOTHROW(c.validate());
    CHECK_THROWS_AS(preset("huge"), ConfigError);
  }
  TEST_CASE("set/get and key-value round trips") {
    auto c = preset("toy");
    set_key(c, "train.learning_rate", "0.00125");
    CHECK(c.train.learning_rate == 0.00125);
    CHECK(get_key(c, "train.learning_rate") == "0.00125");
    set_key(c, "model.acoustic.widths", "8,8,16,16,8");
    CHECK(c.model.acoustic.widths == std::vector<std::size_t>{8, 8, 16, 16, 8});
    CHECK_THROWS_AS(set_key(c, "train.nope", "1"), ConfigError);
    CHECK_THROWS_AS(set_key(c, "train.epochs", "many"), ConfigError);
    auto d = preset("paper");
    for (const auto& [k, v] : parse_kv(to_kv(c), "roundtrip")) set_key(d, k, v);
    CHECK(to_kv(d) == to_kv(c));
    for (const auto& k : config_keys()) CHECK(get_key(d, k) == get_key(c, k));
    CHECK(parse_kv("# comment\n a = 1 \n\nb=x y\n", "t") ==
          std::vector<std::pair<std::string, std::string>>{{"a", "1"}, {"b", "x y"}});
    try {
      parse_kv("a = 1\nbroken line\n", "file.cfg");
      FAIL("no throw");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("file.cfg:2") != std::string::npos);
    }
  }
  TEST_CASE("validation rejects inconsistent settings") {
    auto c = preset("toy");
    set_key(c, "synth.ambient_colour_max", "1.0");
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = preset("toy");
    set_key(c, "radar.bandwidth", "3e9");
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
}

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit 2") {
    CHECK(run("").code == 2);
    CHECK(run("frobnicate").code == 2);
    CHECK(run("train").code == 2);
    testutil::TempDir d("cli_usage");
    const auto r = run("synth --n 0 -o " + q(d / "x") + kFast);
    CHECK(r.code == 2);
    CHECK(r.err.find("dronefuse: error") != std::string::npos);
    CHECK(run("--help").code == 0);
  }
  TEST_CASE("errors are classified by kind") {
    testutil::TempDir d("cli_errors");
    auto r = run("rd-map " + q(d / "missing.bin") + kFast);
    CHECK(r.code == 5);
    CHECK(r.err.find("kind=io code=5") != std::string::npos);
    CHECK(run("info --set train.epochs=0 --quiet").code == 6);
    CHECK(run("info --set no.such.key=1 --quiet").code == 6);
    std::ofstream(d / "bad.cfg") << "this is not a key value line\n";
    CHECK(run("info --quiet --config " + q(d / "bad.cfg")).code == 3);
    std::ofstream(d / "short.bin", std::ios::binary) << "abc";
    CHECK(run("rd-map " + q(d / "short.bin") + kFast).code == 8);
    std::ofstream(d / "manifest.jsonl") << "{not json\n";
    CHECK(run("train " + q(d.path()) + " -o " + q(d / "out") + kFast).code == 3);
  }
  TEST_CASE("gradcheck and info") {
    const auto g = run("gradcheck --quiet");
    CHECK(g.code == 0);
    CHECK(g.out.find("all layers pass") != std::string::npos);
    const auto i = run("info --quiet");
    CHECK(i.code == 0);
    CHECK(i.out.find("parameters=6301131") != std::string::npos);
    CHECK(i.out.find("mult_adds=54836914240") != std::string::npos);
    const auto cfg = run("info --preset toy --set seed=3");
    CHECK(cfg.err.find("config: seed = 3") != std::string::npos);
  }
  TEST_CASE("synth, rd-map, train, eval, ablate and noise-sweep end to end") {
    testutil::TempDir d("cli_flow");
    const auto data = d / "data";
    auto r = run("synth -o " + q(data) + " --seed 7" + kFast);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("records=30") != std::string::npos);
    CHECK(fs::exists(data / "dataset.cfg"));
    const auto manifest = load_manifest(data / "manifest.jsonl");
    REQUIRE(manifest.records.size() == 30);

    // Same seed: identical bytes. Different seed: different bytes.
    REQUIRE(run("synth -o " + q(d / "again") + " --seed 7" + kFast).code == 0);
    REQUIRE(run("synth -o " + q(d / "other") + " --seed 8" + kFast).code == 0);
    CHECK(testutil::file_bytes(data / "manifest.jsonl") == testutil::file_bytes(d / "again" / "manifest.jsonl"));
    for (const auto& rec : manifest.records) {
      CHECK(testutil::file_bytes(data / rec.radar_path) == testutil::file_bytes(d / "again" / rec.radar_path));
      CHECK(testutil::file_bytes(data / rec.acoustic_path) == testutil::file_bytes(d / "again" / rec.acoustic_path));
    }
    CHECK(testutil::file_bytes(data / manifest.records[9].radar_path) !=
          testutil::file_bytes(d / "other" / manifest.records[9].radar_path));

    // rd-map: the brightest cell is the scene's analytic bin.
    auto cfg = preset("toy");
    set_key(cfg, "seed", "7");
    const auto lib = cfg.library();
    bool mapped = false;
    for (const auto& rec : manifest.records) {
      if (rec.detection_label == 0) continue;
      KeyedStream rng{7, hash_string(rec.id), 0};
      const auto scene = synth::draw_scene(lib, rec.class_label, cfg.radar, rng);
      const auto [ad, ar] = synth::analytic_bins(scene.radar, cfg.radar);
      if (std::labs(ad - static_cast<long>(cfg.radar.chirps_per_frame / 2)) < 2) continue;
      r = run("rd-map " + q(data / rec.radar_path) + " --filter-zero-doppler --cfar -o " + q(d / "rd") + kFast);
      REQUIRE(r.code == 0);
      std::smatch m;
      REQUIRE(std::regex_search(r.out, m, std::regex("peak doppler_bin=(\\d+) range_bin=(\\d+)")));
      CHECK(std::labs(std::stol(m[1]) - ad) <= 1);
      CHECK(std::labs(std::stol(m[2]) - ar) <= 1);
      const auto pgm = testutil::file_bytes(d / "rd" / "rd_map.pgm");
      const std::string header(pgm.begin(), pgm.begin() + 2);
      CHECK(header == "P5");
      CHECK(fs::exists(d / "rd" / "rd_map.csv"));
      CHECK(fs::exists(d / "rd" / "detections.csv"));
      mapped = true;
      break;
    }
    CHECK(mapped);
    CHECK(run("rd-map " + q(data / manifest.records[0].radar_path) + " --frame 9" + kFast).code == 8);

    // train twice: identical checkpoints.
    r = run("train " + q(data) + " -o " + q(d / "m1") + kFast);
    REQUIRE(r.code == 0);
    REQUIRE(run("train " + q(data) + " -o " + q(d / "m2") + kFast).code == 0);
    for (const char* f : {"model.json", "model.bin", "model.cfg", "training_log.csv", "metrics.json"}) {
      CAPTURE(f);
      REQUIRE(fs::exists(d / "m1" / f));
      CHECK(testutil::file_bytes(d / "m1" / f) == testutil::file_bytes(d / "m2" / f));
    }
    const auto metrics = nlohmann::json::parse(std::ifstream(d / "m1" / "metrics.json"));
    CHECK(metrics.contains("detection_accuracy"));

    r = run("eval " + q(d / "m1" / "model.json") + " " + q(data) + " -o " + q(d / "eval.json") + " --quiet");
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(std::ifstream(d / "eval.json"))["detection_accuracy"] == metrics["detection_accuracy"]);
    CHECK(run("info " + q(d / "m1" / "model.json") + " --quiet").out.find("modalities=acoustic+range_doppler") !=
          std::string::npos);

    r = run("train " + q(data) + " --modalities acoustic -o " + q(d / "ac") + kFast);
    REQUIRE(r.code == 0);
    CHECK(run("info " + q(d / "ac" / "model.json") + " --quiet").out.find("modalities=acoustic\n") != std::string::npos);

    r = run("ablate " + q(data) + " -o " + q(d / "ab") + kFast);
    REQUIRE(r.code == 0);
    std::ifstream ab(d / "ab" / "ablation.csv");
    std::vector<std::string> lines;
    for (std::string s; std::getline(ab, s);) lines.push_back(s);
    REQUIRE(lines.size() == 4);
    CHECK(lines[1].rfind("acoustic+range_doppler,", 0) == 0);
    CHECK(lines[2].rfind("acoustic,", 0) == 0);
    CHECK(lines[3].rfind("range_doppler,", 0) == 0);

    r = run("noise-sweep " + q(data) + " --checkpoint " + q(d / "m1" / "model.json") + " --checkpoint " +
            q(d / "ac" / "model.json") + " -o " + q(d / "snr.csv") + kFast);
    REQUIRE(r.code == 0);
    std::ifstream sw(d / "snr.csv");
    lines.clear();
    for (std::string s; std::getline(sw, s);) lines.push_back(s);
    REQUIRE(lines.size() == 6);
    CHECK(lines[1].rfind("6,", 0) == 0);
    CHECK(lines[5].rfind("clean,", 0) == 0);
  }
}
