// Copyright 2026 The posegroup Authors
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
#include <sys/stat.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

extern std::string g_cli_path;

namespace {

using nlohmann::json;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

// Scratch directory for one test run, removed on destruction.
struct TempDir {
  std::string path;
  TempDir() {
    static int counter = 0;
    path = "/tmp/posegroup_cli_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter++);
    ::mkdir(path.c_str(), 0755);
  }
  ~TempDir() {
    const int rc = std::system(("rm -rf '" + path + "'").c_str());
    (void)rc;
  }
  std::string file(const std::string& name) const { return path + "/" + name; }
};

RunResult run_cli(const TempDir& dir, const std::string& args) {
  REQUIRE(!g_cli_path.empty());
  const std::string out_path = dir.path + "/.stdout";
  const std::string err_path = dir.path + "/.stderr";
  const std::string command =
      "'" + g_cli_path + "' " + args + " > '" + out_path + "' 2> '" + err_path + "'";
  const int status = std::system(command.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  return result;
}

json last_json_line(const std::string& text) {
  std::istringstream in(text);
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  return json::parse(last);
}

}  // namespace

TEST_CASE("cli help exits zero") {
  TempDir dir;
  CHECK(run_cli(dir, "--help").exit_code == 0);
  const RunResult sub = run_cli(dir, "synth --help");
  CHECK(sub.exit_code == 0);
  CHECK(sub.out.find("--count") != std::string::npos);
}

TEST_CASE("unknown flags fail with a usage error") {
  TempDir dir;
  const RunResult r = run_cli(dir, "synth --nope 3");
  CHECK(r.exit_code == 2);
  const json err = json::parse(r.err);
  CHECK(err.at("error").get<std::string>() == "usage");
  CHECK(!err.at("message").get<std::string>().empty());
}

TEST_CASE("no subcommand fails with a usage error") {
  TempDir dir;
  const RunResult r = run_cli(dir, "");
  CHECK(r.exit_code == 2);
  CHECK(json::parse(r.err).at("error").get<std::string>() == "usage");
}

TEST_CASE("synth is deterministic per seed") {
  TempDir dir;
  const RunResult a =
      run_cli(dir, "synth --count 4 --seed 9 --out " + dir.file("a.json"));
  const RunResult b =
      run_cli(dir, "synth --count 4 --seed 9 --out " + dir.file("b.json"));
  const RunResult c =
      run_cli(dir, "synth --count 4 --seed 10 --out " + dir.file("c.json"));
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  REQUIRE(c.exit_code == 0);
  CHECK(slurp(dir.file("a.json")) == slurp(dir.file("b.json")));
  CHECK(slurp(dir.file("a.json")) != slurp(dir.file("c.json")));
  CHECK(!slurp(dir.file("a.gt.json")).empty());
  CHECK(slurp(dir.file("a.gt.json")) == slurp(dir.file("b.gt.json")));

  const json summary = last_json_line(a.out);
  CHECK(summary.at("command").get<std::string>() == "synth");
  CHECK(summary.at("scenes").get<int>() == 4);
  CHECK(summary.at("gt_persons").get<int>() > 0);
}

TEST_CASE("zero scenes produce an empty container and empty results") {
  TempDir dir;
  const RunResult s =
      run_cli(dir, "synth --count 0 --out " + dir.file("empty.json"));
  REQUIRE(s.exit_code == 0);
  const json container = json::parse(slurp(dir.file("empty.json")));
  CHECK(container.at("scenes").empty());

  const RunResult g = run_cli(dir, "group --grouper oracle --data " +
                                       dir.file("empty.json") + " --out " +
                                       dir.file("res.json"));
  REQUIRE(g.exit_code == 0);
  CHECK(json::parse(slurp(dir.file("res.json"))).empty());
}

TEST_CASE("oracle grouping round trips to a perfect evaluation") {
  TempDir dir;
  REQUIRE(run_cli(dir, "synth --count 6 --seed 21 --out " + dir.file("data.json"))
              .exit_code == 0);
  const RunResult g = run_cli(dir, "group --grouper oracle --data " +
                                       dir.file("data.json") + " --out " +
                                       dir.file("res.json"));
  REQUIRE(g.exit_code == 0);
  const json summary = last_json_line(g.out);
  CHECK(summary.at("scenes").get<int>() == 6);
  CHECK(summary.at("persons").get<int>() > 0);

  const RunResult e =
      run_cli(dir, "eval --results " + dir.file("res.json") + " --gt " +
                       dir.file("data.json") + " --out " + dir.file("report.json"));
  REQUIRE(e.exit_code == 0);
  CHECK(e.out.find("ap") != std::string::npos);
  const json report = json::parse(slurp(dir.file("report.json")));
  CHECK(report.at("ap").get<double>() == 1.0);
  CHECK(report.at("ar").get<double>() == 1.0);

  // The COCO ground-truth export evaluates identically.
  const RunResult e2 = run_cli(dir, "eval --results " + dir.file("res.json") +
                                        " --gt " + dir.file("data.gt.json"));
  REQUIRE(e2.exit_code == 0);
}

TEST_CASE("grouping trace is valid json with advancing iterations") {
  TempDir dir;
  REQUIRE(run_cli(dir, "synth --count 2 --seed 33 --out " + dir.file("data.json"))
              .exit_code == 0);
  const RunResult g = run_cli(
      dir, "group --grouper oracle --data " + dir.file("data.json") + " --out " +
               dir.file("res.json") + " --trace-out " + dir.file("trace.json"));
  REQUIRE(g.exit_code == 0);
  const json trace = json::parse(slurp(dir.file("trace.json")));
  REQUIRE(trace.is_array());
  REQUIRE(!trace.empty());
  for (const auto& image : trace) {
    int previous = 0;
    for (const auto& iteration : image.at("iterations")) {
      const int number = iteration.at("iteration").get<int>();
      CHECK(number == previous + 1);
      previous = number;
      CHECK(iteration.contains("macro_members"));
      CHECK(iteration.contains("merged"));
      CHECK(iteration.contains("pruned_edges"));
    }
  }
}

TEST_CASE("one training step writes one metrics line and a loadable checkpoint") {
  TempDir dir;
  spit(dir.file("synth.json"),
       R"({"synth": {"person_min": 2, "person_max": 2, "keypoint_types": 5}})");
  REQUIRE(run_cli(dir, "synth --config " + dir.file("synth.json") +
                           " --count 4 --seed 5 --out " + dir.file("data.json"))
              .exit_code == 0);

  spit(dir.file("train.json"),
       R"({"synth": {"keypoint_types": 5},
           "train": {"steps": 1, "batch_size": 2}})");
  const RunResult t = run_cli(dir, "train --config " + dir.file("train.json") +
                                       " --data " + dir.file("data.json") +
                                       " --seed 3 --out " + dir.file("ckpt.json"));
  REQUIRE(t.exit_code == 0);
  const json summary = last_json_line(t.out);
  CHECK(summary.at("steps").get<int>() == 1);

  const std::string metrics = slurp(dir.file("ckpt.json.metrics.jsonl"));
  int lines = 0;
  std::istringstream in(metrics);
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    ++lines;
    const json record = json::parse(line);
    CHECK(record.at("step").get<int>() == 1);
    CHECK(record.contains("edge_bce"));
    CHECK(record.contains("total"));
  }
  CHECK(lines == 1);

  // The checkpoint drives grouping on matching data.
  const RunResult g = run_cli(dir, "group --data " + dir.file("data.json") +
                                       " --checkpoint " + dir.file("ckpt.json") +
                                       " --out " + dir.file("res.json"));
  CHECK(g.exit_code == 0);
}

TEST_CASE("training rejects data without embeddings") {
  TempDir dir;
  REQUIRE(run_cli(dir, "synth --count 2 --seed 6 --out " + dir.file("data.json"))
              .exit_code == 0);
  // The COCO ground-truth file carries no candidate embeddings.
  const RunResult t = run_cli(dir, "train --data " + dir.file("data.gt.json") +
                                       " --out " + dir.file("ckpt.json"));
  CHECK(t.exit_code == 2);
  CHECK(json::parse(t.err).at("error").get<std::string>() == "data");
}

TEST_CASE("evaluation rejects results for unknown images") {
  TempDir dir;
  REQUIRE(run_cli(dir, "synth --count 2 --seed 7 --out " + dir.file("data.json"))
              .exit_code == 0);
  spit(dir.file("res.json"),
       R"([{"image_id": 999, "category_id": 1, "score": 0.5,
            "keypoints": [0.5, 0.5, 1.0]}])");
  const RunResult e = run_cli(dir, "eval --results " + dir.file("res.json") +
                                       " --gt " + dir.file("data.json"));
  CHECK(e.exit_code == 2);
  const json err = json::parse(e.err);
  CHECK(err.at("error").get<std::string>() == "data");
  CHECK(err.at("message").get<std::string>().find("999") != std::string::npos);
}

TEST_CASE("malformed config fails with a data error") {
  TempDir dir;
  spit(dir.file("broken.json"), "{ not json");
  const RunResult r = run_cli(dir, "synth --config " + dir.file("broken.json") +
                                       " --count 1 --out " + dir.file("x.json"));
  CHECK(r.exit_code == 2);
  CHECK(json::parse(r.err).at("error").get<std::string>() == "data");

  spit(dir.file("alien.json"), R"({"synth": {"person_minimum": 2}})");
  const RunResult s = run_cli(dir, "synth --config " + dir.file("alien.json") +
                                       " --count 1 --out " + dir.file("y.json"));
  CHECK(s.exit_code == 2);
  CHECK(json::parse(s.err).at("error").get<std::string>() == "data");
}

TEST_CASE("missing files fail with an io error") {
  TempDir dir;
  const RunResult r = run_cli(dir, "group --grouper oracle --data " +
                                       dir.file("nothere.json") + " --out " +
                                       dir.file("res.json"));
  CHECK(r.exit_code == 2);
  CHECK(json::parse(r.err).at("error").get<std::string>() == "io");
}

TEST_CASE("ohgc grouping requires a checkpoint") {
  TempDir dir;
  REQUIRE(run_cli(dir, "synth --count 1 --seed 8 --out " + dir.file("data.json"))
              .exit_code == 0);
  const RunResult r = run_cli(dir, "group --data " + dir.file("data.json") +
                                       " --out " + dir.file("res.json"));
  CHECK(r.exit_code == 2);
  CHECK(json::parse(r.err).at("error").get<std::string>() == "usage");
}
