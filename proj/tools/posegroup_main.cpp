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

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "posegroup/coco_io.hpp"
#include "posegroup/config.hpp"
#include "posegroup/errors.hpp"
#include "posegroup/eval.hpp"
#include "posegroup/graph.hpp"
#include "posegroup/greedy.hpp"
#include "posegroup/nn.hpp"
#include "posegroup/ohgc.hpp"
#include "posegroup/rng.hpp"
#include "posegroup/scene.hpp"
#include "posegroup/train.hpp"

namespace {

using nlohmann::json;
using namespace posegroup;

int fail(int code, const std::string& category, const std::string& message) {
  const json err = {{"error", category}, {"message", message}};
  std::cerr << err.dump() << "\n";
  return code;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

AppConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return default_config();
  return load_config(path);
}

std::string default_gt_path(const std::string& out) {
  const std::string suffix = ".json";
  if (out.size() > suffix.size() &&
      out.compare(out.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return out.substr(0, out.size() - suffix.size()) + ".gt.json";
  }
  return out + ".gt.json";
}

/// Loads either the native scene container or a COCO ground-truth file,
/// sniffing the format from the parsed document.
std::vector<Scene> load_scene_like(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (doc.is_object() && doc.contains("format") && doc["format"].is_string() &&
      doc["format"].get<std::string>() == "posegroup-scenes") {
    return load_scenes(path);
  }
  if (doc.is_object() && doc.contains("images")) {
    int j = 17;
    if (doc.contains("categories") && doc["categories"].is_array() &&
        !doc["categories"].empty() && doc["categories"][0].contains("keypoints") &&
        doc["categories"][0]["keypoints"].is_array()) {
      j = static_cast<int>(doc["categories"][0]["keypoints"].size());
    }
    return load_coco(path, skeleton_for(j));
  }
  throw SchemaError("unrecognized dataset format: " + path);
}

/// Checks that every scene shares one keypoint count (and embedding width);
/// mixed corpora are a config problem, not an internal one.
bool consistent_dims(const std::vector<Scene>& scenes, std::string* message) {
  for (const auto& s : scenes) {
    if (s.keypoint_types != scenes.front().keypoint_types ||
        s.embedding_dim != scenes.front().embedding_dim) {
      *message = "scene " + std::to_string(s.image_id) +
                 " has mismatched keypoint or embedding dimensions";
      return false;
    }
  }
  return true;
}

struct SynthArgs {
  std::string config_path;
  std::string out_path;
  std::string gt_out_path;
  int count = 100;
  std::optional<std::uint64_t> seed;
};

int cmd_synth(const SynthArgs& args) {
  AppConfig config = load_config_or_default(args.config_path);
  if (args.seed) config.synth.rng_seed = *args.seed;
  if (args.count < 0) return fail(2, "usage", "--count must be nonnegative");

  std::vector<Scene> scenes;
  scenes.reserve(static_cast<std::size_t>(args.count));
  for (int i = 0; i < args.count; ++i) {
    SynthConfig sc = config.synth;
    sc.rng_seed = config.synth.rng_seed + static_cast<std::uint64_t>(i);
    scenes.push_back(generate_synthetic(sc, i));
  }
  save_scenes(scenes, args.out_path);
  const std::string gt_path =
      args.gt_out_path.empty() ? default_gt_path(args.out_path) : args.gt_out_path;
  save_coco_gt(scenes, gt_path);

  int gt_total = 0;
  for (const auto& s : scenes) gt_total += static_cast<int>(s.gt_persons.size());
  const json summary = {{"command", "synth"},
                        {"scenes", args.count},
                        {"gt_persons", gt_total},
                        {"out", args.out_path},
                        {"gt_out", gt_path}};
  std::cout << summary.dump() << "\n";
  return 0;
}

struct TrainArgs {
  std::string config_path;
  std::string data_path;
  std::string out_path;
  std::string metrics_path;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& args) {
  AppConfig config = load_config_or_default(args.config_path);
  if (args.seed) {
    config.train.network_seed = *args.seed;
    config.train.data_seed = *args.seed + 1;
  }
  const std::vector<Scene> scenes = load_scene_like(args.data_path);
  if (scenes.empty()) return fail(2, "data", "training data is empty");
  for (const auto& s : scenes) {
    if (!s.has_embeddings) {
      return fail(2, "data", "scene " + std::to_string(s.image_id) +
                                 " has no embeddings; training needs them");
    }
    if (!s.has_ground_truth()) {
      return fail(2, "data", "scene " + std::to_string(s.image_id) +
                                 " has no ground truth; training needs it");
    }
  }
  std::string mismatch;
  if (!consistent_dims(scenes, &mismatch)) return fail(2, "data", mismatch);

  const int j = scenes.front().keypoint_types;
  const int feature_dim = scenes.front().embedding_dim + j + 2;
  const GraphTopology topology = topology_from_params(config.topology, j);
  DiscriminatorBundle bundle = make_bundle(feature_dim, config.train.network_seed);
  Rng data_rng(config.train.data_seed);
  Rng dropout_rng(config.train.network_seed + 0x517cc1b727220a95ULL);
  AdamState opt_state;

  const std::string metrics_path = args.metrics_path.empty()
                                       ? args.out_path + ".metrics.jsonl"
                                       : args.metrics_path;
  std::ofstream metrics(metrics_path, std::ios::binary);
  if (!metrics) return fail(2, "io", "cannot open metrics log: " + metrics_path);

  const int n = static_cast<int>(scenes.size());
  LossReport last;
  for (int step = 1; step <= config.train.steps; ++step) {
    std::vector<Scene> batch;
    batch.reserve(static_cast<std::size_t>(config.train.batch_size));
    for (int b = 0; b < config.train.batch_size; ++b) {
      batch.push_back(scenes[static_cast<std::size_t>(data_rng.uniform_int(0, n - 1))]);
    }
    last = train_step(batch, bundle, opt_state, config.train.adam, topology,
                      config.ohgc, config.train.loss_weights, dropout_rng);
    const json line = {{"step", step},
                       {"edge_bce", last.edge_bce},
                       {"macro_final_bce", last.macro_final_bce},
                       {"macro_intermediate_bce", last.macro_intermediate_bce},
                       {"total", last.total},
                       {"edge_accuracy", last.edge_accuracy}};
    metrics << line.dump() << "\n";
    metrics.flush();
    if (config.train.checkpoint_every > 0 &&
        step % config.train.checkpoint_every == 0 && step != config.train.steps) {
      save_checkpoint(bundle, args.out_path + ".step" + std::to_string(step));
    }
  }
  save_checkpoint(bundle, args.out_path);

  const json summary = {{"command", "train"},
                        {"steps", config.train.steps},
                        {"final_edge_bce", last.edge_bce},
                        {"final_edge_accuracy", last.edge_accuracy},
                        {"checkpoint", args.out_path},
                        {"metrics_log", metrics_path}};
  std::cout << summary.dump() << "\n";
  return 0;
}

struct GroupArgs {
  std::string config_path;
  std::string data_path;
  std::string out_path;
  std::string checkpoint_path;
  std::string grouper = "ohgc";
  std::string topology_name;
  std::string trace_path;
  int threads = 1;
};

int cmd_group(const GroupArgs& args) {
  AppConfig config = load_config_or_default(args.config_path);
  if (!args.topology_name.empty()) {
    TopologyParams params;
    params.variant = topology_from_name(args.topology_name);
    config.topology = params;
  }
  if (args.threads < 1) return fail(2, "usage", "--threads must be at least 1");

  const std::vector<Scene> scenes = load_scene_like(args.data_path);
  if (scenes.empty()) {
    save_results({}, 1, args.out_path);
    const json summary = {{"command", "group"},
                          {"grouper", args.grouper},
                          {"scenes", 0},
                          {"persons", 0},
                          {"out", args.out_path}};
    std::cout << summary.dump() << "\n";
    return 0;
  }
  std::string mismatch;
  if (!consistent_dims(scenes, &mismatch)) return fail(2, "data", mismatch);
  const int j = scenes.front().keypoint_types;
  const GraphTopology topology = topology_from_params(config.topology, j);

  DiscriminatorBundle bundle;
  if (args.grouper == "ohgc") {
    if (args.checkpoint_path.empty()) {
      return fail(2, "usage", "--checkpoint is required with --grouper ohgc");
    }
    bundle = load_checkpoint(args.checkpoint_path);
    const int expected = scenes.front().embedding_dim + j + 2;
    if (bundle.input_dim() != expected) {
      return fail(2, "config",
                  "checkpoint expects feature dim " +
                      std::to_string(bundle.input_dim()) + " but data has " +
                      std::to_string(expected));
    }
  } else if (args.grouper == "greedy") {
    for (const auto& s : scenes) {
      if (!s.has_embeddings) {
        return fail(2, "data", "scene " + std::to_string(s.image_id) +
                                   " has no embeddings; greedy needs them");
      }
    }
  } else if (args.grouper == "oracle") {
    for (const auto& s : scenes) {
      if (!s.has_ground_truth()) {
        return fail(2, "data", "scene " + std::to_string(s.image_id) +
                                   " has no ground truth; oracle needs it");
      }
    }
  } else {
    return fail(2, "usage", "unknown grouper: " + args.grouper);
  }

  const std::size_t n = scenes.size();
  std::vector<GroupingResult> results(n);
  std::vector<std::vector<IterationTrace>> traces(n);
  const bool want_trace = !args.trace_path.empty();

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(
      static_cast<std::size_t>(args.threads));
  auto worker = [&](std::size_t slot) {
    try {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) break;
        const Scene& scene = scenes[i];
        TraceSink sink = [&traces, i](const IterationTrace& t) {
          traces[i].push_back(t);
        };
        const TraceSink* sink_ptr = want_trace ? &sink : nullptr;
        if (args.grouper == "ohgc") {
          results[i] = group(scene, bundle, topology, config.ohgc, sink_ptr);
        } else if (args.grouper == "oracle") {
          results[i] = group_oracle(scene, topology, config.ohgc, sink_ptr);
        } else {
          results[i] = greedy_decode(scene, config.greedy.tag_distance_threshold);
        }
      }
    } catch (...) {
      errors[slot] = std::current_exception();
    }
  };

  if (args.threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(args.threads));
    for (int t = 0; t < args.threads; ++t) {
      pool.emplace_back(worker, static_cast<std::size_t>(t));
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }

  save_results(results, j, args.out_path);
  if (want_trace) {
    json all = json::array();
    for (std::size_t i = 0; i < n; ++i) {
      json iterations = json::array();
      for (const auto& t : traces[i]) {
        json merged = json::array();
        for (const auto& m : t.merged) merged.push_back({m.first, m.second});
        json members = json::array();
        for (const auto& group_members : t.macro_members) {
          members.push_back(group_members);
        }
        iterations.push_back({{"iteration", t.iteration},
                              {"merged", merged},
                              {"pruned_edges", t.pruned_edges},
                              {"macro_members", members}});
      }
      all.push_back(
          {{"image_id", scenes[i].image_id}, {"iterations", iterations}});
    }
    write_text(args.trace_path, all.dump(2) + "\n");
  }

  int persons = 0;
  for (const auto& r : results) persons += static_cast<int>(r.persons.size());
  const json summary = {{"command", "group"},
                        {"grouper", args.grouper},
                        {"scenes", static_cast<int>(n)},
                        {"persons", persons},
                        {"out", args.out_path}};
  std::cout << summary.dump() << "\n";
  return 0;
}

struct EvalArgs {
  std::string results_path;
  std::string gt_path;
  std::string out_path;
};

int cmd_eval(const EvalArgs& args) {
  const std::vector<GroupingResult> results = load_results(args.results_path);
  const std::vector<Scene> scenes = load_scene_like(args.gt_path);
  for (const auto& r : results) {
    const auto match =
        std::find_if(scenes.begin(), scenes.end(), [&](const Scene& s) {
          return s.image_id == r.image_id;
        });
    if (match == scenes.end()) {
      return fail(2, "data", "results reference unknown image_id " +
                                 std::to_string(r.image_id));
    }
    if (!match->has_ground_truth()) {
      return fail(2, "data", "image_id " + std::to_string(r.image_id) +
                                 " has no ground truth");
    }
  }
  const EvalReport report = evaluate(results, scenes);
  std::cout << report_to_text(report);
  if (!args.out_path.empty()) write_text(args.out_path, report_to_json(report));
  return 0;
}

struct BenchArgs {
  std::string config_path;
  std::string data_path;
  std::string checkpoint_path;
  std::string out_path;
  bool scaling = false;
};

struct StageStats {
  double mean = 0.0;
  double median = 0.0;
};

StageStats stats_of(std::vector<double> samples) {
  StageStats out;
  if (samples.empty()) return out;
  double sum = 0.0;
  for (double v : samples) sum += v;
  out.mean = sum / static_cast<double>(samples.size());
  std::sort(samples.begin(), samples.end());
  const std::size_t mid = samples.size() / 2;
  out.median = (samples.size() % 2 == 1)
                   ? samples[mid]
                   : 0.5 * (samples[mid - 1] + samples[mid]);
  return out;
}

int cmd_bench(const BenchArgs& args) {
  AppConfig config = load_config_or_default(args.config_path);
  const std::vector<Scene> scenes = load_scene_like(args.data_path);
  std::cout << "stage            mean_ms   median_ms\n";
  if (scenes.empty()) return 0;
  std::string mismatch;
  if (!consistent_dims(scenes, &mismatch)) return fail(2, "data", mismatch);

  const int j = scenes.front().keypoint_types;
  const int feature_dim = scenes.front().embedding_dim + j + 2;
  DiscriminatorBundle bundle = args.checkpoint_path.empty()
                                   ? make_bundle(feature_dim, 1)
                                   : load_checkpoint(args.checkpoint_path);
  if (bundle.input_dim() != feature_dim) {
    return fail(2, "config",
                "checkpoint expects feature dim " +
                    std::to_string(bundle.input_dim()) + " but data has " +
                    std::to_string(feature_dim));
  }
  const GraphTopology topology = topology_from_params(config.topology, j);

  using clock = std::chrono::steady_clock;
  auto ms_since = [](clock::time_point start) {
    return std::chrono::duration<double, std::milli>(clock::now() - start).count();
  };

  std::vector<double> build_ms, gnn_ms, loop_ms, eval_ms;
  for (const auto& scene : scenes) {
    auto t0 = clock::now();
    const PoseGraph graph = build_graph(scene, topology);
    build_ms.push_back(ms_since(t0));

    auto t1 = clock::now();
    NeuralScorer scorer(graph, bundle);
    gnn_ms.push_back(ms_since(t1));

    auto t2 = clock::now();
    const ClusterState state = run_clustering_loop(graph, scorer, config.ohgc);
    const GroupingResult result = state_to_result(scene, state);
    loop_ms.push_back(ms_since(t2));

    if (scene.has_ground_truth()) {
      auto t3 = clock::now();
      evaluate({result}, {scene});
      eval_ms.push_back(ms_since(t3));
    } else {
      eval_ms.push_back(0.0);
    }
  }

  const StageStats build = stats_of(build_ms);
  const StageStats gnn = stats_of(gnn_ms);
  const StageStats loop = stats_of(loop_ms);
  const StageStats ev = stats_of(eval_ms);
  char line[128];
  auto row = [&](const char* name, const StageStats& s) {
    std::snprintf(line, sizeof(line), "%-16s %8.3f %10.3f\n", name, s.mean,
                  s.median);
    std::cout << line;
  };
  row("graph_build", build);
  row("gnn_forward", gnn);
  row("clustering_loop", loop);
  row("evaluation", ev);
  const double total = build.mean + gnn.mean + loop.mean + ev.mean;
  const double share = total > 0.0 ? loop.mean / total : 0.0;
  std::snprintf(line, sizeof(line), "clustering_loop share of total: %.1f%%\n",
                100.0 * share);
  std::cout << line;

  json doc = {{"graph_build_ms", {{"mean", build.mean}, {"median", build.median}}},
              {"gnn_forward_ms", {{"mean", gnn.mean}, {"median", gnn.median}}},
              {"clustering_loop_ms", {{"mean", loop.mean}, {"median", loop.median}}},
              {"evaluation_ms", {{"mean", ev.mean}, {"median", ev.median}}},
              {"clustering_loop_share", share}};

  if (args.scaling) {
    const int sizes[] = {1, 10, 20};
    std::vector<double> mean_loop;
    std::vector<double> mean_nodes;
    for (int persons : sizes) {
      SynthConfig sc = config.synth;
      sc.person_min = persons;
      sc.person_max = persons;
      sc.keypoint_drop_prob = 0.0;
      sc.rng_seed = 9000 + static_cast<std::uint64_t>(persons);
      const Scene scene = generate_synthetic(sc, 100000 + persons);
      const PoseGraph graph = build_graph(scene, topology);
      NeuralScorer scorer(graph, bundle);
      auto t = clock::now();
      run_clustering_loop(graph, scorer, config.ohgc);
      mean_loop.push_back(ms_since(t));
      mean_nodes.push_back(static_cast<double>(scene.candidates.size()));
    }
    json scaling = json::array();
    for (std::size_t i = 0; i < mean_loop.size(); ++i) {
      std::snprintf(line, sizeof(line), "scaling n=%-4.0f loop_ms=%.3f\n",
                    mean_nodes[i], mean_loop[i]);
      std::cout << line;
      json entry = {{"candidates", mean_nodes[i]}, {"loop_ms", mean_loop[i]}};
      if (i > 0 && mean_loop[i - 1] > 0.0 && mean_loop[i] > 0.0) {
        const double exponent = std::log(mean_loop[i] / mean_loop[i - 1]) /
                                std::log(mean_nodes[i] / mean_nodes[i - 1]);
        std::snprintf(line, sizeof(line), "scaling exponent %.0f->%.0f: %.2f\n",
                      mean_nodes[i - 1], mean_nodes[i], exponent);
        std::cout << line;
        entry["exponent_from_previous"] = exponent;
      }
      scaling.push_back(entry);
    }
    doc["scaling"] = scaling;
  }

  if (!args.out_path.empty()) write_text(args.out_path, doc.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-person keypoint grouping toolkit"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--config", synth_args.config_path, "config file (JSON)");
  synth->add_option("--out", synth_args.out_path, "scene container output path")
      ->required();
  synth->add_option("--gt-out", synth_args.gt_out_path,
                    "COCO ground-truth output path (default: <out>.gt.json)");
  synth->add_option("--count", synth_args.count, "number of scenes")
      ->capture_default_str();
  synth->add_option("--seed", synth_args.seed, "base RNG seed override");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train the grouping discriminators");
  train->add_option("--config", train_args.config_path, "config file (JSON)");
  train->add_option("--data", train_args.data_path, "training scenes")->required();
  train->add_option("--out", train_args.out_path, "checkpoint output path")
      ->required();
  train->add_option("--metrics-log", train_args.metrics_path,
                    "JSON-lines metrics path (default: <out>.metrics.jsonl)");
  train->add_option("--seed", train_args.seed, "network seed override");

  GroupArgs group_args;
  auto* group_cmd = app.add_subcommand("group", "group candidates into persons");
  group_cmd->add_option("--config", group_args.config_path, "config file (JSON)");
  group_cmd->add_option("--data", group_args.data_path, "input scenes")->required();
  group_cmd->add_option("--out", group_args.out_path, "results output path")
      ->required();
  group_cmd->add_option("--checkpoint", group_args.checkpoint_path,
                        "trained checkpoint (required for ohgc)");
  group_cmd
      ->add_option("--grouper", group_args.grouper, "ohgc | greedy | oracle")
      ->capture_default_str();
  group_cmd->add_option("--topology", group_args.topology_name,
                        "tree | bypass | extended | full");
  group_cmd->add_option("--trace-out", group_args.trace_path,
                        "per-iteration grouping trace output path");
  group_cmd->add_option("--threads", group_args.threads, "worker threads")
      ->capture_default_str();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "score results against ground truth");
  eval_cmd->add_option("--results", eval_args.results_path, "results file")
      ->required();
  eval_cmd->add_option("--gt", eval_args.gt_path,
                       "scene container or COCO ground-truth file")
      ->required();
  eval_cmd->add_option("--out", eval_args.out_path, "JSON report output path");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "per-stage timing table");
  bench->add_option("--config", bench_args.config_path, "config file (JSON)");
  bench->add_option("--data", bench_args.data_path, "input scenes")->required();
  bench->add_option("--checkpoint", bench_args.checkpoint_path,
                    "checkpoint (default: untrained weights)");
  bench->add_option("--out", bench_args.out_path, "JSON timing output path");
  bench->add_flag("--scaling", bench_args.scaling,
                  "also time the clustering loop at growing scene sizes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(2, "usage", e.what());
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_args);
    if (train->parsed()) return cmd_train(train_args);
    if (group_cmd->parsed()) return cmd_group(group_args);
    if (eval_cmd->parsed()) return cmd_eval(eval_args);
    if (bench->parsed()) return cmd_bench(bench_args);
    return fail(2, "usage", "no subcommand given");
  } catch (const ParseError& e) {
    return fail(2, "data",
                std::string(e.what()) + " (byte " +
                    std::to_string(e.byte_offset()) + ")");
  } catch (const SchemaError& e) {
    return fail(2, "data", e.what());
  } catch (const IoError& e) {
    return fail(2, "io", e.what());
  } catch (const ContractViolation& e) {
    return fail(1, "internal", e.what());
  } catch (const std::exception& e) {
    return fail(1, "internal", e.what());
  }
}
