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

#include "posegroup/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "posegroup/errors.hpp"

namespace posegroup {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw SchemaError("config: unknown key \"" + it.key() + "\" in " + where);
    }
  }
}

double get_number(const json& obj, const std::string& where,
                  const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) {
    throw SchemaError("config: " + where + "." + key + " must be a number");
  }
  return obj[key].get<double>();
}

int get_int(const json& obj, const std::string& where, const std::string& key,
            int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) {
    throw SchemaError("config: " + where + "." + key + " must be an integer");
  }
  return obj[key].get<int>();
}

std::uint64_t get_seed(const json& obj, const std::string& where,
                       const std::string& key, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_unsigned() && !obj[key].is_number_integer()) {
    throw SchemaError("config: " + where + "." + key + " must be an integer");
  }
  return obj[key].get<std::uint64_t>();
}

std::vector<std::pair<int, int>> get_edge_list(const json& obj,
                                               const std::string& where,
                                               const std::string& key) {
  std::vector<std::pair<int, int>> edges;
  if (!obj.contains(key)) return edges;
  if (!obj[key].is_array()) {
    throw SchemaError("config: " + where + "." + key + " must be an array");
  }
  for (const auto& e : obj[key]) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
        !e[1].is_number_integer()) {
      throw SchemaError("config: " + where + "." + key +
                        " entries must be [int, int] pairs");
    }
    edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  return edges;
}

void parse_synth(const json& obj, SynthConfig& out) {
  check_keys(obj, "synth",
             {"person_min", "person_max", "keypoint_types", "embedding_dim",
              "embedding_separation", "keypoint_drop_prob",
              "position_jitter_std", "rng_seed"});
  out.person_min = get_int(obj, "synth", "person_min", out.person_min);
  out.person_max = get_int(obj, "synth", "person_max", out.person_max);
  out.keypoint_types = get_int(obj, "synth", "keypoint_types", out.keypoint_types);
  out.embedding_dim = get_int(obj, "synth", "embedding_dim", out.embedding_dim);
  out.embedding_separation =
      get_number(obj, "synth", "embedding_separation", out.embedding_separation);
  out.keypoint_drop_prob =
      get_number(obj, "synth", "keypoint_drop_prob", out.keypoint_drop_prob);
  out.position_jitter_std =
      get_number(obj, "synth", "position_jitter_std", out.position_jitter_std);
  out.rng_seed = get_seed(obj, "synth", "rng_seed", out.rng_seed);
}

void parse_topology(const json& obj, TopologyParams& out) {
  check_keys(obj, "topology",
             {"variant", "tree_edges", "bypass_edges", "extended_edges"});
  if (obj.contains("variant")) {
    if (!obj["variant"].is_string()) {
      throw SchemaError("config: topology.variant must be a string");
    }
    out.variant = topology_from_name(obj["variant"].get<std::string>());
  }
  out.tree_edges = get_edge_list(obj, "topology", "tree_edges");
  out.bypass_edges = get_edge_list(obj, "topology", "bypass_edges");
  out.extended_edges = get_edge_list(obj, "topology", "extended_edges");
}

void parse_ohgc(const json& obj, OhgcConfig& out) {
  check_keys(obj, "ohgc",
             {"merge_threshold", "suppress_threshold", "max_iterations"});
  out.merge_threshold =
      get_number(obj, "ohgc", "merge_threshold", out.merge_threshold);
  out.suppress_threshold =
      get_number(obj, "ohgc", "suppress_threshold", out.suppress_threshold);
  out.max_iterations = get_int(obj, "ohgc", "max_iterations", out.max_iterations);
}

void parse_greedy(const json& obj, GreedyParams& out) {
  check_keys(obj, "greedy", {"tag_distance_threshold"});
  out.tag_distance_threshold = get_number(obj, "greedy", "tag_distance_threshold",
                                          out.tag_distance_threshold);
}

void parse_train(const json& obj, TrainParams& out) {
  check_keys(obj, "train",
             {"steps", "batch_size", "checkpoint_every", "network_seed",
              "data_seed", "adam", "loss_weights"});
  out.steps = get_int(obj, "train", "steps", out.steps);
  out.batch_size = get_int(obj, "train", "batch_size", out.batch_size);
  out.checkpoint_every =
      get_int(obj, "train", "checkpoint_every", out.checkpoint_every);
  out.network_seed = get_seed(obj, "train", "network_seed", out.network_seed);
  out.data_seed = get_seed(obj, "train", "data_seed", out.data_seed);
  if (obj.contains("adam")) {
    const json& a = obj["adam"];
    if (!a.is_object()) throw SchemaError("config: train.adam must be an object");
    check_keys(a, "train.adam", {"learning_rate", "beta1", "beta2", "epsilon"});
    out.adam.learning_rate =
        get_number(a, "train.adam", "learning_rate", out.adam.learning_rate);
    out.adam.beta1 = get_number(a, "train.adam", "beta1", out.adam.beta1);
    out.adam.beta2 = get_number(a, "train.adam", "beta2", out.adam.beta2);
    out.adam.epsilon = get_number(a, "train.adam", "epsilon", out.adam.epsilon);
  }
  if (obj.contains("loss_weights")) {
    const json& w = obj["loss_weights"];
    if (!w.is_object()) {
      throw SchemaError("config: train.loss_weights must be an object");
    }
    check_keys(w, "train.loss_weights",
               {"edge", "final_macro", "intermediate_macro"});
    out.loss_weights.edge =
        get_number(w, "train.loss_weights", "edge", out.loss_weights.edge);
    out.loss_weights.final_macro = get_number(w, "train.loss_weights",
                                              "final_macro",
                                              out.loss_weights.final_macro);
    out.loss_weights.interm_macro =
        get_number(w, "train.loss_weights", "intermediate_macro",
                   out.loss_weights.interm_macro);
  }
}

json edge_list_to_json(const std::vector<std::pair<int, int>>& edges) {
  json arr = json::array();
  for (const auto& e : edges) arr.push_back({e.first, e.second});
  return arr;
}

}  // namespace

void GreedyParams::validate() const {
  if (!(tag_distance_threshold > 0.0)) {
    throw ContractViolation("greedy.tag_distance_threshold must be positive");
  }
}

void TrainParams::validate() const {
  if (steps < 0) throw ContractViolation("train.steps must be nonnegative");
  if (batch_size <= 0) throw ContractViolation("train.batch_size must be positive");
  if (checkpoint_every < 0) {
    throw ContractViolation("train.checkpoint_every must be nonnegative");
  }
  if (!(adam.learning_rate > 0.0)) {
    throw ContractViolation("train.adam.learning_rate must be positive");
  }
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
      !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ContractViolation("train.adam betas must lie in [0, 1)");
  }
  if (!(adam.epsilon > 0.0)) {
    throw ContractViolation("train.adam.epsilon must be positive");
  }
  loss_weights.validate();
}

void AppConfig::validate() const {
  synth.validate();
  ohgc.validate();
  greedy.validate();
  train.validate();
  topology_from_params(topology, synth.keypoint_types);
}

GraphTopology topology_from_params(const TopologyParams& params,
                                   int keypoint_types) {
  if (!params.has_overrides()) {
    return make_topology(params.variant, keypoint_types);
  }
  GraphTopology topo;
  topo.variant = params.variant;
  topo.tree_edges = params.tree_edges;
  topo.bypass_edges = params.bypass_edges;
  topo.extended_edges = params.extended_edges;
  validate_topology(topo, keypoint_types);
  return topo;
}

AppConfig default_config() { return AppConfig{}; }

AppConfig config_from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!doc.is_object()) throw SchemaError("config: root must be an object");
  check_keys(doc, "config root",
             {"format", "version", "synth", "topology", "ohgc", "greedy",
              "train"});
  if (doc.contains("format") &&
      doc["format"].get<std::string>() != "posegroup-config") {
    throw SchemaError("config: format must be \"posegroup-config\"");
  }
  if (doc.contains("version") && doc["version"].get<int>() != 1) {
    throw SchemaError("config: unsupported version");
  }

  AppConfig config;
  auto section = [&](const char* name) -> const json* {
    if (!doc.contains(name)) return nullptr;
    if (!doc[name].is_object()) {
      throw SchemaError(std::string("config: ") + name + " must be an object");
    }
    return &doc[name];
  };
  if (const json* s = section("synth")) parse_synth(*s, config.synth);
  if (const json* s = section("topology")) parse_topology(*s, config.topology);
  if (const json* s = section("ohgc")) parse_ohgc(*s, config.ohgc);
  if (const json* s = section("greedy")) parse_greedy(*s, config.greedy);
  if (const json* s = section("train")) parse_train(*s, config.train);
  config.validate();
  return config;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return config_from_json_text(buffer.str());
}

std::string config_to_json(const AppConfig& config) {
  json doc;
  doc["format"] = "posegroup-config";
  doc["version"] = 1;
  doc["synth"] = {{"person_min", config.synth.person_min},
                  {"person_max", config.synth.person_max},
                  {"keypoint_types", config.synth.keypoint_types},
                  {"embedding_dim", config.synth.embedding_dim},
                  {"embedding_separation", config.synth.embedding_separation},
                  {"keypoint_drop_prob", config.synth.keypoint_drop_prob},
                  {"position_jitter_std", config.synth.position_jitter_std},
                  {"rng_seed", config.synth.rng_seed}};
  doc["topology"] = {{"variant", topology_name(config.topology.variant)}};
  if (config.topology.has_overrides()) {
    doc["topology"]["tree_edges"] = edge_list_to_json(config.topology.tree_edges);
    doc["topology"]["bypass_edges"] =
        edge_list_to_json(config.topology.bypass_edges);
    doc["topology"]["extended_edges"] =
        edge_list_to_json(config.topology.extended_edges);
  }
  doc["ohgc"] = {{"merge_threshold", config.ohgc.merge_threshold},
                 {"suppress_threshold", config.ohgc.suppress_threshold},
                 {"max_iterations", config.ohgc.max_iterations}};
  doc["greedy"] = {
      {"tag_distance_threshold", config.greedy.tag_distance_threshold}};
  doc["train"] = {
      {"steps", config.train.steps},
      {"batch_size", config.train.batch_size},
      {"checkpoint_every", config.train.checkpoint_every},
      {"network_seed", config.train.network_seed},
      {"data_seed", config.train.data_seed},
      {"adam",
       {{"learning_rate", config.train.adam.learning_rate},
        {"beta1", config.train.adam.beta1},
        {"beta2", config.train.adam.beta2},
        {"epsilon", config.train.adam.epsilon}}},
      {"loss_weights",
       {{"edge", config.train.loss_weights.edge},
        {"final_macro", config.train.loss_weights.final_macro},
        {"intermediate_macro", config.train.loss_weights.interm_macro}}}};
  return doc.dump(2) + "\n";
}

}  // namespace posegroup
