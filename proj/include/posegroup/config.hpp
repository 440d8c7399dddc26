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

#ifndef POSEGROUP_CONFIG_HPP
#define POSEGROUP_CONFIG_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "posegroup/graph.hpp"
#include "posegroup/ohgc.hpp"
#include "posegroup/scene.hpp"
#include "posegroup/train.hpp"

namespace posegroup {

struct GreedyParams {
  double tag_distance_threshold = 1.0;
  void validate() const;
};

struct TrainParams {
  int steps = 200;
  int batch_size = 8;
  int checkpoint_every = 0;  // 0: final checkpoint only
  std::uint64_t network_seed = 1;
  std::uint64_t data_seed = 7;
  AdamConfig adam;
  LossWeights loss_weights;
  void validate() const;
};

/// Topology selection. When the edge lists are nonempty they replace the
/// built-in tables for the configured type count (and must pass
/// validate_topology); empty lists mean the defaults.
struct TopologyParams {
  TopologyVariant variant = TopologyVariant::kFull;
  std::vector<std::pair<int, int>> tree_edges;
  std::vector<std::pair<int, int>> bypass_edges;
  std::vector<std::pair<int, int>> extended_edges;
  bool has_overrides() const {
    return !tree_edges.empty() || !bypass_edges.empty() ||
           !extended_edges.empty();
  }
};

/// Versioned run configuration; every section has working defaults so a
/// missing file section means "use defaults".
struct AppConfig {
  SynthConfig synth;
  TopologyParams topology;
  OhgcConfig ohgc;
  GreedyParams greedy;
  TrainParams train;
  void validate() const;
};

GraphTopology topology_from_params(const TopologyParams& params,
                                   int keypoint_types);

AppConfig default_config();

/// Parses a config file. Unknown keys are rejected so typos fail loudly.
/// ParseError on malformed JSON, SchemaError on structural problems.
AppConfig load_config(const std::string& path);
AppConfig config_from_json_text(const std::string& text);

/// Serializes with every key present; load(config_to_json(c)) == c.
std::string config_to_json(const AppConfig& config);

}  // namespace posegroup

#endif  // POSEGROUP_CONFIG_HPP
