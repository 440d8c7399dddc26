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

#ifndef POSEGROUP_GRAPH_HPP
#define POSEGROUP_GRAPH_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "posegroup/scene.hpp"

namespace posegroup {

enum class TopologyVariant { kTree, kBypass, kExtended, kFull };

std::string topology_name(TopologyVariant v);
TopologyVariant topology_from_name(const std::string& name);  // throws ContractViolation

/// Which cross-type pairs may be connected. Tree uses tree_edges only;
/// Bypass adds bypass_edges; Extended adds extended_edges on top; Full
/// connects every cross-type pair and ignores the lists.
struct GraphTopology {
  TopologyVariant variant = TopologyVariant::kFull;
  std::vector<std::pair<int, int>> tree_edges;      // spanning tree over types
  std::vector<std::pair<int, int>> bypass_edges;    // torso shortcuts
  std::vector<std::pair<int, int>> extended_edges;  // long-range limb links

  /// J x J symmetric adjacency over keypoint types under this variant.
  std::vector<std::uint8_t> type_adjacency(int keypoint_types) const;
};

/// Default edge lists for a given skeleton size. For the 17-type COCO
/// skeleton the tree follows the anatomical chains from the nose; bypass
/// shortcuts connect the head and both shoulders to the hips; extended links
/// add wrist-hip, elbow-opposite-shoulder and ankle-hip pairs. Other sizes
/// fall back to a chain tree with generic shortcuts so the variant nesting
/// still holds.
GraphTopology make_topology(TopologyVariant variant, int keypoint_types);

/// Checks the topology invariants for `keypoint_types` types: tree_edges form
/// a spanning tree, all indices in range, no same-type pairs. Throws
/// ContractViolation on failure.
void validate_topology(const GraphTopology& topology, int keypoint_types);

struct GraphNode {
  int candidate_id = 0;
  int type = 0;
  std::vector<double> init_feature;  // concat(embedding, one-hot type, x, y)
};

struct GraphEdge {
  int u = 0;  // node indices into PoseGraph::nodes, u < v
  int v = 0;
  double weight = 1.0;
};

struct PoseGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  GraphTopology topology;
  int keypoint_types = 0;
  int embedding_dim = 0;

  int feature_dim() const { return embedding_dim + keypoint_types + 2; }
};

/// One node per candidate, init_feature = concat(embedding, one-hot(type),
/// (x, y)); edges join cross-type candidate pairs allowed by the topology,
/// never two candidates of the same type. Initial weights 1.0.
PoseGraph build_graph(const Scene& scene, const GraphTopology& topology);

/// A cluster of candidates. Never holds two members of one type. The feature
/// is the 64-D aggregate refreshed by the scorer each iteration; empty until
/// the first aggregation pass.
struct MacroNode {
  int id = 0;                      // min member candidate id
  std::vector<int> members;        // candidate ids, ascending
  std::vector<int> node_indices;   // positions in PoseGraph::nodes, ascending
  std::vector<int> type_set;       // distinct types, ascending
  std::vector<double> feature;
  std::optional<double> score;

  bool types_intersect(const MacroNode& other) const;
};

struct StateEdge {
  int a = 0;  // macro-node ids, a < b
  int b = 0;
  double weight = 1.0;
};

/// A matching as macro-node id pairs; no id may appear twice.
using Matching = std::vector<std::pair<int, int>>;

struct ClusterState {
  std::vector<MacroNode> macro_nodes;  // ascending id
  std::vector<StateEdge> active_edges;  // ascending (a, b)
  int iteration = 0;

  const MacroNode* find(int macro_id) const;
  MacroNode* find(int macro_id);
};

/// Singleton macro-node per graph node; active edges mirror the graph edges;
/// iteration 0.
ClusterState init_cluster_state(const PoseGraph& graph);

/// Drops every active edge whose endpoints share a keypoint type. Idempotent,
/// never adds edges.
ClusterState prune(const ClusterState& state);

/// Merges each matched pair into one macro-node (members and type sets
/// unioned, id = smaller id), passes unmatched macro-nodes through, re-derives
/// edges between the new macro-nodes (dropping self-edges; weights are stale
/// until the next scorer pass) and increments the iteration counter.
/// Throws ContractViolation if the matching reuses a macro-node, references
/// an unknown id, or pairs type-conflicting macro-nodes.
ClusterState merge_pairs(const ClusterState& state, const Matching& matching);

/// Debug dump, one "u v w" line per edge (candidate ids for graphs,
/// macro-node ids for states).
std::string dump_edge_list(const PoseGraph& graph);
std::string dump_edge_list(const ClusterState& state);

/// Throws ContractViolation unless macro-node member sets are pairwise
/// disjoint, jointly cover exactly the graph's candidates, no macro-node has
/// two members of one type, and no active edge joins type-conflicting
/// macro-nodes.
void check_state_invariants(const ClusterState& state, const PoseGraph& graph);

}  // namespace posegroup

#endif  // POSEGROUP_GRAPH_HPP
