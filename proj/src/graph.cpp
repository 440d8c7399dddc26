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

#include "posegroup/graph.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "posegroup/errors.hpp"

namespace posegroup {

std::string topology_name(TopologyVariant v) {
  switch (v) {
    case TopologyVariant::kTree: return "tree";
    case TopologyVariant::kBypass: return "bypass";
    case TopologyVariant::kExtended: return "extended";
    case TopologyVariant::kFull: return "full";
  }
  throw ContractViolation("unknown topology variant");
}

TopologyVariant topology_from_name(const std::string& name) {
  if (name == "tree") return TopologyVariant::kTree;
  if (name == "bypass") return TopologyVariant::kBypass;
  if (name == "extended") return TopologyVariant::kExtended;
  if (name == "full") return TopologyVariant::kFull;
  throw ContractViolation("unknown topology name: " + name);
}

std::vector<std::uint8_t> GraphTopology::type_adjacency(int keypoint_types) const {
  const int j = keypoint_types;
  std::vector<std::uint8_t> adj(static_cast<std::size_t>(j) * j, 0);
  auto connect = [&](const std::vector<std::pair<int, int>>& pairs) {
    for (const auto& [a, b] : pairs) {
      if (a < 0 || a >= j || b < 0 || b >= j || a == b) continue;
      adj[static_cast<std::size_t>(a) * j + b] = 1;
      adj[static_cast<std::size_t>(b) * j + a] = 1;
    }
  };
  switch (variant) {
    case TopologyVariant::kFull:
      for (int a = 0; a < j; ++a)
        for (int b = 0; b < j; ++b)
          if (a != b) adj[static_cast<std::size_t>(a) * j + b] = 1;
      break;
    case TopologyVariant::kExtended:
      connect(extended_edges);
      [[fallthrough]];
    case TopologyVariant::kBypass:
      connect(bypass_edges);
      [[fallthrough]];
    case TopologyVariant::kTree:
      connect(tree_edges);
      break;
  }
  return adj;
}

GraphTopology make_topology(TopologyVariant variant, int keypoint_types) {
  GraphTopology t;
  t.variant = variant;
  const int j = keypoint_types;
  if (j == 17) {
    // Anatomical chains from the nose: face, arms via the shoulders, legs via
    // the hips. 16 edges, a spanning tree.
    t.tree_edges = {{0, 1}, {0, 2},  {1, 3},  {2, 4},   {0, 5},   {0, 6},
                    {5, 7}, {6, 8},  {7, 9},  {8, 10},  {5, 11},  {6, 12},
                    {11, 13}, {12, 14}, {13, 15}, {14, 16}};
    t.bypass_edges = {{0, 11}, {0, 12}, {5, 12}, {6, 11}};
    t.extended_edges = {{9, 11}, {10, 12}, {7, 6}, {8, 5}, {15, 11}, {16, 12}};
  } else {
    for (int a = 0; a + 1 < j; ++a) t.tree_edges.push_back({a, a + 1});
    for (int a = 0; a + 2 < j; a += 2) t.bypass_edges.push_back({a, a + 2});
    for (int a = 0; a + 3 < j; a += 3) t.extended_edges.push_back({a, a + 3});
  }
  return t;
}

void validate_topology(const GraphTopology& topology, int keypoint_types) {
  const int j = keypoint_types;
  if (j <= 0) throw ContractViolation("topology: keypoint type count must be positive");
  if (topology.variant == TopologyVariant::kFull) return;

  auto check_pairs = [&](const std::vector<std::pair<int, int>>& pairs,
                         const char* which) {
    for (const auto& [a, b] : pairs) {
      if (a < 0 || a >= j || b < 0 || b >= j)
        throw ContractViolation(std::string("topology: ") + which +
                                " edge type index out of range");
      if (a == b)
        throw ContractViolation(std::string("topology: ") + which +
                                " edge joins a type to itself");
    }
  };
  check_pairs(topology.tree_edges, "tree");
  check_pairs(topology.bypass_edges, "bypass");
  check_pairs(topology.extended_edges, "extended");

  if (static_cast<int>(topology.tree_edges.size()) != j - 1)
    throw ContractViolation("topology: tree must have exactly J-1 edges");
  std::vector<int> parent(j);
  for (int i = 0; i < j; ++i) parent[i] = i;
  auto root = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& [a, b] : topology.tree_edges) {
    const int ra = root(a), rb = root(b);
    if (ra == rb) throw ContractViolation("topology: tree edges contain a cycle");
    parent[ra] = rb;
  }
}

PoseGraph build_graph(const Scene& scene, const GraphTopology& topology) {
  validate_topology(topology, scene.keypoint_types);
  PoseGraph graph;
  graph.topology = topology;
  graph.keypoint_types = scene.keypoint_types;
  graph.embedding_dim = scene.embedding_dim;

  const int j = scene.keypoint_types;
  graph.nodes.reserve(scene.candidates.size());
  for (const auto& c : scene.candidates) {
    GraphNode node;
    node.candidate_id = c.id;
    node.type = c.type;
    node.init_feature.reserve(graph.feature_dim());
    node.init_feature.insert(node.init_feature.end(), c.embedding.begin(),
                             c.embedding.end());
    for (int t = 0; t < j; ++t) node.init_feature.push_back(t == c.type ? 1.0 : 0.0);
    node.init_feature.push_back(c.x);
    node.init_feature.push_back(c.y);
    graph.nodes.push_back(std::move(node));
  }

  const auto adj = topology.type_adjacency(j);
  const int n = static_cast<int>(graph.nodes.size());
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      const int tu = graph.nodes[u].type;
      const int tv = graph.nodes[v].type;
      if (tu == tv) continue;
      if (!adj[static_cast<std::size_t>(tu) * j + tv]) continue;
      graph.edges.push_back({u, v, 1.0});
    }
  }
  return graph;
}

bool MacroNode::types_intersect(const MacroNode& other) const {
  // Both type sets are sorted.
  std::size_t i = 0, k = 0;
  while (i < type_set.size() && k < other.type_set.size()) {
    if (type_set[i] == other.type_set[k]) return true;
    if (type_set[i] < other.type_set[k]) ++i;
    else ++k;
  }
  return false;
}

const MacroNode* ClusterState::find(int macro_id) const {
  auto it = std::lower_bound(macro_nodes.begin(), macro_nodes.end(), macro_id,
                             [](const MacroNode& m, int id) { return m.id < id; });
  if (it == macro_nodes.end() || it->id != macro_id) return nullptr;
  return &*it;
}

MacroNode* ClusterState::find(int macro_id) {
  return const_cast<MacroNode*>(std::as_const(*this).find(macro_id));
}

ClusterState init_cluster_state(const PoseGraph& graph) {
  ClusterState state;
  state.macro_nodes.reserve(graph.nodes.size());
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const GraphNode& node = graph.nodes[i];
    MacroNode m;
    m.id = node.candidate_id;
    m.members = {node.candidate_id};
    m.node_indices = {static_cast<int>(i)};
    m.type_set = {node.type};
    state.macro_nodes.push_back(std::move(m));
  }
  std::sort(state.macro_nodes.begin(), state.macro_nodes.end(),
            [](const MacroNode& a, const MacroNode& b) { return a.id < b.id; });

  state.active_edges.reserve(graph.edges.size());
  for (const auto& e : graph.edges) {
    const int a = graph.nodes[e.u].candidate_id;
    const int b = graph.nodes[e.v].candidate_id;
    state.active_edges.push_back({std::min(a, b), std::max(a, b), e.weight});
  }
  std::sort(state.active_edges.begin(), state.active_edges.end(),
            [](const StateEdge& x, const StateEdge& y) {
              return std::pair(x.a, x.b) < std::pair(y.a, y.b);
            });
  return state;
}

ClusterState prune(const ClusterState& state) {
  ClusterState out = state;
  out.active_edges.clear();
  for (const auto& e : state.active_edges) {
    const MacroNode* ma = state.find(e.a);
    const MacroNode* mb = state.find(e.b);
    if (ma == nullptr || mb == nullptr)
      throw ContractViolation("prune: edge references unknown macro-node");
    if (!ma->types_intersect(*mb)) out.active_edges.push_back(e);
  }
  return out;
}

ClusterState merge_pairs(const ClusterState& state, const Matching& matching) {
  std::map<int, int> target;  // old macro id -> merged id
  std::set<int> used;
  for (const auto& [a, b] : matching) {
    const MacroNode* ma = state.find(a);
    const MacroNode* mb = state.find(b);
    if (ma == nullptr || mb == nullptr)
      throw ContractViolation("merge_pairs: matching references unknown macro-node");
    if (!used.insert(a).second || !used.insert(b).second)
      throw ContractViolation("merge_pairs: matching reuses a macro-node");
    if (ma->types_intersect(*mb))
      throw ContractViolation("merge_pairs: matched pair is type-conflicting");
    target[a] = std::min(a, b);
    target[b] = std::min(a, b);
  }

  ClusterState out;
  out.iteration = state.iteration + 1;

  std::map<int, MacroNode> merged;
  for (const auto& m : state.macro_nodes) {
    const auto it = target.find(m.id);
    if (it == target.end()) {
      out.macro_nodes.push_back(m);
      continue;
    }
    MacroNode& acc = merged[it->second];
    if (acc.members.empty()) {
      acc = m;
      acc.id = it->second;
      acc.feature.clear();  // stale until the next aggregation pass
      acc.score.reset();
      continue;
    }
    acc.members.insert(acc.members.end(), m.members.begin(), m.members.end());
    acc.node_indices.insert(acc.node_indices.end(), m.node_indices.begin(),
                            m.node_indices.end());
    acc.type_set.insert(acc.type_set.end(), m.type_set.begin(), m.type_set.end());
  }
  for (auto& [id, m] : merged) {
    std::sort(m.members.begin(), m.members.end());
    std::sort(m.node_indices.begin(), m.node_indices.end());
    std::sort(m.type_set.begin(), m.type_set.end());
    out.macro_nodes.push_back(std::move(m));
  }
  std::sort(out.macro_nodes.begin(), out.macro_nodes.end(),
            [](const MacroNode& a, const MacroNode& b) { return a.id < b.id; });

  auto owner = [&](int id) {
    const auto it = target.find(id);
    return it == target.end() ? id : it->second;
  };
  std::map<std::pair<int, int>, double> new_edges;
  for (const auto& e : state.active_edges) {
    const int a = owner(e.a);
    const int b = owner(e.b);
    if (a == b) continue;
    const auto key = std::pair(std::min(a, b), std::max(a, b));
    auto [it, inserted] = new_edges.emplace(key, e.weight);
    if (!inserted) it->second = std::max(it->second, e.weight);
  }
  out.active_edges.reserve(new_edges.size());
  for (const auto& [key, w] : new_edges)
    out.active_edges.push_back({key.first, key.second, w});
  return out;
}

std::string dump_edge_list(const PoseGraph& graph) {
  std::ostringstream os;
  for (const auto& e : graph.edges)
    os << graph.nodes[e.u].candidate_id << ' ' << graph.nodes[e.v].candidate_id
       << ' ' << e.weight << '\n';
  return os.str();
}

std::string dump_edge_list(const ClusterState& state) {
  std::ostringstream os;
  for (const auto& e : state.active_edges)
    os << e.a << ' ' << e.b << ' ' << e.weight << '\n';
  return os.str();
}

void check_state_invariants(const ClusterState& state, const PoseGraph& graph) {
  std::map<int, int> type_of;  // candidate id -> keypoint type
  for (const auto& node : graph.nodes) type_of[node.candidate_id] = node.type;

  std::set<int> seen;
  std::size_t total = 0;
  for (const auto& m : state.macro_nodes) {
    if (m.members.empty()) throw ContractViolation("state: empty macro-node");
    if (m.id != *std::min_element(m.members.begin(), m.members.end()))
      throw ContractViolation("state: macro-node id is not its min member id");
    std::set<int> member_types;
    for (const int c : m.members) {
      const auto it = type_of.find(c);
      if (it == type_of.end())
        throw ContractViolation("state: member is not a graph candidate");
      if (!member_types.insert(it->second).second)
        throw ContractViolation("state: macro-node holds two members of one type");
      if (!seen.insert(c).second)
        throw ContractViolation("state: candidate assigned to two macro-nodes");
    }
    if (std::set<int>(m.type_set.begin(), m.type_set.end()) != member_types)
      throw ContractViolation("state: type_set does not match member types");
    total += m.members.size();
  }
  if (total != graph.nodes.size())
    throw ContractViolation("state: macro-nodes do not cover all candidates");
  for (const auto& node : graph.nodes)
    if (!seen.count(node.candidate_id))
      throw ContractViolation("state: candidate missing from the partition");

  for (const auto& e : state.active_edges) {
    const MacroNode* ma = state.find(e.a);
    const MacroNode* mb = state.find(e.b);
    if (ma == nullptr || mb == nullptr)
      throw ContractViolation("state: edge references unknown macro-node");
    if (ma->types_intersect(*mb))
      throw ContractViolation("state: active edge joins type-conflicting macro-nodes");
  }
}

}  // namespace posegroup
