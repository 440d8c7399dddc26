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

#include <algorithm>
#include <set>

#include "posegroup/errors.hpp"
#include "posegroup/graph.hpp"
#include "posegroup/rng.hpp"
#include "posegroup/scene.hpp"

using namespace posegroup;

namespace {

Scene clean_scene(int persons, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.person_min = persons;
  cfg.person_max = persons;
  cfg.rng_seed = seed;
  return generate_synthetic(cfg);
}

std::set<std::pair<int, int>> adjacency_pairs(const GraphTopology& topo, int j) {
  const auto adj = topo.type_adjacency(j);
  std::set<std::pair<int, int>> pairs;
  for (int a = 0; a < j; ++a) {
    for (int b = 0; b < j; ++b) {
      if (adj[static_cast<std::size_t>(a) * static_cast<std::size_t>(j) +
              static_cast<std::size_t>(b)]) {
        pairs.insert({std::min(a, b), std::max(a, b)});
      }
    }
  }
  return pairs;
}

}  // namespace

TEST_CASE("topology variants nest") {
  const int j = 17;
  const auto tree = adjacency_pairs(make_topology(TopologyVariant::kTree, j), j);
  const auto bypass = adjacency_pairs(make_topology(TopologyVariant::kBypass, j), j);
  const auto extended =
      adjacency_pairs(make_topology(TopologyVariant::kExtended, j), j);
  const auto full = adjacency_pairs(make_topology(TopologyVariant::kFull, j), j);

  CHECK(tree.size() == 16);
  CHECK(std::includes(bypass.begin(), bypass.end(), tree.begin(), tree.end()));
  CHECK(std::includes(extended.begin(), extended.end(), bypass.begin(),
                      bypass.end()));
  CHECK(std::includes(full.begin(), full.end(), extended.begin(), extended.end()));
  CHECK(full.size() == 17 * 16 / 2);
  CHECK(bypass.size() > tree.size());
  CHECK(extended.size() > bypass.size());

  // no same-type connectivity anywhere
  for (const auto& topo_pairs : {tree, bypass, extended, full}) {
    for (const auto& [a, b] : topo_pairs) CHECK(a != b);
  }
}

TEST_CASE("topology validation") {
  CHECK_NOTHROW(validate_topology(make_topology(TopologyVariant::kTree, 17), 17));
  CHECK_NOTHROW(validate_topology(make_topology(TopologyVariant::kFull, 5), 5));
  CHECK_NOTHROW(validate_topology(make_topology(TopologyVariant::kExtended, 9), 9));

  GraphTopology topo = make_topology(TopologyVariant::kTree, 4);
  SUBCASE("self edge rejected") {
    topo.tree_edges[0] = {2, 2};
    CHECK_THROWS_AS(validate_topology(topo, 4), ContractViolation);
  }
  SUBCASE("out of range rejected") {
    topo.tree_edges[0] = {0, 9};
    CHECK_THROWS_AS(validate_topology(topo, 4), ContractViolation);
  }
  SUBCASE("cycle rejected") {
    // 4 types need exactly 3 tree edges forming a tree
    topo.tree_edges = {{0, 1}, {1, 2}, {2, 0}};
    CHECK_THROWS_AS(validate_topology(topo, 4), ContractViolation);
  }
  SUBCASE("wrong edge count rejected") {
    topo.tree_edges.pop_back();
    CHECK_THROWS_AS(validate_topology(topo, 4), ContractViolation);
  }
}

TEST_CASE("topology names round trip") {
  for (const auto v : {TopologyVariant::kTree, TopologyVariant::kBypass,
                       TopologyVariant::kExtended, TopologyVariant::kFull}) {
    CHECK(topology_from_name(topology_name(v)) == v);
  }
  CHECK_THROWS_AS(topology_from_name("hexagonal"), ContractViolation);
}

TEST_CASE("graph construction on a clean single person") {
  const Scene scene = clean_scene(1, 21);
  const GraphTopology topo = make_topology(TopologyVariant::kFull, 17);
  const PoseGraph graph = build_graph(scene, topo);

  REQUIRE(graph.nodes.size() == 17);
  CHECK(graph.feature_dim() == 4 + 17 + 2);
  // one candidate per type: full topology connects all cross-type pairs
  CHECK(graph.edges.size() == 17 * 16 / 2);
  for (const auto& e : graph.edges) {
    CHECK(e.u < e.v);
    CHECK(graph.nodes[static_cast<std::size_t>(e.u)].type !=
          graph.nodes[static_cast<std::size_t>(e.v)].type);
    CHECK(e.weight == 1.0);
  }
  // init feature layout: embedding, one-hot type, position
  for (const auto& n : graph.nodes) {
    const auto& f = n.init_feature;
    REQUIRE(static_cast<int>(f.size()) == graph.feature_dim());
    const KeypointCandidate& c =
        scene.candidates[static_cast<std::size_t>(n.candidate_id)];
    for (int d = 0; d < 4; ++d) {
      CHECK(f[static_cast<std::size_t>(d)] == c.embedding[static_cast<std::size_t>(d)]);
    }
    for (int t = 0; t < 17; ++t) {
      CHECK(f[static_cast<std::size_t>(4 + t)] == (t == c.type ? 1.0 : 0.0));
    }
    CHECK(f[21] == c.x);
    CHECK(f[22] == c.y);
  }
}

TEST_CASE("same-type candidates are never adjacent") {
  const Scene scene = clean_scene(4, 33);
  for (const auto v : {TopologyVariant::kTree, TopologyVariant::kFull}) {
    const PoseGraph graph = build_graph(scene, make_topology(v, 17));
    for (const auto& e : graph.edges) {
      CHECK(graph.nodes[static_cast<std::size_t>(e.u)].type !=
            graph.nodes[static_cast<std::size_t>(e.v)].type);
    }
  }
}

TEST_CASE("tree topology restricts the edge set") {
  const Scene scene = clean_scene(2, 8);
  const PoseGraph full = build_graph(scene, make_topology(TopologyVariant::kFull, 17));
  const PoseGraph tree = build_graph(scene, make_topology(TopologyVariant::kTree, 17));
  CHECK(tree.edges.size() < full.edges.size());

  std::set<std::pair<int, int>> full_pairs;
  for (const auto& e : full.edges) full_pairs.insert({e.u, e.v});
  for (const auto& e : tree.edges) {
    CHECK(full_pairs.count({e.u, e.v}) == 1);
  }
}

TEST_CASE("cluster state init mirrors the graph") {
  const Scene scene = clean_scene(2, 5);
  const PoseGraph graph = build_graph(scene, make_topology(TopologyVariant::kFull, 17));
  const ClusterState state = init_cluster_state(graph);

  REQUIRE(state.macro_nodes.size() == graph.nodes.size());
  CHECK(state.iteration == 0);
  for (const auto& m : state.macro_nodes) {
    CHECK(m.members.size() == 1);
    CHECK(m.id == m.members[0]);
    CHECK(m.type_set.size() == 1);
    CHECK_FALSE(m.score.has_value());
  }
  CHECK(state.active_edges.size() == graph.edges.size());
  CHECK_NOTHROW(check_state_invariants(state, graph));
}

TEST_CASE("merge_pairs merges, relabels edges, and advances the clock") {
  // hand-built 4-node graph: types 0,1,0,1 with full cross-type edges
  Scene scene;
  scene.image_id = 0;
  scene.width = 100;
  scene.height = 100;
  scene.keypoint_types = 2;
  scene.embedding_dim = 0;
  scene.has_embeddings = false;
  for (int i = 0; i < 4; ++i) {
    KeypointCandidate c;
    c.id = i;
    c.type = i % 2;
    c.x = 0.1 * (i + 1);
    c.y = 0.2;
    c.confidence = 1.0;
    scene.candidates.push_back(c);
  }
  const PoseGraph graph = build_graph(scene, make_topology(TopologyVariant::kFull, 2));
  REQUIRE(graph.edges.size() == 4);  // cross-type pairs only

  ClusterState state = init_cluster_state(graph);
  // weights chosen so the merged pair keeps the max parallel edge weight
  for (auto& e : state.active_edges) {
    e.weight = (e.a == 0 && e.b == 1) ? 0.9 : (e.b == 3 ? 0.7 : 0.3);
  }

  SUBCASE("simple merge") {
    const ClusterState merged = merge_pairs(state, {{0, 1}});
    CHECK(merged.iteration == state.iteration + 1);
    REQUIRE(merged.macro_nodes.size() == 3);
    const MacroNode* m = merged.find(0);
    REQUIRE(m != nullptr);
    CHECK(m->members == std::vector<int>{0, 1});
    CHECK(m->type_set == std::vector<int>{0, 1});
    CHECK(m->feature.empty());  // stale features are dropped on merge
    // edges from 0 and 1 to outsiders are rerouted; type conflicts remain
    // until prune removes them
    for (const auto& e : merged.active_edges) {
      CHECK(e.a < e.b);
      CHECK(merged.find(e.a) != nullptr);
      CHECK(merged.find(e.b) != nullptr);
    }
    const ClusterState pruned = prune(merged);
    CHECK_NOTHROW(check_state_invariants(pruned, graph));
    // merged {0,1} covers both types: every surviving neighbor conflicts,
    // leaving only the 2-3 edge
    REQUIRE(pruned.active_edges.size() == 1);
    CHECK(pruned.active_edges[0].a == 2);
    CHECK(pruned.active_edges[0].b == 3);
  }

  SUBCASE("empty matching only advances the iteration") {
    const ClusterState stepped = merge_pairs(state, {});
    CHECK(stepped.iteration == state.iteration + 1);
    CHECK(stepped.macro_nodes.size() == state.macro_nodes.size());
    CHECK(stepped.active_edges.size() == state.active_edges.size());
  }

  SUBCASE("node reuse rejected") {
    CHECK_THROWS_AS(merge_pairs(state, {{0, 1}, {1, 2}}), ContractViolation);
  }

  SUBCASE("type conflict rejected") {
    CHECK_THROWS_AS(merge_pairs(state, {{0, 2}}), ContractViolation);
  }

  SUBCASE("unknown id rejected") {
    CHECK_THROWS_AS(merge_pairs(state, {{0, 9}}), ContractViolation);
  }

  SUBCASE("parallel edges deduplicate to the max weight") {
    // merge {0,1} and {2,3}: edges 0-3 (0.7) and 1-2 (0.3) and 0-1 (0.9),
    // 2-3, 1-2... after both merges a single 0-2 edge remains with the max
    // of the surviving parallels
    ClusterState merged = merge_pairs(state, {{0, 1}, {2, 3}});
    REQUIRE(merged.macro_nodes.size() == 2);
    REQUIRE(merged.active_edges.size() == 1);
    const StateEdge& e = merged.active_edges[0];
    CHECK(e.a == 0);
    CHECK(e.b == 2);
    CHECK(e.weight == 0.7);
  }
}

TEST_CASE("prune removes type conflicts and is idempotent") {
  const Scene scene = clean_scene(3, 12);
  const PoseGraph graph = build_graph(scene, make_topology(TopologyVariant::kFull, 17));
  ClusterState state = init_cluster_state(graph);

  // random merge rounds, then prune
  Rng rng(99);
  for (int round = 0; round < 3; ++round) {
    Matching matching;
    std::set<int> used;
    for (const auto& e : state.active_edges) {
      if (used.count(e.a) || used.count(e.b)) continue;
      const MacroNode* ma = state.find(e.a);
      const MacroNode* mb = state.find(e.b);
      if (ma->types_intersect(*mb)) continue;
      if (rng.uniform01() < 0.4) {
        matching.push_back({e.a, e.b});
        used.insert(e.a);
        used.insert(e.b);
      }
    }
    state = prune(merge_pairs(state, matching));
    CHECK_NOTHROW(check_state_invariants(state, graph));
    for (const auto& e : state.active_edges) {
      CHECK_FALSE(state.find(e.a)->types_intersect(*state.find(e.b)));
    }
  }
  const ClusterState again = prune(state);
  CHECK(again.active_edges.size() == state.active_edges.size());
  CHECK(again.macro_nodes.size() == state.macro_nodes.size());
}

TEST_CASE("edge list dump is stable") {
  const Scene scene = clean_scene(1, 2);
  const PoseGraph graph = build_graph(scene, make_topology(TopologyVariant::kTree, 17));
  const std::string dump = dump_edge_list(graph);
  CHECK_FALSE(dump.empty());
  CHECK(dump == dump_edge_list(graph));
}
