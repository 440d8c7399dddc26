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

#include "posegroup/ohgc.hpp"

#include <algorithm>
#include <set>

#include "posegroup/errors.hpp"
#include "posegroup/rollout.hpp"

namespace posegroup {

void OhgcConfig::validate() const {
  if (merge_threshold < 0.0 || merge_threshold > 1.0)
    throw ContractViolation("OhgcConfig: merge_threshold outside [0, 1]");
  if (suppress_threshold < 0.0 || suppress_threshold > 1.0)
    throw ContractViolation("OhgcConfig: suppress_threshold outside [0, 1]");
  if (max_iterations < 1)
    throw ContractViolation("OhgcConfig: max_iterations must be at least 1");
}

void aggregate_features(ClusterState& state, const Tensor& node_features) {
  const int d = node_features.cols();
  for (auto& m : state.macro_nodes) {
    // Mirrors the tape mean op: sum in member order, then scale once.
    m.feature.assign(static_cast<std::size_t>(d), 0.0);
    for (const int r : m.node_indices) {
      if (r < 0 || r >= node_features.rows())
        throw ContractViolation("aggregate_features: node index out of range");
      for (int c = 0; c < d; ++c) m.feature[c] += node_features.at(r, c);
    }
    const double inv = 1.0 / static_cast<double>(m.node_indices.size());
    for (int c = 0; c < d; ++c) m.feature[c] *= inv;
  }
}

void update_proximity(ClusterState& state, const DiscriminatorBundle& params) {
  for (auto& e : state.active_edges) {
    const MacroNode* ma = state.find(e.a);
    const MacroNode* mb = state.find(e.b);
    if (ma == nullptr || mb == nullptr)
      throw ContractViolation("update_proximity: edge references unknown macro-node");
    e.weight = edge_score(ma->feature, mb->feature, params);
  }
}

Matching graclus_match(const ClusterState& state, double tau) {
  std::vector<StateEdge> eligible;
  eligible.reserve(state.active_edges.size());
  for (const auto& e : state.active_edges)
    if (e.weight >= tau) eligible.push_back(e);
  std::sort(eligible.begin(), eligible.end(), [](const StateEdge& x, const StateEdge& y) {
    if (x.weight != y.weight) return x.weight > y.weight;
    return std::pair(x.a, x.b) < std::pair(y.a, y.b);
  });

  Matching matching;
  std::set<int> matched;
  for (const auto& e : eligible) {
    if (matched.count(e.a) || matched.count(e.b)) continue;
    matched.insert(e.a);
    matched.insert(e.b);
    matching.emplace_back(e.a, e.b);
  }
  return matching;
}

// ---- Oracle scorer ----

OracleScorer::OracleScorer(const Scene& scene) {
  if (!scene.has_ground_truth())
    throw ContractViolation("OracleScorer: scene has no ground truth");
  for (const auto& c : scene.candidates)
    if (c.gt_person) gt_of_[c.id] = *c.gt_person;
}

bool OracleScorer::members_pure(const std::vector<int>& members) const {
  if (members.size() <= 1) return true;
  int person = 0;
  bool have = false;
  for (const int id : members) {
    const auto it = gt_of_.find(id);
    if (it == gt_of_.end()) return false;  // unlabeled candidate in a group
    if (!have) {
      person = it->second;
      have = true;
    } else if (it->second != person) {
      return false;
    }
  }
  return true;
}

bool OracleScorer::union_pure(const std::vector<int>& a, const std::vector<int>& b) const {
  std::vector<int> both(a);
  both.insert(both.end(), b.begin(), b.end());
  return members_pure(both);
}

void OracleScorer::update(ClusterState& state) {
  for (auto& e : state.active_edges) {
    const MacroNode* ma = state.find(e.a);
    const MacroNode* mb = state.find(e.b);
    e.weight = union_pure(ma->members, mb->members) ? 1.0 : 0.0;
  }
}

void OracleScorer::post_merge(ClusterState&) {}

void OracleScorer::finalize(ClusterState& state) {
  for (auto& m : state.macro_nodes) m.score = members_pure(m.members) ? 1.0 : 0.0;
}

// ---- Neural value-path scorer ----

NeuralScorer::NeuralScorer(const PoseGraph& graph, const DiscriminatorBundle& params)
    : params_(params), node_features_(interaction_gnn(graph, params)) {}

void NeuralScorer::update(ClusterState& state) {
  aggregate_features(state, node_features_);
  update_proximity(state, params_);
}

void NeuralScorer::post_merge(ClusterState&) {}

void NeuralScorer::finalize(ClusterState& state) {
  aggregate_features(state, node_features_);
  for (auto& m : state.macro_nodes) m.score = macro_score(m.feature, params_);
}

// ---- Loop ----

ClusterState run_clustering_loop(const PoseGraph& graph, ProximityScorer& scorer,
                                 const OhgcConfig& cfg, const TraceSink* trace) {
  cfg.validate();
  ClusterState state = init_cluster_state(graph);
  while (!state.active_edges.empty()) {
    scorer.update(state);
    const Matching matching = graclus_match(state, cfg.merge_threshold);
    if (matching.empty() || state.iteration >= cfg.max_iterations) break;
    ClusterState merged = merge_pairs(state, matching);
    const std::size_t before = merged.active_edges.size();
    state = prune(merged);
    scorer.post_merge(state);
    if (trace != nullptr && *trace) {
      IterationTrace t;
      t.iteration = state.iteration;
      for (const auto& m : state.macro_nodes) t.macro_members.push_back(m.members);
      t.merged = matching;
      t.pruned_edges = static_cast<int>(before - state.active_edges.size());
      (*trace)(t);
    }
  }
  scorer.finalize(state);
  return state;
}

GroupingResult state_to_result(const Scene& scene, const ClusterState& state) {
  GroupingResult result;
  result.image_id = scene.image_id;
  result.iterations_used = state.iteration;

  std::vector<const KeypointCandidate*> by_id;
  for (const auto& c : scene.candidates) {
    if (c.id >= static_cast<int>(by_id.size()))
      by_id.resize(static_cast<std::size_t>(c.id) + 1, nullptr);
    by_id[static_cast<std::size_t>(c.id)] = &c;
  }

  for (const auto& m : state.macro_nodes) {
    PersonInstance person;
    person.member_ids = m.members;
    double conf_sum = 0.0;
    for (const int id : m.members) {
      const KeypointCandidate* c =
          id >= 0 && id < static_cast<int>(by_id.size()) ? by_id[static_cast<std::size_t>(id)] : nullptr;
      if (c == nullptr)
        throw ContractViolation("state_to_result: member is not a scene candidate");
      person.keypoints.push_back({c->type, c->x, c->y, c->confidence});
      conf_sum += c->confidence;
    }
    std::sort(person.keypoints.begin(), person.keypoints.end(),
              [](const InstanceKeypoint& a, const InstanceKeypoint& b) {
                return a.type < b.type;
              });
    const double mean_conf =
        m.members.empty() ? 0.0 : conf_sum / static_cast<double>(m.members.size());
    person.score = m.score.value_or(1.0) * mean_conf;
    result.persons.push_back(std::move(person));
  }
  return result;
}

GroupingResult group(const Scene& scene, const DiscriminatorBundle& params,
                     const GraphTopology& topology, const OhgcConfig& cfg,
                     const TraceSink* trace) {
  const PoseGraph graph = build_graph(scene, topology);
  NeuralScorer scorer(graph, params);
  const ClusterState state = run_clustering_loop(graph, scorer, cfg, trace);
  return state_to_result(scene, state);
}

GroupingResult group_oracle(const Scene& scene, const GraphTopology& topology,
                            const OhgcConfig& cfg, const TraceSink* trace) {
  const PoseGraph graph = build_graph(scene, topology);
  OracleScorer scorer(scene);
  const ClusterState state = run_clustering_loop(graph, scorer, cfg, trace);
  return state_to_result(scene, state);
}

RolloutExamples teacher_rollout(const Scene& scene, const DiscriminatorBundle& params,
                                const GraphTopology& topology, const OhgcConfig& cfg) {
  const PoseGraph graph = build_graph(scene, topology);
  Tape tape;
  const BundleVals vals = register_bundle(tape, params);
  TapeScorer scorer(tape, graph, vals, scene, /*training=*/false, nullptr);
  run_clustering_loop(graph, scorer, cfg);

  RolloutExamples out;
  auto feature_row = [&](Tape::Val features, int row) {
    const Tensor& f = tape.value(features);
    std::vector<double> v(static_cast<std::size_t>(f.cols()));
    for (int c = 0; c < f.cols(); ++c) v[static_cast<std::size_t>(c)] = f.at(row, c);
    return v;
  };
  for (const auto& batch : scorer.edge_batches()) {
    for (std::size_t i = 0; i < batch.row_pairs.size(); ++i) {
      EdgeExample ex;
      ex.feature_a = feature_row(batch.features, batch.row_pairs[i].first);
      ex.feature_b = feature_row(batch.features, batch.row_pairs[i].second);
      ex.label = batch.labels[i];
      out.edge_examples.push_back(std::move(ex));
    }
  }
  for (const auto& batch : scorer.macro_batches()) {
    const int rows = tape.value(batch.features).rows();
    for (int r = 0; r < rows; ++r) {
      MacroExample ex;
      ex.feature = feature_row(batch.features, r);
      ex.label = batch.labels[static_cast<std::size_t>(r)];
      ex.is_final = batch.is_final;
      out.macro_examples.push_back(std::move(ex));
    }
  }
  return out;
}

}  // namespace posegroup
