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

#ifndef POSEGROUP_OHGC_HPP
#define POSEGROUP_OHGC_HPP

#include <functional>
#include <map>
#include <vector>

#include "posegroup/graph.hpp"
#include "posegroup/nn.hpp"
#include "posegroup/result.hpp"
#include "posegroup/scene.hpp"

namespace posegroup {

struct OhgcConfig {
  /// Matching only considers edges scoring at least this; the loop stops when
  /// nothing clears it.
  double merge_threshold = 0.5;
  /// Informational floor: macro-nodes scoring below keep their keypoints but
  /// rank low through the instance score.
  double suppress_threshold = 0.3;
  /// Safety cap; clean scenes finish in ceil(log2(J)) iterations.
  int max_iterations = 10;

  void validate() const;  // throws ContractViolation
};

/// Fills every macro-node's feature with the arithmetic mean of its members'
/// rows in node_features (one row per graph node position).
void aggregate_features(ClusterState& state, const Tensor& node_features);

/// Refreshes every active edge weight with the edge discriminator score of
/// the endpoint features. Features must be aggregated first.
void update_proximity(ClusterState& state, const DiscriminatorBundle& params);

/// Greedy matching on active edges with weight >= tau: descending weight,
/// ties by ascending (a, b); an edge is taken iff both endpoints are still
/// unmatched.
Matching graclus_match(const ClusterState& state, double tau);

/// Scoring strategy driving one clustering run. update() refreshes macro
/// features and edge weights on the current state; post_merge() is told about
/// each merged state; finalize() fills MacroNode::score on the terminal state.
class ProximityScorer {
 public:
  virtual ~ProximityScorer() = default;
  virtual void update(ClusterState& state) = 0;
  virtual void post_merge(ClusterState& state) = 0;
  virtual void finalize(ClusterState& state) = 0;
};

/// Ground-truth purity scorer: an edge or macro-node scores 1 when all the
/// candidates involved belong to one ground-truth person, else 0.
class OracleScorer : public ProximityScorer {
 public:
  explicit OracleScorer(const Scene& scene);  // throws without ground truth
  void update(ClusterState& state) override;
  void post_merge(ClusterState& state) override;
  void finalize(ClusterState& state) override;

  bool members_pure(const std::vector<int>& a) const;
  bool union_pure(const std::vector<int>& a, const std::vector<int>& b) const;

 private:
  std::map<int, int> gt_of_;  // candidate id -> gt person id
};

/// Inference scorer: runs the interaction network once, then aggregates and
/// applies the discriminators through the value path.
class NeuralScorer : public ProximityScorer {
 public:
  NeuralScorer(const PoseGraph& graph, const DiscriminatorBundle& params);
  void update(ClusterState& state) override;
  void post_merge(ClusterState& state) override;
  void finalize(ClusterState& state) override;

  const Tensor& node_features() const { return node_features_; }

 private:
  const DiscriminatorBundle& params_;
  Tensor node_features_;
};

/// Per-iteration details for the optional grouping trace.
struct IterationTrace {
  int iteration = 0;
  std::vector<std::vector<int>> macro_members;
  Matching merged;
  int pruned_edges = 0;
};
using TraceSink = std::function<void(const IterationTrace&)>;

/// The clustering loop: {update scores -> graclus matching -> merge -> prune}
/// until no edge clears the threshold or the iteration cap is reached.
/// Returns the terminal state with scores filled by the scorer's finalize.
ClusterState run_clustering_loop(const PoseGraph& graph, ProximityScorer& scorer,
                                 const OhgcConfig& cfg,
                                 const TraceSink* trace = nullptr);

/// Converts a terminal state to a result: one person per macro-node, instance
/// score = macro-node score x mean member confidence.
GroupingResult state_to_result(const Scene& scene, const ClusterState& state);

/// Full grouping with the trained discriminators.
GroupingResult group(const Scene& scene, const DiscriminatorBundle& params,
                     const GraphTopology& topology, const OhgcConfig& cfg,
                     const TraceSink* trace = nullptr);

/// Grouping with the ground-truth purity scorer (testing and data tooling).
GroupingResult group_oracle(const Scene& scene, const GraphTopology& topology,
                            const OhgcConfig& cfg, const TraceSink* trace = nullptr);

/// One on-policy rollout's supervision data, value level.
struct EdgeExample {
  std::vector<double> feature_a;
  std::vector<double> feature_b;
  double label = 0.0;
};
struct MacroExample {
  std::vector<double> feature;
  double label = 0.0;
  bool is_final = false;
};
struct RolloutExamples {
  std::vector<EdgeExample> edge_examples;
  std::vector<MacroExample> macro_examples;
};

/// Runs the clustering loop driven by the model's own scores and records, at
/// every iteration, each active edge's endpoint features labeled by the
/// purity of the combined member set, and each post-merge macro-node's
/// feature labeled by its purity. The last iteration's macro examples carry
/// is_final. Throws ContractViolation when the scene has no ground truth.
RolloutExamples teacher_rollout(const Scene& scene, const DiscriminatorBundle& params,
                                const GraphTopology& topology, const OhgcConfig& cfg);

}  // namespace posegroup

#endif  // POSEGROUP_OHGC_HPP
