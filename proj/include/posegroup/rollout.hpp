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

#ifndef POSEGROUP_ROLLOUT_HPP
#define POSEGROUP_ROLLOUT_HPP

#include <utility>
#include <vector>

#include "posegroup/ohgc.hpp"

namespace posegroup {

/// One iteration's scored edges on the tape: the macro feature matrix, the
/// scored endpoint row pairs, the [pairs x 1] score column and purity labels.
struct EdgeBatchTape {
  Tape::Val features;
  std::vector<std::pair<int, int>> row_pairs;
  Tape::Val scores;
  std::vector<double> labels;
};

/// One iteration's post-merge macro-nodes on the tape.
struct MacroBatchTape {
  Tape::Val features;
  Tape::Val scores;
  std::vector<double> labels;
  bool is_final = false;
};

/// Drives the clustering loop through the differentiable path, recording
/// every edge score (each iteration) and every post-merge macro score so a
/// BCE loss over them backpropagates into all bundle parameters. Matching
/// decisions use the traced score values, so the rollout is on-policy.
class TapeScorer : public ProximityScorer {
 public:
  /// `training` enables dropout in the interaction network (requires a
  /// random source). Throws ContractViolation when the scene lacks ground
  /// truth, since the recorded examples need purity labels.
  TapeScorer(Tape& tape, const PoseGraph& graph, const BundleVals& params,
             const Scene& scene, bool training, Rng* dropout_rng);

  void update(ClusterState& state) override;
  void post_merge(ClusterState& state) override;
  void finalize(ClusterState& state) override;

  const std::vector<EdgeBatchTape>& edge_batches() const { return edge_batches_; }
  const std::vector<MacroBatchTape>& macro_batches() const { return macro_batches_; }
  Tape::Val node_features() const { return node_features_; }

 private:
  Tape::Val fresh_features(const ClusterState& state);

  Tape& tape_;
  const BundleVals& params_;
  OracleScorer labeler_;
  Tape::Val node_features_;
  Tape::Val cached_features_;
  int cached_iteration_ = -1;
  std::vector<EdgeBatchTape> edge_batches_;
  std::vector<MacroBatchTape> macro_batches_;
};

}  // namespace posegroup

#endif  // POSEGROUP_ROLLOUT_HPP
