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

#include "posegroup/rollout.hpp"

#include <map>

#include "posegroup/errors.hpp"

namespace posegroup {

TapeScorer::TapeScorer(Tape& tape, const PoseGraph& graph, const BundleVals& params,
                       const Scene& scene, bool training, Rng* dropout_rng)
    : tape_(tape),
      params_(params),
      labeler_(scene),
      node_features_(
          interaction_gnn_tape(tape, graph, params, training, dropout_rng)) {}

Tape::Val TapeScorer::fresh_features(const ClusterState& state) {
  std::vector<std::vector<int>> groups;
  groups.reserve(state.macro_nodes.size());
  for (const auto& m : state.macro_nodes) groups.push_back(m.node_indices);
  return tape_.mean_rows(node_features_, groups);
}

void TapeScorer::update(ClusterState& state) {
  if (cached_iteration_ != state.iteration) {
    cached_features_ = fresh_features(state);
    cached_iteration_ = state.iteration;
  }
  if (state.active_edges.empty()) return;

  std::map<int, int> row_of;
  for (std::size_t i = 0; i < state.macro_nodes.size(); ++i)
    row_of[state.macro_nodes[i].id] = static_cast<int>(i);

  EdgeBatchTape batch;
  batch.features = cached_features_;
  batch.row_pairs.reserve(state.active_edges.size());
  batch.labels.reserve(state.active_edges.size());
  for (const auto& e : state.active_edges) {
    batch.row_pairs.emplace_back(row_of.at(e.a), row_of.at(e.b));
    const MacroNode* ma = state.find(e.a);
    const MacroNode* mb = state.find(e.b);
    batch.labels.push_back(labeler_.union_pure(ma->members, mb->members) ? 1.0 : 0.0);
  }
  batch.scores = edge_scores_tape(tape_, cached_features_, batch.row_pairs,
                                  params_.edge_disc);

  const Tensor& scores = tape_.value(batch.scores);
  for (std::size_t i = 0; i < state.active_edges.size(); ++i)
    state.active_edges[i].weight = scores.at(static_cast<int>(i), 0);
  edge_batches_.push_back(std::move(batch));
}

void TapeScorer::post_merge(ClusterState& state) {
  cached_features_ = fresh_features(state);
  cached_iteration_ = state.iteration;

  MacroBatchTape batch;
  batch.features = cached_features_;
  batch.scores = macro_scores_tape(tape_, cached_features_, params_.macro_disc);
  batch.labels.reserve(state.macro_nodes.size());
  for (const auto& m : state.macro_nodes)
    batch.labels.push_back(labeler_.members_pure(m.members) ? 1.0 : 0.0);
  macro_batches_.push_back(std::move(batch));
}

void TapeScorer::finalize(ClusterState& state) {
  if (!macro_batches_.empty()) macro_batches_.back().is_final = true;

  // Reuse the last recorded scores when they belong to this exact state;
  // otherwise (a run that never merged) score it without recording.
  Tape::Val scores;
  if (!macro_batches_.empty() && cached_iteration_ == state.iteration &&
      tape_.value(macro_batches_.back().scores).rows() ==
          static_cast<int>(state.macro_nodes.size())) {
    scores = macro_batches_.back().scores;
  } else {
    if (cached_iteration_ != state.iteration) {
      cached_features_ = fresh_features(state);
      cached_iteration_ = state.iteration;
    }
    scores = macro_scores_tape(tape_, cached_features_, params_.macro_disc);
  }
  const Tensor& s = tape_.value(scores);
  for (std::size_t i = 0; i < state.macro_nodes.size(); ++i)
    state.macro_nodes[i].score = s.at(static_cast<int>(i), 0);
}

}  // namespace posegroup
