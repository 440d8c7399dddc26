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

#ifndef POSEGROUP_TRAIN_HPP
#define POSEGROUP_TRAIN_HPP

#include <vector>

#include "posegroup/nn.hpp"
#include "posegroup/ohgc.hpp"
#include "posegroup/scene.hpp"

namespace posegroup {

/// Relative weights of the supervision terms; a weight of exactly 0 disables
/// its term (no loss, no gradient, reported as 0).
struct LossWeights {
  double edge = 1.0;
  double final_macro = 1.0;
  double interm_macro = 1.0;

  void validate() const;  // nonnegative
};

/// Per-step training metrics. Components are means over the batch (scenes
/// without examples for a term contribute 0; disabled terms report 0);
/// total is exactly the weighted sum of the components.
struct LossReport {
  double edge_bce = 0.0;
  double macro_final_bce = 0.0;
  double macro_intermediate_bce = 0.0;
  double total = 0.0;
  double edge_accuracy = 0.0;
};

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  long long step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

/// One adaptive-moment update over every bundle tensor. Gradients must be in
/// bundle_tensors order; moment buffers are created on first use.
void adam_step(DiscriminatorBundle& params, const std::vector<Tensor>& grads,
               const AdamConfig& cfg, AdamState& state);

/// One optimization step: teacher-guided rollouts over the batch (dropout
/// active), weighted BCE over the recorded edge and macro examples, then one
/// adam_step. Every scene must carry ground truth (ContractViolation
/// otherwise). `rng` drives dropout masks.
LossReport train_step(const std::vector<Scene>& batch, DiscriminatorBundle& params,
                      AdamState& opt_state, const AdamConfig& opt_cfg,
                      const GraphTopology& topology, const OhgcConfig& ohgc_cfg,
                      const LossWeights& weights, Rng& rng);

}  // namespace posegroup

#endif  // POSEGROUP_TRAIN_HPP
