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

#ifndef POSEGROUP_NN_HPP
#define POSEGROUP_NN_HPP

#include <string>
#include <utility>
#include <vector>

#include "posegroup/autodiff.hpp"
#include "posegroup/graph.hpp"

namespace posegroup {

/// Dimension of the node features produced by the interaction network and
/// consumed by both discriminators.
constexpr int kNodeFeatureDim = 64;

struct MlpLayer {
  Tensor weight;  // [out x in]
  Tensor bias;    // [out]
};

struct MlpParams {
  std::vector<MlpLayer> layers;
  double dropout_rate = 0.0;  // applied after each hidden activation

  int in_dim() const;
  int out_dim() const;
  void validate() const;  // dimension chaining, finite values
};

enum class Activation { kNone, kRelu, kSigmoid };

/// All learned parameters: the EdgeConv edge functions, the node MLP that
/// maps aggregated features to the 64-D node features, and the two
/// discriminator heads.
struct DiscriminatorBundle {
  std::vector<MlpParams> edgeconv_layers;
  MlpParams node_mlp;
  MlpParams edge_disc;   // input 2 x 64 = 128
  MlpParams macro_disc;  // input 64

  int input_dim() const;  // init_feature dimension the bundle was built for
  void validate() const;  // throws ContractViolation
};

/// Fresh bundle for init features of the given dimension: two EdgeConv layers
/// (edge functions 2*input -> 64 and 128 -> 64), node MLP 64->128->128->64
/// with dropout 0.2, discriminators 128->64->32->1 and 64->32->16->1.
/// He-scaled normal init on rectified layers, Xavier on output layers.
DiscriminatorBundle make_bundle(int init_feature_dim, std::uint64_t seed);

/// Flat views over every parameter tensor in a fixed order (weights then bias
/// per layer, modules in declaration order). Used by the optimizer, gradient
/// checks and checkpoints.
std::vector<Tensor*> bundle_tensors(DiscriminatorBundle& bundle);
std::vector<const Tensor*> bundle_tensors(const DiscriminatorBundle& bundle);
std::vector<std::string> bundle_tensor_names(const DiscriminatorBundle& bundle);

void save_checkpoint(const DiscriminatorBundle& bundle, const std::string& path);
DiscriminatorBundle load_checkpoint(const std::string& path);  // validates shapes

// ---- Value path (inference: no dropout, no trace) ----

/// Applies the MLP to x [N x in]: rectified hidden layers, `final_act` on the
/// last layer.
Tensor mlp_forward(const MlpParams& params, const Tensor& x, Activation final_act);

/// EdgeConv stack + node MLP. Per layer, each directed edge (u, v) gets
/// feature relu(W concat(x_u, x_v) + b) and node u takes the elementwise max
/// over its outgoing edges' features (zero when isolated). Output N x 64.
Tensor interaction_gnn(const PoseGraph& graph, const DiscriminatorBundle& params);

/// Symmetrized edge discriminator score: mean of the head's sigmoid outputs
/// on concat(u, v) and concat(v, u). In (0, 1). Throws ContractViolation on
/// non-finite input or wrong dimension.
double edge_score(const std::vector<double>& feat_u, const std::vector<double>& feat_v,
                  const DiscriminatorBundle& params);

/// Macro-node discriminator score on one aggregated 64-D feature. In (0, 1).
double macro_score(const std::vector<double>& feature,
                   const DiscriminatorBundle& params);

/// Mean binary cross-entropy with predictions clamped to [eps, 1-eps].
/// Labels must be 0 or 1; lengths must match.
double bce_loss(const std::vector<double>& predictions,
                const std::vector<double>& labels, double eps = 1e-7);

// ---- Tape path (training) ----

struct MlpVals {
  std::vector<std::pair<Tape::Val, Tape::Val>> layers;  // (weight, bias)
  double dropout_rate = 0.0;
};

struct BundleVals {
  std::vector<MlpVals> edgeconv_layers;
  MlpVals node_mlp;
  MlpVals edge_disc;
  MlpVals macro_disc;
};

/// Registers every bundle tensor as a differentiable tape leaf.
BundleVals register_bundle(Tape& tape, const DiscriminatorBundle& bundle);

/// Leaf gradients in bundle_tensors order; call after Tape::backward.
std::vector<Tensor> bundle_gradients(const Tape& tape, const BundleVals& vals);

Tape::Val mlp_forward_tape(Tape& tape, const MlpVals& params, Tape::Val x,
                           Activation final_act, bool training, Rng* dropout_rng);

/// Tape twin of interaction_gnn; with training unset it reproduces the value
/// path bit for bit.
Tape::Val interaction_gnn_tape(Tape& tape, const PoseGraph& graph,
                               const BundleVals& params, bool training,
                               Rng* dropout_rng);

/// Symmetrized edge scores for the given feature-row pairs: [pairs x 1].
Tape::Val edge_scores_tape(Tape& tape, Tape::Val features,
                           const std::vector<std::pair<int, int>>& row_pairs,
                           const MlpVals& edge_disc);

/// Macro discriminator scores for every feature row: [rows x 1].
Tape::Val macro_scores_tape(Tape& tape, Tape::Val features, const MlpVals& macro_disc);

}  // namespace posegroup

#endif  // POSEGROUP_NN_HPP
