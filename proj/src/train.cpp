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

#include "posegroup/train.hpp"

#include <cmath>

#include "posegroup/errors.hpp"
#include "posegroup/rollout.hpp"

namespace posegroup {

void LossWeights::validate() const {
  if (edge < 0.0 || final_macro < 0.0 || interm_macro < 0.0)
    throw ContractViolation("LossWeights: weights must be nonnegative");
}

void adam_step(DiscriminatorBundle& params, const std::vector<Tensor>& grads,
               const AdamConfig& cfg, AdamState& state) {
  auto tensors = bundle_tensors(params);
  if (grads.size() != tensors.size())
    throw ContractViolation("adam_step: gradient count mismatch");
  if (state.m.empty()) {
    for (const Tensor* t : tensors) {
      state.m.push_back(Tensor::zeros(t->shape));
      state.v.push_back(Tensor::zeros(t->shape));
    }
  }
  if (state.m.size() != tensors.size())
    throw ContractViolation("adam_step: optimizer state does not match the bundle");

  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    Tensor& theta = *tensors[i];
    const Tensor& g = grads[i];
    if (g.shape != theta.shape)
      throw ContractViolation("adam_step: gradient shape mismatch");
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t k = 0; k < theta.numel(); ++k) {
      const double gk = g.values[k];
      m.values[k] = cfg.beta1 * m.values[k] + (1.0 - cfg.beta1) * gk;
      v.values[k] = cfg.beta2 * v.values[k] + (1.0 - cfg.beta2) * gk * gk;
      const double mhat = m.values[k] / bc1;
      const double vhat = v.values[k] / bc2;
      theta.values[k] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
  }
}

LossReport train_step(const std::vector<Scene>& batch, DiscriminatorBundle& params,
                      AdamState& opt_state, const AdamConfig& opt_cfg,
                      const GraphTopology& topology, const OhgcConfig& ohgc_cfg,
                      const LossWeights& weights, Rng& rng) {
  weights.validate();
  if (batch.empty()) throw ContractViolation("train_step: empty batch");
  for (const auto& scene : batch)
    if (!scene.has_ground_truth())
      throw ContractViolation("train_step: scene without ground truth");

  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  LossReport report;
  std::vector<Tensor> grad_total;
  for (const Tensor* t : bundle_tensors(params))
    grad_total.push_back(Tensor::zeros(t->shape));

  long long edge_correct = 0;
  long long edge_total = 0;

  for (const auto& scene : batch) {
    const PoseGraph graph = build_graph(scene, topology);
    Tape tape;
    const BundleVals vals = register_bundle(tape, params);
    TapeScorer scorer(tape, graph, vals, scene, /*training=*/true, &rng);
    run_clustering_loop(graph, scorer, ohgc_cfg);

    // Gather per-term score columns and labels across the iterations.
    std::vector<Tape::Val> edge_parts;
    std::vector<double> edge_labels;
    for (const auto& b : scorer.edge_batches()) {
      edge_parts.push_back(b.scores);
      edge_labels.insert(edge_labels.end(), b.labels.begin(), b.labels.end());
      const Tensor& s = tape.value(b.scores);
      for (std::size_t i = 0; i < b.labels.size(); ++i) {
        const bool predicted_same = s.at(static_cast<int>(i), 0) >= 0.5;
        if (predicted_same == (b.labels[i] == 1.0)) ++edge_correct;
        ++edge_total;
      }
    }
    std::vector<Tape::Val> final_parts, interm_parts;
    std::vector<double> final_labels, interm_labels;
    for (const auto& b : scorer.macro_batches()) {
      auto& parts = b.is_final ? final_parts : interm_parts;
      auto& labels = b.is_final ? final_labels : interm_labels;
      parts.push_back(b.scores);
      labels.insert(labels.end(), b.labels.begin(), b.labels.end());
    }

    struct Term {
      const std::vector<Tape::Val>* parts;
      const std::vector<double>* labels;
      double weight;
      double* component;
    };
    const Term terms[] = {
        {&edge_parts, &edge_labels, weights.edge, &report.edge_bce},
        {&final_parts, &final_labels, weights.final_macro, &report.macro_final_bce},
        {&interm_parts, &interm_labels, weights.interm_macro,
         &report.macro_intermediate_bce},
    };

    Tape::Val scene_loss{-1};
    bool have_loss = false;
    for (const auto& term : terms) {
      if (term.weight == 0.0 || term.parts->empty()) continue;
      const Tape::Val bce =
          tape.bce_mean(tape.concat_rows(*term.parts), *term.labels);
      *term.component += tape.value(bce).values[0] * inv_batch;
      const Tape::Val contrib = tape.scale(bce, term.weight * inv_batch);
      scene_loss = have_loss ? tape.add(scene_loss, contrib) : contrib;
      have_loss = true;
    }
    if (!have_loss) continue;

    tape.backward(scene_loss);
    const std::vector<Tensor> grads = bundle_gradients(tape, vals);
    for (std::size_t i = 0; i < grads.size(); ++i)
      for (std::size_t k = 0; k < grads[i].numel(); ++k)
        grad_total[i].values[k] += grads[i].values[k];
  }

  report.total = weights.edge * report.edge_bce +
                 weights.final_macro * report.macro_final_bce +
                 weights.interm_macro * report.macro_intermediate_bce;
  report.edge_accuracy =
      edge_total > 0 ? static_cast<double>(edge_correct) / edge_total : 0.0;

  adam_step(params, grad_total, opt_cfg, opt_state);
  return report;
}

}  // namespace posegroup
