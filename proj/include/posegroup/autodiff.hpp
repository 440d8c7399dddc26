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

#ifndef POSEGROUP_AUTODIFF_HPP
#define POSEGROUP_AUTODIFF_HPP

#include <functional>
#include <utility>
#include <vector>

#include "posegroup/rng.hpp"

namespace posegroup {

/// Dense row-major tensor of doubles.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> values;

  static Tensor zeros(std::vector<int> shape);
  static Tensor make(std::vector<int> shape, std::vector<double> values);

  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  std::size_t numel() const { return values.size(); }

  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols() + c]; }
  double at(int r, int c) const {
    return values[static_cast<std::size_t>(r) * cols() + c];
  }

  /// Throws ContractViolation if any value is NaN or infinite.
  void check_finite(const char* what) const;
};

/// Recording tape for reverse-mode differentiation. Build a forward trace
/// through the op methods, then call backward on a scalar result once;
/// gradients of leaves created with requires_grad are then readable.
class Tape {
 public:
  struct Val {
    int id = -1;
  };

  Val leaf(Tensor value, bool requires_grad);

  const Tensor& value(Val v) const;
  const Tensor& grad(Val v) const;

  /// y = x * W^T + b with x [N x in], W [out x in], b [out].
  Val linear(Val x, Val w, Val b);
  Val relu(Val x);
  Val sigmoid(Val x);

  /// Inverted dropout: keeps each entry with probability 1-rate and scales
  /// kept entries by 1/(1-rate). The mask is drawn once at trace time.
  Val dropout(Val x, double rate, Rng& rng);

  /// out[e] = concat(x[pairs[e].first], x[pairs[e].second]); x [N x D] -> [E x 2D].
  Val gather_concat_pairs(Val x, const std::vector<std::pair<int, int>>& pairs);

  /// out[g] = elementwise max over x rows listed in groups[g]; empty group
  /// rows are zero. Gradient flows to the first attaining row per column.
  Val max_rows(Val x, const std::vector<std::vector<int>>& groups);

  /// out[g] = arithmetic mean over x rows listed in groups[g]; empty group
  /// rows are zero.
  Val mean_rows(Val x, const std::vector<std::vector<int>>& groups);

  /// Vertical stack of 2-D tensors with equal column counts.
  Val concat_rows(const std::vector<Val>& parts);

  Val add(Val a, Val b);
  Val scale(Val x, double factor);

  /// Mean binary cross-entropy of a column of probabilities against 0/1
  /// labels; probabilities are clamped to [eps, 1-eps] first. Scalar result.
  Val bce_mean(Val p, const std::vector<double>& labels, double eps = 1e-7);

  /// Reverse pass from a scalar. Throws ContractViolation if the value is not
  /// scalar, the handle is invalid, or backward already ran on this tape.
  void backward(Val loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    std::function<void(Tape&)> back;
  };

  Val push(Tensor value, bool needs_grad, std::function<void(Tape&)> back);
  Node& node(Val v);
  const Node& node(Val v) const;

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace posegroup

#endif  // POSEGROUP_AUTODIFF_HPP
