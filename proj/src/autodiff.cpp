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

#include "posegroup/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "posegroup/errors.hpp"

namespace posegroup {

Tensor Tensor::zeros(std::vector<int> shape) {
  std::size_t n = 1;
  for (const int d : shape) {
    if (d < 0) throw ContractViolation("Tensor: negative dimension");
    n *= static_cast<std::size_t>(d);
  }
  Tensor t;
  t.shape = std::move(shape);
  t.values.assign(n, 0.0);
  return t;
}

Tensor Tensor::make(std::vector<int> shape, std::vector<double> values) {
  std::size_t n = 1;
  for (const int d : shape) {
    if (d < 0) throw ContractViolation("Tensor: negative dimension");
    n *= static_cast<std::size_t>(d);
  }
  if (values.size() != n)
    throw ContractViolation("Tensor: value count does not match shape");
  Tensor t;
  t.shape = std::move(shape);
  t.values = std::move(values);
  return t;
}

void Tensor::check_finite(const char* what) const {
  for (const double v : values)
    if (!std::isfinite(v))
      throw ContractViolation(std::string(what) + ": non-finite value");
}

Tape::Val Tape::push(Tensor value, bool needs_grad, std::function<void(Tape&)> back) {
  Node n;
  n.grad = Tensor::zeros(value.shape);
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Val{static_cast<int>(nodes_.size()) - 1};
}

Tape::Node& Tape::node(Val v) {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw ContractViolation("Tape: invalid value handle");
  return nodes_[static_cast<std::size_t>(v.id)];
}

const Tape::Node& Tape::node(Val v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw ContractViolation("Tape: invalid value handle");
  return nodes_[static_cast<std::size_t>(v.id)];
}

Tape::Val Tape::leaf(Tensor value, bool requires_grad) {
  return push(std::move(value), requires_grad, nullptr);
}

const Tensor& Tape::value(Val v) const { return node(v).value; }
const Tensor& Tape::grad(Val v) const { return node(v).grad; }

Tape::Val Tape::linear(Val x, Val w, Val b) {
  const Tensor& xv = node(x).value;
  const Tensor& wv = node(w).value;
  const Tensor& bv = node(b).value;
  const int n = xv.rows();
  const int in = xv.cols();
  const int out = wv.rows();
  if (wv.cols() != in || static_cast<int>(bv.numel()) != out)
    throw ContractViolation("linear: shape mismatch (" + std::to_string(in) +
                            " input vs weight " + std::to_string(wv.rows()) + "x" +
                            std::to_string(wv.cols()) + ")");

  Tensor y = Tensor::zeros({n, out});
  for (int r = 0; r < n; ++r) {
    for (int o = 0; o < out; ++o) {
      double acc = bv.values[static_cast<std::size_t>(o)];
      for (int k = 0; k < in; ++k) acc += xv.at(r, k) * wv.at(o, k);
      y.at(r, o) = acc;
    }
  }

  const bool ng = node(x).needs_grad || node(w).needs_grad || node(b).needs_grad;
  auto back = [x, w, b, result_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.nodes_[result_id].grad;
    const Tensor& xv = t.node(x).value;
    const Tensor& wv = t.node(w).value;
    Tensor& gx = t.node(x).grad;
    Tensor& gw = t.node(w).grad;
    Tensor& gb = t.node(b).grad;
    const int n = xv.rows();
    const int in = xv.cols();
    const int out = wv.rows();
    for (int r = 0; r < n; ++r) {
      for (int o = 0; o < out; ++o) {
        const double go = g.at(r, o);
        if (go == 0.0) continue;
        gb.values[static_cast<std::size_t>(o)] += go;
        for (int k = 0; k < in; ++k) {
          gx.at(r, k) += go * wv.at(o, k);
          gw.at(o, k) += go * xv.at(r, k);
        }
      }
    }
  };
  return push(std::move(y), ng, std::move(back));
}

Tape::Val Tape::relu(Val x) {
  const Tensor& xv = node(x).value;
  Tensor y = xv;
  for (double& v : y.values) v = v > 0.0 ? v : 0.0;
  auto back = [x, result_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.nodes_[result_id].grad;
    const Tensor& xv = t.node(x).value;
    Tensor& gx = t.node(x).grad;
    for (std::size_t i = 0; i < xv.numel(); ++i)
      if (xv.values[i] > 0.0) gx.values[i] += g.values[i];
  };
  return push(std::move(y), node(x).needs_grad, std::move(back));
}

Tape::Val Tape::sigmoid(Val x) {
  const Tensor& xv = node(x).value;
  Tensor y = xv;
  for (double& v : y.values) v = 1.0 / (1.0 + std::exp(-v));
  auto back = [x, result_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.nodes_[result_id].grad;
    const Tensor& yv = t.nodes_[result_id].value;
    Tensor& gx = t.node(x).grad;
    for (std::size_t i = 0; i < yv.numel(); ++i) {
      const double s = yv.values[i];
      gx.values[i] += g.values[i] * s * (1.0 - s);
    }
  };
  return push(std::move(y), node(x).needs_grad, std::move(back));
}

Tape::Val Tape::dropout(Val x, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0)
    throw ContractViolation("dropout: rate must be in [0, 1)");
  const Tensor& xv = node(x).value;
  std::vector<std::uint8_t> keep(xv.numel());
  const double inv_keep = 1.0 / (1.0 - rate);
  Tensor y = xv;
  for (std::size_t i = 0; i < xv.numel(); ++i) {
    keep[i] = rng.bernoulli(1.0 - rate) ? 1 : 0;
    y.values[i] = keep[i] ? xv.values[i] * inv_keep : 0.0;
  }
  auto back = [x, keep = std::move(keep), inv_keep,
               result_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.nodes_[result_id].grad;
    Tensor& gx = t.node(x).grad;
    for (std::size_t i = 0; i < keep.size(); ++i)
      if (keep[i]) gx.values[i] += g.values[i] * inv_keep;
  };
  return push(std::move(y), node(x).needs_grad, std::move(back));
}

Tape::Val Tape::gather_concat_pairs(Val x,
                                    const std::vector<std::pair<int, int>>& pairs) {
  const Tensor& xv = node(x).value;
  const int d = xv.cols();
  const int n = xv.rows();
  const int e = static_cast<int>(pairs.size());
  Tensor y = Tensor::zeros({e, 2 * d});
  for (int r = 0; r < e; ++r) {
    const auto [u, v] = pairs[r];
    if (u < 0 || u >= n || v < 0 || v >= n)
      throw ContractViolation("gather_concat_pairs: row index out of range");
    for (int c = 0; c < d; ++c) {
      y.at(r, c) = xv.at(u, c);
      y.at(r, d + c) = xv.at(v, c);
    }
  }
  auto back = [x, pairs, d, result_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.nodes_[result_id].grad;
    Tensor& gx = t.node(x).grad;
    for (int r = 0; r < static_cast<int>(pairs.size()); ++r) {
      const auto [u, v] = pairs[r];
      for (int c = 0; c < d; ++c) {
        gx.at(u, c) += g.at(r, c);
        gx.at(v, c) += g.at(r, d + c);
      }
    }
  };
  return push(std::move(y), node(x).needs_grad, std::move(back));
}

Tape::Val Tape::max_rows(Val x, const std::vector<std::vector<int>>& groups) {
  const Tensor& xv = node(x).value;
  const int d = xv.cols();
  const int m = static_cast<int>(groups.size());
  Tensor y = Tensor::zeros({m, d});
  // argmax[g*d + c] = source row attaining the max, or -1 for empty groups.
  std::vector<int> argmax(static_cast<std::size_t>(m) * d, -1);
  for (int g = 0; g < m; ++g) {
    bool first = true;
    for (const int r : groups[g]) {
      if (r < 0 || r >= xv.rows())
        throw ContractViolation("max_rows: row index out of range");
      for (int c = 0; c < d; ++c) {
        const double v = xv.at(r, c);
        if (first || v > y.at(g, c)) {
          y.at(g, c) = v;
          argmax[static_cast<std::size_t>(g) * d + c] = r;
        }
      }
      first = false;
    }
  }
  auto back = [x, argmax = std::move(argmax), d,
               result_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.nodes_[result_id].grad;
    Tensor& gx = t.node(x).grad;
    for (std::size_t i = 0; i < argmax.size(); ++i) {
      const int r = argmax[i];
      if (r >= 0) gx.at(r, static_cast<int>(i % d)) += g.values[i];
    }
  };
  return push(std::move(y), node(x).needs_grad, std::move(back));
}

Tape::Val Tape::mean_rows(Val x, const std::vector<std::vector<int>>& groups) {
  const Tensor& xv = node(x).value;
  const int d = xv.cols();
  const int m = static_cast<int>(groups.size());
  Tensor y = Tensor::zeros({m, d});
  for (int g = 0; g < m; ++g) {
    if (groups[g].empty()) continue;
    for (const int r : groups[g]) {
      if (r < 0 || r >= xv.rows())
        throw ContractViolation("mean_rows: row index out of range");
      for (int c = 0; c < d; ++c) y.at(g, c) += xv.at(r, c);
    }
    const double inv = 1.0 / static_cast<double>(groups[g].size());
    for (int c = 0; c < d; ++c) y.at(g, c) *= inv;
  }
  auto back = [x, groups, d, result_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.nodes_[result_id].grad;
    Tensor& gx = t.node(x).grad;
    for (int gi = 0; gi < static_cast<int>(groups.size()); ++gi) {
      if (groups[gi].empty()) continue;
      const double inv = 1.0 / static_cast<double>(groups[gi].size());
      for (const int r : groups[gi])
        for (int c = 0; c < d; ++c) gx.at(r, c) += g.at(gi, c) * inv;
    }
  };
  return push(std::move(y), node(x).needs_grad, std::move(back));
}

Tape::Val Tape::concat_rows(const std::vector<Val>& parts) {
  if (parts.empty()) throw ContractViolation("concat_rows: no parts");
  const int d = node(parts[0]).value.cols();
  int total = 0;
  bool ng = false;
  for (const Val p : parts) {
    const Tensor& pv = node(p).value;
    if (pv.cols() != d) throw ContractViolation("concat_rows: column count mismatch");
    total += pv.rows();
    ng = ng || node(p).needs_grad;
  }
  Tensor y = Tensor::zeros({total, d});
  int row = 0;
  for (const Val p : parts) {
    const Tensor& pv = node(p).value;
    std::copy(pv.values.begin(), pv.values.end(),
              y.values.begin() + static_cast<std::ptrdiff_t>(row) * d);
    row += pv.rows();
  }
  auto back = [parts, d, result_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.nodes_[result_id].grad;
    int row = 0;
    for (const Val p : parts) {
      Tensor& gp = t.node(p).grad;
      const int rows = t.node(p).value.rows();
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < d; ++c) gp.at(r, c) += g.at(row + r, c);
      row += rows;
    }
  };
  return push(std::move(y), ng, std::move(back));
}

Tape::Val Tape::add(Val a, Val b) {
  const Tensor& av = node(a).value;
  const Tensor& bv = node(b).value;
  if (av.shape != bv.shape) throw ContractViolation("add: shape mismatch");
  Tensor y = av;
  for (std::size_t i = 0; i < y.numel(); ++i) y.values[i] += bv.values[i];
  auto back = [a, b, result_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.nodes_[result_id].grad;
    Tensor& ga = t.node(a).grad;
    Tensor& gb = t.node(b).grad;
    for (std::size_t i = 0; i < g.numel(); ++i) {
      ga.values[i] += g.values[i];
      gb.values[i] += g.values[i];
    }
  };
  return push(std::move(y), node(a).needs_grad || node(b).needs_grad, std::move(back));
}

Tape::Val Tape::scale(Val x, double factor) {
  Tensor y = node(x).value;
  for (double& v : y.values) v *= factor;
  auto back = [x, factor, result_id = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.nodes_[result_id].grad;
    Tensor& gx = t.node(x).grad;
    for (std::size_t i = 0; i < g.numel(); ++i) gx.values[i] += g.values[i] * factor;
  };
  return push(std::move(y), node(x).needs_grad, std::move(back));
}

Tape::Val Tape::bce_mean(Val p, const std::vector<double>& labels, double eps) {
  const Tensor& pv = node(p).value;
  if (pv.numel() != labels.size())
    throw ContractViolation("bce_mean: prediction and label counts differ");
  if (labels.empty()) throw ContractViolation("bce_mean: empty batch");
  for (const double y : labels)
    if (y != 0.0 && y != 1.0) throw ContractViolation("bce_mean: labels must be 0 or 1");

  const std::size_t k = labels.size();
  double total = 0.0;
  std::vector<double> clamped(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double c = std::min(1.0 - eps, std::max(eps, pv.values[i]));
    clamped[i] = c;
    total += -(labels[i] * std::log(c) + (1.0 - labels[i]) * std::log(1.0 - c));
  }
  Tensor y = Tensor::make({1}, {total / static_cast<double>(k)});

  auto back = [p, labels, clamped = std::move(clamped), eps,
               result_id = static_cast<int>(nodes_.size())](Tape& t) {
    const double g = t.nodes_[result_id].grad.values[0];
    const Tensor& pv = t.node(p).value;
    Tensor& gp = t.node(p).grad;
    const double invk = 1.0 / static_cast<double>(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      // Clamped entries are flat: no gradient.
      if (pv.values[i] < eps || pv.values[i] > 1.0 - eps) continue;
      const double c = clamped[i];
      gp.values[i] += g * invk * (c - labels[i]) / (c * (1.0 - c));
    }
  };
  return push(std::move(y), node(p).needs_grad, std::move(back));
}

void Tape::backward(Val loss) {
  if (backward_done_) throw ContractViolation("Tape: backward already ran");
  Node& top = node(loss);
  if (top.value.numel() != 1)
    throw ContractViolation("Tape: backward requires a scalar");
  backward_done_ = true;
  top.grad.values[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.needs_grad && n.back) n.back(*this);
  }
}

}  // namespace posegroup
