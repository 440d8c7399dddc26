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

#include "posegroup/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "posegroup/errors.hpp"

namespace posegroup {

using nlohmann::json;

int MlpParams::in_dim() const {
  if (layers.empty()) throw ContractViolation("MlpParams: no layers");
  return layers.front().weight.cols();
}

int MlpParams::out_dim() const {
  if (layers.empty()) throw ContractViolation("MlpParams: no layers");
  return layers.back().weight.rows();
}

void MlpParams::validate() const {
  if (layers.empty()) throw ContractViolation("MlpParams: no layers");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw ContractViolation("MlpParams: dropout_rate outside [0, 1)");
  int prev_out = -1;
  for (const auto& layer : layers) {
    if (layer.weight.shape.size() != 2 || layer.weight.rows() <= 0 ||
        layer.weight.cols() <= 0)
      throw ContractViolation("MlpParams: weight must be 2-D and nonempty");
    if (layer.bias.numel() != static_cast<std::size_t>(layer.weight.rows()))
      throw ContractViolation("MlpParams: bias length must match output width");
    if (prev_out >= 0 && layer.weight.cols() != prev_out)
      throw ContractViolation("MlpParams: layer dimensions do not chain");
    prev_out = layer.weight.rows();
    layer.weight.check_finite("MlpParams weight");
    layer.bias.check_finite("MlpParams bias");
  }
}

int DiscriminatorBundle::input_dim() const {
  if (edgeconv_layers.empty())
    throw ContractViolation("DiscriminatorBundle: no EdgeConv layers");
  const int twice = edgeconv_layers.front().in_dim();
  if (twice % 2 != 0)
    throw ContractViolation("DiscriminatorBundle: EdgeConv input must be even");
  return twice / 2;
}

void DiscriminatorBundle::validate() const {
  if (edgeconv_layers.empty())
    throw ContractViolation("DiscriminatorBundle: no EdgeConv layers");
  for (const auto& layer : edgeconv_layers) layer.validate();
  node_mlp.validate();
  edge_disc.validate();
  macro_disc.validate();

  (void)input_dim();  // checks evenness
  for (std::size_t l = 1; l < edgeconv_layers.size(); ++l)
    if (edgeconv_layers[l].in_dim() != 2 * edgeconv_layers[l - 1].out_dim())
      throw ContractViolation(
          "DiscriminatorBundle: EdgeConv layer input must be twice the previous output");
  if (node_mlp.in_dim() != edgeconv_layers.back().out_dim())
    throw ContractViolation("DiscriminatorBundle: node MLP input width mismatch");
  if (node_mlp.out_dim() != kNodeFeatureDim)
    throw ContractViolation("DiscriminatorBundle: node features must be 64-D");
  if (edge_disc.in_dim() != 2 * kNodeFeatureDim || edge_disc.out_dim() != 1)
    throw ContractViolation("DiscriminatorBundle: edge discriminator must map 128 -> 1");
  if (macro_disc.in_dim() != kNodeFeatureDim || macro_disc.out_dim() != 1)
    throw ContractViolation("DiscriminatorBundle: macro discriminator must map 64 -> 1");
}

namespace {

// He scaling on rectified layers, Xavier on the final layer of heads.
MlpParams init_mlp(const std::vector<std::pair<int, int>>& dims, double dropout,
                   bool final_rectified, Rng& rng) {
  MlpParams mlp;
  mlp.dropout_rate = dropout;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const auto [in, out] = dims[i];
    const bool rectified = final_rectified || i + 1 < dims.size();
    const double std = std::sqrt((rectified ? 2.0 : 1.0) / in);
    MlpLayer layer;
    layer.weight = Tensor::zeros({out, in});
    for (double& v : layer.weight.values) v = rng.normal(0.0, std);
    layer.bias = Tensor::zeros({out});
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

}  // namespace

DiscriminatorBundle make_bundle(int init_feature_dim, std::uint64_t seed) {
  if (init_feature_dim <= 0)
    throw ContractViolation("make_bundle: feature dimension must be positive");
  Rng rng(seed);
  DiscriminatorBundle b;
  b.edgeconv_layers.push_back(
      init_mlp({{2 * init_feature_dim, kNodeFeatureDim}}, 0.0, true, rng));
  b.edgeconv_layers.push_back(
      init_mlp({{2 * kNodeFeatureDim, kNodeFeatureDim}}, 0.0, true, rng));
  b.node_mlp = init_mlp({{64, 128}, {128, 128}, {128, 64}}, 0.2, false, rng);
  b.edge_disc = init_mlp({{128, 64}, {64, 32}, {32, 1}}, 0.0, false, rng);
  b.macro_disc = init_mlp({{64, 32}, {32, 16}, {16, 1}}, 0.0, false, rng);
  b.validate();
  return b;
}

std::vector<Tensor*> bundle_tensors(DiscriminatorBundle& bundle) {
  std::vector<Tensor*> out;
  auto add = [&](MlpParams& mlp) {
    for (auto& layer : mlp.layers) {
      out.push_back(&layer.weight);
      out.push_back(&layer.bias);
    }
  };
  for (auto& mlp : bundle.edgeconv_layers) add(mlp);
  add(bundle.node_mlp);
  add(bundle.edge_disc);
  add(bundle.macro_disc);
  return out;
}

std::vector<const Tensor*> bundle_tensors(const DiscriminatorBundle& bundle) {
  const auto mut = bundle_tensors(const_cast<DiscriminatorBundle&>(bundle));
  return {mut.begin(), mut.end()};
}

std::vector<std::string> bundle_tensor_names(const DiscriminatorBundle& bundle) {
  std::vector<std::string> out;
  auto add = [&](const MlpParams& mlp, const std::string& prefix) {
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
      out.push_back(prefix + ".layer" + std::to_string(l) + ".weight");
      out.push_back(prefix + ".layer" + std::to_string(l) + ".bias");
    }
  };
  for (std::size_t i = 0; i < bundle.edgeconv_layers.size(); ++i)
    add(bundle.edgeconv_layers[i], "edgeconv" + std::to_string(i));
  add(bundle.node_mlp, "node_mlp");
  add(bundle.edge_disc, "edge_disc");
  add(bundle.macro_disc, "macro_disc");
  return out;
}

namespace {

json tensor_to_json(const Tensor& t) {
  return {{"shape", t.shape}, {"values", t.values}};
}

Tensor tensor_from_json(const json& j) {
  if (!j.contains("shape") || !j.contains("values"))
    throw SchemaError("checkpoint tensor missing shape or values");
  return Tensor::make(j["shape"].get<std::vector<int>>(),
                      j["values"].get<std::vector<double>>());
}

json mlp_to_json(const MlpParams& mlp) {
  json layers = json::array();
  for (const auto& layer : mlp.layers)
    layers.push_back({{"weight", tensor_to_json(layer.weight)},
                      {"bias", tensor_to_json(layer.bias)}});
  return {{"dropout_rate", mlp.dropout_rate}, {"layers", layers}};
}

MlpParams mlp_from_json(const json& j) {
  MlpParams mlp;
  if (!j.contains("layers") || !j["layers"].is_array())
    throw SchemaError("checkpoint MLP missing layers");
  mlp.dropout_rate = j.value("dropout_rate", 0.0);
  for (const auto& jl : j["layers"]) {
    MlpLayer layer;
    layer.weight = tensor_from_json(jl.at("weight"));
    layer.bias = tensor_from_json(jl.at("bias"));
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

}  // namespace

void save_checkpoint(const DiscriminatorBundle& bundle, const std::string& path) {
  bundle.validate();
  json ecl = json::array();
  for (const auto& mlp : bundle.edgeconv_layers) ecl.push_back(mlp_to_json(mlp));
  const json doc = {{"format", "posegroup-checkpoint"},
                    {"version", 1},
                    {"edgeconv_layers", ecl},
                    {"node_mlp", mlp_to_json(bundle.node_mlp)},
                    {"edge_disc", mlp_to_json(bundle.edge_disc)},
                    {"macro_disc", mlp_to_json(bundle.macro_disc)}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << doc.dump() << '\n';
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

DiscriminatorBundle load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!doc.is_object() || doc.value("format", "") != "posegroup-checkpoint")
    throw SchemaError("not a checkpoint file: " + path);
  if (doc.value("version", 0) != 1) throw SchemaError("unsupported checkpoint version");

  DiscriminatorBundle bundle;
  try {
    for (const auto& jm : doc.at("edgeconv_layers"))
      bundle.edgeconv_layers.push_back(mlp_from_json(jm));
    bundle.node_mlp = mlp_from_json(doc.at("node_mlp"));
    bundle.edge_disc = mlp_from_json(doc.at("edge_disc"));
    bundle.macro_disc = mlp_from_json(doc.at("macro_disc"));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ContractViolation& e) {
    throw SchemaError(std::string("malformed checkpoint: ") + e.what());
  }
  try {
    bundle.validate();
  } catch (const ContractViolation& e) {
    throw SchemaError(std::string("invalid checkpoint: ") + e.what());
  }
  return bundle;
}

// ---- Value path ----

namespace {

// The value-path kernels mirror the tape ops loop for loop so that inference
// and a dropout-free trace produce bit-identical numbers.

Tensor linear_value(const Tensor& x, const Tensor& w, const Tensor& b) {
  const int n = x.rows();
  const int in = x.cols();
  const int out = w.rows();
  if (w.cols() != in || static_cast<int>(b.numel()) != out)
    throw ContractViolation("linear: shape mismatch (" + std::to_string(in) +
                            " input vs weight " + std::to_string(w.rows()) + "x" +
                            std::to_string(w.cols()) + ")");
  Tensor y = Tensor::zeros({n, out});
  for (int r = 0; r < n; ++r) {
    for (int o = 0; o < out; ++o) {
      double acc = b.values[static_cast<std::size_t>(o)];
      for (int k = 0; k < in; ++k) acc += x.at(r, k) * w.at(o, k);
      y.at(r, o) = acc;
    }
  }
  return y;
}

void apply_activation(Tensor& t, Activation act) {
  switch (act) {
    case Activation::kNone:
      break;
    case Activation::kRelu:
      for (double& v : t.values) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::kSigmoid:
      for (double& v : t.values) v = 1.0 / (1.0 + std::exp(-v));
      break;
  }
}

void directed_pairs_and_groups(const PoseGraph& graph,
                               std::vector<std::pair<int, int>>& pairs,
                               std::vector<std::vector<int>>& groups) {
  pairs.clear();
  groups.assign(graph.nodes.size(), {});
  pairs.reserve(2 * graph.edges.size());
  for (const auto& e : graph.edges) {
    groups[e.u].push_back(static_cast<int>(pairs.size()));
    pairs.emplace_back(e.u, e.v);
    groups[e.v].push_back(static_cast<int>(pairs.size()));
    pairs.emplace_back(e.v, e.u);
  }
}

Tensor gather_concat_value(const Tensor& x,
                           const std::vector<std::pair<int, int>>& pairs) {
  const int d = x.cols();
  Tensor y = Tensor::zeros({static_cast<int>(pairs.size()), 2 * d});
  for (int r = 0; r < static_cast<int>(pairs.size()); ++r) {
    const auto [u, v] = pairs[r];
    for (int c = 0; c < d; ++c) {
      y.at(r, c) = x.at(u, c);
      y.at(r, d + c) = x.at(v, c);
    }
  }
  return y;
}

Tensor max_rows_value(const Tensor& x, const std::vector<std::vector<int>>& groups) {
  const int d = x.cols();
  Tensor y = Tensor::zeros({static_cast<int>(groups.size()), d});
  for (int g = 0; g < static_cast<int>(groups.size()); ++g) {
    bool first = true;
    for (const int r : groups[g]) {
      for (int c = 0; c < d; ++c) {
        const double v = x.at(r, c);
        if (first || v > y.at(g, c)) y.at(g, c) = v;
      }
      first = false;
    }
  }
  return y;
}

Tensor init_feature_matrix(const PoseGraph& graph) {
  const int f = graph.feature_dim();
  Tensor x = Tensor::zeros({static_cast<int>(graph.nodes.size()), f});
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const auto& feat = graph.nodes[i].init_feature;
    if (static_cast<int>(feat.size()) != f)
      throw ContractViolation("interaction_gnn: node init_feature dimension mismatch");
    std::copy(feat.begin(), feat.end(),
              x.values.begin() + static_cast<std::ptrdiff_t>(i) * f);
  }
  return x;
}

}  // namespace

Tensor mlp_forward(const MlpParams& params, const Tensor& x, Activation final_act) {
  if (params.layers.empty()) throw ContractViolation("mlp_forward: no layers");
  Tensor cur = x;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    cur = linear_value(cur, params.layers[i].weight, params.layers[i].bias);
    apply_activation(cur, i + 1 < params.layers.size() ? Activation::kRelu : final_act);
  }
  return cur;
}

Tensor interaction_gnn(const PoseGraph& graph, const DiscriminatorBundle& params) {
  if (graph.feature_dim() != params.input_dim())
    throw ContractViolation("interaction_gnn: graph features are " +
                            std::to_string(graph.feature_dim()) +
                            "-D but the bundle expects " +
                            std::to_string(params.input_dim()) + "-D");
  std::vector<std::pair<int, int>> pairs;
  std::vector<std::vector<int>> groups;
  directed_pairs_and_groups(graph, pairs, groups);

  Tensor x = init_feature_matrix(graph);
  for (const auto& layer : params.edgeconv_layers) {
    const Tensor cat = gather_concat_value(x, pairs);
    const Tensor edge_feats = mlp_forward(layer, cat, Activation::kRelu);
    x = max_rows_value(edge_feats, groups);
  }
  return mlp_forward(params.node_mlp, x, Activation::kNone);
}

double edge_score(const std::vector<double>& feat_u, const std::vector<double>& feat_v,
                  const DiscriminatorBundle& params) {
  const int d = kNodeFeatureDim;
  if (static_cast<int>(feat_u.size()) != d || static_cast<int>(feat_v.size()) != d)
    throw ContractViolation("edge_score: features must be 64-D");
  for (const double v : feat_u)
    if (!std::isfinite(v)) throw ContractViolation("edge_score: non-finite feature");
  for (const double v : feat_v)
    if (!std::isfinite(v)) throw ContractViolation("edge_score: non-finite feature");

  std::vector<double> ab(feat_u);
  ab.insert(ab.end(), feat_v.begin(), feat_v.end());
  std::vector<double> ba(feat_v);
  ba.insert(ba.end(), feat_u.begin(), feat_u.end());
  const Tensor sa =
      mlp_forward(params.edge_disc, Tensor::make({1, 2 * d}, std::move(ab)),
                  Activation::kSigmoid);
  const Tensor sb =
      mlp_forward(params.edge_disc, Tensor::make({1, 2 * d}, std::move(ba)),
                  Activation::kSigmoid);
  return (sa.values[0] + sb.values[0]) * 0.5;
}

double macro_score(const std::vector<double>& feature,
                   const DiscriminatorBundle& params) {
  if (static_cast<int>(feature.size()) != kNodeFeatureDim)
    throw ContractViolation("macro_score: feature must be 64-D");
  for (const double v : feature)
    if (!std::isfinite(v)) throw ContractViolation("macro_score: non-finite feature");
  const Tensor s = mlp_forward(params.macro_disc,
                               Tensor::make({1, kNodeFeatureDim}, feature),
                               Activation::kSigmoid);
  return s.values[0];
}

double bce_loss(const std::vector<double>& predictions,
                const std::vector<double>& labels, double eps) {
  if (predictions.size() != labels.size())
    throw ContractViolation("bce_loss: prediction and label counts differ");
  if (predictions.empty()) throw ContractViolation("bce_loss: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double y = labels[i];
    if (y != 0.0 && y != 1.0) throw ContractViolation("bce_loss: labels must be 0 or 1");
    const double c = std::min(1.0 - eps, std::max(eps, predictions[i]));
    total += -(y * std::log(c) + (1.0 - y) * std::log(1.0 - c));
  }
  return total / static_cast<double>(predictions.size());
}

// ---- Tape path ----

BundleVals register_bundle(Tape& tape, const DiscriminatorBundle& bundle) {
  bundle.validate();
  auto reg = [&](const MlpParams& mlp) {
    MlpVals vals;
    vals.dropout_rate = mlp.dropout_rate;
    for (const auto& layer : mlp.layers)
      vals.layers.emplace_back(tape.leaf(layer.weight, true),
                               tape.leaf(layer.bias, true));
    return vals;
  };
  BundleVals out;
  for (const auto& mlp : bundle.edgeconv_layers)
    out.edgeconv_layers.push_back(reg(mlp));
  out.node_mlp = reg(bundle.node_mlp);
  out.edge_disc = reg(bundle.edge_disc);
  out.macro_disc = reg(bundle.macro_disc);
  return out;
}

std::vector<Tensor> bundle_gradients(const Tape& tape, const BundleVals& vals) {
  std::vector<Tensor> out;
  auto take = [&](const MlpVals& mlp) {
    for (const auto& [w, b] : mlp.layers) {
      out.push_back(tape.grad(w));
      out.push_back(tape.grad(b));
    }
  };
  for (const auto& mlp : vals.edgeconv_layers) take(mlp);
  take(vals.node_mlp);
  take(vals.edge_disc);
  take(vals.macro_disc);
  return out;
}

Tape::Val mlp_forward_tape(Tape& tape, const MlpVals& params, Tape::Val x,
                           Activation final_act, bool training, Rng* dropout_rng) {
  if (params.layers.empty()) throw ContractViolation("mlp_forward_tape: no layers");
  const bool use_dropout = training && params.dropout_rate > 0.0;
  if (use_dropout && dropout_rng == nullptr)
    throw ContractViolation("mlp_forward_tape: dropout requires a random source");
  Tape::Val cur = x;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    cur = tape.linear(cur, params.layers[i].first, params.layers[i].second);
    if (i + 1 < params.layers.size()) {
      cur = tape.relu(cur);
      if (use_dropout) cur = tape.dropout(cur, params.dropout_rate, *dropout_rng);
    } else {
      if (final_act == Activation::kRelu) cur = tape.relu(cur);
      if (final_act == Activation::kSigmoid) cur = tape.sigmoid(cur);
    }
  }
  return cur;
}

Tape::Val interaction_gnn_tape(Tape& tape, const PoseGraph& graph,
                               const BundleVals& params, bool training,
                               Rng* dropout_rng) {
  std::vector<std::pair<int, int>> pairs;
  std::vector<std::vector<int>> groups;
  directed_pairs_and_groups(graph, pairs, groups);

  Tape::Val x = tape.leaf(init_feature_matrix(graph), false);
  for (const auto& layer : params.edgeconv_layers) {
    Tape::Val cat = tape.gather_concat_pairs(x, pairs);
    Tape::Val edge_feats =
        mlp_forward_tape(tape, layer, cat, Activation::kRelu, training, dropout_rng);
    x = tape.max_rows(edge_feats, groups);
  }
  return mlp_forward_tape(tape, params.node_mlp, x, Activation::kNone, training,
                          dropout_rng);
}

Tape::Val edge_scores_tape(Tape& tape, Tape::Val features,
                           const std::vector<std::pair<int, int>>& row_pairs,
                           const MlpVals& edge_disc) {
  std::vector<std::pair<int, int>> swapped;
  swapped.reserve(row_pairs.size());
  for (const auto& [a, b] : row_pairs) swapped.emplace_back(b, a);
  Tape::Val cat_ab = tape.gather_concat_pairs(features, row_pairs);
  Tape::Val cat_ba = tape.gather_concat_pairs(features, swapped);
  Tape::Val s_ab =
      mlp_forward_tape(tape, edge_disc, cat_ab, Activation::kSigmoid, false, nullptr);
  Tape::Val s_ba =
      mlp_forward_tape(tape, edge_disc, cat_ba, Activation::kSigmoid, false, nullptr);
  return tape.scale(tape.add(s_ab, s_ba), 0.5);
}

Tape::Val macro_scores_tape(Tape& tape, Tape::Val features, const MlpVals& macro_disc) {
  return mlp_forward_tape(tape, macro_disc, features, Activation::kSigmoid, false,
                          nullptr);
}

}  // namespace posegroup
