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

#include "posegroup/scene.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "posegroup/errors.hpp"
#include "posegroup/rng.hpp"

namespace posegroup {

const Skeleton& coco17_skeleton() {
  static const Skeleton skeleton = [] {
    const char* names[17] = {
        "nose",          "left_eye",      "right_eye",   "left_ear",
        "right_ear",     "left_shoulder", "right_shoulder", "left_elbow",
        "right_elbow",   "left_wrist",    "right_wrist", "left_hip",
        "right_hip",     "left_knee",     "right_knee",  "left_ankle",
        "right_ankle"};
    const double sigmas[17] = {0.026, 0.025, 0.025, 0.035, 0.035, 0.079,
                               0.079, 0.072, 0.072, 0.062, 0.062, 0.107,
                               0.107, 0.087, 0.087, 0.089, 0.089};
    Skeleton s;
    s.reserve(17);
    for (int i = 0; i < 17; ++i) s.push_back({i, names[i], sigmas[i]});
    return s;
  }();
  return skeleton;
}

Skeleton skeleton_for(int j) {
  if (j <= 0) throw ContractViolation("skeleton_for: keypoint type count must be positive");
  const Skeleton& coco = coco17_skeleton();
  Skeleton s;
  s.reserve(j);
  for (int i = 0; i < j; ++i) {
    const KeypointType& base = coco[i % 17];
    KeypointType t;
    t.index = i;
    t.name = i < 17 ? base.name : "kp" + std::to_string(i);
    t.oks_sigma = base.oks_sigma;
    s.push_back(t);
  }
  return s;
}

const GroundTruthPerson* Scene::find_gt(int person_id) const {
  for (const auto& p : gt_persons)
    if (p.person_id == person_id) return &p;
  return nullptr;
}

void validate_scene(const Scene& scene) {
  std::set<int> ids;
  for (const auto& c : scene.candidates) {
    if (!ids.insert(c.id).second)
      throw ContractViolation("scene " + std::to_string(scene.image_id) +
                              ": duplicate candidate id " + std::to_string(c.id));
    if (c.type < 0 || c.type >= scene.keypoint_types)
      throw ContractViolation("scene: candidate type out of range");
    if (c.x < 0.0 || c.x > 1.0 || c.y < 0.0 || c.y > 1.0)
      throw ContractViolation("scene: candidate coordinates outside [0,1]");
    if (static_cast<int>(c.embedding.size()) != scene.embedding_dim)
      throw ContractViolation("scene: embedding length does not match declared dimension");
    if (c.gt_person && scene.find_gt(*c.gt_person) == nullptr)
      throw ContractViolation("scene: candidate references unknown gt person " +
                              std::to_string(*c.gt_person));
  }
  for (const auto& p : scene.gt_persons) {
    if (static_cast<int>(p.keypoints.size()) != scene.keypoint_types)
      throw ContractViolation("scene: gt person keypoint slot count mismatch");
    if (p.labeled_count() == 0)
      throw ContractViolation("scene: gt person without visible keypoints");
    if (!(p.area > 0.0)) throw ContractViolation("scene: gt person area must be positive");
  }
}

void SynthConfig::validate() const {
  if (person_min < 0 || person_max < person_min)
    throw ContractViolation("SynthConfig: invalid person count range");
  if (keypoint_types <= 0) throw ContractViolation("SynthConfig: keypoint_types must be positive");
  if (embedding_dim < 0) throw ContractViolation("SynthConfig: embedding_dim must be nonnegative");
  if (embedding_separation < 0.0)
    throw ContractViolation("SynthConfig: embedding_separation must be nonnegative");
  if (keypoint_drop_prob < 0.0 || keypoint_drop_prob > 1.0)
    throw ContractViolation("SynthConfig: keypoint_drop_prob outside [0,1]");
  if (position_jitter_std < 0.0)
    throw ContractViolation("SynthConfig: position_jitter_std must be nonnegative");
}

namespace {

// Normalized offsets of a 17-point stick figure around its center, COCO type
// order, y pointing down.
struct TemplatePoint {
  double dx, dy;
};
constexpr TemplatePoint kFigure[17] = {
    {0.000, -0.230},   // nose
    {0.018, -0.245},   // left_eye
    {-0.018, -0.245},  // right_eye
    {0.038, -0.235},   // left_ear
    {-0.038, -0.235},  // right_ear
    {0.065, -0.160},   // left_shoulder
    {-0.065, -0.160},  // right_shoulder
    {0.095, -0.065},   // left_elbow
    {-0.095, -0.065},  // right_elbow
    {0.110, 0.020},    // left_wrist
    {-0.110, 0.020},   // right_wrist
    {0.045, 0.020},    // left_hip
    {-0.045, 0.020},   // right_hip
    {0.050, 0.130},    // left_knee
    {-0.050, 0.130},   // right_knee
    {0.055, 0.240},    // left_ankle
    {-0.055, 0.240},   // right_ankle
};

TemplatePoint template_point(int type) {
  TemplatePoint p = kFigure[type % 17];
  // Extra types beyond the COCO 17 reuse the layout with a small shift so
  // they stay distinct.
  p.dx += 0.004 * (type / 17);
  return p;
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

// Per-person embedding centers on a sphere of radius separation/sqrt(2), so
// the expected squared pairwise distance is separation^2. Directions too
// close to an already placed center are resampled to trim the clumping tail.
std::vector<std::vector<double>> sample_embedding_centers(int count, int dim,
                                                          double separation, Rng& rng) {
  std::vector<std::vector<double>> centers;
  if (dim == 0) {
    centers.assign(count, {});
    return centers;
  }
  const double radius = separation / std::sqrt(2.0);
  const double min_cos = 0.36;  // pairwise distance floor of 0.8 * separation
  for (int p = 0; p < count; ++p) {
    std::vector<double> best;
    double best_min_dist = -1.0;
    for (int attempt = 0; attempt < 200; ++attempt) {
      std::vector<double> dir(dim);
      double norm2 = 0.0;
      for (double& v : dir) {
        v = rng.normal();
        norm2 += v * v;
      }
      if (norm2 <= 0.0) continue;
      const double inv = radius / std::sqrt(norm2);
      for (double& v : dir) v *= inv;

      double min_dist2 = 1e300;
      for (const auto& other : centers) {
        double d2 = 0.0;
        for (int i = 0; i < dim; ++i) d2 += (dir[i] - other[i]) * (dir[i] - other[i]);
        min_dist2 = std::min(min_dist2, d2);
      }
      if (min_dist2 > best_min_dist) {
        best_min_dist = min_dist2;
        best = dir;
      }
      const double floor2 = 2.0 * radius * radius * (1.0 - min_cos);
      if (centers.empty() || min_dist2 >= floor2 || radius <= 1e-12) break;
    }
    centers.push_back(std::move(best));
  }
  return centers;
}

}  // namespace

Scene generate_synthetic(const SynthConfig& cfg, int image_id) {
  cfg.validate();
  Rng rng(cfg.rng_seed);

  Scene scene;
  scene.image_id = image_id;
  scene.width = 640;
  scene.height = 480;
  scene.keypoint_types = cfg.keypoint_types;
  scene.embedding_dim = cfg.embedding_dim;
  scene.has_embeddings = true;
  scene.gt_labeled = true;

  const int person_count = rng.uniform_int(cfg.person_min, cfg.person_max);
  const auto centers =
      sample_embedding_centers(person_count, cfg.embedding_dim, cfg.embedding_separation, rng);

  const int j = cfg.keypoint_types;
  int next_person_id = 0;
  for (int p = 0; p < person_count; ++p) {
    const double cx = rng.uniform(0.28, 0.72);
    const double cy = rng.uniform(0.30, 0.70);
    const double scale = rng.uniform(0.85, 1.15);

    std::vector<double> xs(j), ys(j);
    std::vector<bool> kept(j);
    double min_x = 1.0, max_x = 0.0, min_y = 1.0, max_y = 0.0;
    for (int t = 0; t < j; ++t) {
      const TemplatePoint tp = template_point(t);
      double x = cx + tp.dx * scale + rng.normal(0.0, cfg.position_jitter_std);
      double y = cy + tp.dy * scale + rng.normal(0.0, cfg.position_jitter_std);
      x = clamp01(x);
      y = clamp01(y);
      xs[t] = x;
      ys[t] = y;
      kept[t] = !rng.bernoulli(cfg.keypoint_drop_prob);
      min_x = std::min(min_x, x);
      max_x = std::max(max_x, x);
      min_y = std::min(min_y, y);
      max_y = std::max(max_y, y);
    }

    int surviving = 0;
    for (int t = 0; t < j; ++t)
      if (kept[t]) ++surviving;
    if (surviving == 0) continue;  // fully occluded person is unobservable

    GroundTruthPerson gt;
    gt.person_id = next_person_id++;
    gt.keypoints.resize(j);
    const double bbox_w = (max_x - min_x) * scene.width;
    const double bbox_h = (max_y - min_y) * scene.height;
    gt.area = std::max(1.0, bbox_w * bbox_h);
    for (int t = 0; t < j; ++t) {
      if (!kept[t]) continue;
      gt.keypoints[t] = {xs[t] * scene.width, ys[t] * scene.height, 2};
    }

    for (int t = 0; t < j; ++t) {
      if (!kept[t]) continue;
      KeypointCandidate c;
      c.type = t;
      c.x = xs[t];
      c.y = ys[t];
      c.confidence = rng.uniform(0.6, 1.0);
      c.embedding.resize(cfg.embedding_dim);
      for (int i = 0; i < cfg.embedding_dim; ++i) c.embedding[i] = centers[p][i] + rng.normal();
      c.gt_person = gt.person_id;
      scene.candidates.push_back(std::move(c));
    }
    scene.gt_persons.push_back(std::move(gt));
  }

  // Canonical candidate order and dense ids.
  std::sort(scene.candidates.begin(), scene.candidates.end(),
            [](const KeypointCandidate& a, const KeypointCandidate& b) {
              if (a.type != b.type) return a.type < b.type;
              if (a.y != b.y) return a.y < b.y;
              return a.x < b.x;
            });
  for (std::size_t i = 0; i < scene.candidates.size(); ++i)
    scene.candidates[i].id = static_cast<int>(i);

  validate_scene(scene);
  return scene;
}

}  // namespace posegroup
