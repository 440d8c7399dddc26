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

#ifndef POSEGROUP_SCENE_HPP
#define POSEGROUP_SCENE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace posegroup {

/// One keypoint category of a skeleton definition. oks_sigma is the per-type
/// falloff constant used by the keypoint-similarity metric.
struct KeypointType {
  int index = 0;
  std::string name;
  double oks_sigma = 0.05;
};

using Skeleton = std::vector<KeypointType>;

/// The standard 17-type COCO skeleton with the published per-type sigmas.
const Skeleton& coco17_skeleton();

/// A skeleton with `j` types. The first 17 reuse the COCO names and sigmas;
/// further types cycle the sigma table.
Skeleton skeleton_for(int j);

/// One detected keypoint candidate. Coordinates are normalized to [0, 1].
/// gt_person is absent at inference time.
struct KeypointCandidate {
  int id = 0;
  int type = 0;
  double x = 0.0;
  double y = 0.0;
  double confidence = 1.0;
  std::vector<double> embedding;
  std::optional<int> gt_person;
};

/// One annotated keypoint of a ground-truth person, in pixels.
/// visibility == 0 means unlabeled; the coordinates are then meaningless.
struct GtKeypoint {
  double x = 0.0;
  double y = 0.0;
  int visibility = 0;
};

struct GroundTruthPerson {
  int person_id = 0;
  std::vector<GtKeypoint> keypoints;  // one slot per keypoint type
  double area = 0.0;                  // pixels^2

  int labeled_count() const {
    int n = 0;
    for (const auto& kp : keypoints)
      if (kp.visibility > 0) ++n;
    return n;
  }
};

struct Scene {
  int image_id = 0;
  int width = 0;
  int height = 0;
  int keypoint_types = 0;  // J
  int embedding_dim = 0;   // D_e
  bool has_embeddings = false;
  std::vector<KeypointCandidate> candidates;
  std::vector<GroundTruthPerson> gt_persons;

  bool has_ground_truth() const { return gt_labeled; }
  bool gt_labeled = false;

  const GroundTruthPerson* find_gt(int person_id) const;
};

/// Checks the scene invariants: unique candidate ids, coordinates in range,
/// embedding lengths, gt references resolvable, every gt person labeled and
/// with positive area. Throws ContractViolation on the first failure.
void validate_scene(const Scene& scene);

/// Synthetic scene generator parameters. embedding_separation is the expected
/// distance between per-person embedding centers in units of the unit-std
/// within-person embedding noise.
struct SynthConfig {
  int person_min = 1;
  int person_max = 4;
  int keypoint_types = 17;
  int embedding_dim = 4;
  double embedding_separation = 6.0;
  double keypoint_drop_prob = 0.0;
  double position_jitter_std = 0.02;
  std::uint64_t rng_seed = 0;

  void validate() const;  // throws ContractViolation
};

/// Samples one scene: P ~ uniform(person_min, person_max) stick figures at
/// random image locations, per-keypoint jitter and independent drops,
/// per-person embedding centers separated by embedding_separation in
/// expectation with unit-std noise per keypoint. Deterministic for a fixed
/// rng_seed. Dropped keypoints are unlabeled in the ground truth.
Scene generate_synthetic(const SynthConfig& cfg, int image_id = 0);

}  // namespace posegroup

#endif  // POSEGROUP_SCENE_HPP
