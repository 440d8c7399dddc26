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

#ifndef POSEGROUP_GREEDY_HPP
#define POSEGROUP_GREEDY_HPP

#include "posegroup/result.hpp"
#include "posegroup/scene.hpp"

namespace posegroup {

/// Tag-based greedy decoder. Visits keypoint types breadth-first from type 0
/// over the skeleton tree; candidates of each type (best confidence first)
/// join the open person with the nearest running-mean embedding within
/// tag_distance_threshold that lacks this type, else seed a new person.
/// Requires embeddings (ContractViolation otherwise). Deterministic.
GroupingResult greedy_decode(const Scene& scene, double tag_distance_threshold);

/// The type visiting order used by greedy_decode, breadth-first from type 0
/// over the skeleton tree for this type count.
std::vector<int> greedy_type_order(int keypoint_types);

}  // namespace posegroup

#endif  // POSEGROUP_GREEDY_HPP
