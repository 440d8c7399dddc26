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

#ifndef POSEGROUP_RESULT_HPP
#define POSEGROUP_RESULT_HPP

#include <vector>

namespace posegroup {

/// One keypoint of a grouped person, normalized coordinates.
struct InstanceKeypoint {
  int type = 0;
  double x = 0.0;
  double y = 0.0;
  double confidence = 0.0;
};

/// One person instance produced by a grouper. At most one keypoint per type.
struct PersonInstance {
  std::vector<int> member_ids;           // candidate ids, ascending
  std::vector<InstanceKeypoint> keypoints;  // sorted by type
  double score = 0.0;                    // in [0, 1]
};

struct GroupingResult {
  int image_id = 0;
  std::vector<PersonInstance> persons;
  int iterations_used = 0;
};

}  // namespace posegroup

#endif  // POSEGROUP_RESULT_HPP
