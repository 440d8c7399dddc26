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

#ifndef POSEGROUP_COCO_IO_HPP
#define POSEGROUP_COCO_IO_HPP

#include <string>
#include <vector>

#include "posegroup/result.hpp"
#include "posegroup/scene.hpp"

namespace posegroup {

/// Reads COCO-style keypoint annotations. One Scene per entry in "images";
/// every annotation becomes a GroundTruthPerson, and its visible keypoints
/// (v > 0) additionally become candidates with confidence 1.0 and no
/// embedding (has_embeddings stays false so training refuses such data).
/// Coordinates are normalized by the image size.
///
/// Throws ParseError (with byte offset) on malformed JSON, SchemaError
/// (naming the annotation id where applicable) on structural problems, and
/// IoError if the file cannot be read.
std::vector<Scene> load_coco(const std::string& path, const Skeleton& skeleton);

/// Writes scenes' ground truth in the COCO keypoint annotation format
/// (pixel coordinates, category_id 1).
void save_coco_gt(const std::vector<Scene>& scenes, const std::string& path);

/// Writes grouping results as a JSON array of
/// {image_id, category_id, keypoints, score} records. The keypoints array is
/// a flat [x, y, c] x J list in normalized coordinates with missing types
/// 0-filled. An empty result list produces the literal "[]".
void save_results(const std::vector<GroupingResult>& results, int keypoint_types,
                  const std::string& path);

/// Reads a results file written by save_results. Member ids are not part of
/// the format, so the returned results carry keypoints and scores only.
std::vector<GroupingResult> load_results(const std::string& path);

/// Scene container round-trip in the tool's own schema (versioned JSON that
/// preserves embeddings and ground truth exactly).
void save_scenes(const std::vector<Scene>& scenes, const std::string& path);
std::vector<Scene> load_scenes(const std::string& path);

}  // namespace posegroup

#endif  // POSEGROUP_COCO_IO_HPP
