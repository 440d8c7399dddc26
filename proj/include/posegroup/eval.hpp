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

#ifndef POSEGROUP_EVAL_HPP
#define POSEGROUP_EVAL_HPP

#include <string>
#include <vector>

#include "posegroup/result.hpp"
#include "posegroup/scene.hpp"

namespace posegroup {

/// Precision-recall accumulation at one OKS threshold. precision/recall hold
/// one entry per detection in corpus score order; ap is the exact area under
/// the right-max interpolated envelope; final_recall is tp_total / gt_count.
struct ThresholdCurve {
  double threshold = 0.0;
  std::vector<double> precision;
  std::vector<double> recall;
  double ap = 0.0;
  double final_recall = 0.0;
};

struct EvalReport {
  double ap = 0.0;    // mean per-threshold AP over 0.50:0.05:0.95
  double ap50 = 0.0;  // AP at threshold 0.50
  double ap75 = 0.0;  // AP at threshold 0.75
  double ar = 0.0;    // mean final recall over thresholds
  double ar50 = 0.0;
  double ar75 = 0.0;
  int gt_count = 0;
  int detection_count = 0;
  std::vector<ThresholdCurve> curves;
};

/// Object keypoint similarity between one predicted instance and one ground
/// truth person. Prediction coordinates are normalized and converted to
/// pixels; gt keypoints and area are already in pixel units. Mean over
/// labeled gt keypoints of exp(-d^2 / (2*area*(2*sigma)^2)); a gt type with
/// no prediction contributes 0. Throws ContractViolation when the gt has no
/// labeled keypoints.
double oks(const PersonInstance& pred, const GroundTruthPerson& gt,
           const Skeleton& skeleton, int width, int height);

/// Corpus evaluation. Per image, predictions are matched greedily in score
/// order to the unmatched gt with the highest OKS (matches require OKS > 0,
/// and the matching is shared across thresholds). Unknown image ids, scenes
/// without ground truth behind a result, and duplicate image ids raise
/// ContractViolation. Zero ground-truth persons yields an all-zero report.
EvalReport evaluate(const std::vector<GroupingResult>& results,
                    const std::vector<Scene>& scenes);

std::string report_to_json(const EvalReport& report);
std::string report_to_text(const EvalReport& report);

}  // namespace posegroup

#endif  // POSEGROUP_EVAL_HPP
