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

#include "posegroup/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include <json.hpp>

#include "posegroup/errors.hpp"

namespace posegroup {

namespace {

constexpr int kThresholdCount = 10;

double threshold_at(int i) { return (50 + 5 * i) / 100.0; }

struct Detection {
  int image_id = 0;
  int index = 0;  // position within the image's result
  double score = 0.0;
  bool matched = false;
  double oks = 0.0;
};

/// Exact area under the right-max interpolated precision envelope.
double envelope_area(const std::vector<double>& precision,
                     const std::vector<double>& recall) {
  if (precision.empty()) return 0.0;
  std::vector<double> env(precision);
  for (int i = static_cast<int>(env.size()) - 2; i >= 0; --i) {
    env[static_cast<std::size_t>(i)] = std::max(
        env[static_cast<std::size_t>(i)], env[static_cast<std::size_t>(i) + 1]);
  }
  double area = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < env.size(); ++i) {
    area += (recall[i] - prev_recall) * env[i];
    prev_recall = recall[i];
  }
  return area;
}

}  // namespace

double oks(const PersonInstance& pred, const GroundTruthPerson& gt,
           const Skeleton& skeleton, int width, int height) {
  const std::size_t j = skeleton.size();
  if (gt.keypoints.size() != j) {
    throw ContractViolation("oks: gt keypoint count does not match skeleton");
  }
  if (gt.labeled_count() == 0) {
    throw ContractViolation("oks: gt person has no labeled keypoints");
  }
  if (!(gt.area > 0.0)) {
    throw ContractViolation("oks: gt person has nonpositive area");
  }

  std::vector<const InstanceKeypoint*> by_type(j, nullptr);
  for (const auto& kp : pred.keypoints) {
    if (kp.type >= 0 && static_cast<std::size_t>(kp.type) < j) {
      by_type[static_cast<std::size_t>(kp.type)] = &kp;
    }
  }

  double sum = 0.0;
  int labeled = 0;
  for (std::size_t t = 0; t < j; ++t) {
    const GtKeypoint& g = gt.keypoints[t];
    if (g.visibility == 0) continue;
    ++labeled;
    const InstanceKeypoint* p = by_type[t];
    if (p == nullptr) continue;  // missing prediction contributes 0
    const double dx = p->x * width - g.x;
    const double dy = p->y * height - g.y;
    const double d2 = dx * dx + dy * dy;
    const double s = skeleton[t].oks_sigma;
    const double denom = 2.0 * gt.area * (2.0 * s) * (2.0 * s);
    sum += std::exp(-d2 / denom);
  }
  return sum / static_cast<double>(labeled);
}

EvalReport evaluate(const std::vector<GroupingResult>& results,
                    const std::vector<Scene>& scenes) {
  std::map<int, const Scene*> scene_by_id;
  for (const auto& s : scenes) {
    if (!scene_by_id.emplace(s.image_id, &s).second) {
      throw ContractViolation("evaluate: duplicate scene image_id " +
                              std::to_string(s.image_id));
    }
  }

  int gt_count = 0;
  for (const auto& s : scenes) {
    gt_count += static_cast<int>(s.gt_persons.size());
  }

  std::vector<Detection> detections;
  std::map<int, bool> seen_result;
  for (const auto& r : results) {
    if (seen_result.count(r.image_id)) {
      throw ContractViolation("evaluate: duplicate result for image_id " +
                              std::to_string(r.image_id));
    }
    seen_result[r.image_id] = true;
    auto it = scene_by_id.find(r.image_id);
    if (it == scene_by_id.end()) {
      throw ContractViolation("evaluate: no scene for image_id " +
                              std::to_string(r.image_id));
    }
    const Scene& scene = *it->second;
    if (!scene.has_ground_truth()) {
      throw ContractViolation("evaluate: scene " + std::to_string(r.image_id) +
                              " has no ground truth");
    }

    // Greedy per-image matching: highest-scored prediction first, each takes
    // the unmatched gt with the best OKS. Shared across all thresholds.
    std::vector<int> order(r.persons.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double sa = r.persons[static_cast<std::size_t>(a)].score;
      const double sb = r.persons[static_cast<std::size_t>(b)].score;
      if (sa != sb) return sa > sb;
      return a < b;
    });

    const Skeleton skeleton = skeleton_for(scene.keypoint_types);
    std::vector<bool> gt_taken(scene.gt_persons.size(), false);
    for (int idx : order) {
      const PersonInstance& person = r.persons[static_cast<std::size_t>(idx)];
      Detection det;
      det.image_id = r.image_id;
      det.index = idx;
      det.score = person.score;
      double best = 0.0;
      int best_gt = -1;
      for (std::size_t g = 0; g < scene.gt_persons.size(); ++g) {
        if (gt_taken[g]) continue;
        const double v = oks(person, scene.gt_persons[g], skeleton,
                             scene.width, scene.height);
        if (v > best) {
          best = v;
          best_gt = static_cast<int>(g);
        }
      }
      if (best_gt >= 0) {
        gt_taken[static_cast<std::size_t>(best_gt)] = true;
        det.matched = true;
        det.oks = best;
      }
      detections.push_back(det);
    }
  }

  std::sort(detections.begin(), detections.end(),
            [](const Detection& a, const Detection& b) {
              if (a.score != b.score) return a.score > b.score;
              if (a.image_id != b.image_id) return a.image_id < b.image_id;
              return a.index < b.index;
            });

  EvalReport report;
  report.gt_count = gt_count;
  report.detection_count = static_cast<int>(detections.size());
  report.curves.resize(kThresholdCount);
  for (int i = 0; i < kThresholdCount; ++i) {
    report.curves[static_cast<std::size_t>(i)].threshold = threshold_at(i);
  }
  if (gt_count == 0) return report;

  const double inv_g = 1.0 / static_cast<double>(gt_count);
  double ap_sum = 0.0;
  double ar_sum = 0.0;
  for (int i = 0; i < kThresholdCount; ++i) {
    ThresholdCurve& curve = report.curves[static_cast<std::size_t>(i)];
    int tp = 0;
    int fp = 0;
    curve.precision.reserve(detections.size());
    curve.recall.reserve(detections.size());
    for (const Detection& det : detections) {
      if (det.matched && det.oks >= curve.threshold) {
        ++tp;
      } else {
        ++fp;
      }
      curve.precision.push_back(static_cast<double>(tp) /
                                static_cast<double>(tp + fp));
      curve.recall.push_back(static_cast<double>(tp) * inv_g);
    }
    curve.ap = envelope_area(curve.precision, curve.recall);
    curve.final_recall = curve.recall.empty() ? 0.0 : curve.recall.back();
    ap_sum += curve.ap;
    ar_sum += curve.final_recall;
    if (i == 0) {
      report.ap50 = curve.ap;
      report.ar50 = curve.final_recall;
    }
    if (i == 5) {
      report.ap75 = curve.ap;
      report.ar75 = curve.final_recall;
    }
  }
  report.ap = ap_sum / kThresholdCount;
  report.ar = ar_sum / kThresholdCount;
  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json doc;
  doc["ap"] = report.ap;
  doc["ap50"] = report.ap50;
  doc["ap75"] = report.ap75;
  doc["ar"] = report.ar;
  doc["ar50"] = report.ar50;
  doc["ar75"] = report.ar75;
  doc["gt_count"] = report.gt_count;
  doc["detection_count"] = report.detection_count;
  nlohmann::json curves = nlohmann::json::array();
  for (const auto& c : report.curves) {
    curves.push_back({{"threshold", c.threshold},
                      {"ap", c.ap},
                      {"recall", c.final_recall}});
  }
  doc["thresholds"] = curves;
  return doc.dump(2) + "\n";
}

std::string report_to_text(const EvalReport& report) {
  char line[128];
  std::string out;
  auto add = [&](const char* name, double value) {
    std::snprintf(line, sizeof(line), "%-6s %8.4f\n", name, value);
    out += line;
  };
  add("ap", report.ap);
  add("ap50", report.ap50);
  add("ap75", report.ap75);
  add("ar", report.ar);
  add("ar50", report.ar50);
  add("ar75", report.ar75);
  std::snprintf(line, sizeof(line), "gts %d, detections %d\n", report.gt_count,
                report.detection_count);
  out += line;
  out += "threshold       ap   recall\n";
  for (const auto& c : report.curves) {
    std::snprintf(line, sizeof(line), "%9.2f %8.4f %8.4f\n", c.threshold, c.ap,
                  c.final_recall);
    out += line;
  }
  return out;
}

}  // namespace posegroup
