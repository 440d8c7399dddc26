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

#include "posegroup/greedy.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "posegroup/errors.hpp"
#include "posegroup/graph.hpp"

namespace posegroup {

namespace {

struct OpenPerson {
  std::vector<int> member_ids;
  std::vector<InstanceKeypoint> keypoints;
  std::vector<bool> has_type;
  std::vector<double> tag_sum;  // running sum of member embeddings
  double confidence_sum = 0.0;
};

double tag_distance(const std::vector<double>& sum, int count,
                    const std::vector<double>& emb) {
  double d2 = 0.0;
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t i = 0; i < emb.size(); ++i) {
    const double diff = sum[i] * inv - emb[i];
    d2 += diff * diff;
  }
  return std::sqrt(d2);
}

}  // namespace

std::vector<int> greedy_type_order(int keypoint_types) {
  if (keypoint_types <= 0) {
    throw ContractViolation("greedy_type_order: keypoint_types must be positive");
  }
  const GraphTopology topo = make_topology(TopologyVariant::kTree, keypoint_types);
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(keypoint_types));
  for (const auto& e : topo.tree_edges) {
    adj[static_cast<std::size_t>(e.first)].push_back(e.second);
    adj[static_cast<std::size_t>(e.second)].push_back(e.first);
  }
  for (auto& nbrs : adj) std::sort(nbrs.begin(), nbrs.end());

  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(keypoint_types));
  std::vector<bool> seen(static_cast<std::size_t>(keypoint_types), false);
  std::deque<int> queue;
  queue.push_back(0);
  seen[0] = true;
  while (!queue.empty()) {
    const int t = queue.front();
    queue.pop_front();
    order.push_back(t);
    for (int n : adj[static_cast<std::size_t>(t)]) {
      if (!seen[static_cast<std::size_t>(n)]) {
        seen[static_cast<std::size_t>(n)] = true;
        queue.push_back(n);
      }
    }
  }
  // The skeleton tree is connected, so every type is reached.
  return order;
}

GroupingResult greedy_decode(const Scene& scene, double tag_distance_threshold) {
  if (!scene.has_embeddings) {
    throw ContractViolation("greedy_decode: scene has no embeddings");
  }
  if (!(tag_distance_threshold > 0.0)) {
    throw ContractViolation("greedy_decode: tag_distance_threshold must be positive");
  }

  GroupingResult result;
  result.image_id = scene.image_id;
  result.iterations_used = 0;
  if (scene.candidates.empty()) return result;

  const int j = scene.keypoint_types;
  std::vector<std::vector<const KeypointCandidate*>> by_type(
      static_cast<std::size_t>(j));
  for (const auto& c : scene.candidates) {
    by_type[static_cast<std::size_t>(c.type)].push_back(&c);
  }
  for (auto& group : by_type) {
    std::sort(group.begin(), group.end(),
              [](const KeypointCandidate* a, const KeypointCandidate* b) {
                if (a->confidence != b->confidence)
                  return a->confidence > b->confidence;
                return a->id < b->id;
              });
  }

  std::vector<OpenPerson> persons;
  const std::size_t dim = static_cast<std::size_t>(scene.embedding_dim);

  for (int type : greedy_type_order(j)) {
    for (const KeypointCandidate* cand : by_type[static_cast<std::size_t>(type)]) {
      int best = -1;
      double best_dist = std::numeric_limits<double>::infinity();
      for (std::size_t p = 0; p < persons.size(); ++p) {
        if (persons[p].has_type[static_cast<std::size_t>(type)]) continue;
        const double d =
            tag_distance(persons[p].tag_sum,
                         static_cast<int>(persons[p].member_ids.size()),
                         cand->embedding);
        if (d <= tag_distance_threshold && d < best_dist) {
          best_dist = d;
          best = static_cast<int>(p);
        }
      }
      if (best < 0) {
        OpenPerson fresh;
        fresh.has_type.assign(static_cast<std::size_t>(j), false);
        fresh.tag_sum.assign(dim, 0.0);
        persons.push_back(std::move(fresh));
        best = static_cast<int>(persons.size()) - 1;
      }
      OpenPerson& person = persons[static_cast<std::size_t>(best)];
      person.member_ids.push_back(cand->id);
      person.keypoints.push_back({cand->type, cand->x, cand->y, cand->confidence});
      person.has_type[static_cast<std::size_t>(type)] = true;
      for (std::size_t i = 0; i < dim; ++i) person.tag_sum[i] += cand->embedding[i];
      person.confidence_sum += cand->confidence;
    }
  }

  result.persons.reserve(persons.size());
  for (auto& p : persons) {
    PersonInstance inst;
    std::sort(p.member_ids.begin(), p.member_ids.end());
    inst.member_ids = std::move(p.member_ids);
    std::sort(p.keypoints.begin(), p.keypoints.end(),
              [](const InstanceKeypoint& a, const InstanceKeypoint& b) {
                return a.type < b.type;
              });
    inst.keypoints = std::move(p.keypoints);
    inst.score = p.confidence_sum / static_cast<double>(inst.member_ids.size());
    result.persons.push_back(std::move(inst));
  }
  return result;
}

}  // namespace posegroup
