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

#include "posegroup/coco_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "posegroup/errors.hpp"

namespace posegroup {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path);
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << content;
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

void sort_and_number_candidates(Scene& scene) {
  std::sort(scene.candidates.begin(), scene.candidates.end(),
            [](const KeypointCandidate& a, const KeypointCandidate& b) {
              if (a.type != b.type) return a.type < b.type;
              if (a.y != b.y) return a.y < b.y;
              return a.x < b.x;
            });
  for (std::size_t i = 0; i < scene.candidates.size(); ++i)
    scene.candidates[i].id = static_cast<int>(i);
}

}  // namespace

std::vector<Scene> load_coco(const std::string& path, const Skeleton& skeleton) {
  const json doc = parse_json(read_file(path));
  if (!doc.is_object() || !doc.contains("images") || !doc.contains("annotations"))
    throw SchemaError("COCO file must be an object with \"images\" and \"annotations\"");

  const int j = static_cast<int>(skeleton.size());
  std::vector<Scene> scenes;
  std::map<int, std::size_t> scene_by_image;

  for (const auto& img : doc["images"]) {
    if (!img.contains("id") || !img.contains("width") || !img.contains("height"))
      throw SchemaError("image entry missing id/width/height");
    Scene scene;
    scene.image_id = img["id"].get<int>();
    scene.width = img["width"].get<int>();
    scene.height = img["height"].get<int>();
    if (scene.width <= 0 || scene.height <= 0)
      throw SchemaError("image " + std::to_string(scene.image_id) + " has nonpositive size");
    scene.keypoint_types = j;
    scene.embedding_dim = 0;
    scene.has_embeddings = false;
    scene.gt_labeled = true;
    if (!scene_by_image.emplace(scene.image_id, scenes.size()).second)
      throw SchemaError("duplicate image id " + std::to_string(scene.image_id));
    scenes.push_back(std::move(scene));
  }

  for (const auto& ann : doc["annotations"]) {
    const std::string ann_id =
        ann.contains("id") ? ann["id"].dump() : std::string("<missing id>");
    if (!ann.contains("image_id") || !ann.contains("keypoints"))
      throw SchemaError("annotation " + ann_id + " missing image_id or keypoints");
    const auto it = scene_by_image.find(ann["image_id"].get<int>());
    if (it == scene_by_image.end())
      throw SchemaError("annotation " + ann_id + " references unknown image");
    Scene& scene = scenes[it->second];

    const auto& kps = ann["keypoints"];
    if (!kps.is_array() || static_cast<int>(kps.size()) != 3 * j)
      throw SchemaError("annotation " + ann_id + " keypoints length is " +
                        std::to_string(kps.size()) + ", expected " + std::to_string(3 * j));

    GroundTruthPerson person;
    person.person_id = ann.contains("id") ? ann["id"].get<int>()
                                          : static_cast<int>(scene.gt_persons.size());
    person.keypoints.resize(j);
    int visible = 0;
    for (int t = 0; t < j; ++t) {
      const double x = kps[3 * t].get<double>();
      const double y = kps[3 * t + 1].get<double>();
      const int v = kps[3 * t + 2].get<int>();
      if (v > 0) {
        person.keypoints[t] = {x, y, v};
        ++visible;
      }
    }
    if (visible == 0) continue;  // nothing observable, COCO keeps such records

    if (!ann.contains("area"))
      throw SchemaError("annotation " + ann_id + " missing area");
    person.area = ann["area"].get<double>();
    if (!(person.area > 0.0))
      throw SchemaError("annotation " + ann_id + " has nonpositive area");

    for (int t = 0; t < j; ++t) {
      const GtKeypoint& kp = person.keypoints[t];
      if (kp.visibility == 0) continue;
      KeypointCandidate c;
      c.type = t;
      c.x = clamp01(kp.x / scene.width);
      c.y = clamp01(kp.y / scene.height);
      c.confidence = 1.0;
      c.gt_person = person.person_id;
      scene.candidates.push_back(std::move(c));
    }
    scene.gt_persons.push_back(std::move(person));
  }

  for (auto& scene : scenes) {
    sort_and_number_candidates(scene);
    validate_scene(scene);
  }
  return scenes;
}

void save_coco_gt(const std::vector<Scene>& scenes, const std::string& path) {
  json images = json::array();
  json annotations = json::array();
  json categories = json::array();

  int j = 0;
  for (const auto& s : scenes) j = std::max(j, s.keypoint_types);
  json names = json::array();
  const Skeleton skeleton = skeleton_for(std::max(j, 1));
  for (const auto& t : skeleton) names.push_back(t.name);
  categories.push_back({{"id", 1},
                        {"name", "person"},
                        {"supercategory", "person"},
                        {"keypoints", names}});

  int next_ann_id = 1;
  for (const auto& scene : scenes) {
    images.push_back({{"id", scene.image_id},
                      {"width", scene.width},
                      {"height", scene.height}});
    for (const auto& p : scene.gt_persons) {
      json flat = json::array();
      for (const auto& kp : p.keypoints) {
        flat.push_back(kp.visibility > 0 ? kp.x : 0.0);
        flat.push_back(kp.visibility > 0 ? kp.y : 0.0);
        flat.push_back(kp.visibility);
      }
      annotations.push_back({{"id", next_ann_id++},
                             {"image_id", scene.image_id},
                             {"category_id", 1},
                             {"keypoints", flat},
                             {"num_keypoints", p.labeled_count()},
                             {"area", p.area},
                             {"iscrowd", 0}});
    }
  }

  const json doc = {
      {"images", images}, {"annotations", annotations}, {"categories", categories}};
  write_file(path, doc.dump(2) + "\n");
}

void save_results(const std::vector<GroupingResult>& results, int keypoint_types,
                  const std::string& path) {
  json records = json::array();
  for (const auto& result : results) {
    for (const auto& person : result.persons) {
      std::vector<double> flat(static_cast<std::size_t>(3 * keypoint_types), 0.0);
      for (const auto& kp : person.keypoints) {
        if (kp.type < 0 || kp.type >= keypoint_types)
          throw ContractViolation("save_results: keypoint type out of range");
        flat[3 * kp.type] = kp.x;
        flat[3 * kp.type + 1] = kp.y;
        flat[3 * kp.type + 2] = kp.confidence;
      }
      records.push_back({{"image_id", result.image_id},
                         {"category_id", 1},
                         {"keypoints", flat},
                         {"score", person.score}});
    }
  }
  write_file(path, records.dump() + "\n");
}

std::vector<GroupingResult> load_results(const std::string& path) {
  const json doc = parse_json(read_file(path));
  if (!doc.is_array()) throw SchemaError("results file must be a JSON array");

  std::vector<GroupingResult> results;
  std::map<int, std::size_t> by_image;
  for (const auto& rec : doc) {
    if (!rec.contains("image_id") || !rec.contains("keypoints") || !rec.contains("score"))
      throw SchemaError("result record missing image_id/keypoints/score");
    const auto& kps = rec["keypoints"];
    if (!kps.is_array() || kps.size() % 3 != 0)
      throw SchemaError("result keypoints length must be a multiple of 3");

    const int image_id = rec["image_id"].get<int>();
    auto it = by_image.find(image_id);
    if (it == by_image.end()) {
      GroupingResult r;
      r.image_id = image_id;
      it = by_image.emplace(image_id, results.size()).first;
      results.push_back(std::move(r));
    }

    PersonInstance person;
    person.score = rec["score"].get<double>();
    const int j = static_cast<int>(kps.size()) / 3;
    for (int t = 0; t < j; ++t) {
      const double c = kps[3 * t + 2].get<double>();
      if (c <= 0.0) continue;  // the 0-filled missing-type convention
      person.keypoints.push_back(
          {t, kps[3 * t].get<double>(), kps[3 * t + 1].get<double>(), c});
    }
    results[it->second].persons.push_back(std::move(person));
  }
  return results;
}

void save_scenes(const std::vector<Scene>& scenes, const std::string& path) {
  json scene_array = json::array();
  for (const auto& scene : scenes) {
    json cands = json::array();
    for (const auto& c : scene.candidates) {
      json jc = {{"id", c.id},          {"type", c.type},
                 {"x", c.x},            {"y", c.y},
                 {"confidence", c.confidence}, {"embedding", c.embedding}};
      if (c.gt_person) jc["gt_person"] = *c.gt_person;
      cands.push_back(std::move(jc));
    }
    json gts = json::array();
    for (const auto& p : scene.gt_persons) {
      json flat = json::array();
      for (const auto& kp : p.keypoints) {
        flat.push_back(kp.x);
        flat.push_back(kp.y);
        flat.push_back(kp.visibility);
      }
      gts.push_back(
          {{"person_id", p.person_id}, {"area", p.area}, {"keypoints", flat}});
    }
    scene_array.push_back({{"image_id", scene.image_id},
                           {"width", scene.width},
                           {"height", scene.height},
                           {"keypoint_types", scene.keypoint_types},
                           {"embedding_dim", scene.embedding_dim},
                           {"has_embeddings", scene.has_embeddings},
                           {"gt_labeled", scene.gt_labeled},
                           {"candidates", cands},
                           {"gt_persons", gts}});
  }
  const json doc = {
      {"format", "posegroup-scenes"}, {"version", 1}, {"scenes", scene_array}};
  write_file(path, doc.dump() + "\n");
}

std::vector<Scene> load_scenes(const std::string& path) {
  const json doc = parse_json(read_file(path));
  if (!doc.is_object() || doc.value("format", "") != "posegroup-scenes")
    throw SchemaError("not a posegroup scene file: " + path);
  if (doc.value("version", 0) != 1)
    throw SchemaError("unsupported scene file version");

  std::vector<Scene> scenes;
  for (const auto& js : doc["scenes"]) {
    Scene scene;
    scene.image_id = js["image_id"].get<int>();
    scene.width = js["width"].get<int>();
    scene.height = js["height"].get<int>();
    scene.keypoint_types = js["keypoint_types"].get<int>();
    scene.embedding_dim = js["embedding_dim"].get<int>();
    scene.has_embeddings = js["has_embeddings"].get<bool>();
    scene.gt_labeled = js["gt_labeled"].get<bool>();
    for (const auto& jc : js["candidates"]) {
      KeypointCandidate c;
      c.id = jc["id"].get<int>();
      c.type = jc["type"].get<int>();
      c.x = jc["x"].get<double>();
      c.y = jc["y"].get<double>();
      c.confidence = jc["confidence"].get<double>();
      c.embedding = jc["embedding"].get<std::vector<double>>();
      if (jc.contains("gt_person")) c.gt_person = jc["gt_person"].get<int>();
      scene.candidates.push_back(std::move(c));
    }
    for (const auto& jp : js["gt_persons"]) {
      GroundTruthPerson p;
      p.person_id = jp["person_id"].get<int>();
      p.area = jp["area"].get<double>();
      const auto& flat = jp["keypoints"];
      if (!flat.is_array() || static_cast<int>(flat.size()) != 3 * scene.keypoint_types)
        throw SchemaError("scene gt keypoints length mismatch");
      p.keypoints.resize(scene.keypoint_types);
      for (int t = 0; t < scene.keypoint_types; ++t)
        p.keypoints[t] = {flat[3 * t].get<double>(), flat[3 * t + 1].get<double>(),
                          flat[3 * t + 2].get<int>()};
      scene.gt_persons.push_back(std::move(p));
    }
    validate_scene(scene);
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

}  // namespace posegroup
