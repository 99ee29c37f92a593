/*
 * Copyright 2026 The mvassoc Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Association output JSON:
//   { "scene_id": str,
//     "pairs": [ { "cameras": [a, b],
//                  "matches": [[i, j, distance]],
//                  "unmatched_a": [i], "unmatched_b": [j],
//                  "distances": [[...]],          // final cost matrix
//                  "scale": [min, max] | null } ] }
// "distances" and "scale" are optional on input; evaluation needs them for
// the ranking metrics.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "mvassoc/association.hpp"
#include "mvassoc/errors.hpp"
#include "mvassoc/scene_io.hpp"

namespace mvassoc {

struct SceneAssociation {
  std::string scene_id;
  std::map<ViewPairKey, PairAssociation> pairs;
};

inline nlohmann::ordered_json association_to_json(const SceneAssociation& sa) {
  nlohmann::ordered_json j;
  j["scene_id"] = sa.scene_id;
  auto pairs = nlohmann::ordered_json::array();
  for (const auto& [key, p] : sa.pairs) {
    nlohmann::ordered_json pj;
    pj["cameras"] = {p.camera_a, p.camera_b};
    auto matches = nlohmann::ordered_json::array();
    for (const auto& m : p.result.matches)
      matches.push_back({m.index_a, m.index_b, m.distance});
    pj["matches"] = std::move(matches);
    pj["unmatched_a"] = p.result.unmatched_a;
    pj["unmatched_b"] = p.result.unmatched_b;
    auto dist = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < p.distances.rows(); ++r) {
      auto row = nlohmann::ordered_json::array();
      for (Eigen::Index c = 0; c < p.distances.cols(); ++c)
        row.push_back(p.distances(r, c));
      dist.push_back(std::move(row));
    }
    pj["distances"] = std::move(dist);
    if (p.distances.scale) {
      pj["scale"] = {p.distances.scale->min, p.distances.scale->max};
    } else {
      pj["scale"] = nullptr;
    }
    pairs.push_back(std::move(pj));
  }
  j["pairs"] = std::move(pairs);
  return j;
}

namespace detail {
inline std::vector<int> as_index_list(const nlohmann::json& v,
                                      const std::string& where) {
  if (!v.is_array()) throw SchemaError(where + ": expected an array");
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(as_int(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}
}  // namespace detail

inline SceneAssociation association_from_json(const nlohmann::json& j) {
  using detail::require;
  SceneAssociation sa;
  const auto& sid = require(j, "scene_id", "association");
  if (!sid.is_string()) throw SchemaError("association.scene_id: expected a string");
  sa.scene_id = sid.get<std::string>();
  const auto& pairs = require(j, "pairs", "association " + sa.scene_id);
  if (!pairs.is_array()) throw SchemaError("association.pairs: expected an array");
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const std::string w = "association " + sa.scene_id + ".pairs[" + std::to_string(k) + "]";
    const auto& pj = pairs[k];
    PairAssociation p;
    const auto cams = detail::as_index_list(require(pj, "cameras", w), w + ".cameras");
    if (cams.size() != 2) throw SchemaError(w + ".cameras: expected two ids");
    p.camera_a = cams[0];
    p.camera_b = cams[1];
    const auto& matches = require(pj, "matches", w);
    if (!matches.is_array()) throw SchemaError(w + ".matches: expected an array");
    for (std::size_t m = 0; m < matches.size(); ++m) {
      const std::string mw = w + ".matches[" + std::to_string(m) + "]";
      const auto& mj = matches[m];
      if (!mj.is_array() || mj.size() != 3) throw SchemaError(mw + ": expected [i, j, d]");
      p.result.matches.push_back({detail::as_int(mj[0], mw), detail::as_int(mj[1], mw),
                                  detail::as_number(mj[2], mw)});
    }
    p.result.unmatched_a =
        detail::as_index_list(require(pj, "unmatched_a", w), w + ".unmatched_a");
    p.result.unmatched_b =
        detail::as_index_list(require(pj, "unmatched_b", w), w + ".unmatched_b");
    if (auto it = pj.find("distances"); it != pj.end()) {
      if (!it->is_array()) throw SchemaError(w + ".distances: expected an array");
      const auto rows = static_cast<Eigen::Index>(it->size());
      const Eigen::Index cols =
          rows == 0 ? 0 : static_cast<Eigen::Index>((*it)[0].size());
      Eigen::MatrixXd m(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = (*it)[static_cast<std::size_t>(r)];
        const auto vals = detail::as_numbers(row, static_cast<std::size_t>(cols),
                                             w + ".distances[" + std::to_string(r) + "]");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = vals[static_cast<std::size_t>(c)];
      }
      p.distances.values = std::move(m);
    }
    if (auto it = pj.find("scale"); it != pj.end() && !it->is_null()) {
      const auto s = detail::as_numbers(*it, 2, w + ".scale");
      p.distances.scale = ScaleInfo{s[0], s[1]};
    }
    const ViewPairKey key{std::min(p.camera_a, p.camera_b),
                          std::max(p.camera_a, p.camera_b)};
    if (!sa.pairs.emplace(key, std::move(p)).second) {
      throw SchemaError(w + ": duplicate camera pair");
    }
  }
  return sa;
}

inline void save_association(const SceneAssociation& sa,
                             const std::filesystem::path& path) {
  detail::write_text_file(path, association_to_json(sa).dump(2) + "\n");
}

inline SceneAssociation load_association(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path.string() + ": invalid JSON: " + e.what());
  }
  return association_from_json(j);
}

}  // namespace mvassoc
