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

// Joins association output with the scene's instance ids (the ground truth)
// and produces per-pair metrics and reports.

#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvassoc/association.hpp"
#include "mvassoc/association_io.hpp"
#include "mvassoc/geometry.hpp"
#include "mvassoc/metrics.hpp"
#include "mvassoc/scene.hpp"

namespace mvassoc {

struct EvalOptions {
  /// Population used to rescale distances before converting to confidences.
  Normalization normalization = Normalization::kGlobal;
  double bin_width = kDefaultBinWidth;
  ApMode ap_mode = ApMode::kPooled;
};

/// Adjacency of one associated view pair; the truth links equal instance ids.
inline PairAdjacency make_adjacency(const SceneView& view_a, const SceneView& view_b,
                                    const AssociationResult& result) {
  PairAdjacency adj;
  for (const auto& b : view_a.instances) adj.ids_a.insert(b.instance_id);
  for (const auto& b : view_b.instances) adj.ids_b.insert(b.instance_id);
  for (int id : adj.ids_a)
    if (adj.ids_b.contains(id)) adj.truth.emplace(id, id);
  for (const auto& m : result.matches) {
    adj.predicted.emplace(view_a.instances.at(m.index_a).instance_id,
                          view_b.instances.at(m.index_b).instance_id);
  }
  return adj;
}

namespace detail {

struct ResolvedPair {
  const SceneView* view_a = nullptr;
  const SceneView* view_b = nullptr;
  const PairAssociation* assoc = nullptr;
  Eigen::MatrixXd pre_scale;  // distances before the last normalization
};

inline ResolvedPair resolve_pair(const Scene& scene, const PairAssociation& p) {
  ResolvedPair r;
  r.view_a = scene.find_view(p.camera_a);
  r.view_b = scene.find_view(p.camera_b);
  if (!r.view_a || !r.view_b) {
    throw InvariantError("scene " + scene.scene_id + " has no camera pair (" +
                         std::to_string(p.camera_a) + ", " +
                         std::to_string(p.camera_b) + ")");
  }
  r.assoc = &p;
  const auto na = static_cast<int>(r.view_a->instances.size());
  const auto nb = static_cast<int>(r.view_b->instances.size());
  auto bad = [&](const std::string& what) {
    return InvariantError("scene " + scene.scene_id + ", pair (" +
                          std::to_string(p.camera_a) + ", " +
                          std::to_string(p.camera_b) + "): " + what);
  };
  std::vector<int> seen_a(na, 0), seen_b(nb, 0);
  for (const auto& m : p.result.matches) {
    if (m.index_a < 0 || m.index_a >= na || m.index_b < 0 || m.index_b >= nb)
      throw bad("match index out of range");
    ++seen_a[m.index_a];
    ++seen_b[m.index_b];
  }
  for (int i : p.result.unmatched_a) {
    if (i < 0 || i >= na) throw bad("unmatched index out of range");
    ++seen_a[i];
  }
  for (int j : p.result.unmatched_b) {
    if (j < 0 || j >= nb) throw bad("unmatched index out of range");
    ++seen_b[j];
  }
  for (int c : seen_a)
    if (c != 1) throw bad("matches and unmatched_a do not partition view A");
  for (int c : seen_b)
    if (c != 1) throw bad("matches and unmatched_b do not partition view B");
  const auto& d = p.distances;
  if (d.values.size() > 0 && (d.rows() != na || d.cols() != nb))
    throw bad("distance matrix shape does not match the views");
  r.pre_scale = d.values;
  if (d.scale && d.values.size() > 0) {
    const double range = d.scale->max - d.scale->min;
    r.pre_scale = range < 1e-12
                      ? Eigen::MatrixXd::Constant(d.rows(), d.cols(), d.scale->min)
                      : Eigen::MatrixXd((d.values.array() * range + d.scale->min).matrix());
  }
  return r;
}

}  // namespace detail

/// Per-pair metrics for every associated pair of every scene. Ranking metrics
/// use confidence = 1 - scaled distance, where global scaling pools the
/// extrema of all pairs passed in.
inline std::vector<PairMetrics> evaluate_pairs(
    std::span<const std::pair<const Scene*, const SceneAssociation*>> inputs,
    const EvalOptions& options = {}) {
  std::vector<detail::ResolvedPair> resolved;
  std::vector<std::string> scene_ids;
  for (const auto& [scene, sa] : inputs) {
    if (scene->scene_id != sa->scene_id) {
      throw InvariantError("association for scene " + sa->scene_id +
                           " was paired with scene " + scene->scene_id);
    }
    for (const auto& [key, p] : sa->pairs) {
      resolved.push_back(detail::resolve_pair(*scene, p));
      scene_ids.push_back(scene->scene_id);
    }
  }
  std::optional<ScaleInfo> pooled;
  if (options.normalization == Normalization::kGlobal) {
    std::vector<DistanceMatrix> mats;
    for (const auto& r : resolved) mats.emplace_back(r.pre_scale);
    pooled = pooled_extrema(mats);
  }
  std::vector<PairMetrics> out;
  out.reserve(resolved.size());
  for (std::size_t k = 0; k < resolved.size(); ++k) {
    const auto& r = resolved[k];
    PairMetrics pm;
    pm.scene_id = scene_ids[k];
    pm.camera_a = r.assoc->camera_a;
    pm.camera_b = r.assoc->camera_b;
    pm.angle_deg = camera_angle_difference(r.view_a->camera, r.view_b->camera);
    pm.fraction_correct =
        pair_fraction_correct(make_adjacency(*r.view_a, *r.view_b, r.assoc->result));
    pm.matches = r.assoc->result.matches.size();
    if (r.pre_scale.size() > 0) {
      const DistanceMatrix scaled =
          options.normalization == Normalization::kGlobal
              ? normalize_distances(DistanceMatrix(r.pre_scale), Normalization::kGlobal, pooled)
              : normalize_distances(DistanceMatrix(r.pre_scale), Normalization::kPerPair);
      for (Eigen::Index i = 0; i < scaled.rows(); ++i) {
        for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
          pm.scored.push_back(
              {confidence_from_distance(scaled(i, j)),
               r.view_a->instances[i].instance_id == r.view_b->instances[j].instance_id});
        }
      }
    }
    out.push_back(std::move(pm));
  }
  return out;
}

inline std::vector<PairMetrics> evaluate_scene(const Scene& scene,
                                               const SceneAssociation& sa,
                                               const EvalOptions& options = {}) {
  const std::pair<const Scene*, const SceneAssociation*> input{&scene, &sa};
  return evaluate_pairs(std::span(&input, 1), options);
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

namespace detail {
inline nlohmann::ordered_json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}
inline nlohmann::ordered_json ipaa_json(const std::vector<IpaaValue>& values) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& v : values) j[std::to_string(v.percent)] = v.value;
  return j;
}
}  // namespace detail

inline nlohmann::ordered_json report_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["pairs"] = r.pairs;
  j["scored_pairs"] = r.scored_pairs;
  j["positives"] = r.positives;
  j["ap"] = detail::optional_number(r.ap);
  j["fpr95"] = detail::optional_number(r.fpr95);
  j["ipaa"] = detail::ipaa_json(r.ipaa);
  auto bins = nlohmann::ordered_json::array();
  for (const auto& b : r.bins) {
    nlohmann::ordered_json bj;
    bj["angle_lo"] = b.lo;
    bj["angle_hi"] = b.hi;
    bj["pairs"] = b.pairs;
    bj["scored_pairs"] = b.scored_pairs;
    bj["positives"] = b.positives;
    bj["ap"] = detail::optional_number(b.ap);
    bj["fpr95"] = detail::optional_number(b.fpr95);
    bj["ipaa"] = detail::ipaa_json(b.ipaa);
    bins.push_back(std::move(bj));
  }
  j["angle_bins"] = std::move(bins);
  return j;
}

/// One row per angle bin followed by a summary row; empty cells mark metrics
/// that are undefined for the row.
inline std::string report_to_csv(const MetricsReport& r) {
  auto num = [](const std::optional<double>& v) {
    if (!v) return std::string();
    nlohmann::json j = *v;
    return j.dump();
  };
  auto ipaa_cells = [&](const std::vector<IpaaValue>& values) {
    std::string s;
    for (const auto& v : values) s += "," + num(v.value);
    return s;
  };
  std::string out = "row,angle_lo,angle_hi,pairs,scored_pairs,positives,ap,fpr95";
  for (int level : kIpaaLevels) out += ",ipaa" + std::to_string(level);
  out += "\n";
  for (const auto& b : r.bins) {
    out += "bin," + num(b.lo) + "," + num(b.hi) + "," + std::to_string(b.pairs) + "," +
           std::to_string(b.scored_pairs) + "," + std::to_string(b.positives) + "," +
           num(b.ap) + "," + num(b.fpr95) + ipaa_cells(b.ipaa) + "\n";
  }
  out += "summary,0,180," + std::to_string(r.pairs) + "," + std::to_string(r.scored_pairs) +
         "," + std::to_string(r.positives) + "," + num(r.ap) + "," + num(r.fpr95) +
         ipaa_cells(r.ipaa) + "\n";
  return out;
}

}  // namespace mvassoc
