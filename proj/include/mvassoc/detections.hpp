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

#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "mvassoc/errors.hpp"
#include "mvassoc/hungarian.hpp"
#include "mvassoc/scene.hpp"

namespace mvassoc {

inline constexpr double kDefaultIouFloor = 0.5;

/// Transfers ground-truth identities onto detected boxes.
///
/// Detections and ground truth are matched by maximum total IoU. A matched
/// detection whose IoU reaches `iou_floor` inherits the ground-truth
/// instance_id; every other detection gets a fresh id counting down from
/// `next_fresh_id`, which is advanced past the ids handed out. Fresh ids are
/// negative so they never collide with ground-truth ids. Detections keep
/// their input order.
inline std::vector<InstanceBox> assign_detections_to_gt(
    std::span<const InstanceBox> detections,
    std::span<const InstanceBox> ground_truth, double iou_floor,
    int& next_fresh_id) {
  if (!(iou_floor > 0.0 && iou_floor < 1.0)) {
    throw ConfigError("iou_floor must lie in (0, 1)");
  }
  if (next_fresh_id >= 0) {
    throw ConfigError("fresh detection ids must be negative");
  }
  std::vector<InstanceBox> out(detections.begin(), detections.end());
  for (auto& d : out) d.source = BoxSource::kDetection;

  std::vector<char> matched(out.size(), 0);
  if (!detections.empty() && !ground_truth.empty()) {
    Eigen::MatrixXd overlap(detections.size(), ground_truth.size());
    for (std::size_t i = 0; i < detections.size(); ++i) {
      for (std::size_t j = 0; j < ground_truth.size(); ++j) {
        overlap(i, j) = iou(detections[i].box, ground_truth[j].box);
      }
    }
    const Eigen::MatrixXd cost = (1.0 - overlap.array()).matrix();
    for (const auto& [i, j] : kuhn_munkres_assign(cost)) {
      if (overlap(i, j) >= iou_floor) {
        out[i].instance_id = ground_truth[j].instance_id;
        matched[i] = 1;
      }
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!matched[i]) out[i].instance_id = next_fresh_id--;
  }
  return out;
}

inline std::vector<InstanceBox> assign_detections_to_gt(
    std::span<const InstanceBox> detections,
    std::span<const InstanceBox> ground_truth,
    double iou_floor = kDefaultIouFloor) {
  int fresh = -1;
  return assign_detections_to_gt(detections, ground_truth, iou_floor, fresh);
}

}  // namespace mvassoc
