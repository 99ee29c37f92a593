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

// Canonical data model: cameras, boxes, views, scenes and embeddings.

#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "mvassoc/errors.hpp"

namespace mvassoc {

/// Pinhole camera with a world-to-camera pose: x_cam = R * x_world + t.
struct CameraModel {
  int camera_id = 0;
  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  int width = 0;
  int height = 0;

  double fx() const { return K(0, 0); }
  double fy() const { return K(1, 1); }
  double cx() const { return K(0, 2); }
  double cy() const { return K(1, 2); }

  /// Camera center in world coordinates.
  Eigen::Vector3d center() const { return -R.transpose() * t; }

  double image_diagonal() const {
    return std::hypot(static_cast<double>(width), static_cast<double>(height));
  }

  friend bool operator==(const CameraModel& a, const CameraModel& b) {
    return a.camera_id == b.camera_id && a.K == b.K && a.R == b.R &&
           a.t == b.t && a.width == b.width && a.height == b.height;
  }
};

/// Axis-aligned box in continuous pixel coordinates, y growing downward.
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  Eigen::Vector2d center() const {
    return {0.5 * (x1 + x2), 0.5 * (y1 + y2)};
  }
  bool valid() const {
    return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
           std::isfinite(y2) && x1 < x2 && y1 < y2;
  }

  friend bool operator==(const Box&, const Box&) = default;
};

enum class BoxSource { kGroundTruth, kDetection };

struct InstanceBox {
  Box box;
  int class_id = 0;
  int instance_id = 0;
  BoxSource source = BoxSource::kGroundTruth;

  friend bool operator==(const InstanceBox&, const InstanceBox&) = default;
};

/// One camera image and its instances. Instance order is stable; distance
/// matrices index into it.
struct SceneView {
  CameraModel camera;
  std::optional<std::string> image_path;
  std::vector<InstanceBox> instances;

  friend bool operator==(const SceneView&, const SceneView&) = default;
};

enum class Difficulty { kEasy, kMedium, kHard, kSynthetic };

struct Scene {
  std::string scene_id;
  std::vector<SceneView> views;
  Difficulty difficulty = Difficulty::kSynthetic;

  const SceneView* find_view(int camera_id) const {
    for (const auto& v : views) {
      if (v.camera.camera_id == camera_id) return &v;
    }
    return nullptr;
  }

  std::size_t instance_count() const {
    std::size_t n = 0;
    for (const auto& v : views) n += v.instances.size();
    return n;
  }

  friend bool operator==(const Scene&, const Scene&) = default;
};

inline std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::kEasy: return "easy";
    case Difficulty::kMedium: return "medium";
    case Difficulty::kHard: return "hard";
    case Difficulty::kSynthetic: return "synthetic";
  }
  return "synthetic";
}

inline std::optional<Difficulty> parse_difficulty(std::string_view s) {
  if (s == "easy") return Difficulty::kEasy;
  if (s == "medium") return Difficulty::kMedium;
  if (s == "hard") return Difficulty::kHard;
  if (s == "synthetic") return Difficulty::kSynthetic;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

inline constexpr double kRotationTolerance = 1e-9;

inline void validate_camera(const CameraModel& cam) {
  const std::string who = "camera " + std::to_string(cam.camera_id);
  if (!cam.K.allFinite() || !cam.R.allFinite() || !cam.t.allFinite()) {
    throw InvariantError(who + ": non-finite calibration value");
  }
  if (cam.width <= 0 || cam.height <= 0) {
    throw InvariantError(who + ": image size must be positive");
  }
  const Eigen::Matrix3d gram = cam.R.transpose() * cam.R;
  if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() >=
      kRotationTolerance) {
    throw InvariantError(who + ": rotation is not orthonormal");
  }
  if (std::abs(cam.R.determinant() - 1.0) >= kRotationTolerance) {
    throw InvariantError(who + ": rotation determinant is not +1");
  }
  if (!(cam.fx() > 0.0) || !(cam.fy() > 0.0)) {
    throw InvariantError(who + ": focal lengths must be positive");
  }
  if (cam.cx() < 0.0 || cam.cx() > cam.width || cam.cy() < 0.0 ||
      cam.cy() > cam.height) {
    throw InvariantError(who + ": principal point outside the image");
  }
  if (cam.K(1, 0) != 0.0 || cam.K(2, 0) != 0.0 || cam.K(2, 1) != 0.0 ||
      cam.K(2, 2) != 1.0) {
    throw InvariantError(who + ": intrinsic matrix is not upper-triangular "
                               "with K[2][2] = 1");
  }
}

inline void validate_view(const SceneView& view) {
  validate_camera(view.camera);
  std::set<int> gt_ids;
  for (std::size_t i = 0; i < view.instances.size(); ++i) {
    const auto& inst = view.instances[i];
    if (!inst.box.valid()) {
      throw InvariantError("camera " + std::to_string(view.camera.camera_id) +
                           ", box " + std::to_string(i) + " (instance " +
                           std::to_string(inst.instance_id) +
                           "): requires x1 < x2 and y1 < y2");
    }
    if (inst.source == BoxSource::kGroundTruth &&
        !gt_ids.insert(inst.instance_id).second) {
      throw InvariantError("camera " + std::to_string(view.camera.camera_id) +
                           ": duplicate instance_id " +
                           std::to_string(inst.instance_id));
    }
  }
}

inline void validate_scene(const Scene& scene) {
  if (scene.views.size() < 2) {
    throw InvariantError("scene " + scene.scene_id +
                         ": at least 2 views are required");
  }
  std::set<int> cams;
  for (const auto& v : scene.views) {
    if (!cams.insert(v.camera.camera_id).second) {
      throw InvariantError("scene " + scene.scene_id + ": camera " +
                           std::to_string(v.camera.camera_id) +
                           " appears in more than one view");
    }
    validate_view(v);
  }
}

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

struct EmbeddingKey {
  int camera_id = 0;
  int instance_id = 0;

  friend auto operator<=>(const EmbeddingKey&, const EmbeddingKey&) = default;
};

struct EmbeddingEntry {
  std::vector<float> appearance;
  std::vector<float> surrounding;

  friend bool operator==(const EmbeddingEntry&, const EmbeddingEntry&) = default;
};

/// Appearance and surrounding vectors per (camera, instance).
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw InvariantError("embedding dim must be positive");
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  void insert(EmbeddingKey key, EmbeddingEntry entry) {
    if (dim_ == 0) throw InvariantError("embedding dim must be positive");
    if (entry.appearance.size() != dim_ || entry.surrounding.size() != dim_) {
      throw DimensionError("embedding for camera " +
                           std::to_string(key.camera_id) + ", instance " +
                           std::to_string(key.instance_id) +
                           " does not have length " + std::to_string(dim_));
    }
    auto finite = [](const std::vector<float>& v) {
      return std::all_of(v.begin(), v.end(),
                         [](float x) { return std::isfinite(x); });
    };
    if (!finite(entry.appearance) || !finite(entry.surrounding)) {
      throw InvariantError("embedding for camera " +
                           std::to_string(key.camera_id) + ", instance " +
                           std::to_string(key.instance_id) +
                           " has a non-finite component");
    }
    if (!entries_.emplace(key, std::move(entry)).second) {
      throw InvariantError("duplicate embedding for camera " +
                           std::to_string(key.camera_id) + ", instance " +
                           std::to_string(key.instance_id));
    }
  }

  const EmbeddingEntry* find(EmbeddingKey key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }

  const EmbeddingEntry& at(EmbeddingKey key) const {
    if (const auto* e = find(key)) return *e;
    throw MissingEmbeddingError("no embedding for camera " +
                                std::to_string(key.camera_id) + ", instance " +
                                std::to_string(key.instance_id));
  }

  const std::map<EmbeddingKey, EmbeddingEntry>& entries() const {
    return entries_;
  }

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  std::size_t dim_ = 0;
  std::map<EmbeddingKey, EmbeddingEntry> entries_;
};

/// Every key must name an instance of the scene.
inline void check_embeddings_cover(const EmbeddingTable& table,
                                   const Scene& scene) {
  for (const auto& [key, entry] : table.entries()) {
    const SceneView* view = scene.find_view(key.camera_id);
    const bool found =
        view && std::any_of(view->instances.begin(), view->instances.end(),
                            [&](const InstanceBox& b) {
                              return b.instance_id == key.instance_id;
                            });
    if (!found) {
      throw InvariantError("dangling embedding key: camera " +
                           std::to_string(key.camera_id) + ", instance " +
                           std::to_string(key.instance_id) +
                           " is not in scene " + scene.scene_id);
    }
  }
}

// ---------------------------------------------------------------------------
// Box overlap
// ---------------------------------------------------------------------------

inline double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

}  // namespace mvassoc
