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

// Calibrated two-view geometry. Lens distortion is not modeled. The
// homography reference plane is the world plane z = 0 (the table top).

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "mvassoc/errors.hpp"
#include "mvassoc/scene.hpp"

namespace mvassoc {

inline constexpr double kMinDepth = 1e-9;
inline constexpr double kMinBaseline = 1e-9;
inline constexpr double kMaxPlaneCondition = 1e12;

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

inline Eigen::Vector2d project_point(const CameraModel& cam,
                                     const Eigen::Vector3d& world) {
  const Eigen::Vector3d pc = cam.R * world + cam.t;
  if (pc.z() <= kMinDepth) {
    throw GeometryError(GeometryFault::kBehindCamera,
                        "point is behind camera " +
                            std::to_string(cam.camera_id));
  }
  const Eigen::Vector3d h = cam.K * pc;
  return h.hnormalized();
}

/// Depth of a world point along the camera's optical axis.
inline double point_depth(const CameraModel& cam, const Eigen::Vector3d& world) {
  return (cam.R * world + cam.t).z();
}

/// Rank-2 fundamental matrix with unit Frobenius norm: a pixel x1 of view 1
/// maps to the epipolar line F * x1 of view 2.
class FundamentalMatrix {
 public:
  explicit FundamentalMatrix(const Eigen::Matrix3d& f) {
    const double n = f.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw InvariantError("fundamental matrix must be finite and nonzero");
    }
    f_ = f / n;
  }

  const Eigen::Matrix3d& matrix() const { return f_; }
  FundamentalMatrix transposed() const { return FundamentalMatrix(f_.transpose()); }

  /// Algebraic residual x2^T F x1.
  double residual(const Eigen::Vector2d& x1, const Eigen::Vector2d& x2) const {
    return x2.homogeneous().dot(f_ * x1.homogeneous());
  }

 private:
  Eigen::Matrix3d f_;
};

inline FundamentalMatrix fundamental_matrix(const CameraModel& cam1,
                                            const CameraModel& cam2) {
  const Eigen::Matrix3d r_rel = cam2.R * cam1.R.transpose();
  const Eigen::Vector3d t_rel = cam2.t - r_rel * cam1.t;
  if (t_rel.norm() <= kMinBaseline) {
    throw GeometryError(GeometryFault::kZeroBaseline,
                        "cameras " + std::to_string(cam1.camera_id) + " and " +
                            std::to_string(cam2.camera_id) +
                            " share a center; epipolar geometry is undefined");
  }
  const Eigen::Matrix3d essential = skew(t_rel) * r_rel;
  return FundamentalMatrix(cam2.K.inverse().transpose() * essential *
                           cam1.K.inverse());
}

/// Line a*u + b*v + c = 0 with a^2 + b^2 = 1.
class EpipolarLine {
 public:
  EpipolarLine(double a, double b, double c) {
    const double n = std::hypot(a, b);
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw GeometryError(GeometryFault::kEpipoleDegeneracy,
                          "line coefficients (a, b) are both zero");
    }
    a_ = a / n;
    b_ = b / n;
    c_ = c / n;
  }

  double a() const { return a_; }
  double b() const { return b_; }
  double c() const { return c_; }

 private:
  double a_, b_, c_;
};

inline EpipolarLine epipolar_line(const FundamentalMatrix& f,
                                  const Eigen::Vector2d& pixel) {
  const Eigen::Vector3d x = pixel.homogeneous();
  const Eigen::Vector3d l = f.matrix() * x;
  // At the epipole F*x vanishes up to rounding.
  if (std::hypot(l.x(), l.y()) <= 1e-15 * x.norm()) {
    throw GeometryError(GeometryFault::kEpipoleDegeneracy,
                        "pixel coincides with the epipole");
  }
  return {l.x(), l.y(), l.z()};
}

inline double point_line_distance(const EpipolarLine& line,
                                  const Eigen::Vector2d& pixel) {
  return std::abs(line.a() * pixel.x() + line.b() * pixel.y() + line.c());
}

/// Pixel-to-pixel map between two views induced by the world plane z = 0,
/// normalized so that H[2][2] = 1 when that entry is nonzero.
class PlaneHomography {
 public:
  explicit PlaneHomography(const Eigen::Matrix3d& h) : h_(h) {
    if (std::abs(h_(2, 2)) > 1e-12 * h_.norm()) h_ /= h_(2, 2);
  }

  const Eigen::Matrix3d& matrix() const { return h_; }

  Eigen::Vector2d transfer(const Eigen::Vector2d& pixel) const {
    return (h_ * pixel.homogeneous()).hnormalized();
  }

 private:
  Eigen::Matrix3d h_;
};

/// K * [r1 r2 t]: maps table-plane coordinates (x, y, 1) to pixels.
inline Eigen::Matrix3d plane_to_image(const CameraModel& cam) {
  Eigen::Matrix3d m;
  m.col(0) = cam.R.col(0);
  m.col(1) = cam.R.col(1);
  m.col(2) = cam.t;
  const Eigen::Matrix3d h = cam.K * m;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h);
  const auto& s = svd.singularValues();
  if (!(s(2) > 0.0) || s(0) / s(2) >= kMaxPlaneCondition) {
    throw GeometryError(GeometryFault::kDegeneratePlane,
                        "camera " + std::to_string(cam.camera_id) +
                            " sees the reference plane edge-on");
  }
  return h;
}

inline PlaneHomography plane_homography(const CameraModel& cam1,
                                        const CameraModel& cam2) {
  return PlaneHomography(plane_to_image(cam2) * plane_to_image(cam1).inverse());
}

/// Midpoint of the bottom edge (y2) of a box.
inline Eigen::Vector2d bottom_mid_anchor(const Box& box) {
  return {0.5 * (box.x1 + box.x2), box.y2};
}

inline Eigen::Vector2d box_center_anchor(const Box& box) { return box.center(); }

/// Viewing direction (optical axis) in world coordinates.
inline Eigen::Vector3d line_of_sight(const CameraModel& cam) {
  return cam.R.transpose() * Eigen::Vector3d::UnitZ();
}

/// Angle in degrees between the two cameras' lines of sight.
inline double camera_angle_difference(const CameraModel& cam1,
                                      const CameraModel& cam2) {
  const double c = std::clamp(
      line_of_sight(cam1).normalized().dot(line_of_sight(cam2).normalized()),
      -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

/// World-to-camera rotation for a camera at `eye` looking at `target`, with
/// image y pointing away from `up` (image rows grow downward).
inline Eigen::Matrix3d look_at_rotation(const Eigen::Vector3d& eye,
                                        const Eigen::Vector3d& target,
                                        const Eigen::Vector3d& up) {
  const Eigen::Vector3d z = (target - eye).normalized();
  Eigen::Vector3d x = z.cross(up);
  if (x.norm() < 1e-9) {
    // Looking along `up`; any perpendicular horizontal axis will do.
    x = z.cross(Eigen::Vector3d::UnitY());
  }
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  return r;
}

}  // namespace mvassoc
