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

// Independent reference implementations used by the tests. Deliberately naive:
// enumeration instead of optimization, homogeneous 4x4 matrices instead of
// the library's direct formulas.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "mvassoc/metrics.hpp"
#include "mvassoc/scene.hpp"

namespace mvassoc::oracle {

/// Minimum total cost over all injections of the smaller side into the larger.
inline double brute_force_assignment(const Eigen::MatrixXd& c) {
  const bool transpose = c.rows() > c.cols();
  const Eigen::MatrixXd m = transpose ? Eigen::MatrixXd(c.transpose()) : c;
  const int r = static_cast<int>(m.rows()), n = static_cast<int>(m.cols());
  if (r == 0) return 0.0;
  std::vector<int> cols(n);
  std::iota(cols.begin(), cols.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  // Every permutation's first r entries enumerates every injection (with
  // repeats, which is harmless for a minimum).
  // Costs are summed in the original row order so that equal assignments
  // produce bit-identical totals.
  std::vector<std::pair<int, int>> cells(static_cast<std::size_t>(r));
  do {
    for (int i = 0; i < r; ++i)
      cells[static_cast<std::size_t>(i)] = transpose ? std::pair{cols[i], i} : std::pair{i, cols[i]};
    std::sort(cells.begin(), cells.end());
    double s = 0.0;
    for (const auto& [row, col] : cells) s += c(row, col);
    best = std::min(best, s);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

/// Pinhole projection through a 3x4 matrix built from homogeneous 4x4 blocks.
inline Eigen::Vector2d project_homogeneous(const CameraModel& cam, const Eigen::Vector3d& x) {
  Eigen::Matrix4d extr = Eigen::Matrix4d::Identity();
  extr.topLeftCorner<3, 3>() = cam.R;
  extr.topRightCorner<3, 1>() = cam.t;
  Eigen::Matrix<double, 3, 4> proj = Eigen::Matrix<double, 3, 4>::Zero();
  proj.leftCols<3>() = cam.K;
  const Eigen::Vector3d p = proj * extr * Eigen::Vector4d(x.x(), x.y(), x.z(), 1.0);
  return {p.x() / p.z(), p.y() / p.z()};
}

/// Angle between the cameras' optical axes computed via quaternions.
inline double quaternion_axis_angle_deg(const CameraModel& a, const CameraModel& b) {
  const Eigen::Quaterniond qa(Eigen::Matrix3d(a.R.transpose()));
  const Eigen::Quaterniond qb(Eigen::Matrix3d(b.R.transpose()));
  const Eigen::Vector3d za = qa * Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d zb = qb * Eigen::Vector3d::UnitZ();
  return std::atan2(za.cross(zb).norm(), za.dot(zb)) * 180.0 / 3.14159265358979323846;
}

/// FPR at the first distinct confidence threshold whose recall reaches the
/// target, found by scanning every candidate threshold from the top.
inline double exhaustive_fpr(const std::vector<ScoredPair>& pairs, double target) {
  std::vector<double> thresholds;
  for (const auto& p : pairs) thresholds.push_back(p.confidence);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  double pos = 0, neg = 0;
  for (const auto& p : pairs) (p.is_positive ? pos : neg) += 1;
  for (double t : thresholds) {
    double tp = 0, fp = 0;
    for (const auto& p : pairs)
      if (p.confidence >= t) (p.is_positive ? tp : fp) += 1;
    if (tp / pos >= target) return fp / neg;
  }
  return 1.0;
}

/// Fraction correct by comparing rows of dense 0/1 adjacency matrices over
/// the universe (rows: view A ids then view B ids).
inline double matrix_fraction_correct(const PairAdjacency& adj) {
  const auto universe = adj.universe();
  std::vector<int> u(universe.begin(), universe.end());
  if (u.empty()) return 1.0;
  const std::size_t n = u.size();
  auto index = [&](int id) {
    return static_cast<std::size_t>(std::lower_bound(u.begin(), u.end(), id) - u.begin());
  };
  // Cell (i, j): object i of view A linked to object j of view B.
  auto dense = [&](const std::map<int, int>& m) {
    std::vector<std::vector<int>> d(n, std::vector<int>(n, 0));
    for (const auto& [a, b] : m) d[index(a)][index(b)] = 1;
    return d;
  };
  const auto p = dense(adj.predicted), t = dense(adj.truth);
  std::size_t correct = 0;
  for (std::size_t k = 0; k < n; ++k) {
    bool ok = true;
    if (adj.ids_a.contains(u[k]))
      for (std::size_t j = 0; j < n; ++j) ok = ok && p[k][j] == t[k][j];
    if (adj.ids_b.contains(u[k]))
      for (std::size_t i = 0; i < n; ++i) ok = ok && p[i][k] == t[i][k];
    correct += ok;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

/// A camera at `eye` looking at `target` with a generic intrinsic matrix.
inline CameraModel camera_looking_at(int id, const Eigen::Vector3d& eye,
                                     const Eigen::Vector3d& target,
                                     double f = 1000.0) {
  CameraModel c;
  c.camera_id = id;
  c.K << f, 0, 960, 0, f, 540, 0, 0, 1;
  const Eigen::Vector3d z = (target - eye).normalized();
  Eigen::Vector3d x = z.cross(Eigen::Vector3d::UnitZ());
  if (x.norm() < 1e-9) x = z.cross(Eigen::Vector3d::UnitY());
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  c.R.row(0) = x.transpose();
  c.R.row(1) = y.transpose();
  c.R.row(2) = z.transpose();
  c.t = -c.R * eye;
  c.width = 1920;
  c.height = 1080;
  return c;
}

/// Fresh scratch directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("mvassoc-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace mvassoc::oracle
