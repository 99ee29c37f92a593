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

// Cross-view instance association: pairwise distance matrices from pluggable
// scorers, appearance/surrounding fusion, the epipolar soft penalty, and
// globally optimal thresholded assignment.
//
// Pipeline for one view pair:
//   build -> normalize -> [epipolar penalty -> re-normalize] -> KM -> threshold

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mvassoc/descriptors.hpp"
#include "mvassoc/errors.hpp"
#include "mvassoc/geometry.hpp"
#include "mvassoc/hungarian.hpp"
#include "mvassoc/parallel.hpp"
#include "mvassoc/scene.hpp"

namespace mvassoc {

struct ScaleInfo {
  double min = 0.0;
  double max = 0.0;

  friend bool operator==(const ScaleInfo&, const ScaleInfo&) = default;
};

/// Costs between the instances of view A (rows) and view B (cols).
struct DistanceMatrix {
  Eigen::MatrixXd values;
  /// Extrema used by the last normalization, if any.
  std::optional<ScaleInfo> scale;

  DistanceMatrix() = default;
  explicit DistanceMatrix(Eigen::MatrixXd v, std::optional<ScaleInfo> s = {})
      : values(std::move(v)), scale(s) {}

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  double operator()(Eigen::Index r, Eigen::Index c) const { return values(r, c); }
};

enum class ScorerMode {
  kAppearanceOnly,
  kAsnetFusion,
  kVbow,
  kHomography,
  kCustom,
};

inline std::string_view to_string(ScorerMode m) {
  switch (m) {
    case ScorerMode::kAppearanceOnly: return "appearance";
    case ScorerMode::kAsnetFusion: return "asnet";
    case ScorerMode::kVbow: return "vbow";
    case ScorerMode::kHomography: return "homography";
    case ScorerMode::kCustom: return "custom";
  }
  return "custom";
}

inline std::optional<ScorerMode> parse_scorer_mode(std::string_view s) {
  if (s == "appearance" || s == "appearance_only") return ScorerMode::kAppearanceOnly;
  if (s == "asnet" || s == "asnet_fusion") return ScorerMode::kAsnetFusion;
  if (s == "vbow") return ScorerMode::kVbow;
  if (s == "homography") return ScorerMode::kHomography;
  if (s == "custom") return ScorerMode::kCustom;
  return std::nullopt;
}

/// Inputs handed to a custom scorer for one candidate pair.
struct PairContext {
  const SceneView& view_a;
  std::size_t index_a;
  const SceneView& view_b;
  std::size_t index_b;
  const EmbeddingTable& embeddings;
};

using CustomScorer = std::function<double(const PairContext&)>;

enum class Normalization { kPerPair, kGlobal };

struct ScorerConfig {
  ScorerMode mode = ScorerMode::kAppearanceOnly;
  bool use_epipolar = false;
  double epipolar_weight = 1.0;
  double threshold = 0.5;
  double zoom_out_ratio = kDefaultZoomOutRatio;
  /// Use the raw cosine as the fusion weight instead of clamping it to [0, 1].
  bool raw_lambda = false;
  /// Per-pair min-max always maps a pair's smallest distance to 0, so a pair
  /// without any true correspondence still yields a match under any
  /// threshold. Global mode scales by extrema pooled over a population of
  /// pairs instead (associate_scene pools over the scene when unset).
  Normalization normalization = Normalization::kPerPair;
  /// Global mode: extrema of the raw matrices.
  std::optional<ScaleInfo> global_scale;
  /// Global mode with the epipolar penalty: extrema after the penalty.
  std::optional<ScaleInfo> penalized_scale;
  CustomScorer custom;

  void validate() const {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
      throw ConfigError("threshold must lie in [0, 1]");
    }
    if (!std::isfinite(epipolar_weight) || epipolar_weight < 0.0) {
      throw ConfigError("epipolar weight must be finite and >= 0");
    }
    if (!(zoom_out_ratio >= 1.0) || !std::isfinite(zoom_out_ratio)) {
      throw ConfigError("zoom-out ratio must be >= 1");
    }
    if (mode == ScorerMode::kCustom && !custom) {
      throw ConfigError("custom mode needs a scorer");
    }
  }
};

struct Match {
  int index_a = 0;
  int index_b = 0;
  double distance = 0.0;

  friend bool operator==(const Match&, const Match&) = default;
};

/// Accepted pairs plus the instances left unmatched on each side. Together
/// they partition both index ranges.
struct AssociationResult {
  std::vector<Match> matches;
  std::vector<int> unmatched_a;
  std::vector<int> unmatched_b;

  friend bool operator==(const AssociationResult&, const AssociationResult&) = default;
};

// ---------------------------------------------------------------------------
// Fusion
// ---------------------------------------------------------------------------

struct FusionDistance {
  double distance = 0.0;
  double lambda = 0.0;
};

/// d = (1 - lambda) * L2(app_a, app_b) + lambda * L2(sur_a, sur_b) where lambda
/// is the cosine similarity of the appearance vectors, clamped to [0, 1]
/// unless `raw_lambda` is set.
inline FusionDistance asnet_fusion_distance(std::span<const double> app_a,
                                            std::span<const double> sur_a,
                                            std::span<const double> app_b,
                                            std::span<const double> sur_b,
                                            bool raw_lambda = false) {
  detail::require_same_length(app_a.size(), app_b.size());
  detail::require_same_length(sur_a.size(), sur_b.size());
  double lambda = cosine_similarity(app_a, app_b);
  if (!raw_lambda) lambda = std::clamp(lambda, 0.0, 1.0);
  const double d_app = l2_distance(app_a, app_b);
  const double d_sur = l2_distance(sur_a, sur_b);
  return {(1.0 - lambda) * d_app + lambda * d_sur, lambda};
}

inline FusionDistance asnet_fusion_distance(const FeatureVector& app_a,
                                            const FeatureVector& sur_a,
                                            const FeatureVector& app_b,
                                            const FeatureVector& sur_b,
                                            bool raw_lambda = false) {
  return asnet_fusion_distance(app_a.values(), sur_a.values(), app_b.values(),
                               sur_b.values(), raw_lambda);
}

// ---------------------------------------------------------------------------
// Matrix construction
// ---------------------------------------------------------------------------

namespace detail {
inline std::vector<double> widen(const std::vector<float>& v) {
  return {v.begin(), v.end()};
}
}  // namespace detail

inline DistanceMatrix build_distance_matrix(const SceneView& view_a,
                                            const SceneView& view_b,
                                            const EmbeddingTable& embeddings,
                                            const ScorerConfig& config) {
  const auto rows = static_cast<Eigen::Index>(view_a.instances.size());
  const auto cols = static_cast<Eigen::Index>(view_b.instances.size());
  Eigen::MatrixXd m(rows, cols);

  if (config.mode == ScorerMode::kHomography) {
    if (rows == 0 || cols == 0) return DistanceMatrix(m);
    const PlaneHomography h = plane_homography(view_a.camera, view_b.camera);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const Eigen::Vector2d p = h.transfer(bottom_mid_anchor(view_a.instances[i].box));
      for (Eigen::Index j = 0; j < cols; ++j) {
        m(i, j) = (p - bottom_mid_anchor(view_b.instances[j].box)).norm();
      }
    }
    return DistanceMatrix(m);
  }

  if (config.mode == ScorerMode::kCustom) {
    if (!config.custom) throw ConfigError("custom mode needs a scorer");
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j)
        m(i, j) = config.custom(PairContext{view_a, static_cast<std::size_t>(i),
                                            view_b, static_cast<std::size_t>(j),
                                            embeddings});
    if (!m.allFinite() || (m.size() > 0 && m.minCoeff() < 0.0)) {
      throw InvariantError("custom scorer produced a negative or non-finite cost");
    }
    return DistanceMatrix(m);
  }

  auto lookup = [&](const SceneView& v, Eigen::Index idx) -> const EmbeddingEntry& {
    return embeddings.at({v.camera.camera_id, v.instances[idx].instance_id});
  };
  std::vector<std::vector<double>> app_b(cols), sur_b(cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const auto& e = lookup(view_b, j);
    app_b[j] = detail::widen(e.appearance);
    sur_b[j] = detail::widen(e.surrounding);
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& ea = lookup(view_a, i);
    const auto app_a = detail::widen(ea.appearance);
    const auto sur_a = detail::widen(ea.surrounding);
    for (Eigen::Index j = 0; j < cols; ++j) {
      switch (config.mode) {
        case ScorerMode::kAppearanceOnly:
          m(i, j) = l2_distance(app_a, app_b[j]);
          break;
        case ScorerMode::kAsnetFusion:
          m(i, j) = asnet_fusion_distance(app_a, sur_a, app_b[j], sur_b[j],
                                          config.raw_lambda)
                        .distance;
          break;
        case ScorerMode::kVbow:
          m(i, j) = chi_square_distance(app_a, app_b[j]);
          break;
        default:
          break;
      }
    }
  }
  if (config.raw_lambda && m.size() > 0 && m.minCoeff() < 0.0) {
    // A negative cosine can push the raw-lambda combination below zero.
    m = m.cwiseMax(0.0);
  }
  return DistanceMatrix(m);
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

/// Extrema over all values of a set of matrices; nullopt if all are empty.
inline std::optional<ScaleInfo> pooled_extrema(std::span<const DistanceMatrix> matrices) {
  std::optional<ScaleInfo> s;
  for (const auto& m : matrices) {
    if (m.values.size() == 0) continue;
    const double lo = m.values.minCoeff();
    const double hi = m.values.maxCoeff();
    if (!s) {
      s = ScaleInfo{lo, hi};
    } else {
      s->min = std::min(s->min, lo);
      s->max = std::max(s->max, hi);
    }
  }
  return s;
}

/// Affine map onto [0, 1]. Per-pair mode uses the matrix's own extrema; global
/// mode uses `stats` and clamps values that fall outside them. A range below
/// 1e-12 maps every value to 0.5.
inline DistanceMatrix normalize_distances(const DistanceMatrix& matrix,
                                          Normalization population,
                                          std::optional<ScaleInfo> stats = {}) {
  if (!matrix.values.allFinite()) throw InvariantError("distances must be finite");
  if (matrix.values.size() == 0) return DistanceMatrix(matrix.values);
  ScaleInfo s;
  if (population == Normalization::kPerPair) {
    s = {matrix.values.minCoeff(), matrix.values.maxCoeff()};
  } else {
    if (!stats) throw ConfigError("global normalization needs extrema");
    s = *stats;
  }
  const double range = s.max - s.min;
  Eigen::MatrixXd out(matrix.rows(), matrix.cols());
  if (range < 1e-12) {
    out.setConstant(0.5);
  } else {
    out = ((matrix.values.array() - s.min) / range).matrix();
    if (population == Normalization::kGlobal) out = out.cwiseMax(0.0).cwiseMin(1.0);
  }
  return DistanceMatrix(std::move(out), s);
}

// ---------------------------------------------------------------------------
// Epipolar soft constraint
// ---------------------------------------------------------------------------

/// Adds weight * d(center_j, epipolar line of center_i) / diagonal(B) to every
/// cell. The penalty never forbids a pair; it only raises its cost.
inline DistanceMatrix add_epipolar_penalty(const DistanceMatrix& matrix,
                                           const SceneView& view_a,
                                           const SceneView& view_b,
                                           double weight) {
  if (!std::isfinite(weight) || weight < 0.0) {
    throw ConfigError("epipolar weight must be finite and >= 0");
  }
  if (matrix.rows() != static_cast<Eigen::Index>(view_a.instances.size()) ||
      matrix.cols() != static_cast<Eigen::Index>(view_b.instances.size())) {
    throw DimensionError("distance matrix does not match the views");
  }
  if (matrix.values.size() > 0 &&
      (matrix.values.minCoeff() < 0.0 || matrix.values.maxCoeff() > 1.0)) {
    throw InvariantError("epipolar penalty expects distances normalized to [0, 1]");
  }
  DistanceMatrix out = matrix;
  if (weight == 0.0 || matrix.values.size() == 0) return out;

  const FundamentalMatrix f = fundamental_matrix(view_a.camera, view_b.camera);
  const double diag = view_b.camera.image_diagonal();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const Eigen::Vector2d ca = box_center_anchor(view_a.instances[i].box);
    std::optional<EpipolarLine> line;
    try {
      line = epipolar_line(f, ca);
    } catch (const GeometryError& e) {
      if (e.fault() != GeometryFault::kEpipoleDegeneracy) throw;
    }
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      // A center sitting on the epipole is consistent with every pixel.
      const double d =
          line ? point_line_distance(*line, box_center_anchor(view_b.instances[j].box))
               : 0.0;
      out.values(i, j) += weight * d / diag;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Assignment
// ---------------------------------------------------------------------------

inline Assignment kuhn_munkres_assign(const DistanceMatrix& matrix) {
  return kuhn_munkres_assign(matrix.values);
}

/// Keeps assigned pairs with distance <= threshold; everything else is
/// reported unmatched.
inline AssociationResult threshold_filter(const Assignment& assignment,
                                          const DistanceMatrix& matrix,
                                          double threshold) {
  AssociationResult r;
  std::vector<char> used_a(static_cast<std::size_t>(matrix.rows()), 0);
  std::vector<char> used_b(static_cast<std::size_t>(matrix.cols()), 0);
  for (const auto& [i, j] : assignment) {
    const double d = matrix(i, j);
    if (d <= threshold) {
      r.matches.push_back({i, j, d});
      used_a[i] = 1;
      used_b[j] = 1;
    }
  }
  for (int i = 0; i < static_cast<int>(used_a.size()); ++i)
    if (!used_a[i]) r.unmatched_a.push_back(i);
  for (int j = 0; j < static_cast<int>(used_b.size()); ++j)
    if (!used_b[j]) r.unmatched_b.push_back(j);
  return r;
}

/// Association of one view pair together with the final cost matrix the
/// assignment was solved on.
struct PairAssociation {
  int camera_a = 0;
  int camera_b = 0;
  AssociationResult result;
  DistanceMatrix distances;
};

namespace detail {

// A zero-weight penalty is skipped entirely, second normalization included.
inline bool penalizes(const ScorerConfig& c) {
  return c.use_epipolar && c.epipolar_weight > 0.0;
}

/// Normalized costs, with the epipolar penalty added when enabled but before
/// the second normalization.
inline DistanceMatrix penalized_costs(const DistanceMatrix& raw, const SceneView& view_a,
                                      const SceneView& view_b, const ScorerConfig& config) {
  DistanceMatrix m = config.normalization == Normalization::kGlobal
                         ? normalize_distances(raw, Normalization::kGlobal, config.global_scale)
                         : normalize_distances(raw, Normalization::kPerPair);
  if (penalizes(config)) m = add_epipolar_penalty(m, view_a, view_b, config.epipolar_weight);
  return m;
}

inline PairAssociation finish_pair(DistanceMatrix m, const SceneView& view_a,
                                   const SceneView& view_b, const ScorerConfig& config) {
  if (penalizes(config)) {
    m = config.normalization == Normalization::kGlobal
            ? normalize_distances(m, Normalization::kGlobal, config.penalized_scale)
            : normalize_distances(m, Normalization::kPerPair);
  }
  PairAssociation out;
  out.camera_a = view_a.camera.camera_id;
  out.camera_b = view_b.camera.camera_id;
  out.result = threshold_filter(kuhn_munkres_assign(m), m, config.threshold);
  out.distances = std::move(m);
  return out;
}

}  // namespace detail

/// build -> normalize -> [epipolar penalty -> normalize] -> assign -> threshold.
inline PairAssociation associate_view_pair(const SceneView& view_a,
                                           const SceneView& view_b,
                                           const EmbeddingTable& embeddings,
                                           const ScorerConfig& config) {
  config.validate();
  if (config.normalization == Normalization::kGlobal &&
      (!config.global_scale || (detail::penalizes(config) && !config.penalized_scale))) {
    throw ConfigError("global normalization of a single pair needs supplied extrema");
  }
  const DistanceMatrix raw = build_distance_matrix(view_a, view_b, embeddings, config);
  return detail::finish_pair(detail::penalized_costs(raw, view_a, view_b, config), view_a,
                             view_b, config);
}

using ViewPairKey = std::pair<int, int>;

/// Associates every unordered view pair; keys are (lower camera id, higher
/// camera id) and view A of each result is the lower camera.
inline std::map<ViewPairKey, PairAssociation> associate_scene(
    const Scene& scene, const EmbeddingTable& embeddings,
    const ScorerConfig& config, int jobs = 1) {
  if (scene.views.size() < 2) {
    throw InvariantError("scene " + scene.scene_id + " has fewer than 2 views");
  }
  config.validate();
  std::vector<const SceneView*> views;
  for (const auto& v : scene.views) views.push_back(&v);
  std::sort(views.begin(), views.end(), [](const SceneView* a, const SceneView* b) {
    return a->camera.camera_id < b->camera.camera_id;
  });
  std::vector<std::pair<const SceneView*, const SceneView*>> pairs;
  for (std::size_t i = 0; i < views.size(); ++i)
    for (std::size_t j = i + 1; j < views.size(); ++j)
      pairs.emplace_back(views[i], views[j]);

  std::vector<PairAssociation> results(pairs.size());
  if (config.normalization == Normalization::kPerPair) {
    parallel_for(pairs.size(), jobs, [&](std::size_t k) {
      results[k] = associate_view_pair(*pairs[k].first, *pairs[k].second, embeddings, config);
    });
  } else {
    // Pool whatever extrema the caller did not supply over this scene's pairs.
    ScorerConfig cfg = config;
    std::vector<DistanceMatrix> stage(pairs.size());
    parallel_for(pairs.size(), jobs, [&](std::size_t k) {
      stage[k] = build_distance_matrix(*pairs[k].first, *pairs[k].second, embeddings, cfg);
    });
    if (!cfg.global_scale) cfg.global_scale = pooled_extrema(stage);
    if (!cfg.global_scale) cfg.global_scale = ScaleInfo{0.0, 0.0};
    parallel_for(pairs.size(), jobs, [&](std::size_t k) {
      stage[k] = detail::penalized_costs(stage[k], *pairs[k].first, *pairs[k].second, cfg);
    });
    if (detail::penalizes(cfg) && !cfg.penalized_scale) {
      cfg.penalized_scale = pooled_extrema(stage);
      if (!cfg.penalized_scale) cfg.penalized_scale = ScaleInfo{0.0, 0.0};
    }
    parallel_for(pairs.size(), jobs, [&](std::size_t k) {
      results[k] = detail::finish_pair(std::move(stage[k]), *pairs[k].first,
                                       *pairs[k].second, cfg);
    });
  }
  std::map<ViewPairKey, PairAssociation> out;
  for (auto& r : results) {
    const ViewPairKey key{r.camera_a, r.camera_b};
    out.emplace(key, std::move(r));
  }
  return out;
}

}  // namespace mvassoc
