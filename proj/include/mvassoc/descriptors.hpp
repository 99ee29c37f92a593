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

// Feature vectors and the hand-crafted descriptors that stand in for learned
// extractors: zoom-out crops, color histograms, dense gradient descriptors,
// k-means codebooks and bag-of-visual-words encoding, plus the vector
// distances shared by all scorers.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvassoc/errors.hpp"
#include "mvassoc/scene.hpp"

namespace mvassoc {

enum class FeatureKind { kAppearance, kSurrounding, kVbow };

/// Finite, non-empty real vector tagged with what it describes.
class FeatureVector {
 public:
  FeatureVector(std::vector<double> values, FeatureKind kind)
      : values_(std::move(values)), kind_(kind) {
    if (values_.empty()) throw DimensionError("feature vector is empty");
    for (double v : values_) {
      if (!std::isfinite(v)) {
        throw InvariantError("feature vector has a non-finite component");
      }
    }
  }

  static FeatureVector from_floats(std::span<const float> values,
                                   FeatureKind kind) {
    return FeatureVector(std::vector<double>(values.begin(), values.end()),
                         kind);
  }

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  FeatureKind kind() const { return kind_; }

 private:
  std::vector<double> values_;
  FeatureKind kind_;
};

// ---------------------------------------------------------------------------
// Vector distances
// ---------------------------------------------------------------------------

inline constexpr double kChiSquareEpsilon = 1e-10;

namespace detail {
inline void require_same_length(std::size_t a, std::size_t b) {
  if (a != b) {
    throw DimensionError("vector lengths differ: " + std::to_string(a) +
                         " vs " + std::to_string(b));
  }
}
}  // namespace detail

inline double l2_distance(std::span<const double> a, std::span<const double> b) {
  detail::require_same_length(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline double l2_distance(const FeatureVector& a, const FeatureVector& b) {
  return l2_distance(a.values(), b.values());
}

/// 0.5 * sum (a_i - b_i)^2 / (a_i + b_i + eps) over non-negative histograms.
inline double chi_square_distance(std::span<const double> a,
                                  std::span<const double> b) {
  detail::require_same_length(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0.0 || b[i] < 0.0) {
      throw InvariantError("chi-square needs non-negative components");
    }
    const double d = a[i] - b[i];
    s += d * d / (a[i] + b[i] + kChiSquareEpsilon);
  }
  return 0.5 * s;
}

inline double chi_square_distance(const FeatureVector& a,
                                  const FeatureVector& b) {
  return chi_square_distance(a.values(), b.values());
}

inline double cosine_similarity(std::span<const double> a,
                                std::span<const double> b) {
  detail::require_same_length(a.size(), b.size());
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 1e-24 || nb <= 1e-24) {
    throw InvariantError("cosine similarity of a zero vector");
  }
  // sqrt(na * nb) rather than sqrt(na) * sqrt(nb): identical inputs give
  // exactly 1.
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

inline double cosine_similarity(const FeatureVector& a, const FeatureVector& b) {
  return cosine_similarity(a.values(), b.values());
}

// ---------------------------------------------------------------------------
// Zoom-out crop
// ---------------------------------------------------------------------------

inline constexpr double kDefaultZoomOutRatio = 2.0;

/// Crop rectangle clamped to [0, width] x [0, height].
struct CropRect {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  bool contains(const CropRect& o) const {
    return x1 <= o.x1 && y1 <= o.y1 && x2 >= o.x2 && y2 >= o.y2;
  }
  bool contains(double u, double v) const {
    return u >= x1 && u <= x2 && v >= y1 && v <= y2;
  }

  friend bool operator==(const CropRect&, const CropRect&) = default;
};

/// Scales the box about its center by `ratio`, then clamps to the image.
inline CropRect crop_with_zoom_out(const Box& box, double ratio, int width,
                                   int height) {
  if (!(ratio >= 1.0) || !std::isfinite(ratio)) {
    throw ConfigError("zoom-out ratio must be >= 1");
  }
  if (width <= 0 || height <= 0) throw ConfigError("image size must be positive");
  const double cx = 0.5 * (box.x1 + box.x2);
  const double cy = 0.5 * (box.y1 + box.y2);
  const double hw = 0.5 * box.width() * ratio;
  const double hh = 0.5 * box.height() * ratio;
  CropRect r{cx - hw, cy - hh, cx + hw, cy + hh};
  if (ratio == 1.0) r = {box.x1, box.y1, box.x2, box.y2};
  r.x1 = std::clamp(r.x1, 0.0, static_cast<double>(width));
  r.x2 = std::clamp(r.x2, 0.0, static_cast<double>(width));
  r.y1 = std::clamp(r.y1, 0.0, static_cast<double>(height));
  r.y2 = std::clamp(r.y2, 0.0, static_cast<double>(height));
  if (!(r.x1 < r.x2 && r.y1 < r.y2)) {
    throw InvariantError("crop lies entirely outside the image");
  }
  return r;
}

// ---------------------------------------------------------------------------
// Pixel descriptors
// ---------------------------------------------------------------------------

/// Interleaved 8-bit RGB pixels, row-major.
struct ImagePatch {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  ImagePatch() = default;
  ImagePatch(int w, int h)
      : width(w), height(h),
        rgb(static_cast<std::size_t>(std::max(w, 0)) * std::max(h, 0) * 3, 0) {}

  bool empty() const { return width <= 0 || height <= 0; }

  std::uint8_t& at(int x, int y, int c) {
    return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  double gray(int x, int y) const {
    return 0.299 * at(x, y, 0) + 0.587 * at(x, y, 1) + 0.114 * at(x, y, 2);
  }
};

/// Copies the pixels covered by `rect` (rounded outward to whole pixels).
inline ImagePatch crop_patch(const ImagePatch& image, const CropRect& rect) {
  const int x1 = std::clamp(static_cast<int>(std::floor(rect.x1)), 0, image.width);
  const int y1 = std::clamp(static_cast<int>(std::floor(rect.y1)), 0, image.height);
  const int x2 = std::clamp(static_cast<int>(std::ceil(rect.x2)), 0, image.width);
  const int y2 = std::clamp(static_cast<int>(std::ceil(rect.y2)), 0, image.height);
  ImagePatch out(std::max(0, x2 - x1), std::max(0, y2 - y1));
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = image.at(x1 + x, y1 + y, c);
  return out;
}

inline constexpr int kDefaultHistogramBins = 8;

/// Per-channel histograms concatenated (R, G, B), L1-normalized over the whole
/// vector so that it sums to 1; each channel block therefore sums to 1/3.
inline FeatureVector color_histogram_descriptor(
    const ImagePatch& patch, int bins_per_channel = kDefaultHistogramBins) {
  if (patch.empty()) throw InvariantError("empty image patch");
  if (bins_per_channel < 2 || bins_per_channel > 16) {
    throw ConfigError("bins_per_channel must lie in [2, 16]");
  }
  std::vector<double> hist(3 * static_cast<std::size_t>(bins_per_channel), 0.0);
  for (int y = 0; y < patch.height; ++y) {
    for (int x = 0; x < patch.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const int bin = patch.at(x, y, c) * bins_per_channel / 256;
        hist[static_cast<std::size_t>(c * bins_per_channel + bin)] += 1.0;
      }
    }
  }
  const double total = 3.0 * patch.width * patch.height;
  for (auto& h : hist) h /= total;
  return FeatureVector(std::move(hist), FeatureKind::kAppearance);
}

inline constexpr int kDefaultDenseGrid = 16;
inline constexpr int kOrientationBins = 8;

/// Gradient-orientation descriptors on a grid x grid partition of the patch.
/// Each cell yields an 8-bin magnitude-weighted orientation histogram,
/// L2-normalized; flat cells produce the zero vector. Patches smaller than the
/// grid use one cell per pixel.
inline std::vector<std::vector<double>> dense_grid_descriptors(
    const ImagePatch& patch, int grid = kDefaultDenseGrid) {
  if (patch.empty()) throw InvariantError("empty image patch");
  if (grid < 1) throw ConfigError("dense grid must be >= 1");
  const int gx = std::min(grid, patch.width);
  const int gy = std::min(grid, patch.height);
  std::vector<std::vector<double>> cells(
      static_cast<std::size_t>(gx) * gy, std::vector<double>(kOrientationBins, 0.0));
  for (int y = 0; y < patch.height; ++y) {
    for (int x = 0; x < patch.width; ++x) {
      const double dx = patch.gray(std::min(x + 1, patch.width - 1), y) -
                        patch.gray(std::max(x - 1, 0), y);
      const double dy = patch.gray(x, std::min(y + 1, patch.height - 1)) -
                        patch.gray(x, std::max(y - 1, 0));
      const double mag = std::hypot(dx, dy);
      if (mag == 0.0) continue;
      double ang = std::atan2(dy, dx);
      if (ang < 0.0) ang += 2.0 * std::numbers::pi;
      const int bin = std::min(
          kOrientationBins - 1,
          static_cast<int>(ang / (2.0 * std::numbers::pi) * kOrientationBins));
      const int cx = x * gx / patch.width;
      const int cy = y * gy / patch.height;
      cells[static_cast<std::size_t>(cy) * gx + cx][bin] += mag;
    }
  }
  for (auto& c : cells) {
    double n = 0.0;
    for (double v : c) n += v * v;
    n = std::sqrt(n);
    if (n > 0.0)
      for (double& v : c) v /= n;
  }
  return cells;
}

// ---------------------------------------------------------------------------
// Codebooks and bag of visual words
// ---------------------------------------------------------------------------

class Codebook {
 public:
  explicit Codebook(std::vector<std::vector<double>> centroids)
      : centroids_(std::move(centroids)) {
    if (centroids_.empty()) throw InvariantError("codebook needs k >= 1");
    const std::size_t d = centroids_.front().size();
    if (d == 0) throw DimensionError("codebook centroids are empty");
    for (const auto& c : centroids_) {
      detail::require_same_length(d, c.size());
      for (double v : c)
        if (!std::isfinite(v)) throw InvariantError("non-finite centroid");
    }
    for (std::size_t i = 0; i < centroids_.size(); ++i)
      for (std::size_t j = i + 1; j < centroids_.size(); ++j)
        if (l2_distance(centroids_[i], centroids_[j]) <= 1e-12)
          throw InvariantError("duplicate codebook centroids");
  }

  std::size_t k() const { return centroids_.size(); }
  std::size_t dim() const { return centroids_.front().size(); }
  const std::vector<std::vector<double>>& centroids() const { return centroids_; }

  /// Index of the closest centroid; ties go to the lower index.
  std::size_t nearest(std::span<const double> x) const {
    detail::require_same_length(dim(), x.size());
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < centroids_.size(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = x[j] - centroids_[i][j];
        s += d * d;
      }
      if (s < best_d) {
        best_d = s;
        best = i;
      }
    }
    return best;
  }

  friend bool operator==(const Codebook&, const Codebook&) = default;

 private:
  std::vector<std::vector<double>> centroids_;
};

struct KMeansResult {
  Codebook codebook;
  /// Sum of squared distances to the assigned centroid after each assignment
  /// step, starting with the k-means++ seeds.
  std::vector<double> objective;
  int iterations = 0;
};

inline constexpr int kDefaultKMeansIterations = 100;

/// Lloyd's algorithm from a seeded k-means++ initialization. Stops when the
/// assignment no longer changes or after `max_iters` updates. Empty clusters
/// keep their previous centroid.
inline KMeansResult kmeans_fit(std::span<const std::vector<double>> descriptors,
                               std::size_t k, std::uint64_t seed,
                               int max_iters = kDefaultKMeansIterations) {
  if (k == 0) throw ConfigError("k must be positive");
  if (descriptors.empty()) throw ConfigError("no descriptors to cluster");
  const std::size_t d = descriptors.front().size();
  for (const auto& x : descriptors) detail::require_same_length(d, x.size());

  auto sq = [](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
  };

  {
    std::vector<const std::vector<double>*> distinct;
    for (const auto& x : descriptors) {
      bool seen = false;
      for (const auto* y : distinct) {
        if (*y == x) {
          seen = true;
          break;
        }
      }
      if (!seen) distinct.push_back(&x);
      if (distinct.size() >= k) break;
    }
    if (distinct.size() < k) {
      throw ConfigError("k = " + std::to_string(k) + " exceeds the " +
                        std::to_string(distinct.size()) +
                        " distinct descriptors");
    }
  }

  std::mt19937_64 rng(seed);
  const std::size_t n = descriptors.size();
  std::vector<std::vector<double>> centroids;
  centroids.reserve(k);
  centroids.push_back(descriptors[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sq(descriptors[i], centroids[0]);
  while (centroids.size() < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = 0;
    double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    for (pick = 0; pick < n; ++pick) {
      if (d2[pick] <= 0.0) continue;
      if (u < d2[pick]) break;
      u -= d2[pick];
    }
    if (pick == n) {
      // Rounding left u past the end; take the last point with positive mass.
      pick = n - 1;
      while (d2[pick] <= 0.0) --pick;
    }
    centroids.push_back(descriptors[pick]);
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], sq(descriptors[i], centroids.back()));
  }

  auto assign = [&](std::vector<std::size_t>& labels) {
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double dist = sq(descriptors[i], centroids[c]);
        if (dist < best_d) {
          best_d = dist;
          best = c;
        }
      }
      labels[i] = best;
      obj += best_d;
    }
    return obj;
  };

  std::vector<std::size_t> labels(n), next(n);
  std::vector<double> objective{assign(labels)};
  int iter = 0;
  for (; iter < max_iters; ++iter) {
    std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[labels[i]];
      for (std::size_t j = 0; j < d; ++j) sums[labels[i]][j] += descriptors[i][j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < d; ++j)
        centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
    }
    objective.push_back(assign(next));
    if (next == labels) {
      ++iter;
      break;
    }
    labels.swap(next);
  }
  return {Codebook(std::move(centroids)), std::move(objective), iter};
}

inline Codebook kmeans_codebook(std::span<const std::vector<double>> descriptors,
                                std::size_t k, std::uint64_t seed,
                                int max_iters = kDefaultKMeansIterations) {
  return kmeans_fit(descriptors, k, seed, max_iters).codebook;
}

/// Hard-assignment histogram over the codebook, L1-normalized. An empty
/// descriptor set encodes to the uniform histogram.
inline FeatureVector vbow_encode(std::span<const std::vector<double>> descriptors,
                                 const Codebook& codebook) {
  const std::size_t k = codebook.k();
  std::vector<double> hist(k, 0.0);
  if (descriptors.empty()) {
    std::fill(hist.begin(), hist.end(), 1.0 / static_cast<double>(k));
    return FeatureVector(std::move(hist), FeatureKind::kVbow);
  }
  for (const auto& x : descriptors) hist[codebook.nearest(x)] += 1.0;
  for (auto& h : hist) h /= static_cast<double>(descriptors.size());
  return FeatureVector(std::move(hist), FeatureKind::kVbow);
}

}  // namespace mvassoc
