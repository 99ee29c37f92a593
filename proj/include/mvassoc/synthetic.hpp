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

// Deterministic tabletop simulator: random objects on a table, a camera rig
// on the upper hemisphere with one fixed overhead camera, projected box
// annotations, and oracle embeddings that stand in for learned features.
//
// World frame: table top is z = 0, z points up, meters. Nothing is rendered;
// occlusion is a per-view dropout and appearance lives only in embeddings.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include "mvassoc/association.hpp"
#include "mvassoc/descriptors.hpp"
#include "mvassoc/errors.hpp"
#include "mvassoc/geometry.hpp"
#include "mvassoc/scene.hpp"
#include "mvassoc/scene_io.hpp"

namespace mvassoc {

enum class OracleMode {
  /// One random unit vector per object, shared across views.
  kUniqueInstance,
  /// One vector per identical group: identical objects look the same.
  kClassLevel,
  /// Bag-of-visual-words histograms of simulated local descriptors.
  kLocalDescriptors,
};

inline std::string_view to_string(OracleMode m) {
  switch (m) {
    case OracleMode::kUniqueInstance: return "unique";
    case OracleMode::kClassLevel: return "class";
    case OracleMode::kLocalDescriptors: return "vbow";
  }
  return "unique";
}

inline std::optional<OracleMode> parse_oracle_mode(std::string_view s) {
  if (s == "unique" || s == "unique_instance") return OracleMode::kUniqueInstance;
  if (s == "class" || s == "class_level") return OracleMode::kClassLevel;
  if (s == "vbow" || s == "local_descriptors") return OracleMode::kLocalDescriptors;
  return std::nullopt;
}

/// Where a projected box is anchored.
enum class BoxAnchor {
  /// Box centered on the projection of the object's 3D center, so box
  /// centers are exact cross-view correspondences.
  kCenter,
  /// Bottom-edge midpoint on the projection of the object's base point, so
  /// bottom-mid anchors are exact correspondences for objects on the table.
  kBase,
};

inline std::string_view to_string(BoxAnchor a) {
  return a == BoxAnchor::kCenter ? "center" : "base";
}

inline std::optional<BoxAnchor> parse_box_anchor(std::string_view s) {
  if (s == "center") return BoxAnchor::kCenter;
  if (s == "base") return BoxAnchor::kBase;
  return std::nullopt;
}

struct SimConfig {
  std::uint64_t seed = 0;
  int n_objects_min = 6;
  int n_objects_max = 73;
  int n_cameras = 9;
  double identical_fraction = 0.2;
  double elevated_fraction = 0.1;
  /// Probability that a visible object is dropped from a view. Arbitrary
  /// default; there is no measured occlusion statistic to calibrate it.
  double full_occlusion_rate = 0.1;
  double embedding_noise_sigma = 0.0;
  /// Side of the square table centered at the origin.
  double table_extent = 1.2;

  OracleMode embedding_mode = OracleMode::kUniqueInstance;
  int embedding_dim = 128;
  double surround_ratio = kDefaultZoomOutRatio;
  BoxAnchor box_anchor = BoxAnchor::kCenter;

  int image_width = 1920;
  int image_height = 1080;
  double camera_radius_min = 0.5;
  double camera_radius_max = 1.2;
  double elevation_min_deg = 10.0;
  double elevation_max_deg = 90.0;

  void validate() const {
    auto fraction = [](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
    };
    fraction(identical_fraction, "identical_fraction");
    fraction(elevated_fraction, "elevated_fraction");
    fraction(full_occlusion_rate, "full_occlusion_rate");
    if (n_objects_min < 1 || n_objects_max < n_objects_min)
      throw ConfigError("object count range must be non-empty and positive");
    if (n_cameras < 2) throw ConfigError("at least 2 cameras are required");
    if (!(embedding_noise_sigma >= 0.0) || !std::isfinite(embedding_noise_sigma))
      throw ConfigError("embedding noise sigma must be >= 0");
    if (!(table_extent > 0.1)) throw ConfigError("table extent must exceed 0.1 m");
    if (embedding_dim < 1) throw ConfigError("embedding dim must be positive");
    if (!(surround_ratio >= 1.0)) throw ConfigError("surround ratio must be >= 1");
    if (image_width < 16 || image_height < 16) throw ConfigError("image too small");
    if (!(camera_radius_min > 0.0) || camera_radius_max < camera_radius_min)
      throw ConfigError("camera radius range must be non-empty and positive");
    if (!(elevation_min_deg > 0.0) || elevation_max_deg > 90.0 ||
        elevation_max_deg < elevation_min_deg)
      throw ConfigError("elevation range must lie in (0, 90] degrees");
  }
};

struct SyntheticObject {
  int object_id = 0;
  int class_id = 0;
  /// Center of the object's base; z > 0 means it rests on something.
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  /// Width, depth and height in meters.
  Eigen::Vector3d footprint = Eigen::Vector3d::Ones();
  double yaw = 0.0;
  int identical_group = 0;

  Eigen::Vector3d center() const {
    return position + Eigen::Vector3d(0.0, 0.0, 0.5 * footprint.z());
  }

  std::array<Eigen::Vector3d, 8> corners() const {
    std::array<Eigen::Vector3d, 8> out;
    const double c = std::cos(yaw), s = std::sin(yaw);
    int k = 0;
    for (double dz : {0.0, 1.0})
      for (double dx : {-0.5, 0.5})
        for (double dy : {-0.5, 0.5}) {
          const double lx = dx * footprint.x(), ly = dy * footprint.y();
          out[k++] = position + Eigen::Vector3d(c * lx - s * ly, s * lx + c * ly,
                                                dz * footprint.z());
        }
    return out;
  }
};

struct GroundTruth {
  /// Object ids visible per camera.
  std::map<int, std::set<int>> visible;
  /// Objects visible in both cameras of each pair (the true matches link each
  /// id to itself).
  std::map<ViewPairKey, std::vector<int>> adjacency;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct SyntheticScene {
  SimConfig config;
  Scene scene;
  std::vector<SyntheticObject> objects;
  GroundTruth truth;
  EmbeddingTable embeddings;
};

namespace detail {

/// Derives independent stream seeds from one user seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::vector<double> random_unit(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(dim));
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : v) {
      x = n(rng);
      norm += x * x;
    }
  } while (norm < 1e-20);
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

inline std::vector<double> random_gaussian(std::mt19937_64& rng, int dim, double sigma) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(dim));
  for (auto& x : v) x = sigma * n(rng);
  return v;
}

inline CameraModel make_camera(int id, const Eigen::Vector3d& eye,
                               const Eigen::Vector3d& target, double focal,
                               double cx, double cy, const SimConfig& cfg) {
  CameraModel cam;
  cam.camera_id = id;
  cam.K << focal, 0.0, cx, 0.0, focal, cy, 0.0, 0.0, 1.0;
  cam.R = look_at_rotation(eye, target, Eigen::Vector3d::UnitZ());
  cam.t = -cam.R * eye;
  cam.width = cfg.image_width;
  cam.height = cfg.image_height;
  return cam;
}

inline constexpr double kNearPlane = 0.05;

inline std::optional<Box> project_object(const CameraModel& cam,
                                         const SyntheticObject& obj,
                                         BoxAnchor anchor) {
  const auto corners = obj.corners();
  for (const auto& c : corners)
    if (point_depth(cam, c) < kNearPlane) return std::nullopt;
  std::array<Eigen::Vector2d, 8> px;
  for (std::size_t k = 0; k < corners.size(); ++k) px[k] = project_point(cam, corners[k]);

  const Eigen::Vector2d ref =
      project_point(cam, anchor == BoxAnchor::kCenter ? obj.center() : obj.position);
  double hw = 0.0, hh = 0.0, vmin = ref.y(), vmax = ref.y();
  for (const auto& p : px) {
    hw = std::max(hw, std::abs(p.x() - ref.x()));
    hh = std::max(hh, std::abs(p.y() - ref.y()));
    vmin = std::min(vmin, p.y());
    vmax = std::max(vmax, p.y());
  }
  hw = std::max(hw, 0.5);
  hh = std::max(hh, 0.5);
  if (anchor == BoxAnchor::kCenter) {
    return Box{ref.x() - hw, ref.y() - hh, ref.x() + hw, ref.y() + hh};
  }
  double top = vmin;
  if (top > ref.y() - 1.0) top = ref.y() - std::max(1.0, vmax - vmin);
  return Box{ref.x() - hw, top, ref.x() + hw, ref.y()};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Oracle embeddings
// ---------------------------------------------------------------------------

struct OracleOptions {
  OracleMode mode = OracleMode::kUniqueInstance;
  /// Per-component standard deviation of the viewpoint-dependent noise.
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  /// Vector length; the codebook size in local-descriptor mode.
  int dim = 128;
  /// Zoom-out ratio of the crop whose contents form the surrounding vector.
  double surround_ratio = kDefaultZoomOutRatio;
};

namespace detail {

/// Other instances of the view whose box centers fall inside the zoom-out
/// crop of instance `idx`.
inline std::vector<std::size_t> neighbors_in_crop(const SceneView& view, std::size_t idx,
                                                  double ratio) {
  const CropRect crop = crop_with_zoom_out(view.instances[idx].box, ratio,
                                           view.camera.width, view.camera.height);
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < view.instances.size(); ++j) {
    if (j == idx) continue;
    const Eigen::Vector2d c = view.instances[j].box.center();
    if (crop.contains(c.x(), c.y())) out.push_back(j);
  }
  return out;
}

inline std::vector<float> to_floats(const std::vector<double>& v) {
  return {v.begin(), v.end()};
}

inline constexpr int kProtoCount = 48;
inline constexpr int kProtoDim = 8;
inline constexpr int kTextureSize = 5;
inline constexpr int kDescriptorsPerInstance = 24;

inline EmbeddingTable local_descriptor_embeddings(
    const Scene& scene, const std::map<int, const SyntheticObject*>& by_id,
    const OracleOptions& opt) {
  std::mt19937_64 rng(mix_seed(opt.seed, 21));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> protos(kProtoCount, std::vector<double>(kProtoDim));
  for (auto& p : protos)
    for (auto& x : p) x = unit(rng);

  // Texture per identical group: a few weighted prototypes and a viewpoint
  // drift direction for each world axis.
  struct Texture {
    std::array<int, kTextureSize> protos;
    std::array<double, kTextureSize> weights;
    std::array<std::vector<double>, 3> drift;
  };
  std::map<int, Texture> textures;
  for (const auto& [id, obj] : by_id) {
    if (textures.contains(obj->identical_group)) continue;
    Texture t;
    for (int k = 0; k < kTextureSize; ++k) {
      t.protos[k] = std::uniform_int_distribution<int>(0, kProtoCount - 1)(rng);
      t.weights[k] = 0.2 + unit(rng);
    }
    for (auto& d : t.drift) d = random_gaussian(rng, kProtoDim, opt.noise_sigma);
    textures.emplace(obj->identical_group, std::move(t));
  }

  std::map<EmbeddingKey, std::vector<std::vector<double>>> local;
  std::vector<std::vector<double>> pool;
  for (const auto& view : scene.views) {
    const Eigen::Vector3d eye = view.camera.center();
    for (const auto& inst : view.instances) {
      const SyntheticObject& obj = *by_id.at(inst.instance_id);
      const Texture& tex = textures.at(obj.identical_group);
      const Eigen::Vector3d w = (eye - obj.center()).normalized();
      std::mt19937_64 r(mix_seed(opt.seed, 1000003ull * (view.camera.camera_id + 7) +
                                               static_cast<std::uint64_t>(inst.instance_id)));
      std::discrete_distribution<int> pick(tex.weights.begin(), tex.weights.end());
      std::normal_distribution<double> jitter(0.0, 0.03);
      std::vector<std::vector<double>> descs;
      for (int n = 0; n < kDescriptorsPerInstance; ++n) {
        std::vector<double> d = protos[tex.protos[pick(r)]];
        for (int c = 0; c < kProtoDim; ++c)
          d[c] += jitter(r) + w.x() * tex.drift[0][c] + w.y() * tex.drift[1][c] +
                  w.z() * tex.drift[2][c];
        descs.push_back(std::move(d));
      }
      pool.insert(pool.end(), descs.begin(), descs.end());
      local.emplace(EmbeddingKey{view.camera.camera_id, inst.instance_id}, std::move(descs));
    }
  }
  if (pool.empty()) throw ConfigError("no visible instances to build a codebook from");
  const Codebook codebook =
      kmeans_codebook(pool, static_cast<std::size_t>(opt.dim), mix_seed(opt.seed, 22));

  EmbeddingTable table(static_cast<std::size_t>(opt.dim));
  for (const auto& view : scene.views) {
    for (std::size_t i = 0; i < view.instances.size(); ++i) {
      const EmbeddingKey key{view.camera.camera_id, view.instances[i].instance_id};
      const auto& own = local.at(key);
      std::vector<std::vector<double>> around = own;
      for (std::size_t j : neighbors_in_crop(view, i, opt.surround_ratio)) {
        const auto& other =
            local.at({view.camera.camera_id, view.instances[j].instance_id});
        around.insert(around.end(), other.begin(), other.end());
      }
      const FeatureVector app = vbow_encode(own, codebook);
      const FeatureVector sur = vbow_encode(around, codebook);
      table.insert(key, {to_floats({app.values().begin(), app.values().end()}),
                         to_floats({sur.values().begin(), sur.values().end()})});
    }
  }
  return table;
}

}  // namespace detail

/// Embeddings for every instance of a simulated scene.
///
/// Appearance: an identity vector (per object, or per identical group in
/// class-level mode) plus viewpoint-dependent noise n(w) = w_x G1 + w_y G2 +
/// w_z G3, where w is the unit direction from the object to the camera and
/// the G's have i.i.d. N(0, sigma^2) components. Each view sees Gaussian noise
/// of scale sigma; views with similar lines of sight see similar noise.
/// Surrounding: unit-normalized sum of the group codes of the other instances
/// whose box centers lie in the zoom-out crop, plus noise of the same form.
inline EmbeddingTable oracle_embeddings(const Scene& scene,
                                        std::span<const SyntheticObject> objects,
                                        const OracleOptions& opt) {
  if (opt.dim < 1) throw ConfigError("embedding dim must be positive");
  if (!(opt.noise_sigma >= 0.0)) throw ConfigError("noise sigma must be >= 0");
  std::map<int, const SyntheticObject*> by_id;
  for (const auto& o : objects) by_id.emplace(o.object_id, &o);
  for (const auto& v : scene.views)
    for (const auto& inst : v.instances)
      if (!by_id.contains(inst.instance_id))
        throw InvariantError("instance " + std::to_string(inst.instance_id) +
                             " has no simulated object");

  if (opt.mode == OracleMode::kLocalDescriptors) {
    return detail::local_descriptor_embeddings(scene, by_id, opt);
  }

  std::mt19937_64 rng(detail::mix_seed(opt.seed, 11));
  struct Identity {
    std::vector<double> base;
    std::array<std::vector<double>, 3> app_noise, sur_noise;
  };
  auto identity_of = [&](const SyntheticObject& o) {
    return opt.mode == OracleMode::kClassLevel ? o.identical_group : o.object_id;
  };
  std::map<int, Identity> identities;
  std::map<int, std::vector<double>> group_codes;
  for (const auto& [id, obj] : by_id) {
    const int key = identity_of(*obj);
    if (!identities.contains(key)) {
      Identity ident;
      ident.base = detail::random_unit(rng, opt.dim);
      for (auto& g : ident.app_noise) g = detail::random_gaussian(rng, opt.dim, opt.noise_sigma);
      for (auto& g : ident.sur_noise) g = detail::random_gaussian(rng, opt.dim, opt.noise_sigma);
      identities.emplace(key, std::move(ident));
    }
    if (!group_codes.contains(obj->identical_group)) {
      group_codes.emplace(obj->identical_group, detail::random_unit(rng, opt.dim));
    }
  }

  EmbeddingTable table(static_cast<std::size_t>(opt.dim));
  for (const auto& view : scene.views) {
    const Eigen::Vector3d eye = view.camera.center();
    for (std::size_t i = 0; i < view.instances.size(); ++i) {
      const SyntheticObject& obj = *by_id.at(view.instances[i].instance_id);
      const Identity& ident = identities.at(identity_of(obj));
      const Eigen::Vector3d w = (eye - obj.center()).normalized();
      std::vector<double> app = ident.base;
      std::vector<double> sur(static_cast<std::size_t>(opt.dim), 0.0);
      for (std::size_t j : detail::neighbors_in_crop(view, i, opt.surround_ratio)) {
        const auto& code =
            group_codes.at(by_id.at(view.instances[j].instance_id)->identical_group);
        for (int c = 0; c < opt.dim; ++c) sur[c] += code[c];
      }
      // Unit scale, like the appearance vector, so fusion weighs comparable
      // distances; no neighbors leaves the zero vector.
      double norm = 0.0;
      for (double x : sur) norm += x * x;
      if (norm > 0.0)
        for (double& x : sur) x /= std::sqrt(norm);
      for (int c = 0; c < opt.dim; ++c) {
        for (int axis = 0; axis < 3; ++axis) {
          app[c] += w[axis] * ident.app_noise[axis][c];
          sur[c] += w[axis] * ident.sur_noise[axis][c];
        }
      }
      table.insert({view.camera.camera_id, view.instances[i].instance_id},
                   {detail::to_floats(app), detail::to_floats(sur)});
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Scene generation
// ---------------------------------------------------------------------------

inline constexpr int kClassCount = 120;

inline OracleOptions default_oracle_options(const SimConfig& config) {
  OracleOptions opt;
  opt.mode = config.embedding_mode;
  opt.noise_sigma = config.embedding_noise_sigma;
  opt.seed = detail::mix_seed(config.seed, 2);
  opt.dim = config.embedding_dim;
  opt.surround_ratio = config.surround_ratio;
  return opt;
}

/// Builds a full synthetic scene. Deterministic for a given config.
inline SyntheticScene generate_scene(const SimConfig& config) {
  config.validate();
  SyntheticScene out;
  out.config = config;
  std::mt19937_64 rng(detail::mix_seed(config.seed, 1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  // Objects.
  const int n = std::uniform_int_distribution<int>(config.n_objects_min,
                                                   config.n_objects_max)(rng);
  int identical = static_cast<int>(std::lround(config.identical_fraction * n));
  if (identical == 1) identical = n >= 2 ? 2 : 0;
  const double half = 0.5 * config.table_extent;
  int next_group = 0;
  int remaining_in_group = 0;
  SyntheticObject group_template;
  for (int id = 0; id < n; ++id) {
    SyntheticObject o;
    o.object_id = id;
    if (id < identical) {
      if (remaining_in_group == 0) {
        const int left = identical - id;
        int size = std::uniform_int_distribution<int>(2, 3)(rng);
        size = std::min(size, left);
        if (left - size == 1) ++size;
        remaining_in_group = size;
        group_template.identical_group = next_group++;
        group_template.class_id = std::uniform_int_distribution<int>(0, kClassCount - 1)(rng);
        group_template.footprint = {uniform(0.04, 0.14), uniform(0.04, 0.14), uniform(0.03, 0.15)};
      }
      --remaining_in_group;
      o.identical_group = group_template.identical_group;
      o.class_id = group_template.class_id;
      o.footprint = group_template.footprint;
    } else {
      o.identical_group = next_group++;
      o.class_id = std::uniform_int_distribution<int>(0, kClassCount - 1)(rng);
      o.footprint = {uniform(0.04, 0.14), uniform(0.04, 0.14), uniform(0.03, 0.15)};
    }
    const double margin = 0.05;
    o.position.x() = uniform(-half + margin, half - margin);
    o.position.y() = uniform(-half + margin, half - margin);
    o.position.z() = unit(rng) < config.elevated_fraction ? uniform(0.03, 0.15) : 0.0;
    o.yaw = uniform(0.0, std::numbers::pi);
    out.objects.push_back(o);
  }

  // Cameras: #1 is a fixed bird's-eye view, the rest are sampled on the upper
  // hemisphere and aimed near the table center.
  std::vector<CameraModel> cams;
  const double cx0 = 0.5 * config.image_width, cy0 = 0.5 * config.image_height;
  cams.push_back(detail::make_camera(1, {0.0, 0.0, 1.0}, Eigen::Vector3d::Zero(),
                                     0.7 * config.image_width, cx0, cy0, config));
  const double deg = std::numbers::pi / 180.0;
  for (int id = 2; id <= config.n_cameras; ++id) {
    bool placed = false;
    for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
      const double r = uniform(config.camera_radius_min, config.camera_radius_max);
      const double el = uniform(config.elevation_min_deg, config.elevation_max_deg) * deg;
      const double az = uniform(0.0, 2.0 * std::numbers::pi);
      const Eigen::Vector3d eye(r * std::cos(el) * std::cos(az),
                                r * std::cos(el) * std::sin(az), r * std::sin(el));
      const Eigen::Vector3d target(uniform(-0.1, 0.1), uniform(-0.1, 0.1), 0.0);
      const double focal = uniform(0.6, 0.8) * config.image_width;
      const double cx = cx0 + uniform(-10.0, 10.0), cy = cy0 + uniform(-10.0, 10.0);
      // Stands stay off the table unless the camera is above the clutter, and
      // no two cameras share a spot.
      const bool over_table =
          std::abs(eye.x()) < half + 0.05 && std::abs(eye.y()) < half + 0.05;
      if (over_table && eye.z() < 0.45) continue;
      const bool crowded = std::any_of(cams.begin(), cams.end(), [&](const CameraModel& c) {
        return (c.center() - eye).norm() < 0.15;
      });
      if (crowded) continue;
      cams.push_back(detail::make_camera(id, eye, target, focal, cx, cy, config));
      placed = true;
    }
    if (!placed) throw ConfigError("could not place camera " + std::to_string(id));
  }

  // Views.
  out.scene.scene_id = "synth-" + std::to_string(config.seed);
  out.scene.difficulty = Difficulty::kSynthetic;
  std::bernoulli_distribution dropout(config.full_occlusion_rate);
  bool any_visible = false;
  for (const auto& cam : cams) {
    SceneView view;
    view.camera = cam;
    auto& visible = out.truth.visible[cam.camera_id];
    for (const auto& o : out.objects) {
      const auto box = detail::project_object(cam, o, config.box_anchor);
      const bool dropped = dropout(rng);
      if (!box) continue;
      const Eigen::Vector2d c = box->center();
      if (c.x() < 0.0 || c.x() > cam.width || c.y() < 0.0 || c.y() > cam.height) continue;
      if (dropped) continue;
      view.instances.push_back({*box, o.class_id, o.object_id, BoxSource::kGroundTruth});
      visible.insert(o.object_id);
    }
    // Annotation order carries no identity information.
    std::shuffle(view.instances.begin(), view.instances.end(), rng);
    any_visible = any_visible || !view.instances.empty();
    out.scene.views.push_back(std::move(view));
  }
  if (!any_visible) throw ConfigError("infeasible config: no camera sees the table");

  for (std::size_t a = 0; a < cams.size(); ++a) {
    for (std::size_t b = a + 1; b < cams.size(); ++b) {
      const auto& va = out.truth.visible[cams[a].camera_id];
      const auto& vb = out.truth.visible[cams[b].camera_id];
      std::vector<int> both;
      std::set_intersection(va.begin(), va.end(), vb.begin(), vb.end(),
                            std::back_inserter(both));
      out.truth.adjacency.emplace(ViewPairKey{cams[a].camera_id, cams[b].camera_id},
                                  std::move(both));
    }
  }
  validate_scene(out.scene);

  out.embeddings = oracle_embeddings(out.scene, out.objects, default_oracle_options(config));
  return out;
}

/// Same scene with embeddings regenerated under other oracle options.
inline SyntheticScene with_embeddings(SyntheticScene s, const OracleOptions& opt) {
  s.embeddings = oracle_embeddings(s.scene, s.objects, opt);
  return s;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

struct ExportedFiles {
  std::filesystem::path scene_json;
  std::filesystem::path sidecar;
};

/// Writes <stem>.json and <stem>.mteb into `out_dir`; the stem defaults to the
/// scene id.
inline ExportedFiles export_scene(const Scene& scene, const EmbeddingTable& embeddings,
                                  const std::filesystem::path& out_dir,
                                  std::string stem = {}) {
  if (stem.empty()) stem = scene.scene_id;
  std::filesystem::create_directories(out_dir);
  ExportedFiles files{out_dir / (stem + ".json"), out_dir / (stem + ".mteb")};
  save_scene(scene, files.scene_json);
  save_embeddings(embeddings, files.sidecar);
  return files;
}

inline nlohmann::ordered_json sim_config_to_json(const SimConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["n_objects"] = {c.n_objects_min, c.n_objects_max};
  j["n_cameras"] = c.n_cameras;
  j["identical_fraction"] = c.identical_fraction;
  j["elevated_fraction"] = c.elevated_fraction;
  j["full_occlusion_rate"] = c.full_occlusion_rate;
  j["embedding_noise_sigma"] = c.embedding_noise_sigma;
  j["table_extent"] = c.table_extent;
  j["embedding_mode"] = std::string(to_string(c.embedding_mode));
  j["embedding_dim"] = c.embedding_dim;
  j["surround_ratio"] = c.surround_ratio;
  j["box_anchor"] = std::string(to_string(c.box_anchor));
  j["image_size"] = {c.image_width, c.image_height};
  j["camera_radius"] = {c.camera_radius_min, c.camera_radius_max};
  j["elevation_deg"] = {c.elevation_min_deg, c.elevation_max_deg};
  return j;
}

}  // namespace mvassoc
