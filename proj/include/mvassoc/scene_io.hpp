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

// Scene JSON and the "MTEB" binary embedding sidecar.
//
// Sidecar layout, little-endian:
//   char[4] "MTEB" | u32 version (1) | u32 dim | u64 count |
//   count x { u32 camera_id | u32 instance_id | dim x f32 app | dim x f32 sur }
// Negative instance ids (unmatched detections) are stored as their 32-bit
// two's-complement pattern.

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvassoc/errors.hpp"
#include "mvassoc/scene.hpp"

namespace mvassoc {

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj,
                                     const char* key,
                                     const std::string& where) {
  if (!obj.is_object()) throw SchemaError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw SchemaError(where + ": missing field \"" + key + "\"");
  }
  return *it;
}

inline double as_number(const nlohmann::json& v, const std::string& where) {
  if (!v.is_number()) throw SchemaError(where + ": expected a number");
  return v.get<double>();
}

inline int as_int(const nlohmann::json& v, const std::string& where) {
  if (!v.is_number_integer()) throw SchemaError(where + ": expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < INT32_MIN || x > INT32_MAX) {
    throw SchemaError(where + ": integer out of 32-bit range");
  }
  return static_cast<int>(x);
}

inline std::vector<double> as_numbers(const nlohmann::json& v,
                                      std::size_t count,
                                      const std::string& where) {
  if (!v.is_array() || v.size() != count) {
    throw SchemaError(where + ": expected an array of " +
                      std::to_string(count) + " numbers");
  }
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(as_number(v[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

inline Eigen::Matrix3d as_matrix3(const nlohmann::json& v,
                                  const std::string& where) {
  const auto n = as_numbers(v, 9, where);
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = n[3 * r + c];
  return m;
}

inline nlohmann::ordered_json matrix3_to_json(const Eigen::Matrix3d& m) {
  auto arr = nlohmann::ordered_json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) arr.push_back(m(r, c));
  return arr;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scene JSON
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json scene_to_json(const Scene& scene) {
  nlohmann::ordered_json j;
  j["scene_id"] = scene.scene_id;
  j["difficulty"] = std::string(to_string(scene.difficulty));
  auto cams = nlohmann::ordered_json::array();
  auto views = nlohmann::ordered_json::array();
  for (const auto& v : scene.views) {
    const auto& c = v.camera;
    nlohmann::ordered_json cj;
    cj["camera_id"] = c.camera_id;
    cj["K"] = detail::matrix3_to_json(c.K);
    cj["R"] = detail::matrix3_to_json(c.R);
    cj["t"] = {c.t.x(), c.t.y(), c.t.z()};
    cj["width"] = c.width;
    cj["height"] = c.height;
    cams.push_back(std::move(cj));

    nlohmann::ordered_json vj;
    vj["camera_id"] = c.camera_id;
    vj["image_path"] = v.image_path ? nlohmann::ordered_json(*v.image_path)
                                    : nlohmann::ordered_json(nullptr);
    auto insts = nlohmann::ordered_json::array();
    for (const auto& inst : v.instances) {
      nlohmann::ordered_json ij;
      ij["bbox"] = {inst.box.x1, inst.box.y1, inst.box.x2, inst.box.y2};
      ij["class_id"] = inst.class_id;
      ij["instance_id"] = inst.instance_id;
      ij["source"] = inst.source == BoxSource::kGroundTruth ? "gt" : "det";
      insts.push_back(std::move(ij));
    }
    vj["instances"] = std::move(insts);
    views.push_back(std::move(vj));
  }
  j["cameras"] = std::move(cams);
  j["views"] = std::move(views);
  return j;
}

/// Parses and fully validates a scene document.
inline Scene scene_from_json(const nlohmann::json& j) {
  using detail::require;
  Scene scene;
  const auto& sid = require(j, "scene_id", "scene");
  if (!sid.is_string()) throw SchemaError("scene.scene_id: expected a string");
  scene.scene_id = sid.get<std::string>();
  const std::string where = "scene " + scene.scene_id;

  const auto& diff = require(j, "difficulty", where);
  if (!diff.is_string()) throw SchemaError(where + ".difficulty: expected a string");
  auto d = parse_difficulty(diff.get<std::string>());
  if (!d) {
    throw SchemaError(where + ".difficulty: unknown value \"" +
                      diff.get<std::string>() + "\"");
  }
  scene.difficulty = *d;

  const auto& cams = require(j, "cameras", where);
  if (!cams.is_array()) throw SchemaError(where + ".cameras: expected an array");
  std::map<int, CameraModel> by_id;
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const std::string cw = where + ".cameras[" + std::to_string(i) + "]";
    const auto& cj = cams[i];
    CameraModel cam;
    cam.camera_id = detail::as_int(require(cj, "camera_id", cw), cw + ".camera_id");
    cam.K = detail::as_matrix3(require(cj, "K", cw), cw + ".K");
    cam.R = detail::as_matrix3(require(cj, "R", cw), cw + ".R");
    const auto t = detail::as_numbers(require(cj, "t", cw), 3, cw + ".t");
    cam.t = Eigen::Vector3d(t[0], t[1], t[2]);
    cam.width = detail::as_int(require(cj, "width", cw), cw + ".width");
    cam.height = detail::as_int(require(cj, "height", cw), cw + ".height");
    if (!by_id.emplace(cam.camera_id, cam).second) {
      throw InvariantError(where + ": duplicate camera_id " +
                           std::to_string(cam.camera_id));
    }
  }

  const auto& views = require(j, "views", where);
  if (!views.is_array()) throw SchemaError(where + ".views: expected an array");
  for (std::size_t i = 0; i < views.size(); ++i) {
    const std::string vw = where + ".views[" + std::to_string(i) + "]";
    const auto& vj = views[i];
    SceneView view;
    const int cam_id =
        detail::as_int(require(vj, "camera_id", vw), vw + ".camera_id");
    auto it = by_id.find(cam_id);
    if (it == by_id.end()) {
      throw InvariantError(vw + ": references unknown camera " +
                           std::to_string(cam_id));
    }
    view.camera = it->second;
    const auto& path = require(vj, "image_path", vw);
    if (path.is_string()) {
      view.image_path = path.get<std::string>();
    } else if (!path.is_null()) {
      throw SchemaError(vw + ".image_path: expected a string or null");
    }
    const auto& insts = require(vj, "instances", vw);
    if (!insts.is_array()) throw SchemaError(vw + ".instances: expected an array");
    for (std::size_t k = 0; k < insts.size(); ++k) {
      const std::string iw = vw + ".instances[" + std::to_string(k) + "]";
      const auto& ij = insts[k];
      InstanceBox inst;
      const auto b = detail::as_numbers(require(ij, "bbox", iw), 4, iw + ".bbox");
      inst.box = {b[0], b[1], b[2], b[3]};
      inst.class_id = detail::as_int(require(ij, "class_id", iw), iw + ".class_id");
      inst.instance_id =
          detail::as_int(require(ij, "instance_id", iw), iw + ".instance_id");
      const auto& src = require(ij, "source", iw);
      if (src == "gt") {
        inst.source = BoxSource::kGroundTruth;
      } else if (src == "det") {
        inst.source = BoxSource::kDetection;
      } else {
        throw SchemaError(iw + ".source: expected \"gt\" or \"det\"");
      }
      view.instances.push_back(inst);
    }
    scene.views.push_back(std::move(view));
  }
  validate_scene(scene);
  return scene;
}

inline Scene load_scene(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path.string() + ": invalid JSON: " + e.what());
  }
  return scene_from_json(j);
}

inline void save_scene(const Scene& scene, const std::filesystem::path& path) {
  detail::write_text_file(path, scene_to_json(scene).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Embedding sidecar
// ---------------------------------------------------------------------------

inline constexpr std::array<char, 4> kSidecarMagic = {'M', 'T', 'E', 'B'};
inline constexpr std::uint32_t kSidecarVersion = 1;

namespace detail {

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("embedding sidecar is truncated");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Serializes a table; records are written in (camera_id, instance_id) order.
inline std::string encode_embeddings(const EmbeddingTable& table) {
  detail::ByteWriter w;
  w.raw(kSidecarMagic.data(), kSidecarMagic.size());
  w.u32(kSidecarVersion);
  w.u32(static_cast<std::uint32_t>(table.dim()));
  w.u64(table.size());
  for (const auto& [key, entry] : table.entries()) {
    w.u32(static_cast<std::uint32_t>(key.camera_id));
    w.u32(static_cast<std::uint32_t>(key.instance_id));
    for (float x : entry.appearance) w.f32(x);
    for (float x : entry.surrounding) w.f32(x);
  }
  return w.bytes();
}

/// Parses a sidecar without reference to a scene.
inline EmbeddingTable decode_embeddings(const std::string& bytes) {
  detail::ByteReader r(bytes);
  const std::string magic = r.raw(4);
  if (std::memcmp(magic.data(), kSidecarMagic.data(), 4) != 0) {
    throw FormatError("embedding sidecar: bad magic");
  }
  const auto version = r.u32();
  if (version != kSidecarVersion) {
    throw FormatError("embedding sidecar: unsupported version " +
                      std::to_string(version));
  }
  const auto dim = r.u32();
  if (dim == 0) throw FormatError("embedding sidecar: dim is 0");
  const auto count = r.u64();
  const std::uint64_t record_bytes = 8ull + 8ull * dim;
  if (count > r.remaining() / record_bytes) {
    throw FormatError("embedding sidecar is truncated");
  }
  EmbeddingTable table(dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    EmbeddingKey key;
    key.camera_id = static_cast<std::int32_t>(r.u32());
    key.instance_id = static_cast<std::int32_t>(r.u32());
    EmbeddingEntry e;
    e.appearance.resize(dim);
    e.surrounding.resize(dim);
    for (auto& x : e.appearance) x = r.f32();
    for (auto& x : e.surrounding) x = r.f32();
    try {
      table.insert(key, std::move(e));
    } catch (const InvariantError& err) {
      throw FormatError(std::string("embedding sidecar: ") + err.what());
    }
  }
  if (r.remaining() != 0) {
    throw FormatError("embedding sidecar: " + std::to_string(r.remaining()) +
                      " trailing bytes after the last record");
  }
  return table;
}

inline void save_embeddings(const EmbeddingTable& table,
                            const std::filesystem::path& path) {
  detail::write_text_file(path, encode_embeddings(table));
}

inline EmbeddingTable read_embeddings(const std::filesystem::path& path) {
  return decode_embeddings(detail::read_text_file(path));
}

/// Loads a sidecar and checks every key against the scene.
inline EmbeddingTable load_embeddings(const std::filesystem::path& path,
                                      const Scene& scene) {
  auto table = read_embeddings(path);
  check_embeddings_cover(table, scene);
  return table;
}

}  // namespace mvassoc
