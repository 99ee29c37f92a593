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


#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mvassoc/association.hpp"
#include "mvassoc/scene_io.hpp"
#include "mvassoc/synthetic.hpp"
#include "support/oracles.hpp"

namespace mvassoc {
namespace {

SimConfig small(std::uint64_t seed) {
  SimConfig c;
  c.seed = seed;
  c.n_objects_min = 10;
  c.n_objects_max = 30;
  return c;
}

const InstanceBox* find_instance(const SceneView& v, int id) {
  for (const auto& b : v.instances)
    if (b.instance_id == id) return &b;
  return nullptr;
}

TEST(Synthetic, DeterministicForASeed) {
  const auto a = generate_scene(small(4));
  const auto b = generate_scene(small(4));
  EXPECT_EQ(scene_to_json(a.scene).dump(), scene_to_json(b.scene).dump());
  EXPECT_EQ(a.truth, b.truth);
  EXPECT_EQ(a.embeddings, b.embeddings);
  const auto c = generate_scene(small(5));
  EXPECT_NE(scene_to_json(a.scene).dump(), scene_to_json(c.scene).dump());
  EXPECT_EQ(a.scene.scene_id, "synth-4");
}

TEST(Synthetic, RigLayout) {
  const auto s = generate_scene(small(6));
  ASSERT_EQ(s.scene.views.size(), 9u);
  const auto& overhead = s.scene.views[0].camera;
  EXPECT_EQ(overhead.camera_id, 1);
  EXPECT_TRUE(overhead.center().isApprox(Eigen::Vector3d(0, 0, 1), 1e-12));
  const double deg = 180.0 / std::numbers::pi;
  for (const auto& v : s.scene.views) {
    const Eigen::Vector3d c = v.camera.center();
    if (v.camera.camera_id == 1) continue;
    EXPECT_GE(c.norm(), 0.5 - 1e-12);
    EXPECT_LE(c.norm(), 1.2 + 1e-12);
    const double el = std::asin(c.z() / c.norm()) * deg;
    EXPECT_GE(el, 10.0 - 1e-9);
    EXPECT_LE(el, 90.0 + 1e-9);
    EXPECT_NO_THROW(validate_camera(v.camera));
  }
}

TEST(Synthetic, VisibilityAndAdjacencyAgree) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = generate_scene(small(seed));
    for (const auto& v : s.scene.views) {
      std::set<int> ids;
      for (const auto& b : v.instances) {
        ids.insert(b.instance_id);
        const Eigen::Vector2d c = b.box.center();
        EXPECT_GE(c.x(), 0.0);
        EXPECT_LE(c.x(), v.camera.width);
        EXPECT_GE(c.y(), 0.0);
        EXPECT_LE(c.y(), v.camera.height);
        EXPECT_EQ(b.class_id, s.objects.at(b.instance_id).class_id);
      }
      EXPECT_EQ(ids, s.truth.visible.at(v.camera.camera_id));
    }
    EXPECT_EQ(s.truth.adjacency.size(), 36u);
    for (const auto& [key, ids] : s.truth.adjacency) {
      const auto& va = s.truth.visible.at(key.first);
      const auto& vb = s.truth.visible.at(key.second);
      for (int id : ids) {
        EXPECT_TRUE(va.contains(id));
        EXPECT_TRUE(vb.contains(id));
      }
      std::size_t both = 0;
      for (int id : va) both += vb.contains(id) ? 1 : 0;
      EXPECT_EQ(both, ids.size());
    }
  }
}

TEST(Synthetic, ObjectFractions) {
  SimConfig c;
  c.seed = 1;
  c.n_objects_min = c.n_objects_max = 50;
  c.identical_fraction = 0.4;
  c.elevated_fraction = 1.0;
  const auto s = generate_scene(c);
  ASSERT_EQ(s.objects.size(), 50u);
  std::map<int, int> group_sizes;
  for (const auto& o : s.objects) {
    ++group_sizes[o.identical_group];
    EXPECT_GE(o.position.z(), 0.03);
    EXPECT_TRUE((o.footprint.array() > 0.0).all());
    EXPECT_LE(std::abs(o.position.x()), 0.6);
  }
  int in_groups = 0;
  for (const auto& [g, n] : group_sizes)
    if (n > 1) in_groups += n;
  EXPECT_EQ(in_groups, 20);
  c.elevated_fraction = 0.0;
  for (const auto& o : generate_scene(c).objects) EXPECT_EQ(o.position.z(), 0.0);
}

TEST(Synthetic, ConfigValidation) {
  auto bad = [](auto mutate) {
    SimConfig c;
    mutate(c);
    return c;
  };
  EXPECT_THROW(bad([](SimConfig& c) { c.identical_fraction = 1.5; }).validate(), ConfigError);
  EXPECT_THROW(bad([](SimConfig& c) { c.full_occlusion_rate = -0.1; }).validate(), ConfigError);
  EXPECT_THROW(bad([](SimConfig& c) { c.n_objects_max = 2; }).validate(), ConfigError);
  EXPECT_THROW(bad([](SimConfig& c) { c.n_cameras = 1; }).validate(), ConfigError);
  EXPECT_THROW(bad([](SimConfig& c) { c.embedding_noise_sigma = -1; }).validate(), ConfigError);
  EXPECT_THROW(bad([](SimConfig& c) { c.elevation_min_deg = 0.0; }).validate(), ConfigError);
  EXPECT_THROW(generate_scene(bad([](SimConfig& c) { c.table_extent = 0.0; })), ConfigError);
  // Every object dropped in every view.
  SimConfig hidden = small(2);
  hidden.full_occlusion_rate = 1.0;
  EXPECT_THROW(generate_scene(hidden), ConfigError);
}

TEST(Synthetic, TrueCorrespondencesSatisfyTheEpipolarConstraint) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = generate_scene(small(seed));
    for (const auto& [key, ids] : s.truth.adjacency) {
      const auto& va = *s.scene.find_view(key.first);
      const auto& vb = *s.scene.find_view(key.second);
      const auto f = fundamental_matrix(va.camera, vb.camera);
      for (int id : ids) {
        const Eigen::Vector2d a = find_instance(va, id)->box.center();
        const Eigen::Vector2d b = find_instance(vb, id)->box.center();
        EXPECT_LT(std::abs(b.homogeneous().dot(f.matrix() * a.homogeneous())), 1e-9);
        EXPECT_LT(point_line_distance(epipolar_line(f, a), b), 1e-6);
      }
    }
  }
}

TEST(Synthetic, PenaltyOnTrueCorrespondencesIsNegligible) {
  const auto s = generate_scene(small(8));
  const auto& va = s.scene.views[0];
  const auto& vb = s.scene.views[3];
  const auto m = add_epipolar_penalty(
      DistanceMatrix(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(va.instances.size()),
                                           static_cast<Eigen::Index>(vb.instances.size()))),
      va, vb, 1.0);
  for (std::size_t i = 0; i < va.instances.size(); ++i)
    for (std::size_t j = 0; j < vb.instances.size(); ++j)
      if (va.instances[i].instance_id == vb.instances[j].instance_id)
        EXPECT_LT(m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), 1e-6);
}

TEST(Synthetic, ElevatedObjectsBreakThePlaneTransfer) {
  SimConfig c = small(3);
  c.elevated_fraction = 1.0;
  c.box_anchor = BoxAnchor::kBase;
  ScorerConfig h;
  h.mode = ScorerMode::kHomography;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    c.seed = seed;
    const auto s = generate_scene(c);
    for (const auto& [key, ids] : s.truth.adjacency) {
      const auto& va = *s.scene.find_view(key.first);
      const auto& vb = *s.scene.find_view(key.second);
      const auto m = build_distance_matrix(va, vb, EmbeddingTable{}, h);
      for (std::size_t i = 0; i < va.instances.size(); ++i) {
        const int id = va.instances[i].instance_id;
        if (s.objects.at(id).position.z() < 0.05) continue;
        for (std::size_t j = 0; j < vb.instances.size(); ++j)
          if (vb.instances[j].instance_id == id)
            EXPECT_GT(m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), 1.0);
      }
    }
  }
}

TEST(Synthetic, OnTableObjectsTransferExactlyWithBaseAnchors) {
  SimConfig c = small(7);
  c.elevated_fraction = 0.0;
  c.box_anchor = BoxAnchor::kBase;
  const auto s = generate_scene(c);
  ScorerConfig h;
  h.mode = ScorerMode::kHomography;
  for (const auto& [key, ids] : s.truth.adjacency) {
    const auto& va = *s.scene.find_view(key.first);
    const auto& vb = *s.scene.find_view(key.second);
    const auto m = build_distance_matrix(va, vb, EmbeddingTable{}, h);
    for (std::size_t i = 0; i < va.instances.size(); ++i)
      for (std::size_t j = 0; j < vb.instances.size(); ++j)
        if (va.instances[i].instance_id == vb.instances[j].instance_id)
          EXPECT_LT(m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), 1e-6);
  }
}

TEST(Oracle, UniqueNoiseFreeTruePairsCoincide) {
  const auto s = generate_scene(small(11));
  for (const auto& [key, e] : s.embeddings.entries()) {
    for (const auto& v : s.scene.views) {
      if (const auto* other = s.embeddings.find({v.camera.camera_id, key.instance_id})) {
        EXPECT_EQ(other->appearance, e.appearance);
      }
    }
  }
  // Distinct objects differ.
  const auto& v = s.scene.views[0];
  ASSERT_GE(v.instances.size(), 2u);
  EXPECT_NE(s.embeddings.at({1, v.instances[0].instance_id}).appearance,
            s.embeddings.at({1, v.instances[1].instance_id}).appearance);
}

TEST(Oracle, ClassLevelGroupsAreIndistinguishable) {
  SimConfig c = small(12);
  c.identical_fraction = 0.5;
  c.embedding_mode = OracleMode::kClassLevel;
  const auto s = generate_scene(c);
  int checked = 0;
  for (const auto& [ka, ea] : s.embeddings.entries()) {
    for (const auto& [kb, eb] : s.embeddings.entries()) {
      const auto& oa = s.objects.at(ka.instance_id);
      const auto& ob = s.objects.at(kb.instance_id);
      if (ka.instance_id != kb.instance_id && oa.identical_group == ob.identical_group) {
        EXPECT_EQ(l2_distance(std::vector<double>(ea.appearance.begin(), ea.appearance.end()),
                              std::vector<double>(eb.appearance.begin(), eb.appearance.end())),
                  0.0);
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(Oracle, SurroundingVectorsAreUnitOrEmpty) {
  SimConfig c = small(14);
  c.identical_fraction = 0.4;
  const auto s = generate_scene(c);
  int with_neighbors = 0, without = 0;
  for (const auto& v : s.scene.views) {
    for (std::size_t i = 0; i < v.instances.size(); ++i) {
      const auto& sur = s.embeddings.at({v.camera.camera_id, v.instances[i].instance_id}).surrounding;
      double norm = 0.0;
      for (float x : sur) norm += double(x) * x;
      if (detail::neighbors_in_crop(v, i, c.surround_ratio).empty()) {
        EXPECT_EQ(norm, 0.0);
        ++without;
      } else {
        EXPECT_NEAR(std::sqrt(norm), 1.0, 1e-6);
        ++with_neighbors;
      }
    }
  }
  EXPECT_GT(with_neighbors, 0);
  EXPECT_GT(without, 0);
}

TEST(Oracle, SmallNoiseKeepsTruePairsCloser) {
  SimConfig c;
  c.embedding_noise_sigma = 0.1;
  std::mt19937_64 rng(2024);
  int wins = 0, trials = 0;
  for (std::uint64_t seed = 0; trials < 10000; ++seed) {
    c.seed = seed;
    const auto s = generate_scene(c);
    for (const auto& [key, ids] : s.truth.adjacency) {
      if (ids.size() < 2) continue;
      const auto& vb = *s.scene.find_view(key.second);
      std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
      std::uniform_int_distribution<std::size_t> other(0, vb.instances.size() - 1);
      for (int k = 0; k < 20 && trials < 10000; ++k) {
        const int id = ids[pick(rng)];
        int neg = id;
        while (neg == id) neg = vb.instances[other(rng)].instance_id;
        auto app = [&](int cam, int inst) {
          const auto& a = s.embeddings.at({cam, inst}).appearance;
          return std::vector<double>(a.begin(), a.end());
        };
        const double d_true = l2_distance(app(key.first, id), app(key.second, id));
        const double d_false = l2_distance(app(key.first, id), app(key.second, neg));
        wins += d_true < d_false ? 1 : 0;
        ++trials;
      }
    }
  }
  EXPECT_GE(wins, 9900);
}

TEST(Oracle, AppearanceOnlyIsPerfectWithoutIdenticalsOrNoise) {
  SimConfig c = small(13);
  c.identical_fraction = 0.0;
  const auto s = generate_scene(c);
  ScorerConfig cfg;
  cfg.normalization = Normalization::kGlobal;
  const auto out = associate_scene(s.scene, s.embeddings, cfg);
  for (const auto& [key, p] : out) {
    const auto& va = *s.scene.find_view(key.first);
    const auto& vb = *s.scene.find_view(key.second);
    std::set<int> matched;
    for (const auto& m : p.result.matches) {
      EXPECT_EQ(va.instances[m.index_a].instance_id, vb.instances[m.index_b].instance_id);
      matched.insert(va.instances[m.index_a].instance_id);
    }
    const auto& truth = s.truth.adjacency.at(key);
    EXPECT_EQ(matched, std::set<int>(truth.begin(), truth.end()));
  }
}

TEST(Oracle, MoreIdenticalsNeverHelpAppearanceOnly) {
  // Mean fraction of true pairs recovered, for growing identical fractions.
  std::vector<double> recovered;
  for (double frac : {0.0, 0.4, 0.8}) {
    double hits = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      SimConfig c = small(seed);
      c.identical_fraction = frac;
      c.embedding_mode = OracleMode::kClassLevel;
      const auto s = generate_scene(c);
      for (const auto& [key, p] : associate_scene(s.scene, s.embeddings, ScorerConfig{})) {
        const auto& va = *s.scene.find_view(key.first);
        const auto& vb = *s.scene.find_view(key.second);
        for (const auto& m : p.result.matches)
          hits += va.instances[m.index_a].instance_id == vb.instances[m.index_b].instance_id;
        total += static_cast<double>(s.truth.adjacency.at(key).size());
      }
    }
    recovered.push_back(hits / total);
  }
  EXPECT_GT(recovered[0], recovered[1]);
  EXPECT_GT(recovered[1], recovered[2]);
}

TEST(Oracle, LocalDescriptorModeProducesHistograms) {
  SimConfig c = small(14);
  c.embedding_mode = OracleMode::kLocalDescriptors;
  c.embedding_dim = 16;
  const auto s = generate_scene(c);
  EXPECT_EQ(s.embeddings.dim(), 16u);
  for (const auto& [k, e] : s.embeddings.entries()) {
    double sum = 0.0;
    for (float x : e.appearance) {
      EXPECT_GE(x, 0.0f);
      sum += x;
    }
    EXPECT_NEAR(sum, 1.0, 1e-5);
  }
}

TEST(Oracle, DanglingInstanceIsReported) {
  auto s = generate_scene(small(15));
  s.scene.views[0].instances[0].instance_id = 999;
  try {
    oracle_embeddings(s.scene, s.objects, default_oracle_options(s.config));
    FAIL();
  } catch (const InvariantError& e) {
    EXPECT_NE(std::string(e.what()).find("999"), std::string::npos);
  }
}

TEST(Export, RoundTripIsExact) {
  oracle::ScratchDir dir("export");
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SimConfig c = small(seed);
    c.embedding_noise_sigma = 0.2;
    const auto s = generate_scene(c);
    const auto files = export_scene(s.scene, s.embeddings, dir.path());
    EXPECT_EQ(files.scene_json.filename(), "synth-" + std::to_string(seed) + ".json");
    const Scene back = load_scene(files.scene_json);
    EXPECT_EQ(scene_to_json(back).dump(), scene_to_json(s.scene).dump());
    const auto emb = load_embeddings(files.sidecar, back);
    EXPECT_EQ(emb, s.embeddings);
    std::size_t visible = 0;
    for (const auto& v : s.scene.views) visible += v.instances.size();
    EXPECT_EQ(emb.size(), visible);
  }
}

}  // namespace
}  // namespace mvassoc
