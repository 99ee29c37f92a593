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

#include <random>

#include "mvassoc/evaluation.hpp"
#include "mvassoc/synthetic.hpp"
#include "support/oracles.hpp"

namespace mvassoc {
namespace {

SceneView view_with(int cam, const std::vector<int>& ids) {
  SceneView v;
  v.camera = oracle::camera_looking_at(cam, {2.0 * std::cos(cam), 2.0 * std::sin(cam), 1.0},
                                       Eigen::Vector3d::Zero());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    InstanceBox b;
    const double x = 100.0 + 80.0 * static_cast<double>(k);
    b.box = {x, 200.0, x + 40.0, 260.0};
    b.instance_id = ids[k];
    v.instances.push_back(b);
  }
  return v;
}

Scene small_scene() {
  Scene s;
  s.scene_id = "eval";
  s.views = {view_with(1, {1, 2, 3, 4}), view_with(2, {2, 3, 4, 5}), view_with(3, {1, 5})};
  return s;
}

EmbeddingTable identity_embeddings(const Scene& s) {
  EmbeddingTable t(64);
  for (const auto& v : s.views) {
    for (const auto& b : v.instances) {
      std::mt19937_64 rng(static_cast<std::uint64_t>(b.instance_id));
      std::normal_distribution<float> n(0.0f, 1.0f);
      EmbeddingEntry e;
      for (int k = 0; k < 64; ++k) e.appearance.push_back(n(rng));
      e.surrounding = e.appearance;
      t.insert({v.camera.camera_id, b.instance_id}, e);
    }
  }
  return t;
}

SceneAssociation associate(const Scene& s, Normalization n) {
  ScorerConfig cfg;
  cfg.normalization = n;
  return {s.scene_id, associate_scene(s, identity_embeddings(s), cfg)};
}

TEST(Evaluate, PerfectAssociation) {
  const Scene s = small_scene();
  const auto sa = associate(s, Normalization::kGlobal);
  const auto pm = evaluate_scene(s, sa);
  ASSERT_EQ(pm.size(), 3u);
  for (const auto& p : pm) {
    EXPECT_DOUBLE_EQ(p.fraction_correct, 1.0);
    EXPECT_EQ(p.scene_id, "eval");
  }
  EXPECT_EQ(pm[0].matches, 3u);  // (1, 2) share 2, 3, 4
  EXPECT_EQ(pm[0].scored.size(), 16u);
  const auto r = make_report(pm);
  ASSERT_TRUE(r.ap);
  EXPECT_DOUBLE_EQ(*r.ap, 1.0);
  ASSERT_TRUE(r.fpr95);
  EXPECT_DOUBLE_EQ(*r.fpr95, 0.0);
  for (const auto& v : r.ipaa) EXPECT_DOUBLE_EQ(v.value, 1.0);
  EXPECT_EQ(r.positives, 3u + 1u + 1u);
}

TEST(Evaluate, AngleComesFromTheCameras) {
  const Scene s = small_scene();
  const auto pm = evaluate_scene(s, associate(s, Normalization::kPerPair));
  EXPECT_NEAR(pm[0].angle_deg,
              oracle::quaternion_axis_angle_deg(s.views[0].camera, s.views[1].camera), 1e-9);
}

TEST(Evaluate, ReconstructsPreScaleDistances) {
  Scene s;
  s.scene_id = "one";
  s.views = {view_with(1, {1}), view_with(2, {1, 2, 3})};
  SceneAssociation sa{"one", {}};
  PairAssociation p;
  p.camera_a = 1;
  p.camera_b = 2;
  p.result.matches = {{0, 0, 0.0}};
  p.result.unmatched_b = {1, 2};
  Eigen::MatrixXd d(1, 3);
  d << 0.0, 0.5, 1.0;
  p.distances = DistanceMatrix(d, ScaleInfo{2.0, 6.0});
  sa.pairs.emplace(ViewPairKey{1, 2}, p);

  // Pooling over this single pair recovers the same scale.
  const auto global = evaluate_scene(s, sa);
  ASSERT_EQ(global[0].scored.size(), 3u);
  EXPECT_DOUBLE_EQ(global[0].scored[0].confidence, 1.0);
  EXPECT_DOUBLE_EQ(global[0].scored[1].confidence, 0.5);
  EXPECT_DOUBLE_EQ(global[0].scored[2].confidence, 0.0);
  EXPECT_TRUE(global[0].scored[0].is_positive);
  EXPECT_FALSE(global[0].scored[1].is_positive);
}

TEST(Evaluate, GlobalScalingPoolsAcrossScenes) {
  // Two one-pair scenes with pre-scale ranges [0, 1] and [0, 3].
  auto one = [](const std::string& id, double hi) {
    Scene s;
    s.scene_id = id;
    s.views = {view_with(1, {1}), view_with(2, {1, 2})};
    PairAssociation p;
    p.camera_a = 1;
    p.camera_b = 2;
    p.result.matches = {{0, 0, 0.0}};
    p.result.unmatched_b = {1};
    Eigen::MatrixXd d(1, 2);
    d << 0.0, hi;
    p.distances = DistanceMatrix(d);
    SceneAssociation sa{id, {}};
    sa.pairs.emplace(ViewPairKey{1, 2}, p);
    return std::make_pair(s, sa);
  };
  const auto [s1, a1] = one("a", 1.0);
  const auto [s2, a2] = one("b", 3.0);
  const std::vector<std::pair<const Scene*, const SceneAssociation*>> in{{&s1, &a1}, {&s2, &a2}};
  const auto g = evaluate_pairs(in);
  EXPECT_NEAR(g[0].scored[1].confidence, 1.0 - 1.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(g[1].scored[1].confidence, 0.0);
  EvalOptions per_pair;
  per_pair.normalization = Normalization::kPerPair;
  const auto p = evaluate_pairs(in, per_pair);
  EXPECT_DOUBLE_EQ(p[0].scored[1].confidence, 0.0);
}

TEST(Evaluate, RejectsInconsistentInput) {
  const Scene s = small_scene();
  auto sa = associate(s, Normalization::kPerPair);
  {
    auto bad = sa;
    bad.scene_id = "other";
    EXPECT_THROW(evaluate_scene(s, bad), InvariantError);
  }
  {
    auto bad = sa;
    bad.pairs.begin()->second.result.unmatched_a.push_back(0);
    EXPECT_THROW(evaluate_scene(s, bad), InvariantError);
  }
  {
    auto bad = sa;
    bad.pairs.begin()->second.camera_b = 42;
    try {
      evaluate_scene(s, bad);
      FAIL();
    } catch (const InvariantError& e) {
      EXPECT_NE(std::string(e.what()).find("42"), std::string::npos);
    }
  }
  {
    auto bad = sa;
    bad.pairs.begin()->second.distances.values.resize(1, 1);
    EXPECT_THROW(evaluate_scene(s, bad), InvariantError);
  }
}

TEST(Evaluate, MissingDistancesLeaveRankingUndefined) {
  const Scene s = small_scene();
  auto sa = associate(s, Normalization::kPerPair);
  for (auto& [k, p] : sa.pairs) p.distances = DistanceMatrix();
  const auto r = make_report(evaluate_scene(s, sa));
  EXPECT_EQ(r.scored_pairs, 0u);
  EXPECT_FALSE(r.ap);
  EXPECT_FALSE(r.fpr95);
  EXPECT_DOUBLE_EQ(r.ipaa[0].value, 1.0);
}

// Surrounding context separates identical-looking objects that appearance
// alone cannot, so fusion should rank true pairs better.
TEST(Evaluate, FusionBeatsAppearanceOnIdenticalObjects) {
  std::vector<SyntheticScene> sims;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    SimConfig c;
    c.seed = seed;
    c.identical_fraction = 0.3;
    c.embedding_noise_sigma = 0.1;
    c.embedding_mode = OracleMode::kClassLevel;
    sims.push_back(generate_scene(c));
  }
  auto pooled_ap = [&](ScorerMode mode) {
    ScorerConfig cfg;
    cfg.mode = mode;
    std::vector<SceneAssociation> assocs;
    for (const auto& s : sims)
      assocs.push_back({s.scene.scene_id, associate_scene(s.scene, s.embeddings, cfg)});
    std::vector<std::pair<const Scene*, const SceneAssociation*>> joined;
    for (std::size_t k = 0; k < sims.size(); ++k) joined.emplace_back(&sims[k].scene, &assocs[k]);
    return *make_report(evaluate_pairs(joined), kDefaultBinWidth, ApMode::kPooled).ap;
  };
  EXPECT_GT(pooled_ap(ScorerMode::kAsnetFusion), pooled_ap(ScorerMode::kAppearanceOnly));
}

TEST(AssociationJson, RoundTrip) {
  const Scene s = small_scene();
  const auto sa = associate(s, Normalization::kGlobal);
  const auto back = association_from_json(nlohmann::json::parse(association_to_json(sa).dump()));
  EXPECT_EQ(back.scene_id, sa.scene_id);
  ASSERT_EQ(back.pairs.size(), sa.pairs.size());
  for (const auto& [k, p] : sa.pairs) {
    const auto& q = back.pairs.at(k);
    EXPECT_EQ(p.result, q.result);
    EXPECT_EQ(p.distances.values, q.distances.values);
    EXPECT_EQ(p.distances.scale, q.distances.scale);
  }
}

TEST(AssociationJson, SchemaErrors) {
  EXPECT_THROW(association_from_json(nlohmann::json::parse(R"({"pairs": []})")), SchemaError);
  EXPECT_THROW(association_from_json(nlohmann::json::parse(
                   R"({"scene_id": "x", "pairs": [{"cameras": [1], "matches": [],
                       "unmatched_a": [], "unmatched_b": []}]})")),
               SchemaError);
  EXPECT_THROW(association_from_json(nlohmann::json::parse(
                   R"({"scene_id": "x", "pairs": [
                       {"cameras": [1, 2], "matches": [], "unmatched_a": [], "unmatched_b": []},
                       {"cameras": [2, 1], "matches": [], "unmatched_a": [], "unmatched_b": []}]})")),
               SchemaError);
}

TEST(ReportSerialization, JsonAndCsvLayout) {
  const Scene s = small_scene();
  const auto r = make_report(evaluate_scene(s, associate(s, Normalization::kGlobal)));
  const auto j = report_to_json(r);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j["ipaa"].items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"100", "90", "80"}));
  EXPECT_EQ(j["angle_bins"].size(), 12u);
  EXPECT_TRUE(j["angle_bins"][11]["ap"].is_null());
  const std::string csv = report_to_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "row,angle_lo,angle_hi,pairs,scored_pairs,positives,ap,fpr95,ipaa100,ipaa90,ipaa80");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 14);
  EXPECT_NE(csv.find("summary,0,180,3,"), std::string::npos);
}

}  // namespace
}  // namespace mvassoc
