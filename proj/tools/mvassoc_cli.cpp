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


// mvassoc command-line tool: synth, associate, evaluate, sweep, validate.
//
// Exit status: 0 on success, 1 on runtime errors (I/O, schema, invariant),
// 2 on usage errors (bad flags or an invalid configuration).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mvassoc/mvassoc.hpp"

namespace fs = std::filesystem;
using namespace mvassoc;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  int jobs = default_jobs();
  std::uint64_t seed = 0;
  std::string format = "json";
};

// "A..B" (half-open) or a single seed.
std::vector<std::uint64_t> parse_seed_range(const std::string& s) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) return {std::stoull(s)};
    const auto lo = std::stoull(s.substr(0, dots));
    const auto hi = std::stoull(s.substr(dots + 2));
    if (hi <= lo) throw UsageError("seed range " + s + " is empty");
    std::vector<std::uint64_t> out;
    for (auto k = lo; k < hi; ++k) out.push_back(k);
    return out;
  } catch (const std::logic_error&) {
    throw UsageError("invalid seed range '" + s + "' (expected A..B)");
  }
}

void write_output(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  if (const auto parent = fs::path(path).parent_path(); !parent.empty())
    fs::create_directories(parent);
  detail::write_text_file(path, text);
}

fs::path sidecar_for(const fs::path& scene_path) {
  fs::path p = scene_path;
  return p.replace_extension(".mteb");
}

// ---------------------------------------------------------------------------
// Options shared by several subcommands
// ---------------------------------------------------------------------------

struct SimOptions {
  SimConfig config;
  std::string mode = "unique";
  std::string anchor = "center";

  void add(CLI::App* app) {
    app->add_option("--objects-min", config.n_objects_min, "Fewest objects per scene")
        ->capture_default_str();
    app->add_option("--objects-max", config.n_objects_max, "Most objects per scene")
        ->capture_default_str();
    app->add_option("--cameras", config.n_cameras, "Cameras per scene")
        ->check(CLI::Range(2, 64))
        ->capture_default_str();
    app->add_option("--identical-fraction", config.identical_fraction,
                    "Fraction of objects in identical-looking groups")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app->add_option("--elevated-fraction", config.elevated_fraction,
                    "Fraction of objects raised above the table")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app->add_option("--occlusion", config.full_occlusion_rate,
                    "Probability of dropping a visible object from a view")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app->add_option("--noise", config.embedding_noise_sigma, "Embedding noise sigma")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app->add_option("--table-extent", config.table_extent, "Table side in meters")
        ->capture_default_str();
    app->add_option("--embedding-mode", mode, "Oracle embeddings: unique, class or vbow")
        ->check(CLI::IsMember({"unique", "class", "vbow"}))
        ->capture_default_str();
    app->add_option("--dim", config.embedding_dim, "Embedding length")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--surround-ratio", config.surround_ratio,
                    "Zoom-out ratio of the surrounding crop")
        ->capture_default_str();
    app->add_option("--box-anchor", anchor, "Box reference point: center or base")
        ->check(CLI::IsMember({"center", "base"}))
        ->capture_default_str();
  }

  SimConfig resolve(std::uint64_t seed) const {
    SimConfig c = config;
    c.seed = seed;
    c.embedding_mode = *parse_oracle_mode(mode);
    c.box_anchor = *parse_box_anchor(anchor);
    try {
      c.validate();
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

struct ScorerOptions {
  std::string mode = "appearance";
  bool epipolar = false;
  double epipolar_weight = 1.0;
  double threshold = 0.5;
  double zoom_out = kDefaultZoomOutRatio;
  bool raw_lambda = false;
  std::string normalization = "per-pair";
  CLI::Option* threshold_opt = nullptr;

  void add(CLI::App* app) {
    app->add_option("--mode", mode, "Scorer: appearance, asnet, vbow or homography")
        ->check(CLI::IsMember({"appearance", "asnet", "vbow", "homography"}))
        ->capture_default_str();
    app->add_flag("--epipolar", epipolar, "Add the epipolar soft penalty");
    app->add_option("--epipolar-weight", epipolar_weight, "Weight of the epipolar penalty")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    threshold_opt =
        app->add_option("--threshold", threshold,
                        "Reject assigned pairs above this distance (required for "
                        "non-synthetic scenes)")
            ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app->add_option("--zoom-out", zoom_out, "Zoom-out ratio recorded in the config")
        ->check(CLI::Range(1.0, 10.0))
        ->capture_default_str();
    app->add_flag("--raw-lambda", raw_lambda, "Do not clamp the fusion weight to [0, 1]");
    app->add_option("--normalization", normalization,
                    "Distance scaling: per-pair, or global (pooled over each scene)")
        ->check(CLI::IsMember({"per-pair", "global"}))
        ->capture_default_str();
  }

  // The 0.5 default is only calibrated for synthetic scenes.
  void check_threshold(const Scene& scene) const {
    if (scene.difficulty != Difficulty::kSynthetic && threshold_opt->count() == 0)
      throw UsageError("scene " + scene.scene_id + " is not synthetic; pass --threshold");
  }

  ScorerConfig resolve() const {
    ScorerConfig c;
    c.mode = *parse_scorer_mode(mode);
    c.use_epipolar = epipolar;
    c.epipolar_weight = epipolar_weight;
    c.threshold = threshold;
    c.zoom_out_ratio = zoom_out;
    c.raw_lambda = raw_lambda;
    c.normalization =
        normalization == "global" ? Normalization::kGlobal : Normalization::kPerPair;
    try {
      c.validate();
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

struct EvalFlags {
  double bin_width = kDefaultBinWidth;
  std::string ap_mode = "pooled";
  std::string normalization = "global";

  void add(CLI::App* app) {
    app->add_option("--bin-width", bin_width, "Angle bin width in degrees")
        ->check(CLI::Range(1e-6, 180.0))
        ->capture_default_str();
    app->add_option("--ap-mode", ap_mode, "pooled, or per-pair (mean of per-pair AP)")
        ->check(CLI::IsMember({"pooled", "per-pair"}))
        ->capture_default_str();
    app->add_option("--confidence-scaling", normalization,
                    "Scaling of distances into confidences: global or per-pair")
        ->check(CLI::IsMember({"global", "per-pair"}))
        ->capture_default_str();
  }

  EvalOptions resolve() const {
    EvalOptions o;
    o.bin_width = bin_width;
    o.ap_mode = ap_mode == "pooled" ? ApMode::kPooled : ApMode::kPerPairMean;
    o.normalization = normalization == "global" ? Normalization::kGlobal : Normalization::kPerPair;
    return o;
  }
};

// Scene inputs: explicit scene files and/or a synth manifest.
struct SceneInputs {
  std::vector<std::string> scenes;
  std::string manifest;

  void add(CLI::App* app) {
    app->add_option("--scene", scenes, "Scene JSON file (repeatable)");
    app->add_option("--manifest", manifest, "Manifest written by synth");
  }

  std::vector<fs::path> resolve() const {
    std::vector<fs::path> out(scenes.begin(), scenes.end());
    if (!manifest.empty()) {
      const auto j = nlohmann::json::parse(detail::read_text_file(manifest), nullptr, false);
      if (j.is_discarded() || !j.contains("scenes") || !j["scenes"].is_array())
        throw SchemaError(manifest + ": not a scene manifest");
      const fs::path base = fs::path(manifest).parent_path();
      for (const auto& s : j["scenes"]) {
        if (!s.contains("scene") || !s["scene"].is_string())
          throw SchemaError(manifest + ": manifest entry without a scene path");
        out.push_back(base / s["scene"].get<std::string>());
      }
    }
    if (out.empty()) throw UsageError("no input scenes (use --scene or --manifest)");
    return out;
  }
};

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthCmd {
  SimOptions sim;
  std::string seeds;
  std::string out;

  int run(const Globals& g) const {
    const auto seed_list = seeds.empty() ? std::vector<std::uint64_t>{g.seed}
                                         : parse_seed_range(seeds);
    const SimConfig first = sim.resolve(seed_list.front());
    fs::create_directories(out);
    std::vector<SyntheticScene> made(seed_list.size());
    parallel_for(seed_list.size(), g.jobs,
                 [&](std::size_t k) { made[k] = generate_scene(sim.resolve(seed_list[k])); });
    nlohmann::ordered_json manifest;
    auto cfg = sim_config_to_json(first);
    cfg.erase("seed");
    manifest["config"] = std::move(cfg);
    auto entries = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < made.size(); ++k) {
      const auto files = export_scene(made[k].scene, made[k].embeddings, out);
      nlohmann::ordered_json e;
      e["seed"] = seed_list[k];
      e["scene_id"] = made[k].scene.scene_id;
      e["scene"] = files.scene_json.filename().string();
      e["embeddings"] = files.sidecar.filename().string();
      e["views"] = made[k].scene.views.size();
      e["instances"] = made[k].scene.instance_count();
      entries.push_back(std::move(e));
    }
    manifest["scenes"] = std::move(entries);
    detail::write_text_file(fs::path(out) / "manifest.json", manifest.dump(2) + "\n");
    std::cerr << "wrote " << made.size() << " scenes to " << out << "\n";
    return 0;
  }
};

// ---------------------------------------------------------------------------
// associate
// ---------------------------------------------------------------------------

struct AssociateCmd {
  SceneInputs inputs;
  ScorerOptions scorer;
  std::string embeddings;
  std::string out;

  int run(const Globals& g) const {
    const ScorerConfig cfg = scorer.resolve();
    const auto paths = inputs.resolve();
    if (!embeddings.empty() && paths.size() != 1)
      throw UsageError("--embeddings applies to a single --scene");
    // Load and validate every input before writing anything.
    std::vector<std::pair<Scene, EmbeddingTable>> loaded;
    for (const auto& path : paths) {
      Scene scene = load_scene(path);
      scorer.check_threshold(scene);
      EmbeddingTable emb;
      if (cfg.mode != ScorerMode::kHomography) {
        const fs::path side = embeddings.empty() ? sidecar_for(path) : fs::path(embeddings);
        emb = load_embeddings(side, scene);
      }
      loaded.emplace_back(std::move(scene), std::move(emb));
    }
    fs::create_directories(out);
    for (const auto& [scene, emb] : loaded) {
      const SceneAssociation sa{scene.scene_id, associate_scene(scene, emb, cfg, g.jobs)};
      const fs::path dest = fs::path(out) / (scene.scene_id + ".assoc.json");
      save_association(sa, dest);
      if (load_association(dest).pairs.size() != sa.pairs.size())
        throw FormatError(dest.string() + ": read-back does not match what was written");
      std::cerr << "wrote " << dest.string() << "\n";
    }
    return 0;
  }
};

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateCmd {
  SceneInputs inputs;
  EvalFlags eval;
  std::vector<std::string> assoc;
  std::string assoc_dir;
  std::string out;

  int run(const Globals& g) const {
    const auto paths = inputs.resolve();
    std::map<std::string, Scene> scenes;
    for (const auto& p : paths) {
      Scene s = load_scene(p);
      const std::string id = s.scene_id;
      if (!scenes.emplace(id, std::move(s)).second)
        throw SchemaError("scene " + id + " given twice");
    }
    std::vector<fs::path> files(assoc.begin(), assoc.end());
    if (!assoc_dir.empty()) {
      if (!fs::is_directory(assoc_dir)) throw Error("cannot open " + assoc_dir);
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(assoc_dir)) {
        const auto name = e.path().filename().string();
        if (name.size() > 11 && name.ends_with(".assoc.json")) found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    }
    if (files.empty()) throw UsageError("no association files (use --assoc or --assoc-dir)");
    std::map<std::string, SceneAssociation> assocs;
    for (const auto& f : files) {
      SceneAssociation sa = load_association(f);
      if (!scenes.contains(sa.scene_id))
        throw InvariantError(f.string() + ": no ground truth for scene " + sa.scene_id);
      const std::string id = sa.scene_id;
      if (!assocs.emplace(id, std::move(sa)).second)
        throw SchemaError("association for scene " + id + " given twice");
    }
    std::vector<std::pair<const Scene*, const SceneAssociation*>> joined;
    for (const auto& [id, sa] : assocs) joined.emplace_back(&scenes.at(id), &sa);
    const EvalOptions opt = eval.resolve();
    const auto report = make_report(evaluate_pairs(joined, opt), opt.bin_width, opt.ap_mode);
    write_output(g.format == "csv" ? report_to_csv(report) : report_to_json(report).dump(2) + "\n",
                 out);
    return 0;
  }
};

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepCmd {
  SceneInputs inputs;
  SimOptions sim;
  ScorerOptions scorer;
  EvalFlags eval;
  std::string seeds;
  std::string param = "threshold";
  std::vector<double> values;
  std::string out;

  void add(CLI::App* app) {
    app->add_option("--param", param, "Swept parameter: zoom-out, epipolar-weight or threshold")
        ->check(CLI::IsMember({"zoom-out", "epipolar-weight", "threshold"}))
        ->capture_default_str();
    app->add_option("--values", values, "Grid values")->delimiter(',')->required();
    app->add_option("--seeds", seeds, "Synthetic seed range A..B when no scenes are given");
    app->add_option("--out", out, "Output file (default stdout)");
  }

  struct Source {
    Scene scene;
    EmbeddingTable embeddings;
    std::optional<SyntheticScene> sim;  // kept so embeddings can be regenerated
  };

  int run(const Globals& g) const {
    if (values.empty()) throw UsageError("empty sweep grid");
    const ScorerConfig base = scorer.resolve();
    std::vector<Source> sources;
    if (!inputs.scenes.empty() || !inputs.manifest.empty()) {
      if (param == "zoom-out")
        throw UsageError("a zoom-out sweep regenerates surrounding vectors and needs "
                         "synthetic scenes (use --seeds)");
      for (const auto& p : inputs.resolve()) {
        Source s;
        s.scene = load_scene(p);
        if (param != "threshold") scorer.check_threshold(s.scene);
        if (base.mode != ScorerMode::kHomography)
          s.embeddings = load_embeddings(sidecar_for(p), s.scene);
        sources.push_back(std::move(s));
      }
    } else {
      const auto list = seeds.empty() ? std::vector<std::uint64_t>{g.seed} : parse_seed_range(seeds);
      for (auto seed : list) {
        auto made = generate_scene(sim.resolve(seed));
        sources.push_back({made.scene, made.embeddings, std::move(made)});
      }
    }

    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    std::string csv = "param,value,pairs,matches,ap,fpr95,ipaa100,ipaa90,ipaa80\n";
    const EvalOptions opt = eval.resolve();
    for (double v : values) {
      ScorerConfig cfg = base;
      if (param == "threshold") cfg.threshold = v;
      if (param == "epipolar-weight") {
        cfg.use_epipolar = true;
        cfg.epipolar_weight = v;
      }
      if (param == "zoom-out") cfg.zoom_out_ratio = v;
      try {
        cfg.validate();
      } catch (const ConfigError& e) {
        throw UsageError(std::string(e.what()) + " (value " + std::to_string(v) + ")");
      }
      std::vector<SceneAssociation> assocs;
      std::vector<Scene> scenes;
      for (const auto& s : sources) {
        EmbeddingTable emb = s.embeddings;
        if (param == "zoom-out") {
          OracleOptions o = default_oracle_options(s.sim->config);
          o.surround_ratio = v;
          emb = oracle_embeddings(s.scene, s.sim->objects, o);
        }
        assocs.push_back({s.scene.scene_id, associate_scene(s.scene, emb, cfg, g.jobs)});
      }
      std::vector<std::pair<const Scene*, const SceneAssociation*>> joined;
      std::size_t matches = 0;
      for (std::size_t k = 0; k < sources.size(); ++k) {
        joined.emplace_back(&sources[k].scene, &assocs[k]);
        for (const auto& [key, p] : assocs[k].pairs) matches += p.result.matches.size();
      }
      const auto r = make_report(evaluate_pairs(joined, opt), opt.bin_width, opt.ap_mode);
      nlohmann::ordered_json row;
      row["param"] = param;
      row["value"] = v;
      row["pairs"] = r.pairs;
      row["matches"] = matches;
      row["ap"] = r.ap ? nlohmann::ordered_json(*r.ap) : nlohmann::ordered_json(nullptr);
      row["fpr95"] = r.fpr95 ? nlohmann::ordered_json(*r.fpr95) : nlohmann::ordered_json(nullptr);
      for (const auto& ip : r.ipaa) row["ipaa" + std::to_string(ip.percent)] = ip.value;
      std::string line;
      for (const auto& [k, x] : row.items()) {
        if (!line.empty()) line += ",";
        line += x.is_string() ? x.get<std::string>() : (x.is_null() ? "" : x.dump());
      }
      csv += line + "\n";
      rows.push_back(std::move(row));
    }
    write_output(g.format == "csv" ? csv : rows.dump(2) + "\n", out);
    return 0;
  }
};

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

struct ValidateCmd {
  std::string scene;
  std::string embeddings;
  std::vector<std::string> assoc;
  bool no_embeddings = false;

  int run(const Globals&) const {
    const Scene s = load_scene(scene);
    std::ostringstream msg;
    msg << "scene " << s.scene_id << ": " << s.views.size() << " views, " << s.instance_count()
        << " instances";
    if (!no_embeddings) {
      const fs::path side = embeddings.empty() ? sidecar_for(scene) : fs::path(embeddings);
      const auto emb = load_embeddings(side, s);
      std::size_t missing = 0;
      for (const auto& v : s.views)
        for (const auto& b : v.instances)
          missing += emb.find({v.camera.camera_id, b.instance_id}) ? 0 : 1;
      if (missing > 0) {
        throw MissingEmbeddingError(side.string() + ": " + std::to_string(missing) +
                                    " instances have no embedding");
      }
      msg << "; sidecar " << side.string() << ": " << emb.size() << " records, dim "
          << emb.dim();
    }
    for (const auto& a : assoc) {
      const auto sa = load_association(a);
      // Evaluation performs every consistency check against the scene.
      EvalOptions opt;
      opt.normalization = Normalization::kPerPair;
      evaluate_scene(s, sa, opt);
      msg << "; " << a << ": " << sa.pairs.size() << " pairs";
    }
    std::cout << "ok: " << msg.str() << "\n";
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-view instance association: synthesize, associate, evaluate."};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Seed when no --seeds range is given")->capture_default_str();
  app.add_option("--format", g.format, "Report format: json or csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  SynthCmd synth;
  auto* synth_app = app.add_subcommand("synth", "Generate synthetic scenes and sidecars");
  synth.sim.add(synth_app);
  synth_app->add_option("--seeds", synth.seeds, "Seed range A..B (half-open)");
  synth_app->add_option("--out", synth.out, "Output directory")->required();

  AssociateCmd associate;
  auto* assoc_app = app.add_subcommand("associate", "Associate instances across views");
  associate.inputs.add(assoc_app);
  associate.scorer.add(assoc_app);
  assoc_app->add_option("--embeddings", associate.embeddings,
                        "Sidecar for a single scene (default: scene path with .mteb)");
  assoc_app->add_option("--out", associate.out, "Output directory")->required();

  EvaluateCmd evaluate;
  auto* eval_app = app.add_subcommand("evaluate", "Score associations against ground truth");
  evaluate.inputs.add(eval_app);
  evaluate.eval.add(eval_app);
  eval_app->add_option("--assoc", evaluate.assoc, "Association JSON (repeatable)");
  eval_app->add_option("--assoc-dir", evaluate.assoc_dir, "Directory of *.assoc.json files");
  eval_app->add_option("--out", evaluate.out, "Output file (default stdout)");

  SweepCmd sweep;
  auto* sweep_app = app.add_subcommand("sweep", "Grid-sweep one association parameter");
  sweep.inputs.add(sweep_app);
  sweep.sim.add(sweep_app);
  sweep.scorer.add(sweep_app);
  sweep.eval.add(sweep_app);
  sweep.add(sweep_app);

  ValidateCmd validate;
  auto* val_app = app.add_subcommand("validate", "Check a scene, its sidecar and associations");
  val_app->add_option("--scene", validate.scene, "Scene JSON")->required();
  val_app->add_option("--embeddings", validate.embeddings,
                      "Sidecar (default: scene path with .mteb)");
  val_app->add_flag("--no-embeddings", validate.no_embeddings, "Skip the sidecar check");
  val_app->add_option("--assoc", validate.assoc, "Association JSON to check (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*synth_app) return synth.run(g);
    if (*assoc_app) return associate.run(g);
    if (*eval_app) return evaluate.run(g);
    if (*sweep_app) return sweep.run(g);
    if (*val_app) return validate.run(g);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
