#ifndef VMA_PIPELINE_HPP_
#define VMA_PIPELINE_HPP_

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vma/annotator.hpp"
#include "vma/merge.hpp"
#include "vma/metrics.hpp"
#include "vma/sparsify.hpp"
#include "vma/synthgen.hpp"

namespace vma {

inline constexpr const char* kToolVersion = "0.1.0";

struct SplitConfig {
  double extent = 50.0;
  double stride = 25.0;
  bool axis_aligned = false;

  void validate() const {
    if (!(extent > 0.0)) throw Error(ErrorCode::InvalidArgument, "extent must be positive");
    if (!(stride > 0.0)) throw Error(ErrorCode::InvalidArgument, "stride must be positive");
  }
};

/// Everything one end-to-end run needs. Input is either a synthetic scene
/// spec or a ground-truth map plus trajectory on disk.
struct PipelineConfig {
  std::optional<SceneSpec> scene;
  std::filesystem::path map_path;
  std::filesystem::path traj_path;
  SplitConfig split;
  AnnotatorConfig annotator;
  std::string annotator_exec;  // non-empty: external annotator command instead of the oracle
  MergeConfig merge;
  SparsifyConfig sparsify;
  EvalConfig eval;
  std::filesystem::path out_dir = "vma-run";
  std::uint64_t seed = 0;
  bool lenient = false;

  void validate() const {
    if (scene) {
      if (!map_path.empty() || !traj_path.empty())
        throw Error(ErrorCode::InvalidArgument, "config gives both a scene spec and input paths");
      scene->validate();
    } else {
      if (map_path.empty() || traj_path.empty())
        throw Error(ErrorCode::InvalidArgument, "config needs a scene spec or both map and trajectory paths");
      for (const auto& p : {map_path, traj_path})
        if (!std::filesystem::exists(p)) throw Error(ErrorCode::Io, "input path '" + p.string() + "' does not exist");
    }
    if (out_dir.empty()) throw Error(ErrorCode::InvalidArgument, "output directory is empty");
    split.validate();
    if (annotator_exec.empty()) {
      AnnotatorConfig a = annotator;
      a.rng_seed = seed;
      a.validate();
    }
    merge.validate();
    sparsify.validate();
    eval.raster.validate();
  }
};

inline json pipeline_config_to_json(const PipelineConfig& c) {
  json j;
  j["schema_version"] = kSchemaVersion;
  if (c.scene) {
    j["scene"] = scene_spec_to_json(*c.scene);
  } else {
    j["map"] = c.map_path.string();
    j["trajectory"] = c.traj_path.string();
  }
  j["split"] = {{"extent", c.split.extent}, {"stride", c.split.stride}, {"axis_aligned", c.split.axis_aligned}};
  if (!c.annotator_exec.empty()) {
    j["annotator"] = {{"type", "exec"}, {"command", c.annotator_exec}};
  } else {
    const auto& a = c.annotator;
    j["annotator"] = {{"type", "oracle"},
                      {"jitter_sigma", a.jitter_sigma},
                      {"drop_prob", a.drop_prob},
                      {"spurious_rate", a.spurious_rate},
                      {"attr_flip_prob", a.attr_flip_prob},
                      {"confidence", a.confidence_model == ConfidenceModel::Constant ? "constant" : "noise_coupled"},
                      {"constant_confidence", a.constant_confidence},
                      {"num_points", a.num_points}};
  }
  const auto& m = c.merge;
  j["merge"] = {{"theta_line", m.theta_line},         {"eps_lateral", m.eps_lateral}, {"delta_discrete", m.delta_discrete},
                {"delta_area", m.delta_area},         {"delta_containment", m.delta_containment}};
  j["sparsify"] = {{"epsilon", c.sparsify.epsilon}};
  const auto& e = c.eval;
  j["eval"] = {{"resolution", e.raster.resolution}, {"thresholds", e.raster.thresholds},
               {"apls_pairs", e.apls.num_pairs},    {"snap_radius", e.apls.snap_radius},
               {"junction_radius", e.apls.junction_radius}, {"apls_seed", e.apls.seed},
               {"match_points", e.match_points}};
  j["out"] = c.out_dir.string();
  j["seed"] = c.seed;
  j["lenient"] = c.lenient;
  return j;
}

inline PipelineConfig pipeline_config_from_json(const json& j, ParseMode mode = ParseMode::Strict) {
  using namespace json_detail;
  if (!j.is_object()) throw Error(ErrorCode::Parse, "pipeline config must be a JSON object");
  check_keys(j, {"schema_version", "scene", "map", "trajectory", "split", "annotator", "merge", "sparsify", "eval", "out",
                 "seed", "lenient"},
             mode, "pipeline config");
  check_schema_version(j);
  PipelineConfig c;
  auto num = [](const json& obj, const char* key, double& dst) {
    if (auto it = obj.find(key); it != obj.end()) dst = number(*it, key);
  };
  auto count = [](const json& obj, const char* key, auto& dst) {
    if (auto it = obj.find(key); it != obj.end()) {
      if (!it->is_number_integer() || it->template get<std::int64_t>() < 0)
        throw Error(ErrorCode::Parse, std::string(key) + " must be a non-negative integer");
      dst = it->template get<std::remove_reference_t<decltype(dst)>>();
    }
  };
  auto flag = [](const json& obj, const char* key, bool& dst) {
    if (auto it = obj.find(key); it != obj.end()) {
      if (!it->is_boolean()) throw Error(ErrorCode::Parse, std::string(key) + " must be a boolean");
      dst = it->get<bool>();
    }
  };

  if (auto it = j.find("scene"); it != j.end()) c.scene = scene_spec_from_json(*it, mode);
  if (auto it = j.find("map"); it != j.end()) c.map_path = string(*it, "map");
  if (auto it = j.find("trajectory"); it != j.end()) c.traj_path = string(*it, "trajectory");
  if (auto it = j.find("split"); it != j.end()) {
    check_keys(*it, {"extent", "stride", "axis_aligned"}, mode, "split");
    num(*it, "extent", c.split.extent);
    num(*it, "stride", c.split.stride);
    flag(*it, "axis_aligned", c.split.axis_aligned);
  }
  if (auto it = j.find("annotator"); it != j.end()) {
    const auto& a = *it;
    const std::string type = a.contains("type") ? string(a["type"], "annotator type") : "oracle";
    if (type == "exec") {
      check_keys(a, {"type", "command"}, mode, "annotator");
      c.annotator_exec = string(require(a, "command", "annotator"), "command");
      if (c.annotator_exec.empty()) throw Error(ErrorCode::Parse, "annotator command is empty");
    } else if (type == "oracle") {
      check_keys(a,
                 {"type", "jitter_sigma", "drop_prob", "spurious_rate", "attr_flip_prob", "confidence",
                  "constant_confidence", "num_points"},
                 mode, "annotator");
      num(a, "jitter_sigma", c.annotator.jitter_sigma);
      num(a, "drop_prob", c.annotator.drop_prob);
      num(a, "spurious_rate", c.annotator.spurious_rate);
      num(a, "attr_flip_prob", c.annotator.attr_flip_prob);
      num(a, "constant_confidence", c.annotator.constant_confidence);
      count(a, "num_points", c.annotator.num_points);
      if (auto m = a.find("confidence"); m != a.end()) {
        const auto name = string(*m, "confidence");
        if (name == "constant") c.annotator.confidence_model = ConfidenceModel::Constant;
        else if (name == "noise_coupled") c.annotator.confidence_model = ConfidenceModel::NoiseCoupled;
        else throw Error(ErrorCode::Parse, "unknown confidence model '" + name + "'");
      }
    } else {
      throw Error(ErrorCode::Parse, "unknown annotator type '" + type + "'");
    }
  }
  if (auto it = j.find("merge"); it != j.end()) {
    check_keys(*it, {"theta_line", "eps_lateral", "delta_discrete", "delta_area", "delta_containment"}, mode, "merge");
    num(*it, "theta_line", c.merge.theta_line);
    num(*it, "eps_lateral", c.merge.eps_lateral);
    num(*it, "delta_discrete", c.merge.delta_discrete);
    num(*it, "delta_area", c.merge.delta_area);
    num(*it, "delta_containment", c.merge.delta_containment);
  }
  if (auto it = j.find("sparsify"); it != j.end()) {
    check_keys(*it, {"epsilon"}, mode, "sparsify");
    num(*it, "epsilon", c.sparsify.epsilon);
  }
  if (auto it = j.find("eval"); it != j.end()) {
    const auto& e = *it;
    check_keys(e, {"resolution", "thresholds", "apls_pairs", "snap_radius", "junction_radius", "apls_seed", "match_points"},
               mode, "eval");
    num(e, "resolution", c.eval.raster.resolution);
    if (auto t = e.find("thresholds"); t != e.end()) {
      if (!t->is_array()) throw Error(ErrorCode::Parse, "thresholds must be an array");
      c.eval.raster.thresholds.clear();
      for (const auto& v : *t) c.eval.raster.thresholds.push_back(number(v, "threshold"));
    }
    count(e, "apls_pairs", c.eval.apls.num_pairs);
    num(e, "snap_radius", c.eval.apls.snap_radius);
    num(e, "junction_radius", c.eval.apls.junction_radius);
    count(e, "apls_seed", c.eval.apls.seed);
    count(e, "match_points", c.eval.match_points);
  }
  if (auto it = j.find("out"); it != j.end()) c.out_dir = string(*it, "out");
  count(j, "seed", c.seed);
  flag(j, "lenient", c.lenient);
  return c;
}

/// Loads a config file. Relative paths inside it resolve against the
/// current working directory, like the equivalent command-line flags.
inline PipelineConfig load_pipeline_config(const std::filesystem::path& path, ParseMode mode = ParseMode::Strict) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::Io, "input path '" + path.string() + "' does not exist");
  return pipeline_config_from_json(read_json_file(path), mode);
}

// ---- Run manifest ------------------------------------------------------------

struct StageRecord {
  std::string name;
  double seconds = 0.0;
  std::size_t elements_in = 0;
  std::size_t elements_out = 0;
};

struct RunManifest {
  std::string tool_version = kToolVersion;
  std::string config_hash;
  std::vector<StageRecord> stages;
  std::map<std::string, std::string> element_status;  // final element id -> auto|accepted|edited|deleted
  bool completed = false;
  std::string error;
};

inline json manifest_to_json(const RunManifest& m) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["tool_version"] = m.tool_version;
  j["config_hash"] = m.config_hash;
  json stages = json::array();
  for (const auto& s : m.stages)
    stages.push_back({{"name", s.name},
                      {"wall_seconds", s.seconds},
                      {"elements_in", s.elements_in},
                      {"elements_out", s.elements_out}});
  j["stages"] = std::move(stages);
  j["element_status"] = m.element_status;
  j["completed"] = m.completed;
  if (!m.error.empty()) j["error"] = m.error;
  return j;
}

inline std::string config_hash(const PipelineConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(oracle_detail::fnv1a(pipeline_config_to_json(c).dump())));
  return buf;
}

// ---- Stage artifacts -------------------------------------------------------------

/// Files of one directory with the given extension, in name order.
inline std::vector<std::filesystem::path> list_json_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw Error(ErrorCode::Io, "input path '" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

inline void reset_directory(const std::filesystem::path& dir) {
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
}

inline void write_units(const std::filesystem::path& dir, const std::vector<AnnotationUnit>& units) {
  reset_directory(dir);
  for (const auto& u : units) write_json_file(dir / (u.id + ".json"), unit_to_json(u));
}

inline std::vector<AnnotationUnit> read_units(const std::filesystem::path& dir, ParseMode mode = ParseMode::Strict) {
  std::vector<AnnotationUnit> units;
  for (const auto& f : list_json_files(dir)) units.push_back(unit_from_json(read_json_file(f), mode));
  return units;
}

/// Annotated maps stay in their unit frame; the file name is the unit id.
inline void write_unit_maps(const std::filesystem::path& dir, const std::vector<AnnotationUnit>& units,
                            const std::vector<VectorizedMap>& maps) {
  reset_directory(dir);
  for (std::size_t i = 0; i < units.size(); ++i) write_map(dir / (units[i].id + ".json"), maps[i]);
}

inline std::vector<VectorizedMap> read_unit_maps(const std::filesystem::path& dir, ParseMode mode = ParseMode::Strict) {
  std::vector<VectorizedMap> maps;
  for (const auto& f : list_json_files(dir)) maps.push_back(read_map(f, mode));
  return maps;
}

/// Brings unit-frame maps into the global frame and merges them in order.
inline VectorizedMap merge_unit_maps(const std::vector<VectorizedMap>& unit_maps, const MergeConfig& cfg) {
  std::vector<VectorizedMap> global;
  global.reserve(unit_maps.size());
  for (const auto& m : unit_maps) global.push_back(to_global(m));
  return merge_all(global, cfg);
}

inline std::size_t element_count(const std::vector<AnnotationUnit>& units) {
  std::size_t n = 0;
  for (const auto& u : units) n += u.local.size();
  return n;
}

inline std::size_t element_count(const std::vector<VectorizedMap>& maps) {
  std::size_t n = 0;
  for (const auto& m : maps) n += m.size();
  return n;
}

inline std::unique_ptr<Annotator> make_annotator(const PipelineConfig& cfg) {
  if (!cfg.annotator_exec.empty())
    return std::make_unique<SubprocessAnnotator>(cfg.annotator_exec, cfg.lenient ? ParseMode::Lenient : ParseMode::Strict);
  AnnotatorConfig a = cfg.annotator;
  a.rng_seed = cfg.seed;
  return std::make_unique<OracleAnnotator>(a);
}

struct PipelineResult {
  RunManifest manifest;
  VectorizedMap gt;
  VectorizedMap merged;
  VectorizedMap final_map;
  EvalReport report;
};

/// Runs split -> annotate -> merge -> sparsify -> eval and writes every
/// artifact under cfg.out_dir:
///   gt.json traj.json units/ annotated/ merged.json final.json report.json manifest.json
/// On failure the manifest is still written (completed = false) and the
/// error is rethrown.
inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  const auto& out = cfg.out_dir;
  std::filesystem::create_directories(out);
  PipelineResult result;
  auto& manifest = result.manifest;
  manifest.config_hash = config_hash(cfg);
  const ParseMode mode = cfg.lenient ? ParseMode::Lenient : ParseMode::Strict;

  auto timed = [&](const char* name, std::size_t in, auto&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    StageRecord rec{name, 0.0, in, 0};
    rec.elements_out = body();
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log::info("stage ", name, ": ", rec.elements_in, " -> ", rec.elements_out, " elements in ", rec.seconds, " s");
    manifest.stages.push_back(rec);
  };

  try {
    Trajectory traj;
    if (cfg.scene) {
      Scene scene = generate_scene(*cfg.scene);
      result.gt = std::move(scene.map);
      traj = std::move(scene.trajectory);
    } else {
      result.gt = read_map(cfg.map_path, mode);
      traj = trajectory_from_json(read_json_file(cfg.traj_path), mode);
    }
    write_map(out / "gt.json", result.gt);
    write_json_file(out / "traj.json", trajectory_to_json(traj));

    std::vector<AnnotationUnit> units;
    timed("split", result.gt.size(), [&] {
      units = split_scene(result.gt, traj, cfg.split.extent, cfg.split.stride, cfg.split.axis_aligned);
      write_units(out / "units", units);
      return element_count(units);
    });

    std::vector<VectorizedMap> annotated;
    timed("annotate", element_count(units), [&] {
      annotated = make_annotator(cfg)->annotate_all(units);
      write_unit_maps(out / "annotated", units, annotated);
      return element_count(annotated);
    });

    timed("merge", element_count(annotated), [&] {
      result.merged = merge_unit_maps(annotated, cfg.merge);
      write_map(out / "merged.json", result.merged);
      return result.merged.size();
    });

    timed("sparsify", result.merged.size(), [&] {
      result.final_map = sparsify_map(result.merged, cfg.sparsify);
      write_map(out / "final.json", result.final_map);
      return result.final_map.size();
    });

    timed("eval", result.final_map.size(), [&] {
      result.report = evaluate(result.final_map, result.gt, cfg.eval);
      write_json_file(out / "report.json", report_to_json(result.report));
      return result.final_map.size();
    });

    for (const auto& e : result.final_map.elements()) manifest.element_status[e.id()] = "auto";
    manifest.completed = true;
  } catch (const std::exception& ex) {
    manifest.error = ex.what();
    write_json_file(out / "manifest.json", manifest_to_json(manifest));
    throw;
  }
  write_json_file(out / "manifest.json", manifest_to_json(manifest));
  return result;
}

}  // namespace vma

#endif  // VMA_PIPELINE_HPP_
