// vma: command-line front end for the annotation pipeline.
//
// Exit codes: 0 success, 1 processing failure, 2 usage error or bad input
// (missing path, malformed document).

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vma/http_service.hpp"
#include "vma/vma.hpp"

namespace fs = std::filesystem;

namespace {

void require_exists(const fs::path& p) {
  if (!fs::exists(p)) throw vma::Error(vma::ErrorCode::Io, "input path '" + p.string() + "' does not exist");
}

vma::ParseMode parse_mode(bool lenient) { return lenient ? vma::ParseMode::Lenient : vma::ParseMode::Strict; }

std::vector<double> parse_thresholds(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw vma::Error(vma::ErrorCode::InvalidArgument, "bad threshold '" + item + "'");
    }
  }
  return out;
}

httplib::Server* g_server = nullptr;

void stop_server(int) {
  if (g_server != nullptr) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Divide-and-conquer vectorized map annotation"};
  app.require_subcommand(1);
  bool lenient = false;
  app.add_flag("--lenient", lenient, "Ignore unknown JSON fields instead of rejecting them");

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a synthetic ground-truth scene");
  std::string gen_spec, gen_map = "gt.json", gen_traj = "traj.json";
  gen->add_option("--spec", gen_spec, "SceneSpec JSON")->required();
  gen->add_option("--out-map", gen_map, "Ground-truth map output");
  gen->add_option("--out-traj", gen_traj, "Trajectory output");

  // split
  auto* split = app.add_subcommand("split", "Cut a map into annotation units along a trajectory");
  std::string split_map, split_traj, split_out = "units";
  vma::SplitConfig split_cfg;
  split->add_option("--map", split_map, "Global map")->required();
  split->add_option("--traj", split_traj, "Trajectory")->required();
  split->add_option("--extent", split_cfg.extent, "Unit side length (m)");
  split->add_option("--stride", split_cfg.stride, "Distance between unit centres (m)");
  split->add_flag("--axis-aligned", split_cfg.axis_aligned, "Keep units aligned with the global axes");
  split->add_option("--out", split_out, "Output directory");

  // annotate
  auto* annot = app.add_subcommand("annotate", "Annotate every unit");
  std::string annot_units, annot_out = "annotated", annot_exec, annot_conf = "noise_coupled";
  bool annot_oracle = false;
  vma::AnnotatorConfig annot_cfg;
  annot->add_option("--units", annot_units, "Directory of unit documents")->required();
  annot->add_flag("--oracle", annot_oracle, "Use the noisy oracle annotator (default)");
  annot->add_option("--exec", annot_exec, "External annotator command (JSON lines on stdin/stdout)");
  annot->add_option("--sigma", annot_cfg.jitter_sigma, "Point jitter standard deviation (m)");
  annot->add_option("--drop", annot_cfg.drop_prob, "Element drop probability");
  annot->add_option("--spurious", annot_cfg.spurious_rate, "Mean spurious elements per unit");
  annot->add_option("--flip", annot_cfg.attr_flip_prob, "Attribute flip probability");
  annot->add_option("--confidence", annot_conf, "Confidence model: noise_coupled|constant");
  annot->add_option("--seed", annot_cfg.rng_seed, "Random seed");
  annot->add_option("--out", annot_out, "Output directory");

  // merge
  auto* merge = app.add_subcommand("merge", "Merge annotated units into one global map");
  std::string merge_units, merge_out = "merged.json";
  vma::MergeConfig merge_cfg;
  merge->add_option("--units", merge_units, "Directory of annotated unit maps")->required();
  merge->add_option("--theta-line", merge_cfg.theta_line, "Minimum line overlap (m)");
  merge->add_option("--eps-lateral", merge_cfg.eps_lateral, "Lateral tolerance (m)");
  merge->add_option("--delta-discrete", merge_cfg.delta_discrete, "Discrete chamfer distance (m)");
  merge->add_option("--delta-area", merge_cfg.delta_area, "Area IoU threshold");
  merge->add_option("--delta-containment", merge_cfg.delta_containment, "Area containment threshold");
  merge->add_option("--out", merge_out, "Merged map output");

  // sparsify
  auto* sparse = app.add_subcommand("sparsify", "Douglas-Peucker point reduction");
  std::string sparse_map, sparse_out = "final.json";
  vma::SparsifyConfig sparse_cfg;
  sparse->add_option("--map", sparse_map, "Input map")->required();
  sparse->add_option("--epsilon", sparse_cfg.epsilon, "Tolerance (m)");
  sparse->add_option("--out", sparse_out, "Output map");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a predicted map against ground truth");
  std::string eval_pred, eval_gt, eval_report, eval_thresholds, eval_format = "json";
  vma::EvalConfig eval_cfg;
  eval->add_option("--pred", eval_pred, "Predicted map")->required();
  eval->add_option("--gt", eval_gt, "Ground-truth map")->required();
  eval->add_option("--resolution", eval_cfg.raster.resolution, "Metres per pixel");
  eval->add_option("--thresholds", eval_thresholds, "Comma-separated distance thresholds");
  eval->add_option("--apls-pairs", eval_cfg.apls.num_pairs, "Sampled node pairs for APLS");
  eval->add_option("--apls-seed", eval_cfg.apls.seed, "Seed for APLS pair sampling");
  eval->add_option("--report", eval_report, "Write the JSON report here");
  eval->add_option("--format", eval_format, "Console output: json|table")->check(CLI::IsMember({"json", "table"}));

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Run split, annotate, merge, sparsify and eval");
  std::string pipe_config, pipe_out;
  std::optional<std::uint64_t> pipe_seed;
  pipe->add_option("--config", pipe_config, "PipelineConfig JSON")->required();
  pipe->add_option("--out", pipe_out, "Override the output directory");
  pipe->add_option("--seed", pipe_seed, "Override the seed");

  // serve
  auto* serve = app.add_subcommand("serve", "Serve a map to the verification client");
  std::string serve_map, serve_report, serve_export, serve_journal, serve_host = "127.0.0.1";
  int serve_port = 8080;
  serve->add_option("--map", serve_map, "Map to verify")->required();
  serve->add_option("--port", serve_port, "TCP port (0 picks a free one)");
  serve->add_option("--host", serve_host, "Bind address");
  serve->add_option("--report", serve_report, "EvalReport JSON (default: report.json next to the map)");
  serve->add_option("--export-dir", serve_export, "Where POST /export writes (default: <map dir>/verified)");
  serve->add_option("--journal", serve_journal, "Mutation journal (default: <export dir>/journal.jsonl)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const auto mode = parse_mode(lenient);

  try {
    if (*gen) {
      require_exists(gen_spec);
      const auto scene = vma::generate_scene(vma::scene_spec_from_json(vma::read_json_file(gen_spec), mode));
      vma::write_map(gen_map, scene.map);
      vma::write_json_file(gen_traj, vma::trajectory_to_json(scene.trajectory));
      vma::log::info("generated ", scene.map.size(), " elements");
    } else if (*split) {
      require_exists(split_map);
      require_exists(split_traj);
      split_cfg.validate();
      const auto map = vma::read_map(split_map, mode);
      const auto traj = vma::trajectory_from_json(vma::read_json_file(split_traj), mode);
      const auto units = vma::split_scene(map, traj, split_cfg.extent, split_cfg.stride, split_cfg.axis_aligned);
      vma::write_units(split_out, units);
      vma::log::info("wrote ", units.size(), " units to ", split_out);
    } else if (*annot) {
      require_exists(annot_units);
      if (annot_oracle && !annot_exec.empty())
        throw vma::Error(vma::ErrorCode::InvalidArgument, "--oracle and --exec are mutually exclusive");
      if (annot_conf == "constant") annot_cfg.confidence_model = vma::ConfidenceModel::Constant;
      else if (annot_conf != "noise_coupled")
        throw vma::Error(vma::ErrorCode::InvalidArgument, "unknown confidence model '" + annot_conf + "'");
      const auto units = vma::read_units(annot_units, mode);
      std::unique_ptr<vma::Annotator> annotator;
      if (annot_exec.empty()) annotator = std::make_unique<vma::OracleAnnotator>(annot_cfg);
      else annotator = std::make_unique<vma::SubprocessAnnotator>(annot_exec, mode);
      const auto maps = annotator->annotate_all(units);
      vma::write_unit_maps(annot_out, units, maps);
    } else if (*merge) {
      require_exists(merge_units);
      merge_cfg.validate();
      vma::write_map(merge_out, vma::merge_unit_maps(vma::read_unit_maps(merge_units, mode), merge_cfg));
    } else if (*sparse) {
      require_exists(sparse_map);
      vma::write_map(sparse_out, vma::sparsify_map(vma::read_map(sparse_map, mode), sparse_cfg));
    } else if (*eval) {
      require_exists(eval_pred);
      require_exists(eval_gt);
      if (!eval_thresholds.empty()) eval_cfg.raster.thresholds = parse_thresholds(eval_thresholds);
      const auto report = vma::evaluate(vma::read_map(eval_pred, mode), vma::read_map(eval_gt, mode), eval_cfg);
      const auto doc = vma::report_to_json(report);
      if (!eval_report.empty()) vma::write_json_file(eval_report, doc);
      if (eval_format == "table") std::cout << vma::report_table(report);
      else if (eval_report.empty()) std::cout << vma::dump_json(doc);
    } else if (*pipe) {
      auto cfg = vma::load_pipeline_config(pipe_config, mode);
      if (!pipe_out.empty()) cfg.out_dir = pipe_out;
      if (pipe_seed) cfg.seed = *pipe_seed;
      if (lenient) cfg.lenient = true;
      const auto result = vma::run_pipeline(cfg);
      std::cout << vma::report_table(result.report);
    } else if (*serve) {
      require_exists(serve_map);
      const fs::path map_path = serve_map;
      const fs::path base = map_path.has_parent_path() ? map_path.parent_path() : fs::path(".");
      std::optional<vma::json> report;
      fs::path report_path = serve_report.empty() ? base / "report.json" : fs::path(serve_report);
      if (!serve_report.empty()) require_exists(report_path);
      if (fs::exists(report_path)) report = vma::read_json_file(report_path);
      const fs::path export_dir = serve_export.empty() ? base / "verified" : fs::path(serve_export);
      const fs::path journal = serve_journal.empty() ? export_dir / "journal.jsonl" : fs::path(serve_journal);
      vma::VerificationSession session(vma::read_map(map_path, mode), journal, report, map_path.string());

      httplib::Server server;
      vma::register_routes(server, session, export_dir);
      g_server = &server;
      std::signal(SIGINT, stop_server);
      std::signal(SIGTERM, stop_server);
      int port = serve_port;
      if (port == 0) {
        port = server.bind_to_any_port(serve_host);
      } else if (!server.bind_to_port(serve_host, port)) {
        port = -1;
      }
      if (port < 0) throw vma::Error(vma::ErrorCode::Io, "cannot bind " + serve_host + ":" + std::to_string(serve_port));
      std::cout << "listening on http://" << serve_host << ":" << port << std::endl;
      server.listen_after_bind();
      g_server = nullptr;
    }
  } catch (const vma::Error& e) {
    std::cerr << "vma: " << e.what() << '\n';
    switch (e.code()) {
      case vma::ErrorCode::Io:
      case vma::ErrorCode::Parse:
      case vma::ErrorCode::InvalidArgument: return 2;
      default: return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "vma: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
