// pmap: probability-map text segmentation toolbox.
//
// Subcommands compose the library: gen-labels, synth, reconstruct, filter,
// contours, eval, bench, pipeline. Exit code 0 on success, 2 on validation
// errors (bad flags, bad files, bad geometry).

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pmap/io.hpp"
#include "pmap/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string preset;
  int threads = 0;
  bool json_output = false;
};

int parse_int(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const int value = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw pmap::Error(what + ": expected an integer, got '" + text + "'");
  }
}

double parse_double(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw pmap::Error(what + ": expected a number, got '" + text + "'");
  }
}

pmap::Grid parse_grid(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos) {
    throw pmap::Error("grid must look like WxH, got '" + text + "'");
  }
  return pmap::Grid(parse_int(text.substr(0, x), "grid width"),
                    parse_int(text.substr(x + 1), "grid height"));
}

pmap::NoiseSpec parse_noise(const std::string& text) {
  pmap::NoiseSpec noise;
  if (text.empty()) return noise;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw pmap::Error("noise spec entries must be key=value, got '" + item + "'");
    }
    const std::string key = item.substr(0, eq);
    const double value = parse_double(item.substr(eq + 1), "noise " + key);
    if (key == "sigma") {
      noise.gaussian_sigma = value;
    } else if (key == "blur") {
      noise.blur_radius = static_cast<int>(value);
    } else if (key == "dropout") {
      noise.dropout_rate = value;
    } else {
      throw pmap::Error("unknown noise key '" + key + "' (sigma, blur, dropout)");
    }
  }
  return noise;
}

std::vector<double> parse_weights(const std::string& text) {
  std::vector<double> weights;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    weights.push_back(parse_double(item, "weights"));
  }
  return weights;
}

json report_to_json(const pmap::MatchReport& report) {
  json j;
  j["precision"] = report.precision;
  j["recall"] = report.recall;
  j["f_measure"] = report.f_measure;
  j["iou_threshold"] = report.iou_threshold;
  j["tp"] = report.total_tp();
  j["fp"] = report.total_fp();
  j["fn"] = report.total_fn();
  json per = json::array();
  for (const auto& c : report.per_image) {
    per.push_back({{"image", c.image}, {"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}});
  }
  j["per_image"] = std::move(per);
  return j;
}

void print_report(const pmap::MatchReport& report, bool as_json) {
  if (as_json) {
    std::cout << report_to_json(report).dump(2) << "\n";
    return;
  }
  std::cout << "images     " << report.per_image.size() << "\n"
            << "tp/fp/fn   " << report.total_tp() << "/" << report.total_fp()
            << "/" << report.total_fn() << "\n"
            << "precision  " << report.precision << "\n"
            << "recall     " << report.recall << "\n"
            << "f-measure  " << report.f_measure << " (iou >= "
            << report.iou_threshold << ")\n";
}

json bench_to_json(const pmap::BenchReport& report) {
  auto stage = [](const pmap::StageTiming& t) {
    return json{{"mean_ms", t.mean_ms}, {"p95_ms", t.p95_ms}};
  };
  json j;
  j["grid"] = {{"width", report.grid.width}, {"height", report.grid.height}};
  j["n_maps"] = report.n_maps;
  j["algorithm"] = pmap::to_string(report.algorithm);
  j["runs"] = report.runs;
  j["instances"] = report.instances;
  j["binarize"] = stage(report.binarize);
  j["components"] = stage(report.components);
  j["growth"] = stage(report.growth);
  j["total_mean_ms"] = report.total_mean_ms();
  return j;
}

// Shared pipeline option block. Explicit flags beat the preset, which beats
// the config file, which beats the defaults.
struct ConfigCli {
  CLI::Option* th_b = nullptr;
  CLI::Option* th_e = nullptr;
  CLI::Option* min_area = nullptr;
  CLI::Option* grow = nullptr;
  CLI::Option* filter = nullptr;
  CLI::Option* mode = nullptr;
  CLI::Option* eps = nullptr;
  CLI::Option* k = nullptr;
  CLI::Option* n = nullptr;
  CLI::Option* weights = nullptr;
  CLI::Option* iou = nullptr;

  double th_b_v = 0.3, th_e_v = 0.65, eps_v = 1.0, iou_v = 0.5;
  pmap::Index min_area_v = 300;
  int k_v = 3, n_v = 4;
  std::string grow_v = "pse", filter_v = "threshold", mode_v = "polygon";
  std::string weights_v;

  void attach(CLI::App* cmd) {
    th_b = cmd->add_option("--th-b", th_b_v, "binarization threshold");
    th_e = cmd->add_option("--th-e", th_e_v, "mean-probability threshold");
    min_area = cmd->add_option("--min-area", min_area_v, "minimum instance area (px)");
    grow = cmd->add_option("--grow", grow_v, "region growth: pse|watershed");
    filter = cmd->add_option("--filter", filter_v, "filter: threshold|voting");
    mode = cmd->add_option("--mode", mode_v, "boundary mode: polygon|rect");
    eps = cmd->add_option("--eps", eps_v, "polygon simplification tolerance (px)");
    k = cmd->add_option("--k", k_v, "alpha step");
    n = cmd->add_option("--n", n_v, "number of probability maps");
    weights = cmd->add_option("--weights", weights_v, "voting weights w1,w2,...");
    iou = cmd->add_option("--iou", iou_v, "evaluation IoU threshold");
  }

  pmap::PipelineConfig resolve(const CommonOpts& common) const {
    pmap::PipelineConfig cfg;
    if (!common.config_path.empty()) pmap::load_config(cfg, common.config_path);
    if (filter->count()) cfg.filter = pmap::parse_filter_mode(filter_v);
    if (!common.preset.empty()) pmap::apply_preset(cfg, common.preset);
    if (th_b->count()) cfg.th_b = th_b_v;
    if (th_e->count()) cfg.th_e = th_e_v;
    if (min_area->count()) cfg.min_area = min_area_v;
    if (grow->count()) cfg.grow = pmap::parse_growth_algorithm(grow_v);
    if (mode->count()) cfg.boundary = pmap::parse_boundary_mode(mode_v);
    if (eps->count()) cfg.simplify_eps = eps_v;
    if (k->count()) cfg.k = k_v;
    if (n->count()) cfg.n = n_v;
    if (weights->count()) cfg.weights = parse_weights(weights_v);
    if (iou->count()) cfg.iou_threshold = iou_v;
    return cfg;
  }
};

int run_gen_labels(const CommonOpts& common, const ConfigCli& cc,
                   const std::string& annotations, const std::string& out,
                   const std::string& heatmap_dir, const std::string& colormap) {
  const pmap::PipelineConfig cfg = cc.resolve(common);
  const pmap::AlphaSchedule schedule = cfg.schedule();
  const auto set = pmap::read_annotation_set(annotations);
  const bool multi = set.size() > 1;
  if (multi) fs::create_directories(out);

  json summary = json::array();
  for (const auto& ann : set) {
    const auto stack = pmap::generate_label_stack(ann.instances, ann.grid, schedule);
    const fs::path path = multi ? fs::path(out) / (ann.image + ".pmap") : fs::path(out);
    pmap::write_stack(stack, path);
    if (!heatmap_dir.empty()) {
      fs::create_directories(heatmap_dir);
      pmap::export_heatmap(stack, fs::path(heatmap_dir) / (ann.image + ".pgm"),
                           pmap::parse_colormap(colormap));
    }
    summary.push_back({{"image", ann.image},
                       {"instances", ann.instances.size()},
                       {"maps", stack.count()},
                       {"out", path.string()}});
  }
  if (common.json_output) {
    std::cout << summary.dump(2) << "\n";
  } else {
    std::cout << "wrote " << set.size() << " label stack(s)\n";
  }
  return 0;
}

int run_synth(const CommonOpts& common, const ConfigCli& cc, const std::string& grid,
              int scenes, int count, const std::string& shapes, std::uint64_t seed,
              const std::string& noise, double separation, double min_area,
              const std::string& out) {
  const pmap::PipelineConfig cfg = cc.resolve(common);
  pmap::SyntheticSceneSpec spec;
  spec.grid = parse_grid(grid);
  spec.scenes = scenes;
  spec.instances_per_scene = count;
  spec.shapes = pmap::parse_shape_family(shapes);
  spec.seed = seed;
  spec.noise = parse_noise(noise);
  spec.min_separation = separation;
  spec.min_area = min_area;

  fs::create_directories(out);
  const pmap::AlphaSchedule schedule = cfg.schedule();
  std::vector<json> rows(scenes);
  pmap::run_parallel(static_cast<std::size_t>(scenes), common.threads,
                     [&](std::size_t i) {
                       const auto scene = pmap::make_synthetic_scene(spec, schedule, i);
                       const std::string stem = scene.annotations.image;
                       pmap::write_annotations(scene.annotations,
                                               fs::path(out) / (stem + ".json"));
                       pmap::write_stack(scene.prediction,
                                         fs::path(out) / (stem + ".pmap"));
                       rows[i] = {{"image", stem},
                                  {"instances", scene.annotations.instances.size()}};
                     });
  if (common.json_output) {
    std::cout << json(rows).dump(2) << "\n";
  } else {
    std::cout << "wrote " << scenes << " scene(s) to " << out << "\n";
  }
  return 0;
}

int run_reconstruct(const CommonOpts& common, const ConfigCli& cc,
                    const std::string& stack_path, const std::string& out) {
  const pmap::PipelineConfig cfg = cc.resolve(common);
  auto stack = pmap::read_stack(stack_path);
  const pmap::AlphaSchedule schedule = cfg.schedule();
  if (stack.count() == schedule.count()) pmap::attach_alphas(stack, schedule);

  const auto masks = pmap::grow_instances(stack, cfg.th_b, cfg.grow);
  pmap::ImageDetections dets;
  dets.image = fs::path(stack_path).stem().string();
  dets.grid = stack.grid();
  for (const auto& mask : masks) {
    dets.detections.push_back(pmap::extract_boundary(
        mask, stack.maps.back(), cfg.boundary, cfg.simplify_eps));
  }
  if (!out.empty()) pmap::write_detections(dets, out);
  if (common.json_output || out.empty()) {
    std::cout << pmap::detections_to_json(dets) << "\n";
  } else {
    std::cout << "wrote " << dets.detections.size() << " detection(s) to " << out
              << "\n";
  }
  return 0;
}

int run_filter(const CommonOpts& common, const ConfigCli& cc,
               const std::string& stack_path, const std::string& dets_path,
               const std::string& out) {
  const pmap::PipelineConfig cfg = cc.resolve(common);
  auto stack = pmap::read_stack(stack_path);
  const pmap::AlphaSchedule schedule = cfg.schedule();
  const auto input = pmap::read_detections(dets_path);

  // Candidate masks are recovered by rasterizing the detection polygons.
  std::vector<pmap::InstanceMask> masks;
  for (std::size_t i = 0; i < input.detections.size(); ++i) {
    pmap::InstanceMask mask{input.grid, static_cast<int>(i) + 1,
                            pmap::rasterize_interior(
                                input.detections[i].polygon, input.grid)};
    masks.push_back(std::move(mask));
  }

  const pmap::FilterConfig fc = cfg.filter_config();
  std::vector<std::size_t> kept_idx;
  if (cfg.filter == pmap::FilterMode::threshold) {
    const auto kept = pmap::threshold_filter(masks, stack.maps.back(), fc);
    for (const auto& m : kept) kept_idx.push_back(static_cast<std::size_t>(m.label) - 1);
  } else {
    if (stack.count() != schedule.count()) {
      throw pmap::Error("voting filter needs a schedule matching the stack size");
    }
    const auto kept = pmap::voting_filter(masks, stack, schedule, fc);
    for (const auto& m : kept) kept_idx.push_back(static_cast<std::size_t>(m.label) - 1);
  }

  pmap::ImageDetections output;
  output.image = input.image;
  output.grid = input.grid;
  for (std::size_t i : kept_idx) output.detections.push_back(input.detections[i]);
  if (!out.empty()) pmap::write_detections(output, out);
  if (common.json_output || out.empty()) {
    std::cout << pmap::detections_to_json(output) << "\n";
  } else {
    std::cout << "kept " << output.detections.size() << " of "
              << input.detections.size() << " detection(s)\n";
  }
  return 0;
}

int run_contours(const CommonOpts& common, const ConfigCli& cc,
                 const std::string& dets_path, const std::string& out) {
  const pmap::PipelineConfig cfg = cc.resolve(common);
  auto dets = pmap::read_detections(dets_path);
  for (auto& det : dets.detections) {
    if (cfg.boundary == pmap::BoundaryMode::rect) {
      det.polygon = pmap::make_polygon(
          pmap::min_area_rect_of_points(det.polygon.vertices), det.polygon.id);
      det.mode = pmap::BoundaryMode::rect;
    } else if (cfg.simplify_eps > 0) {
      auto chain = det.polygon.vertices;
      chain.push_back(chain.front());
      auto simplified = pmap::simplify_polyline(chain, cfg.simplify_eps);
      simplified.pop_back();
      if (simplified.size() >= 3) {
        det.polygon = pmap::make_polygon(simplified, det.polygon.id);
      }
      det.mode = pmap::BoundaryMode::polygon;
    }
  }
  if (!out.empty()) pmap::write_detections(dets, out);
  if (common.json_output || out.empty()) {
    std::cout << pmap::detections_to_json(dets) << "\n";
  }
  return 0;
}

int run_eval(const CommonOpts& common, const ConfigCli& cc, const std::string& gt,
             const std::string& dets) {
  const pmap::PipelineConfig cfg = cc.resolve(common);
  const auto gt_set = pmap::read_annotation_set(gt);
  const auto det_set = pmap::read_detection_set(dets);
  const auto report = pmap::match_and_score(det_set, gt_set, cfg.iou_threshold);
  print_report(report, common.json_output);
  return 0;
}

int run_bench(const CommonOpts& common, const ConfigCli& cc, const std::string& grid,
              int runs, std::uint64_t seed) {
  const pmap::PipelineConfig cfg = cc.resolve(common);
  const auto report = pmap::bench_region_growth(parse_grid(grid), cfg.n, cfg.grow,
                                                runs, seed, cfg.th_b);
  if (common.json_output) {
    std::cout << bench_to_json(report).dump(2) << "\n";
  } else {
    auto line = [](const char* name, const pmap::StageTiming& t) {
      std::cout << name << "  mean " << t.mean_ms << " ms, p95 " << t.p95_ms
                << " ms\n";
    };
    std::cout << "grid " << report.grid.width << "x" << report.grid.height
              << ", n=" << report.n_maps << ", " << pmap::to_string(report.algorithm)
              << ", " << report.runs << " runs, " << report.instances
              << " instance(s)\n";
    line("binarize  ", report.binarize);
    line("components", report.components);
    line("growth    ", report.growth);
    std::cout << "total mean " << report.total_mean_ms() << " ms\n";
  }
  return 0;
}

int run_pipeline(const CommonOpts& common, const ConfigCli& cc, bool use_synth,
                 const std::string& grid, int scenes, int count,
                 const std::string& shapes, std::uint64_t seed,
                 const std::string& noise, const std::string& gt,
                 const std::string& stacks, const std::string& out_dir) {
  const pmap::PipelineConfig cfg = cc.resolve(common);
  const pmap::AlphaSchedule schedule = cfg.schedule();

  pmap::MatchReport report;
  std::vector<pmap::ImageDetections> detections;
  if (use_synth) {
    pmap::SyntheticSceneSpec spec;
    spec.grid = parse_grid(grid);
    spec.scenes = scenes;
    spec.instances_per_scene = count;
    spec.shapes = pmap::parse_shape_family(shapes);
    spec.seed = seed;
    spec.noise = parse_noise(noise);
    const auto outcome = pmap::run_synthetic_pipeline(spec, cfg, common.threads);
    report = outcome.report;
    detections = outcome.detections;
  } else {
    if (gt.empty() || stacks.empty()) {
      throw pmap::Error("pipeline needs either --synth or both --gt and --stacks");
    }
    const auto gt_set = pmap::read_annotation_set(gt);
    std::vector<pmap::ImageDetections> dets(gt_set.size());
    pmap::run_parallel(gt_set.size(), common.threads, [&](std::size_t i) {
      const fs::path stack_path = fs::path(stacks) / (gt_set[i].image + ".pmap");
      auto stack = pmap::read_stack(stack_path);
      if (stack.count() == schedule.count()) pmap::attach_alphas(stack, schedule);
      dets[i] = pmap::detect_instances(stack, schedule, cfg, gt_set[i].image);
    });
    report = pmap::match_and_score(dets, gt_set, cfg.iou_threshold);
    detections = std::move(dets);
  }

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    for (const auto& det : detections) {
      pmap::write_detections(det, fs::path(out_dir) / (det.image + ".json"));
    }
  }
  print_report(report, common.json_output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"probability-map text instance segmentation toolbox"};
  app.require_subcommand(1);

  CommonOpts common;
  app.add_option("--config", common.config_path, "JSON config file")
      ->check(CLI::ExistingFile);
  app.add_option("--preset", common.preset,
                 "dataset preset: totaltext|ctw1500|td500|mlt|icdar15");
  app.add_option("--threads", common.threads,
                 "worker pool size (0 = PMAP_THREADS or hardware)");
  app.add_flag("--json", common.json_output, "machine-readable JSON on stdout");

  int exit_code = 0;
  std::function<int()> action;

  // gen-labels
  auto* gen = app.add_subcommand("gen-labels",
                                 "ground-truth probability maps from annotations");
  static ConfigCli gen_cc;
  gen_cc.attach(gen);
  static std::string gen_ann, gen_out, gen_heat, gen_cmap = "gray";
  gen->add_option("--annotations", gen_ann, "annotations JSON file or directory")
      ->required();
  gen->add_option("--out", gen_out, "output .pmap file (or directory)")->required();
  gen->add_option("--heatmap", gen_heat, "also export heatmaps into this directory");
  gen->add_option("--colormap", gen_cmap, "gray|viridis|jet");
  gen->callback([&]() {
    action = [&]() {
      return run_gen_labels(common, gen_cc, gen_ann, gen_out, gen_heat, gen_cmap);
    };
  });

  // synth
  auto* synth = app.add_subcommand("synth", "write synthetic scenes to disk");
  static ConfigCli synth_cc;
  synth_cc.attach(synth);
  static std::string synth_grid = "256x256", synth_shapes = "mixed", synth_noise,
                     synth_out;
  static int synth_scenes = 1, synth_count = 3;
  static std::uint64_t synth_seed = 1;
  static double synth_sep = 4.0, synth_min_area = 400.0;
  synth->add_option("--scenes", synth_scenes, "number of scenes");
  synth->add_option("--grid", synth_grid, "grid size WxH");
  synth->add_option("--count", synth_count, "instances per scene");
  synth->add_option("--shapes", synth_shapes, "curved|rect|mixed");
  synth->add_option("--seed", synth_seed, "base RNG seed");
  synth->add_option("--noise", synth_noise, "sigma=..,blur=..,dropout=..");
  synth->add_option("--separation", synth_sep, "min boundary separation (px)");
  synth->add_option("--min-instance-area", synth_min_area, "min polygon area (px)");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->callback([&]() {
    action = [&]() {
      return run_synth(common, synth_cc, synth_grid, synth_scenes, synth_count,
                       synth_shapes, synth_seed, synth_noise, synth_sep,
                       synth_min_area, synth_out);
    };
  });

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct",
                                 "grow text instances from a prediction tensor");
  static ConfigCli rec_cc;
  rec_cc.attach(rec);
  static std::string rec_stack, rec_out;
  rec->add_option("--stack", rec_stack, "prediction tensor (.pmap)")
      ->required()
      ->check(CLI::ExistingFile);
  rec->add_option("--out", rec_out, "detections JSON output path");
  rec->callback([&]() {
    action = [&]() { return run_reconstruct(common, rec_cc, rec_stack, rec_out); };
  });

  // filter
  auto* filt = app.add_subcommand("filter", "drop false-positive candidates");
  static ConfigCli filt_cc;
  filt_cc.attach(filt);
  static std::string filt_stack, filt_dets, filt_out;
  filt->add_option("--stack", filt_stack, "prediction tensor (.pmap)")
      ->required()
      ->check(CLI::ExistingFile);
  filt->add_option("--dets", filt_dets, "candidate detections JSON")
      ->required()
      ->check(CLI::ExistingFile);
  filt->add_option("--out", filt_out, "filtered detections JSON output path");
  filt->callback([&]() {
    action = [&]() {
      return run_filter(common, filt_cc, filt_stack, filt_dets, filt_out);
    };
  });

  // contours
  auto* cont = app.add_subcommand("contours", "re-fit detection boundaries");
  static ConfigCli cont_cc;
  cont_cc.attach(cont);
  static std::string cont_dets, cont_out;
  cont->add_option("--dets", cont_dets, "detections JSON")
      ->required()
      ->check(CLI::ExistingFile);
  cont->add_option("--out", cont_out, "output path");
  cont->callback([&]() {
    action = [&]() { return run_contours(common, cont_cc, cont_dets, cont_out); };
  });

  // eval
  auto* ev = app.add_subcommand("eval", "precision/recall/F against annotations");
  static ConfigCli ev_cc;
  ev_cc.attach(ev);
  static std::string ev_gt, ev_dets;
  ev->add_option("--gt", ev_gt, "annotations JSON file or directory")->required();
  ev->add_option("--dets", ev_dets, "detections JSON file or directory")->required();
  ev->callback([&]() {
    action = [&]() { return run_eval(common, ev_cc, ev_gt, ev_dets); };
  });

  // bench
  auto* bench = app.add_subcommand("bench", "time the post-processing stages");
  static ConfigCli bench_cc;
  bench_cc.attach(bench);
  static std::string bench_grid = "1024x1024";
  static int bench_runs = 20;
  static std::uint64_t bench_seed = 1;
  bench->add_option("--grid", bench_grid, "grid size WxH");
  bench->add_option("--runs", bench_runs, "timing repetitions");
  bench->add_option("--seed", bench_seed, "scene seed");
  bench->callback([&]() {
    action = [&]() {
      return run_bench(common, bench_cc, bench_grid, bench_runs, bench_seed);
    };
  });

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "end-to-end run with evaluation");
  static ConfigCli pipe_cc;
  pipe_cc.attach(pipe);
  static bool pipe_synth = false;
  static std::string pipe_grid = "256x256", pipe_shapes = "mixed", pipe_noise,
                     pipe_gt, pipe_stacks, pipe_out_dir;
  static int pipe_scenes = 10, pipe_count = 3;
  static std::uint64_t pipe_seed = 1;
  pipe->add_flag("--synth", pipe_synth, "generate scenes instead of reading files");
  pipe->add_option("--grid", pipe_grid, "grid size WxH (synth mode)");
  pipe->add_option("--scenes", pipe_scenes, "scene count (synth mode)");
  pipe->add_option("--count", pipe_count, "instances per scene (synth mode)");
  pipe->add_option("--shapes", pipe_shapes, "curved|rect|mixed (synth mode)");
  pipe->add_option("--seed", pipe_seed, "base seed (synth mode)");
  pipe->add_option("--noise", pipe_noise, "sigma=..,blur=..,dropout=.. (synth mode)");
  pipe->add_option("--gt", pipe_gt, "annotations directory (file mode)");
  pipe->add_option("--stacks", pipe_stacks, "prediction tensors directory (file mode)");
  pipe->add_option("--out-dir", pipe_out_dir, "write per-image detections here");
  pipe->callback([&]() {
    action = [&]() {
      return run_pipeline(common, pipe_cc, pipe_synth, pipe_grid, pipe_scenes,
                          pipe_count, pipe_shapes, pipe_seed, pipe_noise, pipe_gt,
                          pipe_stacks, pipe_out_dir);
    };
  });

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::cerr << "error: " << e.what() << "\n\n" << app.help() << "\n";
    return 2;
  }

  try {
    exit_code = action ? action() : 2;
  } catch (const pmap::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
