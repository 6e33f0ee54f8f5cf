#include "graspfn/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>

#include "graspfn/error.hpp"
#include "graspfn/random.hpp"

namespace graspfn {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for_current_exception() {
  try {
    throw;
  } catch (const ParseError&) {
    return kExitUsage;
  } catch (const IoError&) {
    return kExitIo;
  } catch (const TrainingError&) {
    return kExitTraining;
  } catch (const ContentError&) {
    return kExitContent;
  } catch (const ConfigError&) {
    return kExitConfig;
  } catch (const RangeError&) {
    return kExitConfig;
  } catch (...) {
    return kExitUnexpected;
  }
}

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

template <class Writer>
void write_then_rename(const fs::path& final_path, Writer&& write) {
  fs::path tmp = final_path;
  tmp += ".tmp";
  write(tmp);
  std::error_code ec;
  fs::rename(tmp, final_path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + final_path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
  if (!os) throw IoError("failed writing " + path.string());
}

const char* kObjectFiles[] = {"scene.json", "depth_clean.pgm", "depth_noisy.pgm", "grasp.json"};

std::string object_dir_name(std::uint64_t seed) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "obj_%05llu", static_cast<unsigned long long>(seed));
  return buf;
}

}  // namespace

GenerateReport cmd_generate(const RunConfig& cfg, int count, const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  if (count < 0) throw ConfigError("count must be >= 0");
  ensure_dir(out_dir);
  const SimulationParams sim = make_simulation_params(cfg, cfg.generate.placement);
  GenerateReport rep;
  for (int k = 0; k < count; ++k) {
    const std::uint64_t seed = cfg.generate.first_object + static_cast<std::uint64_t>(k);
    const fs::path dir = out_dir / object_dir_name(seed);
    if (std::all_of(std::begin(kObjectFiles), std::end(kObjectFiles),
                    [&](const char* f) { return fs::exists(dir / f); })) {
      ++rep.skipped;
      log << dir.filename().string() << " complete, skipped\n";
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    ensure_dir(dir);
    const SimulatedObject obj = simulate_object(cfg.seed, seed, sim);
    const GraspFunction f =
        compute_grasp_function(obj.scene, cfg.gripper, cfg.grid, oracle_seed(cfg.seed, seed), cfg.jobs);
    write_then_rename(dir / "scene.json", [&](const fs::path& p) { write_scene(p, obj.scene); });
    write_then_rename(dir / "depth_clean.pgm", [&](const fs::path& p) { write_pgm16(p, obj.clean); });
    write_then_rename(dir / "depth_noisy.pgm", [&](const fs::path& p) { write_pgm16(p, obj.noisy); });
    write_then_rename(dir / "grasp.json", [&](const fs::path& p) { write_grasp_function(p, f); });
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s %s generated in %.3f s\n", dir.filename().string().c_str(),
                  to_string(obj.scene.object->family).c_str(), secs);
    log << buf;
    ++rep.generated;
  }
  return rep;
}

fs::path loss_csv_path_for(const fs::path& model_path) {
  fs::path p = model_path;
  p.replace_extension(".loss.csv");
  return p;
}

TrainReport cmd_train(const RunConfig& cfg, const fs::path& dataset_dir, const fs::path& model_out, std::ostream& log) {
  cfg.validate();
  if (!fs::is_directory(dataset_dir)) throw IoError("dataset directory not found: " + dataset_dir.string());
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(dataset_dir))
    if (e.is_directory() && e.path().filename().string().rfind("obj_", 0) == 0) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  if (cfg.predictor.max_objects > 0 && dirs.size() > static_cast<std::size_t>(cfg.predictor.max_objects))
    dirs.resize(cfg.predictor.max_objects);
  if (dirs.empty()) throw IoError("no obj_* directories in " + dataset_dir.string());

  std::vector<TrainingExample> data;
  for (const auto& d : dirs) {
    TrainingExample ex;
    ex.target = read_grasp_function(d / "grasp.json");
    ex.image = read_pgm(d / "depth_noisy.pgm", cfg.grid.px_per_mm);
    if (cfg.predictor.inpaint) ex.image = inpaint_zeros(ex.image);
    data.push_back(std::move(ex));
  }

  TrainingConfig tc = cfg.predictor.training;
  tc.seed = derive_seed(cfg.seed, "training");
  tc.jobs = cfg.jobs;
  const PredictorModel init = init_model(cfg.predictor.arch, derive_seed(cfg.seed, "training_init"));
  log << "training on " << data.size() << " objects, " << init.parameter_count() << " parameters, " << tc.steps
      << " steps\n";
  const auto t0 = std::chrono::steady_clock::now();
  const TrainingResult res = train(init, data, tc);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (model_out.has_parent_path()) ensure_dir(model_out.parent_path());
  save_model(model_out, res.model);
  std::string csv = "step,loss\n";
  char buf[64];
  for (std::size_t s = 0; s < res.loss_curve.size(); ++s) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", s, res.loss_curve[s]);
    csv += buf;
  }
  const fs::path csv_path = loss_csv_path_for(model_out);
  write_text(csv_path, csv);
  std::snprintf(buf, sizeof buf, "final loss %.6f in %.1f s\n", res.final_loss, secs);
  log << buf;
  return {static_cast<int>(data.size()), res.final_loss, model_out, csv_path};
}

json cmd_plan(const RunConfig& cfg, const PlanRequest& req, const fs::path& out) {
  cfg.validate();
  req.uncertainty.validate();
  std::optional<Scene> scene;
  if (req.scene) scene = read_scene(*req.scene);

  std::optional<DepthImage> image;
  if (req.image) {
    image = read_pgm(*req.image, cfg.grid.px_per_mm);
  } else if (scene) {
    scene->validate(cfg.grid);
    image = apply_noise(render_depth(*scene, cfg.grid), cfg.noise, derive_seed(cfg.seed, "noise", {0}));
  }
  if (image && cfg.eval.inpaint) image = inpaint_zeros(*image);

  std::optional<GraspFunction> f;
  std::string source;
  if (req.function) {
    f = read_grasp_function(*req.function);
    source = "function";
  } else if (req.model) {
    if (!image) throw ConfigError("planning with a model needs --image or --scene");
    f = predict_grasp_function(load_model(*req.model), *image, cfg.predictor.aggregation);
    source = "predictor";
  } else if (scene) {
    f = compute_grasp_function(*scene, cfg.gripper, cfg.grid, oracle_seed(cfg.seed, 0), cfg.jobs);
    source = "oracle";
  }

  Pose pose;
  json score = nullptr;
  switch (req.method) {
    case Method::Centroid: {
      if (!image) throw ConfigError("the centroid method needs --image or --scene");
      const double plane = scene ? scene->plane_z_mm : cfg.scene.plane_z_mm;
      pose = centroid_plan(*image, f ? f->grid : cfg.grid, plane);
      if (f && f->grid.in_extent(pose.u(), pose.v())) score = interpolate(*f, pose);
      if (source.empty()) source = "image";
      break;
    }
    case Method::Best:
    case Method::Robust: {
      if (!f) throw ConfigError("planning needs --function, --model with an image, or --scene");
      const PlannedPose p = req.method == Method::Best ? best_grasp_plan(*f, cfg.eval.refine)
                                                       : robust_best_grasp_plan(*f, req.uncertainty, cfg.eval.refine);
      pose = p.pose;
      score = p.score;
      break;
    }
  }

  if (req.heatmaps && f) {
    ensure_dir(*req.heatmaps);
    write_heatmaps(*req.heatmaps, "raw", *f);
    write_heatmaps(*req.heatmaps, "smoothed", smooth(*f, req.uncertainty));
  }

  json doc = {{"method", to_string(req.method)},
              {"pose", {{"u_mm", pose.u()}, {"v_mm", pose.v()}, {"theta_rad", pose.theta()}}},
              {"score", score},
              {"source", source},
              {"uncertainty", req.uncertainty.to_json()}};
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  write_text(out, doc.dump(2) + "\n");
  return doc;
}

EvalResult cmd_evaluate(const RunConfig& cfg, const fs::path& out_csv, std::ostream& summary) {
  cfg.validate();
  const EvalConfig ec = make_eval_config(cfg);
  const EvalResult r = run_sweep(ec);
  if (out_csv.has_parent_path()) ensure_dir(out_csv.parent_path());
  write_text(out_csv, results_csv(r));
  const auto& ths = cfg.eval.sigma_theta_deg;
  const double slice =
      std::find(ths.begin(), ths.end(), cfg.eval.slice_sigma_theta_deg) != ths.end() ? cfg.eval.slice_sigma_theta_deg
                                                                                    : ths.front();
  fs::path slice_path = out_csv.parent_path() / (out_csv.stem().string() + "_uv_slice.csv");
  write_text(slice_path, uv_slice_csv(r, slice));
  summary << summary_table(r);
  for (const auto& why : r.skip_reasons) summary << "skipped " << why << '\n';
  return r;
}

void cmd_render(const RunConfig& cfg, const fs::path& scene_path, const fs::path& out_pgm, bool noisy) {
  cfg.validate();
  const Scene s = read_scene(scene_path);
  s.validate(cfg.grid);
  DepthImage img = render_depth(s, cfg.grid);
  if (noisy) img = apply_noise(img, cfg.noise, derive_seed(cfg.seed, "noise", {0}));
  if (out_pgm.has_parent_path()) ensure_dir(out_pgm.parent_path());
  write_pgm16(out_pgm, img);
}

}  // namespace graspfn
