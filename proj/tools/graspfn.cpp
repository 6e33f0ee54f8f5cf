// graspfn: dataset generation, training, planning, evaluation and rendering.

#include <cmath>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "graspfn/cli.hpp"
#include "graspfn/error.hpp"

namespace fs = std::filesystem;
using namespace graspfn;

namespace {

const char* kExitCodes =
    "Exit status:\n"
    "  0  success\n"
    "  1  unexpected internal error\n"
    "  2  bad command line, malformed config or data document\n"
    "  3  I/O error (missing or unwritable path)\n"
    "  4  training error (non-finite loss or weights)\n"
    "  5  content error (input cannot support the operation)\n"
    "  6  configuration or range error (invalid values)\n";

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> jobs;
  std::string grid_preset;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON run configuration");
  sub->add_option("--seed", c.seed, "master seed (overrides the config)");
  sub->add_option("--out", c.out, "output path");
  sub->add_option("--jobs", c.jobs, "worker threads (1 = single-threaded, reproducible)")->check(CLI::PositiveNumber);
  sub->add_option("--grid-preset", c.grid_preset, "pose grid preset")->check(CLI::IsMember({"desk", "paper"}));
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? default_run_config() : load_run_config(c.config);
  if (!c.grid_preset.empty()) apply_grid_preset(cfg, c.grid_preset);
  if (c.seed) cfg.seed = *c.seed;
  if (c.jobs) cfg.jobs = *c.jobs;
  cfg.validate();
  return cfg;
}

fs::path out_or(const Common& c, const fs::path& fallback) { return c.out.empty() ? fallback : fs::path(c.out); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grasp-function planning under gripper pose uncertainty"};
  app.footer(kExitCodes);
  app.require_subcommand(1);

  Common g_common, t_common, p_common, e_common, r_common;

  auto* gen = app.add_subcommand("generate", "synthesize objects, depth images and oracle grasp functions");
  add_common(gen, g_common);
  std::optional<int> count;
  gen->add_option("--count", count, "number of objects (default from config)")->check(CLI::NonNegativeNumber);

  auto* tr = app.add_subcommand("train", "train the predictor on a generated dataset");
  add_common(tr, t_common);
  std::string dataset;
  tr->add_option("--dataset", dataset, "dataset directory (default <output_dir>/dataset)");

  auto* pl = app.add_subcommand("plan", "plan one grasp from a scene, image or grasp function");
  add_common(pl, p_common);
  std::string function, model, scene, image, heatmaps, method = "robust";
  std::optional<double> sigma_uv, sigma_theta;
  bool oracle = false;
  pl->add_option("--function", function, "precomputed grasp function JSON");
  auto* model_opt = pl->add_option("--model", model, "predictor model file");
  pl->add_flag("--oracle", oracle, "score poses with the grasp oracle (needs --scene)")->excludes(model_opt);
  pl->add_option("--scene", scene, "scene JSON");
  pl->add_option("--image", image, "depth image PGM");
  pl->add_option("--method", method, "planner")->check(CLI::IsMember({"centroid", "best", "robust"}));
  pl->add_option("--sigma-uv-mm", sigma_uv, "pose uncertainty in u and v (mm)")->check(CLI::NonNegativeNumber);
  pl->add_option("--sigma-theta-deg", sigma_theta, "pose uncertainty in theta (degrees)")
      ->check(CLI::NonNegativeNumber);
  pl->add_option("--heatmaps", heatmaps, "directory for raw and smoothed per-slab heatmaps");

  auto* ev = app.add_subcommand("evaluate", "run the planner comparison sweep");
  add_common(ev, e_common);
  std::optional<int> objects, trials;
  ev->add_option("--objects", objects, "number of test objects")->check(CLI::NonNegativeNumber);
  ev->add_option("--trials", trials, "trials per object and setting")->check(CLI::PositiveNumber);

  auto* rd = app.add_subcommand("render", "render a scene to a 16-bit depth PGM");
  add_common(rd, r_common);
  std::string render_scene;
  bool noisy = false;
  rd->add_option("--scene", render_scene, "scene JSON")->required();
  rd->add_flag("--noisy", noisy, "apply the sensor noise model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      const RunConfig cfg = resolve(g_common);
      const auto rep = cmd_generate(cfg, count.value_or(cfg.generate.count), out_or(g_common, cfg.output_dir / "dataset"),
                                    std::cout);
      std::cout << rep.generated << " generated, " << rep.skipped << " already present\n";
    } else if (tr->parsed()) {
      const RunConfig cfg = resolve(t_common);
      const fs::path ds = dataset.empty() ? cfg.output_dir / "dataset" : fs::path(dataset);
      const auto rep = cmd_train(cfg, ds, out_or(t_common, cfg.output_dir / "model.bin"), std::cout);
      std::cout << "wrote " << rep.model_path.string() << " and " << rep.loss_csv_path.string() << '\n';
    } else if (pl->parsed()) {
      const RunConfig cfg = resolve(p_common);
      PlanRequest req;
      req.method = method_from_string(method);
      if (!function.empty()) req.function = function;
      if (!model.empty()) req.model = model;
      if (!scene.empty()) req.scene = scene;
      if (!image.empty()) req.image = image;
      if (!heatmaps.empty()) req.heatmaps = heatmaps;
      req.uncertainty = cfg.uncertainty;
      if (sigma_uv || sigma_theta) {
        const double uv = sigma_uv.value_or(std::sqrt(cfg.uncertainty.cov_uv(0, 0)));
        const double th = sigma_theta.value_or(cfg.uncertainty.sigma_theta * 180.0 / 3.14159265358979323846);
        req.uncertainty = UncertaintyModel::from_degrees(uv, th);
      }
      if (oracle && !req.scene) throw ConfigError("--oracle needs --scene");
      const auto doc = cmd_plan(cfg, req, out_or(p_common, cfg.output_dir / "plan.json"));
      std::cout << doc.dump(2) << '\n';
    } else if (ev->parsed()) {
      RunConfig cfg = resolve(e_common);
      if (objects) cfg.eval.objects = *objects;
      if (trials) cfg.eval.trials = *trials;
      cmd_evaluate(cfg, out_or(e_common, cfg.output_dir / "results.csv"), std::cout);
    } else if (rd->parsed()) {
      const RunConfig cfg = resolve(r_common);
      cmd_render(cfg, render_scene, out_or(r_common, cfg.output_dir / "render.pgm"), noisy);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for_current_exception();
  }
  return kExitOk;
}
