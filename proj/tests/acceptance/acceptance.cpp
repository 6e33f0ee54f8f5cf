// Acceptance checks: one PASS/FAIL line per criterion, then a summary.
// Usage: acceptance [criterion ...]   (default: all eight)

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/LU>

#include "graspfn/augment.hpp"
#include "graspfn/cli.hpp"
#include "graspfn/grasp_oracle.hpp"
#include "test_support.hpp"

using namespace graspfn;
namespace fs = std::filesystem;
using testing_support::max_abs_diff;
using testing_support::random_function;
using testing_support::small_grid;

namespace {

// Tolerances and budgets.
constexpr double kConvTol = 1e-9;
constexpr double kInterpTol = 1e-12;
constexpr double kGradEps = 1e-5;
constexpr double kGradTol = 1e-4;
constexpr double kGradFloor = 1e-6;  // denominator floor for the relative error
constexpr double kOverfitLoss = 0.05;
constexpr double kOverfitMad = 0.1;
constexpr double kMargin20 = 0.03;  // criterion 5a, at sigma_uv = 20 mm
constexpr double kTrendSlack = 0.02;  // criterion 5b noise allowance

struct Outcome {
  bool pass = false;
  std::string detail;
};

int hardware_jobs() { return static_cast<int>(std::max(1u, std::min(8u, std::thread::hardware_concurrency()))); }

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Outcome convolution_oracle() {
  const PoseGrid g = small_grid(8, 6, 6);
  Rng r(derive_seed(1, "acceptance_conv"));
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    UncertaintyModel u = UncertaintyModel::from_degrees(r.uniform(0.0, 25.0), r.uniform(0.0, 45.0));
    u.cov_uv(1, 1) = std::pow(r.uniform(0.0, 25.0), 2);
    if (k % 4 == 3) u.cov_uv(0, 1) = u.cov_uv(1, 0) = r.uniform(-0.8, 0.8) * std::sqrt(u.cov_uv(0, 0) * u.cov_uv(1, 1));
    if (k % 4 == 3 && !(u.cov_uv.determinant() > 0.0)) u.cov_uv(0, 1) = u.cov_uv(1, 0) = 0.0;
    const GraspFunction f = random_function(g, 5000 + k, k % 2 == 1);
    worst = std::max(worst, max_abs_diff(smooth(f, u).scores, testing_support::naive_smooth(f, u)));
  }
  return {worst < kConvTol, "max |smooth - naive| = " + fmt("%.3g", worst) + " over 20 settings"};
}

Outcome interpolation_exactness() {
  const PoseGrid g = small_grid(8, 6, 6);
  double centre_err = 0.0, mid_err = 0.0;
  for (int n = 0; n < 100; ++n) {
    const GraspFunction f = random_function(g, 7000 + n);
    for (std::size_t i = 0; i < g.size(); ++i)
      centre_err = std::max(centre_err, std::abs(interpolate(f, index_to_pose(g, i)) - f.scores[i]));
    for (int kt = 0; kt < g.ntheta; ++kt)
      for (int kv = 0; kv + 1 < g.nv; ++kv)
        for (int ku = 0; ku + 1 < g.nu; ++ku) {
          double mean = 0.0;
          for (int c = 0; c < 8; ++c) mean += f.at(ku + (c & 1), kv + ((c >> 1) & 1), (kt + (c >> 2)) % g.ntheta);
          mean /= 8.0;
          const Pose q(g.origin.u() + (ku + 0.5) * g.cell_uv_mm, g.origin.v() + (kv + 0.5) * g.cell_uv_mm,
                       g.origin.theta() + (kt + 0.5) * g.cell_theta());
          mid_err = std::max(mid_err, std::abs(interpolate(f, q) - mean));
        }
  }
  return {centre_err == 0.0 && mid_err < kInterpTol,
          "centre error " + fmt("%.3g", centre_err) + ", 8-corner mean error " + fmt("%.3g", mid_err)};
}

Outcome gradient_correctness() {
  // conv + pool, one hidden layer, head
  PredictorArch a;
  a.grid = small_grid(3, 2, 2);
  a.image_width = a.grid.image_width();
  a.image_height = a.grid.image_height();
  a.downsample = 2;
  a.conv = {{3, 3}};
  a.hidden = {6};
  PredictorModel m = init_model(a, 11);
  Rng r(12);
  for (double& p : m.params) p += r.uniform(-0.1, 0.1);
  std::vector<std::size_t> idx(m.parameter_count());
  std::iota(idx.begin(), idx.end(), 0);
  double worst = 0.0;
  std::size_t checked = 0, skipped = 0;
  for (int k = 0; k < 10; ++k) {
    LabeledInput in;
    in.input.resize(static_cast<std::size_t>(a.input_width()) * a.input_height());
    for (double& x : in.input) x = r.uniform(-1.0, 1.0);
    for (std::size_t j = 0; j < a.grid.size(); ++j) in.labels.push_back(static_cast<int>(r.index(6)));
    const auto res = testing_support::gradient_check(m, std::span<const LabeledInput>(&in, 1), idx, kGradEps, kGradFloor);
    worst = std::max(worst, res.max_rel);
    checked += res.checked;
    skipped += res.skipped;
  }
  return {worst < kGradTol && checked > 0,
          "max relative error " + fmt("%.3g", worst) + " over " + std::to_string(checked) + " checks (" +
              std::to_string(skipped) + " skipped at ReLU/pool kinks), " + std::to_string(m.parameter_count()) +
              " parameters"};
}

Outcome overfit_smoke() {
  const RunConfig cfg = default_run_config();
  const SimulationParams sim = make_simulation_params(cfg, Placement::Centered);
  const SimulatedObject obj = simulate_object(cfg.seed, 0, sim);
  const GraspFunction target = compute_grasp_function(obj.scene, cfg.gripper, cfg.grid, oracle_seed(cfg.seed, 0));
  const DepthImage img = inpaint_zeros(obj.noisy);

  TrainingConfig tc;
  tc.optimizer = Optimizer::Adam;
  tc.learning_rate = 1e-3;
  tc.batch_size = 8;
  tc.steps = 800;
  tc.augmentations = 100;
  tc.max_shift_cells = 3;
  tc.seed = derive_seed(cfg.seed, "training");
  const std::vector<TrainingExample> data{{img, target}};
  const TrainingResult res = train(init_model(cfg.predictor.arch, derive_seed(cfg.seed, "training_init")), data, tc);
  const GraspFunction pred = predict_grasp_function(res.model, img);
  double mad = 0.0;
  for (std::size_t i = 0; i < pred.scores.size(); ++i) mad += std::abs(pred.scores[i] - target.scores[i]);
  mad /= static_cast<double>(pred.scores.size());
  return {res.final_loss < kOverfitLoss && mad < kOverfitMad,
          "final loss " + fmt("%.4f", res.final_loss) + " (< 0.05), mean abs deviation " + fmt("%.4f", mad) +
              " (< 0.1), " + std::to_string(tc.steps) + " Adam steps"};
}

Outcome robustness_trend() {
  RunConfig cfg = default_run_config();
  cfg.jobs = hardware_jobs();
  const EvalConfig ec = make_eval_config(cfg);
  const EvalResult r = run_sweep(ec);
  auto rate = [&](Method m, double su, double st) { return r.at(m, su, st).rate(); };
  std::ostringstream os;
  bool a = true, b = true, c = true, d = true;
  for (double st : ec.sigma_theta_deg)
    for (double su : ec.sigma_uv_mm)
      if (su >= 15.0) a &= rate(Method::Robust, su, st) >= rate(Method::Best, su, st);
  for (double st : ec.sigma_theta_deg) a &= rate(Method::Robust, 20, st) - rate(Method::Best, 20, st) >= kMargin20;
  std::vector<double> margins;
  for (double su : ec.sigma_uv_mm) margins.push_back(rate(Method::Robust, su, 10) - rate(Method::Best, su, 10));
  for (std::size_t k = 1; k < margins.size(); ++k) b &= margins[k] >= margins[k - 1] - kTrendSlack;
  c = rate(Method::Best, 20, 40) <= rate(Method::Centroid, 20, 40);
  for (Method m : ec.methods)
    for (double st : ec.sigma_theta_deg) d &= rate(m, 20, st) < rate(m, 5, st);

  os << "objects " << r.objects_evaluated << " (skipped " << r.objects_skipped << "), trials " << ec.trials
     << "; 5a " << (a ? "pass" : "FAIL") << ", 5b " << (b ? "pass" : "FAIL") << ", 5c " << (c ? "pass" : "FAIL")
     << ", 5d " << (d ? "pass" : "FAIL") << "\n";
  os << "      robust-best margin at 10 deg:";
  for (std::size_t k = 0; k < margins.size(); ++k)
    os << ' ' << fmt("%g", ec.sigma_uv_mm[k]) << "mm " << fmt("%+.3f", margins[k]);
  os << "\n      best/centroid at 20mm 40deg: " << fmt("%.3f", rate(Method::Best, 20, 40)) << " / "
     << fmt("%.3f", rate(Method::Centroid, 20, 40)) << "\n" << summary_table(r);
  std::string s = os.str();
  while (!s.empty() && s.back() == '\n') s.pop_back();
  return {a && b && c && d && r.objects_evaluated >= 100, s};
}

Outcome zero_uncertainty() {
  const PoseGrid g = PoseGrid::desk();
  int same = 0;
  for (int n = 0; n < 200; ++n) {
    const GraspFunction f = random_function(g, 9000 + n, n % 2 == 0);
    same += robust_best_grasp_plan(f, UncertaintyModel{}).pose == best_grasp_plan(f).pose;
  }
  return {same == 200, std::to_string(same) + "/200 identical poses"};
}

Outcome equivariance() {
  const PoseGrid g = PoseGrid::desk();
  const GripperSpec grip;
  Rng r(derive_seed(1, "acceptance_equivariance"));
  long cells = 0, mismatched = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Scene a = place_object(generate_object(s), s, g, {}, Placement::Centered);
    const int du = static_cast<int>(r.index(5)) - 2, dv = static_cast<int>(r.index(5)) - 2;
    Scene b = a;
    b.object->pose_on_plane.x_mm += du * g.cell_uv_mm;
    b.object->pose_on_plane.y_mm += dv * g.cell_uv_mm;
    const std::uint64_t seed = derive_seed(1, "jitter", {s});
    const GraspFunction fa = compute_grasp_function(a, grip, g, seed);
    const PreparedScene pb(b);
    for (int kt = 0; kt < g.ntheta; ++kt)
      for (int kv = std::max(0, -dv); kv < std::min(g.nv, g.nv - dv); ++kv)
        for (int ku = std::max(0, -du); ku < std::min(g.nu, g.nu - du); ++ku) {
          auto att = jitter_poses(g, g.flat({ku, kv, kt}), seed);
          for (Pose& p : att) p = Pose(p.u() + du * g.cell_uv_mm, p.v() + dv * g.cell_uv_mm, p.theta());
          ++cells;
          mismatched += score_attempts(pb, grip, att) != fa.at(ku, kv, kt);
        }
  }
  double shift_err = 0.0;
  bool round_trip = true;
  for (int n = 0; n < 50; ++n) {
    const GraspFunction f = random_function(g, 11000 + n);
    const UncertaintyModel u = UncertaintyModel::from_degrees(r.uniform(0, 20), r.uniform(0, 40));
    const int dt = 1 + n % 5;
    shift_err = std::max(shift_err, max_abs_diff(smooth(shift_rotate_function(g, f, 0, 0, dt), u).scores,
                                                 shift_rotate_function(g, smooth(f, u), 0, 0, dt).scores));
    const int du = n % 7 - 3, dv = n % 5 - 2;
    const GraspFunction back =
        shift_rotate_function(g, shift_rotate_function(g, f, du, dv, dt), -du, -dv, -dt);
    for (int kt = 0; kt < g.ntheta; ++kt)
      for (int kv = std::max(0, -dv); kv < std::min(g.nv, g.nv - dv); ++kv)
        for (int ku = std::max(0, -du); ku < std::min(g.nu, g.nu - du); ++ku)
          round_trip &= back.at(ku, kv, kt) == f.at(ku, kv, kt);
    round_trip &= shift_rotate_function(g, f, 0, 0, g.ntheta).scores == f.scores;
  }
  return {mismatched == 0 && shift_err == 0.0 && round_trip,
          "oracle: " + std::to_string(mismatched) + "/" + std::to_string(cells) +
              " interior cells differ (matched jitter); smooth theta shift max diff " + fmt("%.3g", shift_err) +
              "; shift round trip " + (round_trip ? "exact" : "broken")};
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) {
      std::ifstream is(e.path(), std::ios::binary);
      std::ostringstream os;
      os << is.rdbuf();
      out[fs::relative(e.path(), root).generic_string()] = os.str();
    }
  return out;
}

Outcome determinism() {
  RunConfig cfg = default_run_config();
  cfg.seed = 1;
  cfg.jobs = 1;
  cfg.predictor.training.steps = 6;
  cfg.predictor.training.augmentations = 4;
  cfg.eval.objects = 4;
  cfg.eval.trials = 4;
  const fs::path root = fs::current_path() / "determinism_runs";
  fs::remove_all(root);
  std::ostringstream sink;
  for (const char* run : {"a", "b"}) {
    const fs::path dir = root / run;
    cmd_generate(cfg, 3, dir / "dataset", sink);
    cmd_train(cfg, dir / "dataset", dir / "model.bin", sink);
    cmd_evaluate(cfg, dir / "results.csv", sink);
  }
  const auto a = read_tree(root / "a"), b = read_tree(root / "b");
  std::size_t differing = 0;
  for (const auto& [k, v] : a) differing += !b.count(k) || b.at(k) != v;
  const bool ok = a.size() == b.size() && differing == 0 && a.size() >= 15;
  fs::remove_all(root);
  return {ok, std::to_string(a.size()) + " files compared (dataset, model, loss curve, results), " +
                  std::to_string(differing) + " differ"};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
  double budget_s;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "convolution oracle equivalence", convolution_oracle, 5},
      {2, "interpolation exactness", interpolation_exactness, 5},
      {3, "gradient correctness", gradient_correctness, 60},
      {4, "overfit smoke test", overfit_smoke, 600},
      {5, "robustness trend", robustness_trend, 1800},
      {6, "zero-uncertainty degeneracy", zero_uncertainty, 5},
      {7, "equivariance suite", equivariance, 600},
      {8, "determinism", determinism, 1e9},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  int failed = 0, ran = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = secs < c.budget_s;
    const bool pass = o.pass && in_budget;
    failed += !pass;
    std::printf("[%s] %d %s: %s; %.1f s%s\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                in_budget ? "" : " (over budget)");
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
