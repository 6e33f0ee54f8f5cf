#include "graspfn/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <thread>

#include "graspfn/error.hpp"
#include "graspfn/random.hpp"

namespace graspfn {

SimulatedObject simulate_object(std::uint64_t master_seed, std::uint64_t object_seed, const SimulationParams& p) {
  SimulatedObject s;
  s.object_seed = object_seed;
  const SceneObject obj = generate_object(derive_seed(master_seed, "scene", {object_seed}), p.objects);
  s.scene = place_object(obj, derive_seed(master_seed, "placement", {object_seed}), p.grid, p.scene, p.placement);
  s.clean = render_depth(s.scene, p.grid);
  s.noisy = apply_noise(s.clean, p.noise, derive_seed(master_seed, "noise", {object_seed}));
  return s;
}

std::uint64_t oracle_seed(std::uint64_t master_seed, std::uint64_t object_seed) {
  return derive_seed(master_seed, "jitter", {object_seed});
}

void EvalConfig::validate() const {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (methods.empty()) throw ConfigError("at least one method is required");
  if (sigma_uv_mm.empty() || sigma_theta_deg.empty()) throw ConfigError("sigma lists must be non-empty");
  for (double s : sigma_uv_mm)
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("sigma_uv_mm values must be finite and >= 0");
  for (double s : sigma_theta_deg)
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("sigma_theta_deg values must be finite and >= 0");
  if (source == FunctionSource::Predictor && !model) throw ConfigError("predictor source needs a model");
  if (model && !(model->arch.grid == sim.grid)) throw ConfigError("model grid does not match evaluation grid");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (refine < 1) throw ConfigError("refine must be >= 1");
  sim.grid.validate();
  sim.noise.validate();
  gripper.validate();
}

const EvalCell& EvalResult::at(Method m, double su, double st) const {
  for (const auto& c : cells)
    if (c.method == m && c.sigma_uv_mm == su && c.sigma_theta_deg == st) return c;
  throw RangeError("no result for " + to_string(m) + " at the requested setting");
}

namespace {

struct ObjectOutcome {
  bool skipped = false;
  std::string reason;
  std::vector<long> successes;  // indexed like EvalResult::cells
};

ObjectOutcome evaluate_object(const EvalConfig& cfg, std::uint64_t object_seed) {
  ObjectOutcome out;
  const std::size_t nm = cfg.methods.size(), nt = cfg.sigma_theta_deg.size(), nu = cfg.sigma_uv_mm.size();
  out.successes.assign(nm * nt * nu, 0);
  try {
    const SimulatedObject obj = simulate_object(cfg.master_seed, object_seed, cfg.sim);
    const DepthImage img = cfg.inpaint ? inpaint_zeros(obj.noisy) : obj.noisy;
    const PreparedScene prepared(obj.scene);
    const GraspFunction f = cfg.source == FunctionSource::Oracle
                                ? compute_grasp_function(obj.scene, cfg.gripper, cfg.sim.grid,
                                                         oracle_seed(cfg.master_seed, object_seed))
                                : predict_grasp_function(*cfg.model, img, cfg.aggregation);

    std::optional<Pose> centroid, best;
    for (Method m : cfg.methods) {
      if (m == Method::Centroid && !centroid)
        centroid = centroid_plan(img, cfg.sim.grid, obj.scene.plane_z_mm, cfg.foreground_margin_mm);
      if (m == Method::Best && !best) best = best_grasp_plan(f, cfg.refine).pose;
    }

    for (std::size_t it = 0; it < nt; ++it)
      for (std::size_t iu = 0; iu < nu; ++iu) {
        const UncertaintyModel unc = UncertaintyModel::from_degrees(cfg.sigma_uv_mm[iu], cfg.sigma_theta_deg[it]);
        std::vector<Pose> targets(nm);
        for (std::size_t im = 0; im < nm; ++im) {
          switch (cfg.methods[im]) {
            case Method::Centroid: targets[im] = *centroid; break;
            case Method::Best: targets[im] = *best; break;
            case Method::Robust: targets[im] = robust_best_grasp_plan(f, unc, cfg.refine).pose; break;
          }
        }
        for (int t = 0; t < cfg.trials; ++t) {
          const std::uint64_t es = derive_seed(cfg.master_seed, "execution",
                                               {object_seed, static_cast<std::uint64_t>(it),
                                                static_cast<std::uint64_t>(iu), static_cast<std::uint64_t>(t)});
          for (std::size_t im = 0; im < nm; ++im) {
            const Pose achieved = sample_achieved_pose(targets[im], unc, es);
            if (attempt_grasp(prepared, cfg.gripper, achieved)) ++out.successes[(im * nt + it) * nu + iu];
          }
        }
      }
  } catch (const Error& e) {
    out.skipped = true;
    out.reason = "object " + std::to_string(object_seed) + ": " + e.what();
    std::fill(out.successes.begin(), out.successes.end(), 0);
  }
  return out;
}

}  // namespace

EvalResult run_sweep(const EvalConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.object_seeds.size();
  std::vector<ObjectOutcome> outcomes(n);
  const int jobs = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), std::max<std::size_t>(n, 1)));
  if (jobs <= 1) {
    for (std::size_t k = 0; k < n; ++k) outcomes[k] = evaluate_object(cfg, cfg.object_seeds[k]);
  } else {
    std::vector<std::thread> th;
    for (int w = 0; w < jobs; ++w)
      th.emplace_back([&, w] {
        for (std::size_t k = w; k < n; k += jobs) outcomes[k] = evaluate_object(cfg, cfg.object_seeds[k]);
      });
    for (auto& t : th) t.join();
  }

  EvalResult r;
  r.seed = cfg.master_seed;
  for (Method m : cfg.methods)
    for (double st : cfg.sigma_theta_deg)
      for (double su : cfg.sigma_uv_mm) r.cells.push_back({m, su, st, 0, 0});
  for (const auto& o : outcomes) {
    if (o.skipped) {
      ++r.objects_skipped;
      r.skip_reasons.push_back(o.reason);
      continue;
    }
    ++r.objects_evaluated;
    for (std::size_t c = 0; c < r.cells.size(); ++c) {
      r.cells[c].trials += cfg.trials;
      r.cells[c].successes += o.successes[c];
    }
  }
  return r;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::string results_csv(const EvalResult& r) {
  std::ostringstream os;
  os << "method,sigma_uv_mm,sigma_theta_deg,trials,successes,rate\n";
  for (const auto& c : r.cells)
    os << to_string(c.method) << ',' << fmt("%g", c.sigma_uv_mm) << ',' << fmt("%g", c.sigma_theta_deg) << ','
       << c.trials << ',' << c.successes << ',' << fmt("%.6f", c.rate()) << '\n';
  return os.str();
}

std::string uv_slice_csv(const EvalResult& r, double sigma_theta_deg) {
  std::vector<Method> methods;
  std::vector<double> uvs;
  for (const auto& c : r.cells) {
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end()) methods.push_back(c.method);
    if (std::find(uvs.begin(), uvs.end(), c.sigma_uv_mm) == uvs.end()) uvs.push_back(c.sigma_uv_mm);
  }
  std::ostringstream os;
  os << "sigma_uv_mm";
  for (Method m : methods) os << ',' << to_string(m);
  os << '\n';
  for (double su : uvs) {
    os << fmt("%g", su);
    for (Method m : methods) os << ',' << fmt("%.6f", r.at(m, su, sigma_theta_deg).rate());
    os << '\n';
  }
  return os.str();
}

std::string summary_table(const EvalResult& r) {
  std::vector<Method> methods;
  std::vector<double> uvs, ths;
  for (const auto& c : r.cells) {
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end()) methods.push_back(c.method);
    if (std::find(uvs.begin(), uvs.end(), c.sigma_uv_mm) == uvs.end()) uvs.push_back(c.sigma_uv_mm);
    if (std::find(ths.begin(), ths.end(), c.sigma_theta_deg) == ths.end()) ths.push_back(c.sigma_theta_deg);
  }
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-10s %9s", "method", "s_uv(mm)");
  os << buf;
  for (double st : ths) {
    std::snprintf(buf, sizeof buf, " %7s", (fmt("%g", st) + "deg").c_str());
    os << buf;
  }
  os << '\n';
  for (Method m : methods)
    for (double su : uvs) {
      std::snprintf(buf, sizeof buf, "%-10s %9g", to_string(m).c_str(), su);
      os << buf;
      for (double st : ths) {
        std::snprintf(buf, sizeof buf, " %6.1f%%", 100.0 * r.at(m, su, st).rate());
        os << buf;
      }
      os << '\n';
    }
  os << "objects evaluated: " << r.objects_evaluated << ", skipped: " << r.objects_skipped << '\n';
  return os.str();
}

}  // namespace graspfn
