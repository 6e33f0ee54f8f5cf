#include "graspfn/grasp_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "graspfn/error.hpp"

namespace graspfn {

namespace {

constexpr double kPi = std::numbers::pi;

double snap(double x) {
  const double r = std::round(x);
  return std::abs(x - r) < 1e-9 ? r : x;
}

int tap_radius(double sigma, double cell) {
  if (sigma <= 0.0) return 0;
  return static_cast<int>(std::floor(3.0 * sigma / cell + 1e-9));
}

}  // namespace

UncertaintyModel UncertaintyModel::isotropic(double sigma_uv_mm, double sigma_theta_rad) {
  UncertaintyModel u;
  u.cov_uv = Eigen::Matrix2d::Identity() * (sigma_uv_mm * sigma_uv_mm);
  u.sigma_theta = sigma_theta_rad;
  return u;
}

UncertaintyModel UncertaintyModel::from_degrees(double sigma_uv_mm, double sigma_theta_deg) {
  return isotropic(sigma_uv_mm, sigma_theta_deg * kPi / 180.0);
}

void UncertaintyModel::validate() const {
  if (!cov_uv.allFinite() || !std::isfinite(sigma_theta)) throw ConfigError("uncertainty: values must be finite");
  if (cov_uv(0, 1) != cov_uv(1, 0)) throw ConfigError("uncertainty: covariance must be symmetric");
  if (sigma_theta < 0.0) throw ConfigError("uncertainty: sigma_theta must be >= 0");
  const double det = cov_uv.determinant();
  if (cov_uv(0, 0) < 0.0 || cov_uv(1, 1) < 0.0 || det < -1e-12 * (1.0 + cov_uv.squaredNorm()))
    throw ConfigError("uncertainty: covariance must be positive semi-definite");
}

nlohmann::json UncertaintyModel::to_json() const {
  return {{"cov_uv_mm2", {cov_uv(0, 0), cov_uv(0, 1), cov_uv(1, 1)}}, {"sigma_theta_rad", sigma_theta}};
}

std::vector<double> gaussian_taps(double sigma, double cell, double period) {
  const int r = tap_radius(sigma, cell);
  std::vector<double> w(static_cast<std::size_t>(2 * r + 1), 0.0);
  if (r == 0) {
    w[0] = 1.0;
    return w;
  }
  const double inv = 1.0 / (2.0 * sigma * sigma);
  double sum = 0.0;
  for (int k = -r; k <= r; ++k) {
    const double d = k * cell;
    double v = std::exp(-d * d * inv);
    if (period > 0.0) v += std::exp(-(d - period) * (d - period) * inv) + std::exp(-(d + period) * (d + period) * inv);
    w[static_cast<std::size_t>(k + r)] = v;
    sum += v;
  }
  for (double& v : w) v /= sum;
  return w;
}

Kernel3 gaussian_kernel(const PoseGrid& grid, const UncertaintyModel& unc) {
  unc.validate();
  const double su = std::sqrt(std::max(0.0, unc.cov_uv(0, 0)));
  const double sv = std::sqrt(std::max(0.0, unc.cov_uv(1, 1)));
  const std::vector<double> tt = gaussian_taps(unc.sigma_theta, grid.cell_theta(), kPi);
  Kernel3 k;
  k.rt = static_cast<int>(tt.size() / 2);
  if (unc.diagonal()) {
    const std::vector<double> tu = gaussian_taps(su, grid.cell_uv_mm);
    const std::vector<double> tv = gaussian_taps(sv, grid.cell_uv_mm);
    k.ru = static_cast<int>(tu.size() / 2);
    k.rv = static_cast<int>(tv.size() / 2);
    k.weights.reserve(tu.size() * tv.size() * tt.size());
    for (double wt : tt)
      for (double wv : tv)
        for (double wu : tu) k.weights.push_back(wt * wv * wu);
  } else {
    if (!(unc.cov_uv.determinant() > 0.0))
      throw ConfigError("uncertainty: a correlated (u, v) covariance must be positive definite");
    const Eigen::Matrix2d inv = unc.cov_uv.inverse();
    k.ru = tap_radius(su, grid.cell_uv_mm);
    k.rv = tap_radius(sv, grid.cell_uv_mm);
    for (double wt : tt)
      for (int dv = -k.rv; dv <= k.rv; ++dv)
        for (int du = -k.ru; du <= k.ru; ++du) {
          const Eigen::Vector2d x(du * grid.cell_uv_mm, dv * grid.cell_uv_mm);
          k.weights.push_back(wt * std::exp(-0.5 * x.dot(inv * x)));
        }
  }
  double sum = 0.0;
  for (double w : k.weights) sum += w;
  for (double& w : k.weights) w /= sum;
  return k;
}

namespace {

GraspFunction smoothed_like(const GraspFunction& f, const nlohmann::json& details) {
  GraspFunction out(f.grid, 0.0);
  out.provenance.kind = "smoothed";
  out.provenance.seed = f.provenance.seed;
  out.provenance.details = details;
  out.provenance.details["source"] = f.provenance.kind;
  return out;
}

void clamp_unit(std::vector<double>& v) {
  for (double& x : v) x = std::clamp(x, 0.0, 1.0);
}

}  // namespace

GraspFunction smooth_direct(const GraspFunction& f, const Kernel3& kernel) {
  const PoseGrid& g = f.grid;
  GraspFunction out = smoothed_like(f, {{"kernel", "direct"}});
  for (int kt = 0; kt < g.ntheta; ++kt)
    for (int kv = 0; kv < g.nv; ++kv)
      for (int ku = 0; ku < g.nu; ++ku) {
        double acc = 0.0;
        for (int dt = -kernel.rt; dt <= kernel.rt; ++dt) {
          const int t = ((kt + dt) % g.ntheta + g.ntheta) % g.ntheta;
          for (int dv = -kernel.rv; dv <= kernel.rv; ++dv) {
            const int v = kv + dv;
            if (v < 0 || v >= g.nv) continue;
            for (int du = -kernel.ru; du <= kernel.ru; ++du) {
              const int u = ku + du;
              if (u < 0 || u >= g.nu) continue;
              acc += kernel.at(du, dv, dt) * f.at(u, v, t);
            }
          }
        }
        out.at(ku, kv, kt) = acc;
      }
  clamp_unit(out.scores);
  return out;
}

GraspFunction smooth(const GraspFunction& f, const UncertaintyModel& unc) {
  unc.validate();
  f.validate();
  const PoseGrid& g = f.grid;
  if (!unc.diagonal()) {
    GraspFunction out = smooth_direct(f, gaussian_kernel(g, unc));
    out.provenance.details = {{"uncertainty", unc.to_json()}, {"source", f.provenance.kind}};
    return out;
  }
  const std::vector<double> tu = gaussian_taps(std::sqrt(unc.cov_uv(0, 0)), g.cell_uv_mm);
  const std::vector<double> tv = gaussian_taps(std::sqrt(unc.cov_uv(1, 1)), g.cell_uv_mm);
  const std::vector<double> tt = gaussian_taps(unc.sigma_theta, g.cell_theta(), kPi);
  const int ru = static_cast<int>(tu.size() / 2), rv = static_cast<int>(tv.size() / 2),
            rt = static_cast<int>(tt.size() / 2);

  GraspFunction out = smoothed_like(f, {{"uncertainty", unc.to_json()}});
  std::vector<double> a = f.scores, b(a.size(), 0.0);
  if (ru > 0) {
    for (int kt = 0; kt < g.ntheta; ++kt)
      for (int kv = 0; kv < g.nv; ++kv)
        for (int ku = 0; ku < g.nu; ++ku) {
          double acc = 0.0;
          for (int d = -ru; d <= ru; ++d) {
            const int u = ku + d;
            if (u >= 0 && u < g.nu) acc += tu[static_cast<std::size_t>(d + ru)] * a[g.flat({u, kv, kt})];
          }
          b[g.flat({ku, kv, kt})] = acc;
        }
    std::swap(a, b);
  }
  if (rv > 0) {
    for (int kt = 0; kt < g.ntheta; ++kt)
      for (int kv = 0; kv < g.nv; ++kv)
        for (int ku = 0; ku < g.nu; ++ku) {
          double acc = 0.0;
          for (int d = -rv; d <= rv; ++d) {
            const int v = kv + d;
            if (v >= 0 && v < g.nv) acc += tv[static_cast<std::size_t>(d + rv)] * a[g.flat({ku, v, kt})];
          }
          b[g.flat({ku, kv, kt})] = acc;
        }
    std::swap(a, b);
  }
  if (rt > 0) {
    for (int kt = 0; kt < g.ntheta; ++kt)
      for (int kv = 0; kv < g.nv; ++kv)
        for (int ku = 0; ku < g.nu; ++ku) {
          double acc = 0.0;
          for (int d = -rt; d <= rt; ++d) {
            const int t = ((kt + d) % g.ntheta + g.ntheta) % g.ntheta;
            acc += tt[static_cast<std::size_t>(d + rt)] * a[g.flat({ku, kv, t})];
          }
          b[g.flat({ku, kv, kt})] = acc;
        }
    std::swap(a, b);
  }
  out.scores = std::move(a);
  clamp_unit(out.scores);
  return out;
}

double interpolate(const GraspFunction& f, const Pose& q) {
  const PoseGrid& g = f.grid;
  if (!(q.u() >= g.u_min() && q.u() <= g.u_max()))
    throw RangeError("interpolate: u = " + std::to_string(q.u()) + " mm is outside the grid extent");
  if (!(q.v() >= g.v_min() && q.v() <= g.v_max()))
    throw RangeError("interpolate: v = " + std::to_string(q.v()) + " mm is outside the grid extent");

  auto axis = [](double c, int n, int& k0, int& k1, double& frac) {
    c = std::clamp(snap(c), 0.0, static_cast<double>(n - 1));
    k0 = static_cast<int>(std::floor(c));
    if (k0 >= n - 1) {
      k0 = k1 = n - 1;
      frac = 0.0;
    } else {
      k1 = k0 + 1;
      frac = c - k0;
    }
  };
  int u0, u1, v0, v1;
  double fu, fv;
  axis((q.u() - g.origin.u()) / g.cell_uv_mm, g.nu, u0, u1, fu);
  axis((q.v() - g.origin.v()) / g.cell_uv_mm, g.nv, v0, v1, fv);

  double ct = std::fmod(snap((q.theta() - g.origin.theta()) / g.cell_theta()), static_cast<double>(g.ntheta));
  if (ct < 0.0) ct += g.ntheta;
  if (ct >= g.ntheta) ct = 0.0;
  const int t0 = static_cast<int>(std::floor(ct));
  const int t1 = (t0 + 1) % g.ntheta;
  const double ft = ct - t0;

  auto bilinear = [&](int t) {
    const double a = (1.0 - fu) * f.at(u0, v0, t) + fu * f.at(u1, v0, t);
    const double b = (1.0 - fu) * f.at(u0, v1, t) + fu * f.at(u1, v1, t);
    return (1.0 - fv) * a + fv * b;
  };
  return (1.0 - ft) * bilinear(t0) + ft * bilinear(t1);
}

PlannedPose argmax_continuous(const GraspFunction& f, int refine) {
  if (refine < 1) throw ConfigError("argmax refine must be >= 1");
  const PoseGrid& g = f.grid;
  std::size_t best = 0;
  for (std::size_t i = 1; i < f.scores.size(); ++i)
    if (f.scores[i] > f.scores[best]) best = i;
  const CellIndex c = g.cell(best);

  PlannedPose out;
  out.cell = best;
  out.score = -std::numeric_limits<double>::infinity();
  int best_d2 = 0;
  const double step = 1.0 / refine;
  for (int it = -refine; it <= refine; ++it) {
    const double ct = c.kt + it * step;
    for (int iv = -refine; iv <= refine; ++iv) {
      const double cv = c.kv + iv * step;
      if (cv < 0.0 || cv > g.nv - 1) continue;
      for (int iu = -refine; iu <= refine; ++iu) {
        const double cu = c.ku + iu * step;
        if (cu < 0.0 || cu > g.nu - 1) continue;
        const Pose p(g.origin.u() + cu * g.cell_uv_mm, g.origin.v() + cv * g.cell_uv_mm,
                     g.origin.theta() + ct * g.cell_theta());
        const double s = interpolate(f, p);
        const int d2 = it * it + iv * iv + iu * iu;
        if (s > out.score + 1e-12 || (s >= out.score - 1e-12 && d2 < best_d2)) {
          out.score = s;
          out.pose = p;
          best_d2 = d2;
        }
      }
    }
  }
  return out;
}

}  // namespace graspfn
