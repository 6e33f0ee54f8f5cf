#include <cmath>
#include <numbers>

#include "doctest.h"
#include "graspfn/error.hpp"
#include "graspfn/grasp_ops.hpp"
#include "test_support.hpp"

using namespace graspfn;
using testing_support::max_abs_diff;
using testing_support::naive_smooth;
using testing_support::random_function;
using testing_support::small_grid;

constexpr double kPi = std::numbers::pi;

namespace {

// Trilinear oracle on an explicit lattice, treating theta as periodic.
double naive_trilinear(const GraspFunction& f, double cu, double cv, double ct) {
  const PoseGrid& g = f.grid;
  cu = std::clamp(cu, 0.0, g.nu - 1.0);
  cv = std::clamp(cv, 0.0, g.nv - 1.0);
  ct = std::fmod(std::fmod(ct, g.ntheta) + g.ntheta, g.ntheta);
  double acc = 0.0;
  for (int t = 0; t < g.ntheta + 1; ++t)
    for (int v = 0; v < g.nv; ++v)
      for (int u = 0; u < g.nu; ++u) {
        const double w = std::max(0.0, 1 - std::abs(cu - u)) * std::max(0.0, 1 - std::abs(cv - v)) *
                         std::max(0.0, 1 - std::abs(ct - t));
        if (w > 0) acc += w * f.at(u, v, t % g.ntheta);
      }
  return acc;
}

}  // namespace

TEST_CASE("uncertainty model validation") {
  CHECK_NOTHROW(UncertaintyModel{}.validate());
  UncertaintyModel u = UncertaintyModel::from_degrees(10, 20);
  CHECK(u.cov_uv(0, 0) == doctest::Approx(100));
  CHECK(u.sigma_theta == doctest::Approx(20 * kPi / 180));
  CHECK(u.diagonal());
  u.cov_uv(0, 1) = 5;
  CHECK_THROWS_AS(u.validate(), ConfigError);  // asymmetric
  u.cov_uv(1, 0) = 5;
  CHECK_NOTHROW(u.validate());
  CHECK_FALSE(u.diagonal());
  u.cov_uv(0, 1) = u.cov_uv(1, 0) = 150;
  CHECK_THROWS_AS(u.validate(), ConfigError);  // not PSD
  u = UncertaintyModel{};
  u.sigma_theta = -0.1;
  CHECK_THROWS_AS(u.validate(), ConfigError);
  u = UncertaintyModel{};
  u.cov_uv << 100, 100, 100, 100;  // singular but correlated
  CHECK_NOTHROW(u.validate());
  CHECK_THROWS_AS(gaussian_kernel(small_grid(6, 6, 6), u), ConfigError);
}

TEST_CASE("taps are normalised, symmetric and truncated at three sigma") {
  for (double s : {2.0, 5.0, 10.0, 15.0, 29.0, 30.0}) {
    const auto w = gaussian_taps(s, 10.0);
    CHECK(w.size() == static_cast<std::size_t>(2 * static_cast<int>(std::floor(3 * s / 10 + 1e-9)) + 1));
    double sum = 0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      sum += w[k];
      CHECK(w[k] == doctest::Approx(w[w.size() - 1 - k]));
    }
    CHECK(sum == doctest::Approx(1.0));
  }
  CHECK(gaussian_taps(0.0, 10.0) == std::vector<double>{1.0});
}

TEST_CASE("kernel weights sum to one") {
  const PoseGrid g = small_grid(10, 8, 6);
  UncertaintyModel u = UncertaintyModel::from_degrees(12, 25);
  Kernel3 k = gaussian_kernel(g, u);
  double s = 0;
  for (double w : k.weights) s += w;
  CHECK(s == doctest::Approx(1.0));
  CHECK(k.ru == 3);
  CHECK(k.rt == 2);
  u.cov_uv(0, 1) = u.cov_uv(1, 0) = 60;
  k = gaussian_kernel(g, u);
  s = 0;
  for (double w : k.weights) s += w;
  CHECK(s == doctest::Approx(1.0));
  CHECK(k.at(1, 1, 0) > k.at(1, -1, 0));
}

TEST_CASE("smoothing matches brute-force convolution") {
  const PoseGrid g = small_grid(8, 6, 6);
  Rng r(21);
  for (int n = 0; n < 12; ++n) {
    const GraspFunction f = random_function(g, 100 + n, n % 2 == 0);
    UncertaintyModel u = UncertaintyModel::from_degrees(r.uniform(0, 25), r.uniform(0, 45));
    if (n % 3 == 2) {
      u.cov_uv(1, 1) = r.uniform(20, 300);
      u.cov_uv(0, 1) = u.cov_uv(1, 0) = 0.5 * std::sqrt(u.cov_uv(0, 0) * u.cov_uv(1, 1));
    }
    const std::vector<double> oracle = naive_smooth(f, u);
    CHECK(max_abs_diff(smooth(f, u).scores, oracle) < 1e-9);
    CHECK(max_abs_diff(smooth_direct(f, gaussian_kernel(g, u)).scores, oracle) < 1e-9);
  }
}

TEST_CASE("zero uncertainty is the identity") {
  const PoseGrid g = small_grid(9, 7, 6);
  for (int n = 0; n < 20; ++n) {
    const GraspFunction f = random_function(g, n);
    const GraspFunction s = smooth(f, UncertaintyModel{});
    CHECK(s.scores == f.scores);
    CHECK(s.provenance.kind == "smoothed");
  }
}

TEST_CASE("theta-only smoothing preserves slab mass and constants") {
  const PoseGrid g = small_grid(7, 5, 6);
  const GraspFunction f = random_function(g, 3);
  UncertaintyModel u;
  u.sigma_theta = 0.4;
  const GraspFunction s = smooth(f, u);
  double a = 0, b = 0;
  for (std::size_t i = 0; i < g.size(); ++i) a += f.scores[i], b += s.scores[i];
  CHECK(b == doctest::Approx(a).epsilon(1e-12));
  const GraspFunction c = smooth(GraspFunction(small_grid(12, 12, 6), 0.7), UncertaintyModel::from_degrees(15, 30));
  // Away from the zero-padded border a constant stays constant.
  CHECK(c.at(6, 6, 1) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(c.at(0, 0, 1) < 0.7);
}

TEST_CASE("smoothing commutes with theta rotation and interior translation") {
  const PoseGrid g = small_grid(12, 10, 6);
  const UncertaintyModel u = UncertaintyModel::from_degrees(10, 30);
  for (int n = 0; n < 10; ++n) {
    const GraspFunction f = random_function(g, 50 + n);
    for (int dt = 1; dt < 6; ++dt) {
      const auto a = smooth(shift_rotate_function(g, f, 0, 0, dt), u);
      const auto b = shift_rotate_function(g, smooth(f, u), 0, 0, dt);
      CHECK(max_abs_diff(a.scores, b.scores) < 1e-12);
    }
    // Translate a function whose support is well inside the grid.
    GraspFunction h(g);
    for (int kt = 0; kt < 6; ++kt)
      for (int kv = 4; kv < 6; ++kv)
        for (int ku = 4; ku < 6; ++ku) h.at(ku, kv, kt) = f.at(ku, kv, kt);
    const auto a = smooth(shift_rotate_function(g, h, 2, -1, 0), u);
    const auto b = shift_rotate_function(g, smooth(h, u), 2, -1, 0);
    CHECK(max_abs_diff(a.scores, b.scores) < 1e-12);
  }
}

TEST_CASE("smoothing a quantised function stays in range") {
  const PoseGrid g = small_grid(10, 8, 6);
  for (int n = 0; n < 10; ++n) {
    const auto s = smooth(random_function(g, n, true), UncertaintyModel::from_degrees(5 + n, 4 * n));
    for (double v : s.scores) REQUIRE((v >= 0.0 && v <= 1.0));
  }
}

TEST_CASE("interpolation hits cell centres and matches a trilinear oracle") {
  const PoseGrid g = small_grid(8, 6, 6);
  Rng r(7);
  for (int n = 0; n < 40; ++n) {
    const GraspFunction f = random_function(g, 900 + n);
    for (std::size_t i = 0; i < g.size(); i += 7) CHECK(interpolate(f, index_to_pose(g, i)) == f.scores[i]);
    for (int k = 0; k < 50; ++k) {
      const double u = r.uniform(g.u_min(), g.u_max()), v = r.uniform(g.v_min(), g.v_max());
      const double t = r.uniform(-1.0, 4.0);
      const double expect = naive_trilinear(f, (u - g.origin.u()) / g.cell_uv_mm, (v - g.origin.v()) / g.cell_uv_mm,
                                            Pose(u, v, t).theta() / g.cell_theta());
      REQUIRE(interpolate(f, Pose(u, v, t)) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("interpolation wraps theta and clamps the border half cell") {
  const PoseGrid g = small_grid(4, 4, 6);
  GraspFunction f(g);
  f.at(1, 1, 5) = 1.0;
  const Pose c = index_to_pose(g, g.flat({1, 1, 0}));
  CHECK(interpolate(f, Pose(c.u(), c.v(), 5.5 * g.cell_theta())) == doctest::Approx(0.5));
  CHECK(interpolate(f, Pose(c.u(), c.v(), -0.25 * g.cell_theta())) == doctest::Approx(0.25));
  GraspFunction e(g);
  e.at(0, 0, 0) = 1.0;
  CHECK(interpolate(e, Pose(g.u_min(), g.v_min(), 0.0)) == 1.0);
  CHECK(interpolate(e, Pose(g.u_min() + 2.5, g.v_min(), 0.0)) == 1.0);
  CHECK_THROWS_AS(interpolate(e, Pose(g.u_min() - 0.01, 0.0, 0.0)), RangeError);
  CHECK_THROWS_AS(interpolate(e, Pose(0.0, g.v_max() + 0.01, 0.0)), RangeError);
}

TEST_CASE("argmax of a single spike is its cell centre") {
  const PoseGrid g = small_grid(8, 6, 6);
  for (std::size_t i : {0ul, 17ul, 100ul, 287ul}) {
    GraspFunction f(g);
    f.scores[i] = 0.8;
    const PlannedPose p = argmax_continuous(f);
    CHECK(p.cell == i);
    CHECK(p.score == doctest::Approx(0.8));
    const Pose c = index_to_pose(g, i);
    CHECK(p.pose.u() == doctest::Approx(c.u()));
    CHECK(p.pose.v() == doctest::Approx(c.v()));
    CHECK(p.pose.theta() == doctest::Approx(c.theta()));
  }
}

TEST_CASE("argmax ties go to the lowest index and the nearest sample") {
  const PoseGrid g = small_grid(8, 6, 6);
  const GraspFunction flat(g, 0.5);
  const PlannedPose p = argmax_continuous(flat);
  CHECK(p.cell == 0);
  CHECK(p.pose == index_to_pose(g, 0));
  GraspFunction two(g);
  two.scores[40] = two.scores[30] = 1.0;
  CHECK(argmax_continuous(two).cell == 30);
  CHECK_THROWS_AS(argmax_continuous(flat, 0), ConfigError);
}

TEST_CASE("refined argmax never scores below the best cell") {
  const PoseGrid g = small_grid(8, 6, 6);
  for (int n = 0; n < 30; ++n) {
    const GraspFunction f = random_function(g, 300 + n);
    const double best = *std::max_element(f.scores.begin(), f.scores.end());
    const PlannedPose p = argmax_continuous(f, 4);
    CHECK(p.score >= best);
    CHECK(interpolate(f, p.pose) == doctest::Approx(p.score));
  }
}
