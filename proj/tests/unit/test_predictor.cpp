#include <cmath>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "graspfn/error.hpp"
#include "graspfn/grasp_oracle.hpp"
#include "graspfn/predictor.hpp"
#include "test_support.hpp"

using namespace graspfn;
using testing_support::gradient_check;
using testing_support::small_grid;

namespace {

PredictorArch tiny_arch() {
  PredictorArch a;
  a.grid = small_grid(3, 2, 2);
  a.image_width = a.grid.image_width();   // 42
  a.image_height = a.grid.image_height();  // 28
  a.downsample = 2;
  a.conv = {{2, 3}, {3, 3}};
  a.hidden = {5};
  return a;
}

std::vector<double> random_input(const PredictorArch& a, std::uint64_t seed) {
  Rng r(seed);
  std::vector<double> x(static_cast<std::size_t>(a.input_width()) * a.input_height());
  for (double& v : x) v = r.uniform(-1, 1);
  return x;
}

// Straight transcription of the layer definitions, parameters read in
// declaration order.
std::vector<double> naive_forward(const PredictorModel& m, std::vector<double> x) {
  const auto& a = m.arch;
  std::size_t off = 0;
  int c = 1, h = a.input_height(), w = a.input_width();
  auto at = [](const std::vector<double>& v, int C, int H, int W, int ch, int y, int xx) {
    (void)C;
    if (y < 0 || y >= H || xx < 0 || xx >= W) return 0.0;
    return v[(static_cast<std::size_t>(ch) * H + y) * W + xx];
  };
  for (const auto& s : a.conv) {
    const int K = s.kernel, r = K / 2;
    const std::size_t wo = off, bo = off + static_cast<std::size_t>(s.channels) * c * K * K;
    off = bo + s.channels;
    std::vector<double> conv(static_cast<std::size_t>(s.channels) * h * w);
    for (int o = 0; o < s.channels; ++o)
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
          double acc = m.params[bo + o];
          for (int i = 0; i < c; ++i)
            for (int ky = 0; ky < K; ++ky)
              for (int kx = 0; kx < K; ++kx)
                acc += m.params[wo + ((static_cast<std::size_t>(o) * c + i) * K + ky) * K + kx] *
                       at(x, c, h, w, i, y + ky - r, xx + kx - r);
          conv[(static_cast<std::size_t>(o) * h + y) * w + xx] = std::max(acc, 0.0);
        }
    const int h2 = h / 2, w2 = w / 2;
    std::vector<double> pooled(static_cast<std::size_t>(s.channels) * h2 * w2);
    for (int o = 0; o < s.channels; ++o)
      for (int y = 0; y < h2; ++y)
        for (int xx = 0; xx < w2; ++xx) {
          double mx = 0.0;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) mx = std::max(mx, at(conv, s.channels, h, w, o, 2 * y + dy, 2 * xx + dx));
          pooled[(static_cast<std::size_t>(o) * h2 + y) * w2 + xx] = mx;
        }
    x = std::move(pooled);
    c = s.channels;
    h = h2;
    w = w2;
  }
  std::vector<int> widths = a.hidden;
  widths.push_back(static_cast<int>(a.outputs()));
  for (std::size_t l = 0; l < widths.size(); ++l) {
    const int in = static_cast<int>(x.size()), out = widths[l];
    const std::size_t wo = off, bo = off + static_cast<std::size_t>(in) * out;
    off = bo + out;
    std::vector<double> y(out);
    for (int o = 0; o < out; ++o) {
      double acc = m.params[bo + o];
      for (int j = 0; j < in; ++j) acc += m.params[wo + static_cast<std::size_t>(o) * in + j] * x[j];
      y[o] = l + 1 < widths.size() ? std::max(acc, 0.0) : acc;
    }
    x = std::move(y);
  }
  REQUIRE(off == m.params.size());
  return x;
}

std::vector<LabeledInput> random_batch(const PredictorArch& a, int n, std::uint64_t seed) {
  std::vector<LabeledInput> b;
  Rng r(seed);
  for (int e = 0; e < n; ++e) {
    LabeledInput li{random_input(a, seed * 100 + e), {}};
    for (std::size_t j = 0; j < a.grid.size(); ++j) li.labels.push_back(static_cast<int>(r.index(6)));
    b.push_back(std::move(li));
  }
  return b;
}

}  // namespace

TEST_CASE("architecture presets") {
  const PredictorArch d = PredictorArch::desk(PoseGrid::desk());
  CHECK(d.input_width() == 84);
  CHECK(d.input_height() == 63);
  CHECK(d.conv.size() == 3);
  CHECK(d.outputs() == 2592 * 6);
  CHECK_NOTHROW(d.validate());
  const PredictorArch p = PredictorArch::paper(PoseGrid::paper());
  CHECK(p.conv.size() == 5);
  CHECK_NOTHROW(p.validate());
  CHECK(arch_from_json(arch_to_json(d)) == d);
  CHECK(arch_from_json(arch_to_json(p)) == p);
  PredictorArch bad = d;
  bad.conv[0].kernel = 4;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = d;
  bad.conv.resize(8, {4, 3});
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = d;
  bad.depth_scale_mm = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("parameter count follows the layer shapes") {
  const PredictorArch a = tiny_arch();
  // conv 1x2x3x3+2, conv 2x3x3x3+3, dense 45->5, head 5->72
  CHECK(parameter_count(a) == 20 + 57 + 230 + 432);
  CHECK(init_model(a, 1).parameter_count() == parameter_count(a));
}

TEST_CASE("initialisation is seeded, bounded by fan-in and has zero biases") {
  const PredictorArch a = tiny_arch();
  const PredictorModel m = init_model(a, 3);
  CHECK(m.params == init_model(a, 3).params);
  CHECK_FALSE(m.params == init_model(a, 4).params);
  const double b1 = std::sqrt(6.0 / 9.0);
  for (int k = 0; k < 18; ++k) CHECK(std::abs(m.params[k]) <= b1);
  CHECK(m.params[18] == 0.0);
  CHECK(m.params[19] == 0.0);
  CHECK(m.finite());
  const PredictorModel z = zero_model(a);
  CHECK(std::all_of(z.params.begin(), z.params.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("forward pass matches a direct transcription of the layers") {
  const PredictorArch a = tiny_arch();
  for (std::uint64_t s = 0; s < 5; ++s) {
    PredictorModel m = init_model(a, s);
    Rng r(s);
    for (double& p : m.params) p += r.uniform(-0.05, 0.05);  // nonzero biases too
    const auto x = random_input(a, 77 + s);
    const auto got = forward_input(m, x);
    const auto want = naive_forward(m, x);
    REQUIRE(got.size() == a.outputs());
    CHECK(testing_support::max_abs_diff(got, want) < 1e-12);
  }
}

TEST_CASE("input preparation") {
  const PredictorArch a = tiny_arch();
  DepthImage img(a.image_width, a.image_height, 600.0, 1.4);
  auto x = prepare_input(a, img);
  CHECK(x.size() == static_cast<std::size_t>(a.input_width() * a.input_height()));
  CHECK(std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; }));
  for (int y = 0; y < 2; ++y)
    for (int xx = 0; xx < 2; ++xx) img.at(xx, y) = 500.0;
  x = prepare_input(a, img);
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(prepare_input(a, DepthImage(10, 10, 600.0, 1.4)), ConfigError);
}

TEST_CASE("softmax and loss") {
  const std::array<double, 6> z{1, 2, 3, 4, 5, 6};
  const auto p = softmax(std::span<const double, 6>(z));
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0));
  std::array<double, 6> big{};
  for (int k = 0; k < 6; ++k) big[k] = z[k] + 1000.0;
  const auto q = softmax(std::span<const double, 6>(big));
  for (int k = 0; k < 6; ++k) CHECK(q[k] == doctest::Approx(p[k]));

  std::vector<double> logits{0, 0, 0, 0, 0, 0, 1, 2, 3, 4, 5, 6};
  std::vector<int> labels{2, 5};
  double s = 0;
  for (int k = 0; k < 6; ++k) s += std::exp(k + 1.0);
  const double want = 0.5 * (std::log(6.0) + (std::log(s) - 6.0));
  CHECK(loss(logits, labels) == doctest::Approx(want).epsilon(1e-14));
  labels[0] = 6;
  CHECK_THROWS_AS(loss(logits, labels), RangeError);
  CHECK_THROWS_AS(loss(logits, std::vector<int>{1}), ConfigError);
}

TEST_CASE("labels and aggregation") {
  const PoseGrid g = small_grid(2, 1, 1);
  GraspFunction f(g);
  f.scores = {0.0, 0.6};
  CHECK(labels_from_function(f) == std::vector<int>{0, 3});
  std::vector<double> logits(12, 0.0);
  logits[5] = 50.0;  // pose 0 certain of class 5
  logits[6 + 1] = 1.0;
  logits[6 + 4] = 1.0;
  const GraspFunction e = grasp_function_from_logits(g, logits);
  CHECK(e.scores[0] == doctest::Approx(1.0));
  const double z = 4 + 2 * std::exp(1.0);
  CHECK(e.scores[1] == doctest::Approx((2.0 + std::exp(1.0)) / z));
  const GraspFunction m = grasp_function_from_logits(g, logits, Aggregation::MaxClass);
  CHECK(m.scores[0] == 1.0);
  CHECK(m.scores[1] == doctest::Approx(0.2));  // first of the tied classes
  CHECK(e.provenance.kind == "predicted");
}

TEST_CASE("analytic gradients match central differences") {
  const PredictorArch a = tiny_arch();
  const PredictorModel m = init_model(a, 9);
  const auto batch = random_batch(a, 3, 2);
  std::vector<std::size_t> idx(m.parameter_count());
  std::iota(idx.begin(), idx.end(), 0);
  const auto r = gradient_check(m, batch, idx);
  CHECK(r.checked > idx.size() * 3 / 4);
  CHECK(r.max_rel < 1e-4);

  std::array<double, 6> w{1.0, 2.0, 0.5, 3.0, 1.0, 4.0};
  const auto rw = gradient_check(m, batch, idx, 1e-5, 1e-6, &w);
  CHECK(rw.max_rel < 1e-4);
}

TEST_CASE("model serialisation round trips bit for bit") {
  const PredictorArch a = tiny_arch();
  const PredictorModel m = init_model(a, 5);
  const std::string bytes = encode_model(m);
  CHECK(bytes.substr(0, 8) == "GFNMODEL");
  const PredictorModel back = decode_model(bytes);
  CHECK(back.arch == a);
  CHECK(back.params == m.params);
  CHECK(encode_model(back) == bytes);
  CHECK_THROWS_AS(decode_model("GFNMODEX" + bytes.substr(8)), ParseError);
  CHECK_THROWS_AS(decode_model(bytes.substr(0, bytes.size() - 3)), ParseError);
  std::string vers = bytes;
  vers[8] = 2;
  CHECK_THROWS_AS(decode_model(vers), ParseError);

  const auto path = std::filesystem::temp_directory_path() / "graspfn_model_roundtrip.bin";
  save_model(path, m);
  CHECK(load_model(path).params == m.params);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_model(path), IoError);
}

TEST_CASE("training is deterministic and reduces the loss") {
  const PredictorArch a = tiny_arch();
  Scene s;
  s.object = make_disk(20.0, 40.0);
  const GripperSpec grip;
  std::vector<TrainingExample> data{{render_depth(s, a.grid), compute_grasp_function(s, grip, a.grid, 1)}};
  TrainingConfig cfg;
  cfg.steps = 60;
  cfg.batch_size = 4;
  cfg.augmentations = 4;
  cfg.max_shift_cells = 0;
  cfg.optimizer = Optimizer::Adam;
  cfg.learning_rate = 0.01;
  const auto r1 = train(init_model(a, 1), data, cfg);
  const auto r2 = train(init_model(a, 1), data, cfg);
  CHECK(r1.model.params == r2.model.params);
  CHECK(r1.loss_curve == r2.loss_curve);
  CHECK(r1.loss_curve.size() == 60);
  CHECK(r1.final_loss < r1.loss_curve.front());

  cfg.jobs = 3;
  const auto r3 = train(init_model(a, 1), data, cfg);
  CHECK(testing_support::max_abs_diff(r3.model.params, r1.model.params) < 1e-9);

  for (Optimizer o : {Optimizer::Sgd, Optimizer::Momentum}) {
    cfg.jobs = 1;
    cfg.optimizer = o;
    cfg.learning_rate = 0.05;
    const auto r = train(init_model(a, 1), data, cfg);
    CHECK(r.model.finite());
    CHECK(r.final_loss < r.loss_curve.front());
  }
}

TEST_CASE("training failures") {
  const PredictorArch a = tiny_arch();
  Scene s;
  s.object = make_disk(20.0, 40.0);
  std::vector<TrainingExample> data{{render_depth(s, a.grid), compute_grasp_function(s, GripperSpec{}, a.grid, 1)}};
  TrainingConfig cfg;
  cfg.steps = 50;
  cfg.augmentations = 2;
  cfg.learning_rate = 1e200;
  try {
    train(init_model(a, 1), data, cfg);
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(e.step() >= 0);
    CHECK(e.step() < 50);
  }
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(train(init_model(a, 1), data, cfg), ConfigError);
  cfg.learning_rate = 0.1;
  CHECK_THROWS_AS(train(init_model(a, 1), {}, cfg), ConfigError);
  TrainingExample wrong{data[0].image, GraspFunction(small_grid(2, 2, 2))};
  CHECK_THROWS_AS(train(init_model(a, 1), std::span<const TrainingExample>(&wrong, 1), cfg), ConfigError);
}
