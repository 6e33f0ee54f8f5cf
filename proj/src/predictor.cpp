#include "graspfn/predictor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "graspfn/augment.hpp"
#include "graspfn/error.hpp"
#include "graspfn/random.hpp"

namespace graspfn {

using nlohmann::json;

PredictorArch PredictorArch::desk(const PoseGrid& grid) {
  PredictorArch a;
  a.grid = grid;
  a.image_width = grid.image_width();
  a.image_height = grid.image_height();
  return a;
}

PredictorArch PredictorArch::paper(const PoseGrid& grid) {
  PredictorArch a;
  a.grid = grid;
  a.image_width = grid.image_width();
  a.image_height = grid.image_height();
  a.downsample = 2;
  a.conv = {{16, 5}, {32, 5}, {32, 3}, {64, 3}, {64, 3}};
  a.hidden = {256};
  return a;
}

void PredictorArch::validate() const {
  grid.validate();
  if (image_width <= 0 || image_height <= 0) throw ConfigError("predictor image size must be positive");
  if (downsample < 1) throw ConfigError("predictor downsample factor must be >= 1");
  if (!(depth_scale_mm > 0.0)) throw ConfigError("predictor depth_scale_mm must be positive");
  int w = input_width(), h = input_height();
  if (w < 1 || h < 1) throw ConfigError("predictor input is empty after downsampling");
  for (const auto& c : conv) {
    if (c.channels < 1) throw ConfigError("conv stage needs at least one channel");
    if (c.kernel < 1 || c.kernel % 2 == 0) throw ConfigError("conv kernel size must be odd and positive");
    w /= 2;
    h /= 2;
    if (w < 1 || h < 1) throw ConfigError("too many pooling stages for the input size");
  }
  for (int n : hidden)
    if (n < 1) throw ConfigError("hidden layer width must be positive");
}

json arch_to_json(const PredictorArch& a) {
  json conv = json::array();
  for (const auto& c : a.conv) conv.push_back({{"channels", c.channels}, {"kernel", c.kernel}});
  return {{"image_width", a.image_width},
          {"image_height", a.image_height},
          {"downsample", a.downsample},
          {"depth_reference_mm", a.depth_reference_mm},
          {"depth_scale_mm", a.depth_scale_mm},
          {"conv", conv},
          {"hidden", a.hidden},
          {"grid", a.grid}};
}

PredictorArch arch_from_json(const json& j) {
  try {
    PredictorArch a;
    a.image_width = j.at("image_width").get<int>();
    a.image_height = j.at("image_height").get<int>();
    a.downsample = j.at("downsample").get<int>();
    a.depth_reference_mm = j.at("depth_reference_mm").get<double>();
    a.depth_scale_mm = j.at("depth_scale_mm").get<double>();
    a.conv.clear();
    for (const auto& c : j.at("conv")) a.conv.push_back({c.at("channels").get<int>(), c.at("kernel").get<int>()});
    a.hidden = j.at("hidden").get<std::vector<int>>();
    a.grid = j.at("grid").get<PoseGrid>();
    a.validate();
    return a;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad predictor descriptor: ") + e.what());
  }
}

namespace {

struct ConvLayer {
  int in_c, out_c, k, h, w;  // input spatial size; output of conv is the same
  std::size_t w_off, b_off;
};

struct DenseLayer {
  int in, out;
  std::size_t w_off, b_off;
};

struct Layout {
  std::vector<ConvLayer> conv;
  std::vector<DenseLayer> dense;  // hidden layers then the head
  int in_w = 0, in_h = 0;
  std::size_t total = 0;
};

Layout make_layout(const PredictorArch& a) {
  a.validate();
  Layout L;
  L.in_w = a.input_width();
  L.in_h = a.input_height();
  int c = 1, h = L.in_h, w = L.in_w;
  std::size_t off = 0;
  for (const auto& s : a.conv) {
    ConvLayer cl{c, s.channels, s.kernel, h, w, off, 0};
    off += static_cast<std::size_t>(s.channels) * c * s.kernel * s.kernel;
    cl.b_off = off;
    off += s.channels;
    L.conv.push_back(cl);
    c = s.channels;
    h /= 2;
    w /= 2;
  }
  int in = c * h * w;
  auto add_dense = [&](int out) {
    DenseLayer d{in, out, off, 0};
    off += static_cast<std::size_t>(in) * out;
    d.b_off = off;
    off += out;
    L.dense.push_back(d);
    in = out;
  };
  for (int n : a.hidden) add_dense(n);
  add_dense(static_cast<int>(a.outputs()));
  L.total = off;
  return L;
}

// Activations of one forward pass, kept for the backward pass.
struct Trace {
  std::vector<std::vector<double>> conv_in;   // per conv layer input
  std::vector<std::vector<double>> conv_pre;  // pre-activation
  std::vector<std::vector<std::uint32_t>> pool_src;
  std::vector<std::vector<double>> dense_in;
  std::vector<std::vector<double>> dense_pre;
  std::vector<double> logits;
};

void conv_forward(const ConvLayer& l, const double* p, const std::vector<double>& in, std::vector<double>& out) {
  const int H = l.h, W = l.w, K = l.k, r = K / 2;
  out.assign(static_cast<std::size_t>(l.out_c) * H * W, 0.0);
  for (int o = 0; o < l.out_c; ++o) {
    double* op = out.data() + static_cast<std::size_t>(o) * H * W;
    std::fill(op, op + static_cast<std::size_t>(H) * W, p[l.b_off + o]);
    for (int i = 0; i < l.in_c; ++i) {
      const double* ip = in.data() + static_cast<std::size_t>(i) * H * W;
      const double* wk = p + l.w_off + (static_cast<std::size_t>(o) * l.in_c + i) * K * K;
      for (int ky = 0; ky < K; ++ky) {
        const int dy = ky - r;
        const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
        for (int kx = 0; kx < K; ++kx) {
          const int dx = kx - r;
          const double wv = wk[ky * K + kx];
          const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
          for (int y = y0; y < y1; ++y) {
            double* orow = op + static_cast<std::size_t>(y) * W;
            const double* irow = ip + static_cast<std::size_t>(y + dy) * W + dx;
            for (int x = x0; x < x1; ++x) orow[x] += wv * irow[x];
          }
        }
      }
    }
  }
}

// ReLU then 2x2 max-pool with floor; records the winning input index.
void relu_pool(int C, int H, int W, const std::vector<double>& pre, std::vector<double>& out,
               std::vector<std::uint32_t>& src) {
  const int h2 = H / 2, w2 = W / 2;
  out.assign(static_cast<std::size_t>(C) * h2 * w2, 0.0);
  src.assign(out.size(), 0);
  std::size_t n = 0;
  for (int c = 0; c < C; ++c)
    for (int y = 0; y < h2; ++y)
      for (int x = 0; x < w2; ++x, ++n) {
        std::size_t best = (static_cast<std::size_t>(c) * H + 2 * y) * W + 2 * x;
        double bv = std::max(pre[best], 0.0);
        const std::size_t cand[3] = {best + 1, best + W, best + W + 1};
        for (std::size_t q : cand) {
          const double v = std::max(pre[q], 0.0);
          if (v > bv) {
            bv = v;
            best = q;
          }
        }
        out[n] = bv;
        src[n] = static_cast<std::uint32_t>(best);
      }
}

void dense_forward(const DenseLayer& d, const double* p, const std::vector<double>& in, std::vector<double>& out) {
  out.resize(d.out);
  const double* wrow = p + d.w_off;
  for (int o = 0; o < d.out; ++o, wrow += d.in) {
    double s = p[d.b_off + o];
    for (int j = 0; j < d.in; ++j) s += wrow[j] * in[j];
    out[o] = s;
  }
}

void run_forward(const Layout& L, const double* p, std::span<const double> input, Trace& t) {
  if (input.size() != static_cast<std::size_t>(L.in_w) * L.in_h)
    throw ConfigError("network input has the wrong size");
  std::vector<double> cur(input.begin(), input.end());
  t.conv_in.resize(L.conv.size());
  t.conv_pre.resize(L.conv.size());
  t.pool_src.resize(L.conv.size());
  for (std::size_t s = 0; s < L.conv.size(); ++s) {
    const auto& l = L.conv[s];
    t.conv_in[s] = std::move(cur);
    conv_forward(l, p, t.conv_in[s], t.conv_pre[s]);
    relu_pool(l.out_c, l.h, l.w, t.conv_pre[s], cur, t.pool_src[s]);
  }
  t.dense_in.resize(L.dense.size());
  t.dense_pre.resize(L.dense.size());
  for (std::size_t s = 0; s < L.dense.size(); ++s) {
    t.dense_in[s] = std::move(cur);
    dense_forward(L.dense[s], p, t.dense_in[s], t.dense_pre[s]);
    cur = t.dense_pre[s];
    if (s + 1 < L.dense.size())
      for (double& v : cur) v = std::max(v, 0.0);
  }
  t.logits = std::move(cur);
}

void run_backward(const Layout& L, const double* p, const Trace& t, std::vector<double> dout, double* g) {
  for (std::size_t s = L.dense.size(); s-- > 0;) {
    const auto& d = L.dense[s];
    if (s + 1 < L.dense.size())
      for (int o = 0; o < d.out; ++o)
        if (!(t.dense_pre[s][o] > 0.0)) dout[o] = 0.0;
    const auto& in = t.dense_in[s];
    std::vector<double> din(d.in, 0.0);
    const double* wrow = p + d.w_off;
    double* grow = g + d.w_off;
    for (int o = 0; o < d.out; ++o, wrow += d.in, grow += d.in) {
      const double go = dout[o];
      g[d.b_off + o] += go;
      if (go == 0.0) continue;
      for (int j = 0; j < d.in; ++j) {
        grow[j] += go * in[j];
        din[j] += go * wrow[j];
      }
    }
    dout = std::move(din);
  }
  for (std::size_t s = L.conv.size(); s-- > 0;) {
    const auto& l = L.conv[s];
    const int H = l.h, W = l.w, K = l.k, r = K / 2;
    const auto& pre = t.conv_pre[s];
    std::vector<double> dpre(pre.size(), 0.0);
    const auto& src = t.pool_src[s];
    for (std::size_t n = 0; n < src.size(); ++n)
      if (pre[src[n]] > 0.0) dpre[src[n]] += dout[n];
    const auto& in = t.conv_in[s];
    const bool need_din = s > 0;
    std::vector<double> din(need_din ? in.size() : 0, 0.0);
    for (int o = 0; o < l.out_c; ++o) {
      const double* dp = dpre.data() + static_cast<std::size_t>(o) * H * W;
      double bsum = 0.0;
      for (std::size_t q = 0; q < static_cast<std::size_t>(H) * W; ++q) bsum += dp[q];
      g[l.b_off + o] += bsum;
      for (int i = 0; i < l.in_c; ++i) {
        const double* ip = in.data() + static_cast<std::size_t>(i) * H * W;
        double* dip = need_din ? din.data() + static_cast<std::size_t>(i) * H * W : nullptr;
        const std::size_t wbase = l.w_off + (static_cast<std::size_t>(o) * l.in_c + i) * K * K;
        for (int ky = 0; ky < K; ++ky) {
          const int dy = ky - r;
          const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
          for (int kx = 0; kx < K; ++kx) {
            const int dx = kx - r;
            const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
            const double wv = p[wbase + ky * K + kx];
            double gs = 0.0;
            for (int y = y0; y < y1; ++y) {
              const double* drow = dp + static_cast<std::size_t>(y) * W;
              const double* irow = ip + static_cast<std::size_t>(y + dy) * W + dx;
              for (int x = x0; x < x1; ++x) gs += drow[x] * irow[x];
              if (dip) {
                double* dirow = dip + static_cast<std::size_t>(y + dy) * W + dx;
                for (int x = x0; x < x1; ++x) dirow[x] += drow[x] * wv;
              }
            }
            g[wbase + ky * K + kx] += gs;
          }
        }
      }
    }
    if (need_din) dout = std::move(din);
  }
}

// Mean weighted cross-entropy over poses for one example; writes
// d(loss * scale)/d(logits) when dlogits is given.
double example_loss(std::span<const double> logits, std::span<const int> labels, const std::array<double, 6>* cw,
                    double scale, std::vector<double>* dlogits) {
  const std::size_t m = labels.size();
  if (logits.size() != m * 6) throw ConfigError("logit count does not match label count");
  if (dlogits) dlogits->assign(logits.size(), 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double* z = logits.data() + 6 * j;
    const int y = labels[j];
    if (y < 0 || y >= 6) throw RangeError("label outside 0..5");
    const double mx = *std::max_element(z, z + 6);
    double se = 0.0;
    for (int k = 0; k < 6; ++k) se += std::exp(z[k] - mx);
    const double lse = mx + std::log(se);
    const double w = cw ? (*cw)[y] : 1.0;
    total += w * (lse - z[y]);
    if (dlogits) {
      double* d = dlogits->data() + 6 * j;
      const double f = w * scale / static_cast<double>(m);
      for (int k = 0; k < 6; ++k) d[k] = f * std::exp(z[k] - lse);
      d[y] -= f;
    }
  }
  return m ? total / static_cast<double>(m) : 0.0;
}

}  // namespace

std::size_t parameter_count(const PredictorArch& arch) { return make_layout(arch).total; }

bool PredictorModel::finite() const {
  return std::all_of(params.begin(), params.end(), [](double v) { return std::isfinite(v); });
}

PredictorModel zero_model(const PredictorArch& arch) { return {arch, std::vector<double>(parameter_count(arch), 0.0)}; }

PredictorModel init_model(const PredictorArch& arch, std::uint64_t seed) {
  const Layout L = make_layout(arch);
  PredictorModel m{arch, std::vector<double>(L.total, 0.0)};
  Rng rng(derive_seed(seed, "init"));
  for (const auto& l : L.conv) {
    const double b = std::sqrt(6.0 / (l.in_c * l.k * l.k));
    for (std::size_t q = l.w_off; q < l.b_off; ++q) m.params[q] = rng.uniform(-b, b);
  }
  for (std::size_t s = 0; s < L.dense.size(); ++s) {
    const auto& d = L.dense[s];
    const double gain = s + 1 < L.dense.size() ? 6.0 : 3.0;
    const double b = std::sqrt(gain / d.in);
    for (std::size_t q = d.w_off; q < d.b_off; ++q) m.params[q] = rng.uniform(-b, b);
  }
  return m;
}

std::vector<double> prepare_input(const PredictorArch& arch, const DepthImage& img) {
  if (img.width != arch.image_width || img.height != arch.image_height)
    throw ConfigError("depth image is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                      ", predictor expects " + std::to_string(arch.image_width) + "x" +
                      std::to_string(arch.image_height));
  const DepthImage small = arch.downsample > 1 ? downsample(img, arch.downsample) : img;
  std::vector<double> x(small.data.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = small.data[i];
    x[i] = d > 0.0 ? (arch.depth_reference_mm - d) / arch.depth_scale_mm : 0.0;
  }
  return x;
}

std::vector<double> forward_input(const PredictorModel& model, std::span<const double> input) {
  const Layout L = make_layout(model.arch);
  if (model.params.size() != L.total) throw ConfigError("parameter vector does not match architecture");
  Trace t;
  run_forward(L, model.params.data(), input, t);
  return t.logits;
}

std::vector<double> forward(const PredictorModel& model, const DepthImage& img) {
  return forward_input(model, prepare_input(model.arch, img));
}

std::array<double, 6> softmax(std::span<const double, 6> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  std::array<double, 6> out{};
  double s = 0.0;
  for (int k = 0; k < 6; ++k) s += out[k] = std::exp(v[k] - mx);
  for (double& o : out) o /= s;
  return out;
}

double loss(std::span<const double> logits, std::span<const int> labels) {
  return example_loss(logits, labels, nullptr, 1.0, nullptr);
}

std::vector<int> labels_from_function(const GraspFunction& f) {
  std::vector<int> out(f.scores.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = score_class(f.scores[i]);
  return out;
}

double batch_loss(const PredictorModel& model, std::span<const LabeledInput> batch,
                  const std::array<double, 6>* class_weights) {
  const Layout L = make_layout(model.arch);
  Trace t;
  double total = 0.0;
  for (const auto& ex : batch) {
    run_forward(L, model.params.data(), ex.input, t);
    total += example_loss(t.logits, ex.labels, class_weights, 1.0, nullptr);
  }
  return batch.empty() ? 0.0 : total / static_cast<double>(batch.size());
}

double loss_and_gradient(const PredictorModel& model, std::span<const LabeledInput> batch, std::vector<double>& grad,
                         const std::array<double, 6>* class_weights) {
  const Layout L = make_layout(model.arch);
  if (model.params.size() != L.total) throw ConfigError("parameter vector does not match architecture");
  grad.assign(L.total, 0.0);
  if (batch.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  Trace t;
  std::vector<double> dl;
  double total = 0.0;
  for (const auto& ex : batch) {
    run_forward(L, model.params.data(), ex.input, t);
    total += example_loss(t.logits, ex.labels, class_weights, scale, &dl);
    run_backward(L, model.params.data(), t, std::move(dl), grad.data());
  }
  return total * scale;
}

std::uint64_t activation_signature(const PredictorModel& model, std::span<const double> input) {
  const Layout L = make_layout(model.arch);
  Trace t;
  run_forward(L, model.params.data(), input, t);
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::uint64_t v) { h = splitmix64(h ^ v); };
  for (std::size_t s = 0; s < L.conv.size(); ++s) {
    for (double v : t.conv_pre[s]) mix(v > 0.0);
    for (auto v : t.pool_src[s]) mix(v);
  }
  for (std::size_t s = 0; s + 1 < L.dense.size(); ++s)
    for (double v : t.dense_pre[s]) mix(v > 0.0);
  return h;
}

namespace {

// Augmented training pool kept in compact form.
struct Pool {
  std::vector<std::vector<float>> inputs;
  std::vector<std::vector<std::uint8_t>> labels;
};

Pool build_pool(const PredictorArch& arch, std::span<const TrainingExample> data, const TrainingConfig& cfg) {
  Pool pool;
  for (std::size_t e = 0; e < data.size(); ++e) {
    const auto& ex = data[e];
    if (!(ex.target.grid == arch.grid)) throw ConfigError("training target grid does not match predictor grid");
    // Shifts of a whole grid width or more would empty the labels.
    const int max_shift = std::min({cfg.max_shift_cells, arch.grid.nu - 1, arch.grid.nv - 1});
    const auto augs = sample_augmentations(arch.grid, cfg.augmentations, max_shift,
                                           derive_seed(cfg.seed, "augment", {e}));
    for (const auto& a : augs) {
      const DepthImage img = augment_image(ex.image, arch.grid, a, arch.depth_reference_mm);
      const GraspFunction f = augment_function(ex.target, a);
      const auto x = prepare_input(arch, img);
      pool.inputs.emplace_back(x.begin(), x.end());
      std::vector<std::uint8_t> lab(f.scores.size());
      for (std::size_t i = 0; i < lab.size(); ++i) lab[i] = static_cast<std::uint8_t>(score_class(f.scores[i]));
      pool.labels.push_back(std::move(lab));
    }
  }
  return pool;
}

LabeledInput expand(const Pool& pool, std::size_t k) {
  LabeledInput li;
  li.input.assign(pool.inputs[k].begin(), pool.inputs[k].end());
  li.labels.assign(pool.labels[k].begin(), pool.labels[k].end());
  return li;
}

std::array<double, 6> class_weights(const Pool& pool, double cap) {
  std::array<double, 6> count{};
  double total = 0.0;
  for (const auto& lab : pool.labels)
    for (auto y : lab) {
      count[y] += 1.0;
      total += 1.0;
    }
  std::array<double, 6> w{};
  double wmin = 0.0;
  for (int k = 0; k < 6; ++k) {
    w[k] = count[k] > 0.0 ? total / (6.0 * count[k]) : 0.0;
    if (w[k] > 0.0 && (wmin == 0.0 || w[k] < wmin)) wmin = w[k];
  }
  for (double& v : w) v = wmin > 0.0 ? std::min(v / wmin, cap) : 1.0;
  return w;
}

}  // namespace

TrainingResult train(PredictorModel model, std::span<const TrainingExample> data, const TrainingConfig& cfg) {
  const Layout L = make_layout(model.arch);
  if (model.params.size() != L.total) throw ConfigError("parameter vector does not match architecture");
  if (data.empty()) throw ConfigError("training needs at least one example");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.steps < 0) throw ConfigError("steps must be >= 0");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (cfg.augmentations < 1) throw ConfigError("augmentations must be >= 1");
  if (cfg.max_shift_cells < 0) throw ConfigError("max_shift_cells must be >= 0");
  if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");

  const Pool pool = build_pool(model.arch, data, cfg);
  std::array<double, 6> cw{};
  const std::array<double, 6>* cwp = nullptr;
  if (cfg.class_weighting) {
    cw = class_weights(pool, cfg.class_weight_cap);
    cwp = &cw;
  }

  TrainingResult res;
  res.loss_curve.reserve(cfg.steps);
  Rng rng(derive_seed(cfg.seed, "batches"));
  std::vector<double> grad(L.total), m1, m2;
  if (cfg.optimizer != Optimizer::Sgd) m1.assign(L.total, 0.0);
  if (cfg.optimizer == Optimizer::Adam) m2.assign(L.total, 0.0);
  const int jobs = std::min(cfg.jobs, cfg.batch_size);
  std::vector<std::vector<double>> part_grad(jobs);
  std::vector<double> part_loss(jobs);

  for (long step = 0; step < cfg.steps; ++step) {
    std::vector<LabeledInput> batch(cfg.batch_size);
    for (auto& b : batch) b = expand(pool, rng.index(pool.inputs.size()));
    double bl;
    if (jobs == 1) {
      bl = loss_and_gradient(model, batch, grad, cwp);
    } else {
      // Contiguous slices, reduced in slice order.
      std::vector<std::thread> th;
      const std::size_t n = batch.size();
      for (int w = 0; w < jobs; ++w)
        th.emplace_back([&, w] {
          const std::size_t lo = n * w / jobs, hi = n * (w + 1) / jobs;
          part_loss[w] = loss_and_gradient(model, std::span(batch).subspan(lo, hi - lo), part_grad[w], cwp) *
                         static_cast<double>(hi - lo);
        });
      for (auto& t : th) t.join();
      std::fill(grad.begin(), grad.end(), 0.0);
      bl = 0.0;
      for (int w = 0; w < jobs; ++w) {
        const std::size_t lo = n * w / jobs, hi = n * (w + 1) / jobs;
        const double f = static_cast<double>(hi - lo) / static_cast<double>(n);
        for (std::size_t q = 0; q < L.total; ++q) grad[q] += f * part_grad[w][q];
        bl += part_loss[w];
      }
      bl /= static_cast<double>(n);
    }
    if (!std::isfinite(bl)) throw TrainingError("training loss became non-finite", step);
    res.loss_curve.push_back(bl);

    switch (cfg.optimizer) {
      case Optimizer::Sgd:
        for (std::size_t q = 0; q < L.total; ++q) model.params[q] -= cfg.learning_rate * grad[q];
        break;
      case Optimizer::Momentum:
        for (std::size_t q = 0; q < L.total; ++q) {
          m1[q] = cfg.momentum * m1[q] + grad[q];
          model.params[q] -= cfg.learning_rate * m1[q];
        }
        break;
      case Optimizer::Adam: {
        const double t = static_cast<double>(step + 1);
        const double c1 = 1.0 - std::pow(cfg.adam_beta1, t), c2 = 1.0 - std::pow(cfg.adam_beta2, t);
        for (std::size_t q = 0; q < L.total; ++q) {
          m1[q] = cfg.adam_beta1 * m1[q] + (1.0 - cfg.adam_beta1) * grad[q];
          m2[q] = cfg.adam_beta2 * m2[q] + (1.0 - cfg.adam_beta2) * grad[q] * grad[q];
          model.params[q] -= cfg.learning_rate * (m1[q] / c1) / (std::sqrt(m2[q] / c2) + cfg.adam_epsilon);
        }
        break;
      }
    }
    if (!model.finite()) throw TrainingError("weights became non-finite", step);
  }

  double total = 0.0;
  for (std::size_t k = 0; k < pool.inputs.size(); ++k) {
    const LabeledInput li = expand(pool, k);
    total += batch_loss(model, std::span(&li, 1), cwp);
  }
  res.final_loss = total / static_cast<double>(pool.inputs.size());
  res.model = std::move(model);
  return res;
}

GraspFunction grasp_function_from_logits(const PoseGrid& grid, std::span<const double> logits, Aggregation agg) {
  if (logits.size() != grid.size() * 6) throw ConfigError("logit count does not match grid");
  GraspFunction f(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto p = softmax(std::span<const double, 6>(logits.data() + 6 * i, 6));
    if (agg == Aggregation::Expected) {
      double s = 0.0;
      for (int k = 0; k < 6; ++k) s += p[k] * class_value(k);
      f.scores[i] = std::clamp(s, 0.0, 1.0);
    } else {
      f.scores[i] = class_value(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
    }
  }
  f.provenance.kind = "predicted";
  f.provenance.details = {{"aggregation", agg == Aggregation::Expected ? "expected" : "max_class"}};
  return f;
}

GraspFunction predict_grasp_function(const PredictorModel& model, const DepthImage& img, Aggregation agg) {
  return grasp_function_from_logits(model.arch.grid, forward(model, img), agg);
}

namespace {

constexpr char kMagic[8] = {'G', 'F', 'N', 'M', 'O', 'D', 'E', 'L'};
constexpr std::uint32_t kModelVersion = 1;

template <class T>
void put_le(std::string& out, T v) {
  for (std::size_t b = 0; b < sizeof(T); ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

template <class T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw ParseError("model file is truncated");
  T v = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b)
    v |= static_cast<T>(static_cast<unsigned char>(in[pos + b])) << (8 * b);
  pos += sizeof(T);
  return v;
}

}  // namespace

std::string encode_model(const PredictorModel& model) {
  if (model.params.size() != parameter_count(model.arch))
    throw ConfigError("parameter vector does not match architecture");
  const std::string desc = arch_to_json(model.arch).dump();
  std::string out(kMagic, kMagic + 8);
  put_le<std::uint32_t>(out, kModelVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(desc.size()));
  out += desc;
  put_le<std::uint64_t>(out, model.params.size());
  out.reserve(out.size() + 8 * model.params.size());
  for (double v : model.params) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

PredictorModel decode_model(const std::string& in) {
  if (in.size() < 8 || std::memcmp(in.data(), kMagic, 8) != 0) throw ParseError("not a model file (bad magic)");
  std::size_t pos = 8;
  const auto version = get_le<std::uint32_t>(in, pos);
  if (version != kModelVersion) throw ParseError("unsupported model file version " + std::to_string(version));
  const auto dlen = get_le<std::uint32_t>(in, pos);
  if (pos + dlen > in.size()) throw ParseError("model file is truncated");
  json desc;
  try {
    desc = json::parse(in.substr(pos, dlen));
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad model descriptor: ") + e.what());
  }
  pos += dlen;
  PredictorModel m;
  m.arch = arch_from_json(desc);
  const auto n = get_le<std::uint64_t>(in, pos);
  if (n != parameter_count(m.arch)) throw ParseError("model parameter count does not match its architecture");
  if (in.size() - pos != 8 * n) throw ParseError("model file has the wrong length");
  m.params.resize(n);
  for (auto& v : m.params) v = std::bit_cast<double>(get_le<std::uint64_t>(in, pos));
  return m;
}

void save_model(const std::filesystem::path& path, const PredictorModel& model) {
  const std::string bytes = encode_model(model);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("failed writing " + path.string());
}

PredictorModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return decode_model(ss.str());
}

}  // namespace graspfn
