#include "graspfn/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "graspfn/error.hpp"

namespace graspfn {

using nlohmann::json;

RunConfig default_run_config(const std::string& grid_preset) {
  RunConfig c;
  apply_grid_preset(c, grid_preset);
  return c;
}

void apply_grid_preset(RunConfig& cfg, const std::string& preset) {
  if (preset == "desk") {
    cfg.grid = PoseGrid::desk();
    const PredictorArch a = PredictorArch::desk(cfg.grid);
    cfg.predictor.arch.conv = a.conv;
    cfg.predictor.arch.hidden = a.hidden;
    cfg.predictor.arch.downsample = a.downsample;
  } else if (preset == "paper") {
    cfg.grid = PoseGrid::paper();
    const PredictorArch a = PredictorArch::paper(cfg.grid);
    cfg.predictor.arch.conv = a.conv;
    cfg.predictor.arch.hidden = a.hidden;
    cfg.predictor.arch.downsample = a.downsample;
  } else {
    throw ConfigError("unknown grid preset '" + preset + "' (expected desk or paper)");
  }
  cfg.grid_preset = preset;
  cfg.predictor.arch.grid = cfg.grid;
  cfg.predictor.arch.image_width = cfg.grid.image_width();
  cfg.predictor.arch.image_height = cfg.grid.image_height();
}

void RunConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  grid.validate();
  gripper.validate();
  noise.validate();
  uncertainty.validate();
  need(scene.plane_z_mm > 0.0, "scene.plane_z_mm must be positive");
  need(scene.camera_height_mm > 0.0, "scene.camera_height_mm must be positive");
  need(objects.min_dimension_mm > 0.0 && objects.min_dimension_mm <= objects.max_dimension_mm,
       "scene.min_dimension_mm must be positive and <= scene.max_dimension_mm");
  need(objects.min_height_mm > 0.0 && objects.min_height_mm <= objects.max_height_mm,
       "scene.min_height_mm must be positive and <= scene.max_height_mm");
  need(objects.min_height_mm > gripper.tip_clearance_mm,
       "scene.min_height_mm must exceed gripper.tip_clearance_mm");
  need(generate.count >= 0, "generate.count must be >= 0");
  predictor.arch.validate();
  need(predictor.arch.grid == grid, "predictor grid must match the pose grid");
  const auto& t = predictor.training;
  need(t.batch_size >= 1, "predictor.training.batch_size must be >= 1");
  need(t.learning_rate > 0.0, "predictor.training.learning_rate must be positive");
  need(t.steps >= 0, "predictor.training.steps must be >= 0");
  need(t.augmentations >= 1, "predictor.training.augmentations must be >= 1");
  need(t.max_shift_cells >= 0, "predictor.training.max_shift_cells must be >= 0");
  need(t.momentum >= 0.0 && t.momentum < 1.0, "predictor.training.momentum must be in [0, 1)");
  need(t.class_weight_cap >= 1.0, "predictor.training.class_weight_cap must be >= 1");
  need(predictor.max_objects >= 0, "predictor.max_objects must be >= 0");
  need(eval.objects >= 0, "eval.objects must be >= 0");
  need(eval.trials >= 1, "eval.trials must be >= 1");
  need(!eval.methods.empty(), "eval.methods must not be empty");
  need(!eval.sigma_uv_mm.empty() && !eval.sigma_theta_deg.empty(), "eval sigma lists must not be empty");
  for (double s : eval.sigma_uv_mm) need(std::isfinite(s) && s >= 0.0, "eval.sigma_uv_mm values must be >= 0");
  for (double s : eval.sigma_theta_deg) need(std::isfinite(s) && s >= 0.0, "eval.sigma_theta_deg values must be >= 0");
  need(eval.refine >= 0, "eval.refine must be >= 0");
  need(eval.source != FunctionSource::Predictor || !eval.model_path.empty(),
       "eval.model_path is required when eval.source is predictor");
  need(jobs >= 1, "jobs must be >= 1");
}

namespace {

std::size_t line_of(const std::string& text, std::size_t offset) {
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + std::min(offset, text.size()), '\n'));
}

// One JSON object being read; remembers which keys were consumed so the
// rest can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path, const std::string& text, const std::string& source, std::size_t anchor)
      : j_(j), path_(std::move(path)), text_(text), source_(source), anchor_(anchor) {
    if (!j_.is_object()) fail(path_.empty() ? "document" : path_, "expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <class T>
  void read(const char* key, T& out) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    convert(key, j_.at(key), out);
  }

  template <class T, class F>
  void read_as(const char* key, F&& f) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    T tmp{};
    convert(key, j_.at(key), tmp);
    try {
      f(tmp);
    } catch (const Error& e) {
      fail(key, e.what());
    }
  }

  std::optional<Section> child(const char* key) {
    if (!j_.contains(key)) return std::nullopt;
    used_.insert(key);
    return Section(j_.at(key), full(key), text_, source_, locate(key));
  }

  const json& raw(const char* key) {
    used_.insert(key);
    return j_.at(key);
  }

  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) fail(it.key(), "unknown field");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    const std::string f = key == path_ ? key : full(key);
    throw ParseError(source_ + ":" + std::to_string(line_of(text_, locate(key))) + ": field '" + f + "': " + msg);
  }

 private:
  std::string full(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  std::size_t locate(const std::string& key) const {
    const auto p = text_.find("\"" + key + "\"", anchor_);
    return p == std::string::npos ? anchor_ : p;
  }

  void convert(const char* key, const json& v, double& out) const {
    if (!v.is_number()) fail(key, "expected a number");
    out = v.get<double>();
  }
  void convert(const char* key, const json& v, int& out) const {
    if (!v.is_number_integer()) fail(key, "expected an integer");
    const auto x = v.get<long long>();
    if (x < INT32_MIN || x > INT32_MAX) fail(key, "integer out of range");
    out = static_cast<int>(x);
  }
  void convert(const char* key, const json& v, long& out) const {
    if (!v.is_number_integer()) fail(key, "expected an integer");
    out = v.get<long>();
  }
  void convert(const char* key, const json& v, std::uint64_t& out) const {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      fail(key, "expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }
  void convert(const char* key, const json& v, bool& out) const {
    if (!v.is_boolean()) fail(key, "expected true or false");
    out = v.get<bool>();
  }
  void convert(const char* key, const json& v, std::string& out) const {
    if (!v.is_string()) fail(key, "expected a string");
    out = v.get<std::string>();
  }
  template <class T>
  void convert(const char* key, const json& v, std::vector<T>& out) const {
    if (!v.is_array()) fail(key, "expected an array");
    out.clear();
    for (const auto& e : v) {
      T x{};
      convert(key, e, x);
      out.push_back(x);
    }
  }

  const json& j_;
  std::string path_;
  const std::string& text_;
  const std::string& source_;
  std::size_t anchor_;
  std::set<std::string> used_;
};

Placement placement_from_string(const std::string& s) {
  if (s == "uniform") return Placement::Uniform;
  if (s == "centered") return Placement::Centered;
  throw ParseError("expected uniform or centered");
}

std::string to_string(Placement p) { return p == Placement::Uniform ? "uniform" : "centered"; }

Optimizer optimizer_from_string(const std::string& s) {
  if (s == "sgd") return Optimizer::Sgd;
  if (s == "momentum") return Optimizer::Momentum;
  if (s == "adam") return Optimizer::Adam;
  throw ParseError("expected sgd, momentum or adam");
}

std::string to_string(Optimizer o) {
  switch (o) {
    case Optimizer::Sgd: return "sgd";
    case Optimizer::Momentum: return "momentum";
    case Optimizer::Adam: return "adam";
  }
  return "?";
}

Aggregation aggregation_from_string(const std::string& s) {
  if (s == "expected") return Aggregation::Expected;
  if (s == "max_class") return Aggregation::MaxClass;
  throw ParseError("expected expected or max_class");
}

FunctionSource source_from_string(const std::string& s) {
  if (s == "oracle") return FunctionSource::Oracle;
  if (s == "predictor") return FunctionSource::Predictor;
  throw ParseError("expected oracle or predictor");
}

void read_grid(Section& s, RunConfig& c) {
  std::string preset = c.grid_preset;
  s.read("preset", preset);
  try {
    apply_grid_preset(c, preset);
  } catch (const Error& e) {
    s.fail("preset", e.what());
  }
  PoseGrid g = c.grid;
  const bool custom = s.has("nu") || s.has("nv") || s.has("ntheta") || s.has("cell_uv_mm") || s.has("px_per_mm");
  s.read("nu", g.nu);
  s.read("nv", g.nv);
  s.read("ntheta", g.ntheta);
  s.read("cell_uv_mm", g.cell_uv_mm);
  s.read("px_per_mm", g.px_per_mm);
  s.done();
  if (custom) {
    if (g.nu < 1 || g.nv < 1 || g.ntheta < 1) s.fail("nu", "grid dimensions must be >= 1");
    if (!(g.cell_uv_mm > 0.0) || !(g.px_per_mm > 0.0)) s.fail("cell_uv_mm", "cell size and resolution must be positive");
    c.grid = PoseGrid::centered(g.nu, g.nv, g.ntheta, g.cell_uv_mm, g.px_per_mm);
    c.grid_preset = "custom";
    c.predictor.arch.grid = c.grid;
    c.predictor.arch.image_width = c.grid.image_width();
    c.predictor.arch.image_height = c.grid.image_height();
  }
}

void read_predictor(Section& s, RunConfig& c) {
  auto& a = c.predictor.arch;
  s.read("downsample", a.downsample);
  s.read("depth_reference_mm", a.depth_reference_mm);
  s.read("depth_scale_mm", a.depth_scale_mm);
  if (s.has("conv")) {
    const json& conv = s.raw("conv");
    if (!conv.is_array()) s.fail("conv", "expected an array of {channels, kernel}");
    a.conv.clear();
    for (const auto& e : conv) {
      if (!e.is_object() || !e.contains("channels") || !e.contains("kernel") || e.size() != 2 ||
          !e.at("channels").is_number_integer() || !e.at("kernel").is_number_integer())
        s.fail("conv", "each stage must be {\"channels\": int, \"kernel\": int}");
      a.conv.push_back({e.at("channels").get<int>(), e.at("kernel").get<int>()});
    }
  }
  s.read("hidden", a.hidden);
  s.read_as<std::string>("aggregation", [&](const std::string& v) { c.predictor.aggregation = aggregation_from_string(v); });
  s.read("inpaint", c.predictor.inpaint);
  s.read("max_objects", c.predictor.max_objects);
  if (auto t = s.child("training")) {
    auto& tc = c.predictor.training;
    t->read("batch_size", tc.batch_size);
    t->read("learning_rate", tc.learning_rate);
    t->read("steps", tc.steps);
    t->read_as<std::string>("optimizer", [&](const std::string& v) { tc.optimizer = optimizer_from_string(v); });
    t->read("momentum", tc.momentum);
    t->read("adam_beta1", tc.adam_beta1);
    t->read("adam_beta2", tc.adam_beta2);
    t->read("adam_epsilon", tc.adam_epsilon);
    t->read("augmentations", tc.augmentations);
    t->read("max_shift_cells", tc.max_shift_cells);
    t->read("class_weighting", tc.class_weighting);
    t->read("class_weight_cap", tc.class_weight_cap);
    t->done();
  }
  s.done();
}

void read_eval(Section& s, RunConfig& c) {
  auto& e = c.eval;
  s.read("objects", e.objects);
  s.read("first_object", e.first_object);
  s.read("sigma_uv_mm", e.sigma_uv_mm);
  s.read("sigma_theta_deg", e.sigma_theta_deg);
  s.read("slice_sigma_theta_deg", e.slice_sigma_theta_deg);
  s.read("trials", e.trials);
  s.read_as<std::vector<std::string>>("methods", [&](const std::vector<std::string>& v) {
    e.methods.clear();
    for (const auto& m : v) e.methods.push_back(method_from_string(m));
  });
  s.read_as<std::string>("source", [&](const std::string& v) { e.source = source_from_string(v); });
  s.read_as<std::string>("model_path", [&](const std::string& v) { e.model_path = v; });
  s.read("inpaint", e.inpaint);
  s.read_as<std::string>("placement", [&](const std::string& v) { e.placement = placement_from_string(v); });
  s.read("refine", e.refine);
  s.done();
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& source_name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source_name + ":" + std::to_string(line_of(text, e.byte > 0 ? e.byte - 1 : 0)) +
                     ": syntax error: " + e.what());
  }
  RunConfig c = default_run_config();
  Section root(doc, "", text, source_name, 0);
  // The grid decides the predictor shape, so it is read first.
  if (auto g = root.child("grid")) read_grid(*g, c);
  root.read("seed", c.seed);
  root.read_as<std::string>("output_dir", [&](const std::string& v) { c.output_dir = v; });
  root.read("jobs", c.jobs);
  if (auto g = root.child("gripper")) {
    auto& gs = c.gripper;
    g->read("finger_gap_mm", gs.finger_gap_mm);
    g->read("finger_width_mm", gs.finger_width_mm);
    g->read("finger_thickness_mm", gs.finger_thickness_mm);
    g->read("tip_clearance_mm", gs.tip_clearance_mm);
    g->read("lift_height_mm", gs.lift_height_mm);
    g->read("friction_mu", gs.friction_mu);
    g->read("contact_depth_mm", gs.contact_depth_mm);
    g->done();
  }
  if (auto n = root.child("noise")) {
    n->read("sigma_p_px", c.noise.sigma_p_px);
    n->read("sigma_d_mm", c.noise.sigma_d_mm);
    n->done();
  }
  bool reference_given = false;
  if (auto s = root.child("scene")) {
    s->read("plane_z_mm", c.scene.plane_z_mm);
    s->read("camera_height_mm", c.scene.camera_height_mm);
    s->read("min_dimension_mm", c.objects.min_dimension_mm);
    s->read("max_dimension_mm", c.objects.max_dimension_mm);
    s->read("min_height_mm", c.objects.min_height_mm);
    s->read("max_height_mm", c.objects.max_height_mm);
    s->done();
  }
  if (auto u = root.child("uncertainty")) {
    double suv = std::sqrt(c.uncertainty.cov_uv(0, 0));
    double sth = c.uncertainty.sigma_theta * 180.0 / std::numbers::pi;
    u->read("sigma_uv_mm", suv);
    u->read("sigma_theta_deg", sth);
    c.uncertainty = UncertaintyModel::from_degrees(suv, sth);
    u->read_as<std::vector<double>>("cov_uv_mm2", [&](const std::vector<double>& v) {
      if (v.size() != 3) throw ConfigError("expected [uu, uv, vv]");
      c.uncertainty.cov_uv << v[0], v[1], v[1], v[2];
    });
    u->done();
  }
  if (auto g = root.child("generate")) {
    g->read("count", c.generate.count);
    g->read("first_object", c.generate.first_object);
    g->read_as<std::string>("placement", [&](const std::string& v) { c.generate.placement = placement_from_string(v); });
    g->done();
  }
  if (auto p = root.child("predictor")) {
    reference_given = p->has("depth_reference_mm");
    read_predictor(*p, c);
  }
  if (auto e = root.child("eval")) read_eval(*e, c);
  root.done();
  if (!reference_given) c.predictor.arch.depth_reference_mm = c.scene.plane_z_mm;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_run_config(ss.str(), path.string());
}

json run_config_to_json(const RunConfig& c) {
  json conv = json::array();
  for (const auto& s : c.predictor.arch.conv) conv.push_back({{"channels", s.channels}, {"kernel", s.kernel}});
  std::vector<std::string> methods;
  for (Method m : c.eval.methods) methods.push_back(to_string(m));
  const auto& t = c.predictor.training;
  json grid = {{"preset", c.grid_preset == "custom" ? "desk" : c.grid_preset}};
  if (c.grid_preset == "custom")
    grid.update({{"nu", c.grid.nu},
                 {"nv", c.grid.nv},
                 {"ntheta", c.grid.ntheta},
                 {"cell_uv_mm", c.grid.cell_uv_mm},
                 {"px_per_mm", c.grid.px_per_mm}});
  json unc = {{"sigma_uv_mm", std::sqrt(c.uncertainty.cov_uv(0, 0))},
              {"sigma_theta_deg", c.uncertainty.sigma_theta * 180.0 / std::numbers::pi}};
  if (!c.uncertainty.diagonal() || c.uncertainty.cov_uv(0, 0) != c.uncertainty.cov_uv(1, 1))
    unc["cov_uv_mm2"] = {c.uncertainty.cov_uv(0, 0), c.uncertainty.cov_uv(0, 1), c.uncertainty.cov_uv(1, 1)};
  return {
      {"seed", c.seed},
      {"output_dir", c.output_dir.string()},
      {"jobs", c.jobs},
      {"grid", grid},
      {"gripper", c.gripper},
      {"noise", {{"sigma_p_px", c.noise.sigma_p_px}, {"sigma_d_mm", c.noise.sigma_d_mm}}},
      {"scene",
       {{"plane_z_mm", c.scene.plane_z_mm},
        {"camera_height_mm", c.scene.camera_height_mm},
        {"min_dimension_mm", c.objects.min_dimension_mm},
        {"max_dimension_mm", c.objects.max_dimension_mm},
        {"min_height_mm", c.objects.min_height_mm},
        {"max_height_mm", c.objects.max_height_mm}}},
      {"uncertainty", unc},
      {"generate",
       {{"count", c.generate.count},
        {"first_object", c.generate.first_object},
        {"placement", to_string(c.generate.placement)}}},
      {"predictor",
       {{"downsample", c.predictor.arch.downsample},
        {"depth_reference_mm", c.predictor.arch.depth_reference_mm},
        {"depth_scale_mm", c.predictor.arch.depth_scale_mm},
        {"conv", conv},
        {"hidden", c.predictor.arch.hidden},
        {"aggregation", c.predictor.aggregation == Aggregation::Expected ? "expected" : "max_class"},
        {"inpaint", c.predictor.inpaint},
        {"max_objects", c.predictor.max_objects},
        {"training",
         {{"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"steps", t.steps},
          {"optimizer", to_string(t.optimizer)},
          {"momentum", t.momentum},
          {"adam_beta1", t.adam_beta1},
          {"adam_beta2", t.adam_beta2},
          {"adam_epsilon", t.adam_epsilon},
          {"augmentations", t.augmentations},
          {"max_shift_cells", t.max_shift_cells},
          {"class_weighting", t.class_weighting},
          {"class_weight_cap", t.class_weight_cap}}}}},
      {"eval",
       {{"objects", c.eval.objects},
        {"first_object", c.eval.first_object},
        {"sigma_uv_mm", c.eval.sigma_uv_mm},
        {"sigma_theta_deg", c.eval.sigma_theta_deg},
        {"slice_sigma_theta_deg", c.eval.slice_sigma_theta_deg},
        {"trials", c.eval.trials},
        {"methods", methods},
        {"source", c.eval.source == FunctionSource::Oracle ? "oracle" : "predictor"},
        {"model_path", c.eval.model_path.string()},
        {"inpaint", c.eval.inpaint},
        {"placement", to_string(c.eval.placement)},
        {"refine", c.eval.refine}}},
  };
}

SimulationParams make_simulation_params(const RunConfig& cfg, Placement placement) {
  SimulationParams p;
  p.grid = cfg.grid;
  p.scene = cfg.scene;
  p.objects = cfg.objects;
  p.noise = cfg.noise;
  p.placement = placement;
  return p;
}

EvalConfig make_eval_config(const RunConfig& cfg) {
  EvalConfig e;
  for (int k = 0; k < cfg.eval.objects; ++k) e.object_seeds.push_back(cfg.eval.first_object + k);
  e.sigma_uv_mm = cfg.eval.sigma_uv_mm;
  e.sigma_theta_deg = cfg.eval.sigma_theta_deg;
  e.trials = cfg.eval.trials;
  e.methods = cfg.eval.methods;
  e.source = cfg.eval.source;
  if (e.source == FunctionSource::Predictor)
    e.model = std::make_shared<const PredictorModel>(load_model(cfg.eval.model_path));
  e.aggregation = cfg.predictor.aggregation;
  e.master_seed = cfg.seed;
  e.sim = make_simulation_params(cfg, cfg.eval.placement);
  e.gripper = cfg.gripper;
  e.inpaint = cfg.eval.inpaint;
  e.refine = cfg.eval.refine;
  e.jobs = cfg.jobs;
  return e;
}

}  // namespace graspfn
