#include "graspfn/grasp_function.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "graspfn/error.hpp"

namespace graspfn {

void GraspFunction::validate() const {
  if (scores.size() != grid.size())
    throw ContentError("grasp function has " + std::to_string(scores.size()) + " scores, grid needs " +
                       std::to_string(grid.size()));
  for (double s : scores)
    if (!(s >= 0.0 && s <= 1.0)) throw ContentError("grasp function score outside [0, 1]");
}

int score_class(double score) {
  const int k = static_cast<int>(std::lround(score * (kScoreClasses - 1)));
  return std::clamp(k, 0, kScoreClasses - 1);
}

nlohmann::json to_json_document(const GraspFunction& f) {
  nlohmann::json j;
  j["format"] = "graspfn.grasp_function";
  j["version"] = 1;
  j["layout"] = "theta-major, v, u";
  j["grid"] = f.grid;
  j["provenance"] = {{"kind", f.provenance.kind}, {"seed", f.provenance.seed}, {"details", f.provenance.details}};
  j["scores"] = f.scores;
  return j;
}

GraspFunction grasp_function_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", std::string{}) != "graspfn.grasp_function")
      throw ParseError("not a grasp function document");
    if (j.value("version", 0) != 1) throw ParseError("unsupported grasp function version");
    GraspFunction f;
    f.grid = j.at("grid").get<PoseGrid>();
    const auto& p = j.at("provenance");
    f.provenance.kind = p.at("kind").get<std::string>();
    f.provenance.seed = p.value("seed", std::uint64_t{0});
    f.provenance.details = p.value("details", nlohmann::json::object());
    f.scores = j.at("scores").get<std::vector<double>>();
    f.validate();
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("grasp function: ") + e.what());
  }
}

void write_grasp_function(const std::filesystem::path& path, const GraspFunction& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json_document(f).dump() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

GraspFunction read_grasp_function(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return grasp_function_from_json(j);
}

std::vector<std::filesystem::path> write_heatmaps(const std::filesystem::path& dir,
                                                  const std::string& prefix, const GraspFunction& f,
                                                  int scale) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const PoseGrid& g = f.grid;
  const int w = g.nu * scale, h = g.nv * scale;
  std::vector<std::filesystem::path> written;
  for (int kt = 0; kt < g.ntheta; ++kt) {
    const auto path = dir / (prefix + "_t" + std::to_string(kt) + ".pgm");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P5\n" << w << ' ' << h << "\n255\n";
    std::string row(static_cast<std::size_t>(w), '\0');
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double s = std::clamp(f.at(x / scale, y / scale, kt), 0.0, 1.0);
        row[static_cast<std::size_t>(x)] = static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * s)));
      }
      out.write(row.data(), w);
    }
    if (!out) throw IoError("write failed: " + path.string());
    written.push_back(path);
  }
  return written;
}

}  // namespace graspfn
