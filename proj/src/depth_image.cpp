#include "graspfn/depth_image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "graspfn/error.hpp"
#include "graspfn/random.hpp"

namespace graspfn {

double DepthImage::sample(double x, double y) const {
  x = std::clamp(x, 0.0, static_cast<double>(width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(height - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, width - 1);
  const int y1 = std::min(y0 + 1, height - 1);
  const double fx = x - x0, fy = y - y0;
  const double top = (1.0 - fx) * at(x0, y0) + fx * at(x1, y0);
  const double bottom = (1.0 - fx) * at(x0, y1) + fx * at(x1, y1);
  return (1.0 - fy) * top + fy * bottom;
}

void NoiseParams::validate() const {
  if (!(sigma_p_px >= 0.0) || !(sigma_d_mm >= 0.0)) throw ConfigError("noise: standard deviations must be >= 0");
}

DepthImage render_depth(const Scene& scene, const PoseGrid& grid) {
  DepthImage img(grid.image_width(), grid.image_height(), scene.plane_z_mm, grid.px_per_mm);
  if (!scene.object) return img;
  const Polygon poly = scene.object->world_footprint();
  const double top = scene.plane_z_mm - scene.object->height_mm;
  const Bounds b = bounds(poly);
  const double ppm = grid.px_per_mm;
  const int x0 = std::max(0, static_cast<int>(std::floor(b.min.x * ppm + 0.5 * img.width - 0.5)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(b.max.x * ppm + 0.5 * img.width - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::floor(b.min.y * ppm + 0.5 * img.height - 0.5)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(b.max.y * ppm + 0.5 * img.height - 0.5)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (contains(poly, img.pixel_center_mm(x, y))) img.at(x, y) = top;
  return img;
}

DepthImage apply_noise(const DepthImage& img, const NoiseParams& params, std::uint64_t seed) {
  params.validate();
  DepthImage out = img;
  if (params.sigma_p_px == 0.0 && params.sigma_d_mm == 0.0) return out;
  for (int y = 0; y < img.height; ++y) {
    Rng rng(derive_seed(seed, "noise_row", {static_cast<std::uint64_t>(y)}));
    for (int x = 0; x < img.width; ++x) {
      if (img.at(x, y) == 0.0) continue;
      double z = img.at(x, y);
      if (params.sigma_p_px > 0.0) {
        const double sx = x + params.sigma_p_px * rng.normal();
        const double sy = y + params.sigma_p_px * rng.normal();
        z = img.sample(sx, sy);
      }
      if (params.sigma_d_mm > 0.0) z += params.sigma_d_mm * rng.normal();
      out.at(x, y) = std::max(0.0, z);
    }
  }
  return out;
}

DepthImage inpaint_zeros(const DepthImage& img, int radius) {
  const bool any = std::any_of(img.data.begin(), img.data.end(), [](double v) { return v != 0.0; });
  if (!any) throw ContentError("cannot inpaint an image with no valid depth");
  DepthImage out = img;
  const int r2 = radius * radius;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (img.at(x, y) != 0.0) continue;
      double sum = 0.0;
      int count = 0;
      for (int dy = -radius; dy <= radius; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= img.height) continue;
        for (int dx = -radius; dx <= radius; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= img.width || dx * dx + dy * dy > r2) continue;
          const double v = img.at(xx, yy);
          if (v != 0.0) {
            sum += v;
            ++count;
          }
        }
      }
      if (count >= 2) {
        out.at(x, y) = sum / count;
        continue;
      }
      // Nearest valid pixel: scan square rings outward until the ring's
      // Chebyshev distance rules out anything closer.
      long best_d2 = -1;
      std::size_t best_idx = 0;
      for (int k = 1;; ++k) {
        if (best_d2 >= 0 && static_cast<long>(k) * k > best_d2) break;
        if (k > img.width + img.height) break;
        for (int dy = -k; dy <= k; ++dy) {
          const int yy = y + dy;
          if (yy < 0 || yy >= img.height) continue;
          const int step = (dy == -k || dy == k) ? 1 : 2 * k;
          for (int dx = -k; dx <= k; dx += step) {
            const int xx = x + dx;
            if (xx < 0 || xx >= img.width || img.at(xx, yy) == 0.0) continue;
            const long d2 = static_cast<long>(dx) * dx + static_cast<long>(dy) * dy;
            const std::size_t idx = static_cast<std::size_t>(yy) * img.width + xx;
            if (best_d2 < 0 || d2 < best_d2 || (d2 == best_d2 && idx < best_idx)) {
              best_d2 = d2;
              best_idx = idx;
            }
          }
        }
      }
      out.at(x, y) = img.data[best_idx];
    }
  }
  return out;
}

DepthImage downsample(const DepthImage& img, int factor) {
  if (factor < 1) throw ConfigError("downsample factor must be >= 1");
  if (factor == 1) return img;
  DepthImage out(img.width / factor, img.height / factor, 0.0, img.px_per_mm / factor);
  const double inv = 1.0 / (static_cast<double>(factor) * factor);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      double s = 0.0;
      for (int j = 0; j < factor; ++j)
        for (int i = 0; i < factor; ++i) s += img.at(x * factor + i, y * factor + j);
      out.at(x, y) = s * inv;
    }
  return out;
}

DepthImage rotate_shift(const DepthImage& img, double angle, double dx_px, double dy_px, double fill) {
  DepthImage out(img.width, img.height, fill, img.px_per_mm);
  const double cx = 0.5 * img.width, cy = 0.5 * img.height;
  const double c = std::cos(angle), s = std::sin(angle);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      // Inverse map: undo the shift, then rotate by -angle about the centre.
      const double px = x + 0.5 - dx_px - cx;
      const double py = y + 0.5 - dy_px - cy;
      const double sx = c * px + s * py + cx - 0.5;
      const double sy = -s * px + c * py + cy - 0.5;
      if (sx < -0.5 || sy < -0.5 || sx > img.width - 0.5 || sy > img.height - 0.5) continue;
      out.at(x, y) = img.sample(sx, sy);
    }
  return out;
}

std::string encode_pgm16(const DepthImage& img) {
  std::ostringstream header;
  header << "P5\n" << img.width << ' ' << img.height << "\n65535\n";
  std::string out = header.str();
  out.reserve(out.size() + img.data.size() * 2);
  for (double v : img.data) {
    const long q = std::clamp(std::lround(v), 0L, 65535L);
    out.push_back(static_cast<char>((q >> 8) & 0xff));
    out.push_back(static_cast<char>(q & 0xff));
  }
  return out;
}

void write_pgm16(const std::filesystem::path& path, const DepthImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const std::string bytes = encode_pgm16(img);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

namespace {

long read_header_int(std::istream& in, const std::string& what) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  long v = 0;
  if (!(in >> v)) throw ParseError("PGM: bad " + what);
  return v;
}

}  // namespace

DepthImage read_pgm(const std::filesystem::path& path, double px_per_mm) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P5") throw ParseError(path.string() + ": not a binary PGM");
  const long w = read_header_int(in, "width");
  const long h = read_header_int(in, "height");
  const long maxval = read_header_int(in, "maxval");
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw ParseError(path.string() + ": bad PGM header");
  in.get();  // single whitespace before the raster
  DepthImage img(static_cast<int>(w), static_cast<int>(h), 0.0, px_per_mm);
  const int bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(static_cast<std::size_t>(w * h * bytes));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) throw ParseError(path.string() + ": truncated raster");
  for (std::size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = bytes == 2 ? static_cast<double>((raw[2 * i] << 8) | raw[2 * i + 1]) : raw[i];
  return img;
}

}  // namespace graspfn
