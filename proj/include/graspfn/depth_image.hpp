#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "graspfn/geometry.hpp"
#include "graspfn/pose_grid.hpp"
#include "graspfn/scene.hpp"

namespace graspfn {

/// Row-major depth map in millimetres; 0 marks a missing measurement.
/// Pixel (x, y) has its centre at image coordinates (x + 0.5, y + 0.5).
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;
  double px_per_mm = 1.4;

  DepthImage() = default;
  DepthImage(int w, int h, double fill, double ppm)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill), px_per_mm(ppm) {}

  double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

  /// Millimetre offset of a pixel centre from the image centre.
  Vec2 pixel_center_mm(int x, int y) const {
    return {(x + 0.5 - 0.5 * width) / px_per_mm, (y + 0.5 - 0.5 * height) / px_per_mm};
  }

  /// Bilinear read at continuous pixel-index coordinates (pixel centres at
  /// integers), clamped to the image.
  double sample(double x, double y) const;

  friend bool operator==(const DepthImage&, const DepthImage&) = default;
};

/// Two-component sensor noise: Gaussian pixel-localisation jitter (pixels)
/// and Gaussian depth noise (millimetres).
struct NoiseParams {
  double sigma_p_px = 1.0;
  double sigma_d_mm = 1.5;

  void validate() const;
};

/// Orthographic top-down render over the grid extent.
DepthImage render_depth(const Scene& scene, const PoseGrid& grid);

/// Each pixel reads the clean image bilinearly at a Gaussian-shifted source
/// location (shift drawn per pixel, per axis, clamped to the image) and
/// adds Gaussian depth noise. Missing pixels stay missing. The random
/// stream is split per row, so rows may be processed in any order.
DepthImage apply_noise(const DepthImage& img, const NoiseParams& params, std::uint64_t seed);

/// Replaces each zero pixel by the mean of the non-zero pixels within
/// `radius` when there are at least two, otherwise by the nearest non-zero
/// pixel (ties in row-major order). Reads only the input image, so the
/// result does not depend on visiting order.
DepthImage inpaint_zeros(const DepthImage& img, int radius = 5);

/// Box-average by an integer factor; trailing pixels that do not fill a
/// whole block are dropped.
DepthImage downsample(const DepthImage& img, int factor);

/// Rotates the image by `angle` about its centre, then translates by
/// (dx, dy) pixels. Uncovered pixels take `fill`.
DepthImage rotate_shift(const DepthImage& img, double angle, double dx_px, double dy_px, double fill);

/// 16-bit binary PGM (P5, maxval 65535, big-endian samples), depth in whole
/// millimetres.
void write_pgm16(const std::filesystem::path& path, const DepthImage& img);
std::string encode_pgm16(const DepthImage& img);
DepthImage read_pgm(const std::filesystem::path& path, double px_per_mm);

}  // namespace graspfn
