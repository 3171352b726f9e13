#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "blurmeter/raster.hpp"

namespace blurmeter {

/// Point spread function: odd extents, non-negative weights summing to one.
/// Weight (x, y) sits at offset (x - width/2, y - height/2) from the center.
class Kernel {
 public:
  /// Validates odd extents, non-negativity and unit mass (within 1e-9).
  Kernel(int width, int height, std::vector<double> weights);

  static Kernel delta(int extent = 1);
  static Kernel uniform(int extent);
  static Kernel gaussian(int extent, double sigma);
  /// Unit-mass line segment through the center from -(dx,dy) to +(dx,dy),
  /// one sample per pixel step along the major axis.
  static Kernel line(int extent, int dx, int dy);
  /// Uniform horizontal bar `length` pixels long, centered in a square support.
  static Kernel horizontal_bar(int extent, int length);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int radius_x() const noexcept { return width_ / 2; }
  int radius_y() const noexcept { return height_ / 2; }

  double operator()(int x, int y) const { return weights_[y * width_ + x]; }
  /// Weight at an offset from the center; zero outside the support.
  double at_offset(int dx, int dy) const;

  const std::vector<double>& weights() const noexcept { return weights_; }
  Raster as_raster() const { return Raster(width_, height_, weights_); }

  friend bool operator==(const Kernel&, const Kernel&) = default;

 private:
  int width_;
  int height_;
  std::vector<double> weights_;
};

/// Clamps negatives, zeroes entries below `prune_fraction * max`, keeps the
/// 8-connected component holding the maximum and renormalizes to unit mass.
/// Throws ErrorKind::InvalidKernel when no entry is positive.
Kernel project_kernel(const Raster& raw, double prune_fraction);

/// Mass centroid as an offset from the geometric center.
struct Centroid {
  double dx = 0.0;
  double dy = 0.0;
};
Centroid centroid(const Kernel& k);

/// Integer shift that brings the centroid within half a pixel of the center.
/// Mass pushed outside the support is dropped and the rest renormalized.
Kernel center_kernel(const Kernel& k);

/// Shifts by an integer offset with zero fill, then renormalizes.
Kernel shift_kernel(const Kernel& k, int dx, int dy);

/// Resamples the kernel onto a `extent` x `extent` support, stretching
/// offsets by `extent_ratio` (fine/coarse), then renormalizes. Used to carry
/// a kernel to the next pyramid level.
Kernel upsample_kernel(const Kernel& k, int extent, double extent_ratio,
                       double prune_fraction);

/// Plain-text grid: first line is the extent ("N" for square kernels,
/// "W H" otherwise), then one row of weights per line.
void write_kernel_text(std::ostream& out, const Kernel& k);
Kernel read_kernel_text(std::istream& in);

/// 32x32 8-bit PNG, max-normalized, nearest-neighbour magnified.
void write_kernel_png(const std::filesystem::path& path, const Kernel& k);

}  // namespace blurmeter
