#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace blurmeter {

/// Single-band floating-point image, row-major, nominal range [0,1].
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, double fill = 0.0);
  /// Takes ownership of `data`; throws if the length mismatches or a sample is not finite.
  Raster(int width, int height, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(int x, int y) { return data_[index(x, y)]; }
  double operator()(int x, int y) const { return data_[index(x, y)]; }

  /// Periodic access, any integer coordinates.
  double wrapped(int x, int y) const;
  /// Edge-replicating access, any integer coordinates.
  double clamped(int x, int y) const;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool all_finite() const noexcept;

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

struct GradientField {
  Raster gx;  // u(x+1,y) - u(x,y)
  Raster gy;  // u(x,y+1) - u(x,y)
};

struct Periodic {};
struct EdgeReplicatePad {
  int pad = 0;
};
using BoundaryMode = std::variant<Periodic, EdgeReplicatePad>;

/// Decoded image prior to band reduction. Samples are raw container values
/// in [0, max_value]; max_value is 255 or 65535 for integer containers and
/// 1 for floating-point data.
struct MultiBandImage {
  int width = 0;
  int height = 0;
  double max_value = 1.0;
  std::vector<std::vector<double>> bands;
};

/// Unweighted mean over bands, divided by the container's max value.
Raster to_grayscale(const MultiBandImage& image);

/// Forward differences with periodic wrap on the last column/row.
GradientField gradient(const Raster& image);

/// Coarse-to-fine list; level 0 is the most downsampled, the last level is
/// `image` itself. Each level is Gaussian-filtered (sigma = 0.8*(1/s - 1) for
/// its total scale s) before resampling. Throws if any level would fall
/// below `min_extent` pixels on either axis.
std::vector<Raster> build_pyramid(const Raster& image, double scale, int levels,
                                  int min_extent = 1);

/// Geometric size of a pyramid level, shared with the kernel schedule.
int scaled_extent(int extent, double total_scale);

// Small utilities shared across modules.
double mean(const Raster& image);
double rmse(const Raster& a, const Raster& b);
Raster crop(const Raster& image, int x, int y, int width, int height);
Raster pad_replicate(const Raster& image, int pad);
Raster resize_bilinear(const Raster& image, int width, int height);
Raster gaussian_blur(const Raster& image, double sigma);
Raster clip01(Raster image);

}  // namespace blurmeter
