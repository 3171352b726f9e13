#include "blurmeter/raster.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "blurmeter/error.hpp"

namespace blurmeter {

namespace {

int wrap_index(int i, int n) {
  int r = i % n;
  return r < 0 ? r + n : r;
}

std::vector<double> gaussian_taps(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    taps[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += taps[i + radius];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

}  // namespace

Raster::Raster(int width, int height, double fill)
    : width_(width), height_(height) {
  require(width >= 0 && height >= 0, "raster dimensions must be non-negative");
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

Raster::Raster(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  require(width >= 0 && height >= 0, "raster dimensions must be non-negative");
  require(data_.size() == static_cast<std::size_t>(width) * height,
          "raster data length must equal width*height");
  require(all_finite(), "raster contains non-finite samples", ErrorKind::NonFinite);
}

double Raster::wrapped(int x, int y) const {
  return (*this)(wrap_index(x, width_), wrap_index(y, height_));
}

double Raster::clamped(int x, int y) const {
  return (*this)(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
}

bool Raster::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Raster to_grayscale(const MultiBandImage& image) {
  require(!image.bands.empty(), "image has no bands");
  require(image.width > 0 && image.height > 0, "image is empty");
  require(image.max_value > 0.0, "image max value must be positive");
  const std::size_t n = static_cast<std::size_t>(image.width) * image.height;
  for (const auto& band : image.bands) {
    require(band.size() == n, "band dimensions do not match");
  }
  std::vector<double> out(n, 0.0);
  const double scale = 1.0 / (image.max_value * static_cast<double>(image.bands.size()));
  for (const auto& band : image.bands) {
    for (std::size_t i = 0; i < n; ++i) out[i] += band[i];
  }
  for (double& v : out) v *= scale;
  return Raster(image.width, image.height, std::move(out));
}

GradientField gradient(const Raster& image) {
  require(image.width() >= 2 && image.height() >= 2,
          "gradient needs at least 2 pixels on each axis");
  const int w = image.width();
  const int h = image.height();
  GradientField g{Raster(w, h), Raster(w, h)};
  for (int y = 0; y < h; ++y) {
    const int yn = y + 1 == h ? 0 : y + 1;
    for (int x = 0; x < w; ++x) {
      const int xn = x + 1 == w ? 0 : x + 1;
      g.gx(x, y) = image(xn, y) - image(x, y);
      g.gy(x, y) = image(x, yn) - image(x, y);
    }
  }
  return g;
}

int scaled_extent(int extent, double total_scale) {
  return std::max(1, static_cast<int>(std::lround(extent * total_scale)));
}

std::vector<Raster> build_pyramid(const Raster& image, double scale, int levels,
                                  int min_extent) {
  require(scale > 0.0 && scale < 1.0, "pyramid scale must lie in (0,1)");
  require(levels >= 1, "pyramid needs at least one level");
  require(!image.empty(), "cannot build a pyramid of an empty image");
  std::vector<Raster> out;
  out.reserve(levels);
  for (int level = 0; level < levels; ++level) {
    const int steps = levels - 1 - level;
    if (steps == 0) {
      require(image.width() >= min_extent && image.height() >= min_extent,
              "image is smaller than the minimum pyramid extent");
      out.push_back(image);
      continue;
    }
    const double s = std::pow(scale, steps);
    const int w = scaled_extent(image.width(), s);
    const int h = scaled_extent(image.height(), s);
    if (w < min_extent || h < min_extent) {
      throw Error(ErrorKind::InvalidArgument,
                  "pyramid level " + std::to_string(level) + " would be " +
                      std::to_string(w) + "x" + std::to_string(h) +
                      ", below the minimum extent " + std::to_string(min_extent));
    }
    const double sigma = 0.8 * (1.0 / s - 1.0);
    out.push_back(resize_bilinear(gaussian_blur(image, sigma), w, h));
  }
  return out;
}

double mean(const Raster& image) {
  require(!image.empty(), "mean of an empty raster");
  double sum = 0.0;
  for (double v : image.data()) sum += v;
  return sum / static_cast<double>(image.size());
}

double rmse(const Raster& a, const Raster& b) {
  require(a.width() == b.width() && a.height() == b.height(),
          "rmse needs rasters of equal size");
  require(!a.empty(), "rmse of empty rasters");
  double sum = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = da[i] - db[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(da.size()));
}

Raster crop(const Raster& image, int x, int y, int width, int height) {
  require(width > 0 && height > 0, "crop window must be non-empty");
  require(x >= 0 && y >= 0 && x + width <= image.width() &&
              y + height <= image.height(),
          "crop window exceeds the image");
  Raster out(width, height);
  for (int j = 0; j < height; ++j)
    for (int i = 0; i < width; ++i) out(i, j) = image(x + i, y + j);
  return out;
}

Raster pad_replicate(const Raster& image, int pad) {
  require(pad >= 0, "pad must be non-negative");
  Raster out(image.width() + 2 * pad, image.height() + 2 * pad);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) out(x, y) = image.clamped(x - pad, y - pad);
  return out;
}

Raster resize_bilinear(const Raster& image, int width, int height) {
  require(width > 0 && height > 0, "resize target must be non-empty");
  require(!image.empty(), "cannot resize an empty raster");
  Raster out(width, height);
  const double sx = static_cast<double>(image.width()) / width;
  const double sy = static_cast<double>(image.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    const int y0 = static_cast<int>(std::floor(fy));
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      const int x0 = static_cast<int>(std::floor(fx));
      const double tx = fx - x0;
      const double top = (1 - tx) * image.clamped(x0, y0) + tx * image.clamped(x0 + 1, y0);
      const double bot =
          (1 - tx) * image.clamped(x0, y0 + 1) + tx * image.clamped(x0 + 1, y0 + 1);
      out(x, y) = (1 - ty) * top + ty * bot;
    }
  }
  return out;
}

Raster gaussian_blur(const Raster& image, double sigma) {
  if (sigma <= 0.0) return image;
  const auto taps = gaussian_taps(sigma);
  const int r = static_cast<int>(taps.size() / 2);
  Raster tmp(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += taps[i + r] * image.clamped(x + i, y);
      tmp(x, y) = acc;
    }
  Raster out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += taps[i + r] * tmp.clamped(x, y + i);
      out(x, y) = acc;
    }
  return out;
}

Raster clip01(Raster image) {
  for (double& v : image.data()) v = std::clamp(v, 0.0, 1.0);
  return image;
}

}  // namespace blurmeter
