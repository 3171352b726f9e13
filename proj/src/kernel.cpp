#include "blurmeter/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "blurmeter/error.hpp"
#include "blurmeter/image_io.hpp"

namespace blurmeter {

namespace {

constexpr double kMassTolerance = 1e-9;

std::vector<double> normalized(std::vector<double> w) {
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  require(sum > 0.0, "kernel has no positive mass", ErrorKind::InvalidKernel);
  for (double& v : w) v /= sum;
  return w;
}

}  // namespace

Kernel::Kernel(int width, int height, std::vector<double> weights)
    : width_(width), height_(height), weights_(std::move(weights)) {
  require(width > 0 && height > 0 && width % 2 == 1 && height % 2 == 1,
          "kernel extents must be odd and positive");
  require(weights_.size() == static_cast<std::size_t>(width) * height,
          "kernel weight count must equal width*height");
  double sum = 0.0;
  for (double v : weights_) {
    require(std::isfinite(v), "kernel weight is not finite", ErrorKind::NonFinite);
    require(v >= 0.0, "kernel weights must be non-negative");
    sum += v;
  }
  require(std::abs(sum - 1.0) <= kMassTolerance, "kernel weights must sum to 1");
}

Kernel Kernel::delta(int extent) {
  std::vector<double> w(static_cast<std::size_t>(extent) * extent, 0.0);
  w[w.size() / 2] = 1.0;
  return Kernel(extent, extent, std::move(w));
}

Kernel Kernel::uniform(int extent) {
  const std::size_t n = static_cast<std::size_t>(extent) * extent;
  return Kernel(extent, extent, std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Kernel Kernel::gaussian(int extent, double sigma) {
  require(sigma > 0.0, "gaussian sigma must be positive");
  const int r = extent / 2;
  std::vector<double> w(static_cast<std::size_t>(extent) * extent);
  for (int y = 0; y < extent; ++y)
    for (int x = 0; x < extent; ++x) {
      const double dx = x - r;
      const double dy = y - r;
      w[y * extent + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    }
  return Kernel(extent, extent, normalized(std::move(w)));
}

Kernel Kernel::line(int extent, int dx, int dy) {
  const int r = extent / 2;
  require(std::abs(dx) <= r && std::abs(dy) <= r, "line does not fit the kernel support");
  const int steps = std::max(std::abs(dx), std::abs(dy));
  if (steps == 0) return delta(extent);
  std::vector<double> w(static_cast<std::size_t>(extent) * extent, 0.0);
  for (int t = -steps; t <= steps; ++t) {
    const int x = r + static_cast<int>(std::lround(static_cast<double>(t) * dx / steps));
    const int y = r + static_cast<int>(std::lround(static_cast<double>(t) * dy / steps));
    w[y * extent + x] += 1.0;
  }
  return Kernel(extent, extent, normalized(std::move(w)));
}

Kernel Kernel::horizontal_bar(int extent, int length) {
  require(length >= 1 && length <= extent && length % 2 == 1,
          "bar length must be odd and fit the support");
  std::vector<double> w(static_cast<std::size_t>(extent) * extent, 0.0);
  const int r = extent / 2;
  for (int x = r - length / 2; x <= r + length / 2; ++x) w[r * extent + x] = 1.0 / length;
  return Kernel(extent, extent, std::move(w));
}

double Kernel::at_offset(int dx, int dy) const {
  const int x = dx + radius_x();
  const int y = dy + radius_y();
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return 0.0;
  return (*this)(x, y);
}

Kernel project_kernel(const Raster& raw, double prune_fraction) {
  const int w = raw.width();
  const int h = raw.height();
  require(w > 0 && h > 0 && w % 2 == 1 && h % 2 == 1, "kernel extents must be odd");
  require(prune_fraction >= 0.0 && prune_fraction < 1.0,
          "prune fraction must lie in [0,1)");

  std::vector<double> v(raw.data().begin(), raw.data().end());
  for (double& x : v) x = std::max(x, 0.0);
  const auto max_it = std::max_element(v.begin(), v.end());
  if (*max_it <= 0.0) throw Error(ErrorKind::InvalidKernel, "kernel has no positive entry");
  const double cutoff = prune_fraction * *max_it;
  for (double& x : v)
    if (x < cutoff) x = 0.0;

  // Keep only the 8-connected support reachable from the peak.
  std::vector<std::uint8_t> keep(v.size(), 0);
  std::vector<int> stack{static_cast<int>(max_it - v.begin())};
  keep[stack.front()] = 1;
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    const int cx = i % w;
    const int cy = i / w;
    for (int oy = -1; oy <= 1; ++oy)
      for (int ox = -1; ox <= 1; ++ox) {
        const int nx = cx + ox;
        const int ny = cy + oy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const int j = ny * w + nx;
        if (keep[j] || v[j] <= 0.0) continue;
        keep[j] = 1;
        stack.push_back(j);
      }
  }
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!keep[i]) v[i] = 0.0;
  return Kernel(w, h, normalized(std::move(v)));
}

Centroid centroid(const Kernel& k) {
  Centroid c;
  for (int y = 0; y < k.height(); ++y)
    for (int x = 0; x < k.width(); ++x) {
      c.dx += k(x, y) * (x - k.radius_x());
      c.dy += k(x, y) * (y - k.radius_y());
    }
  return c;
}

Kernel shift_kernel(const Kernel& k, int dx, int dy) {
  std::vector<double> w(k.weights().size(), 0.0);
  for (int y = 0; y < k.height(); ++y)
    for (int x = 0; x < k.width(); ++x) {
      const int nx = x + dx;
      const int ny = y + dy;
      if (nx < 0 || ny < 0 || nx >= k.width() || ny >= k.height()) continue;
      w[ny * k.width() + nx] = k(x, y);
    }
  return Kernel(k.width(), k.height(), normalized(std::move(w)));
}

Kernel center_kernel(const Kernel& k) {
  Kernel out = k;
  // Dropping mass at the border can move the centroid again; a couple of
  // passes always settles for realistic kernels.
  for (int pass = 0; pass < 3; ++pass) {
    const Centroid c = centroid(out);
    const int sx = static_cast<int>(std::lround(c.dx));
    const int sy = static_cast<int>(std::lround(c.dy));
    if (sx == 0 && sy == 0) break;
    out = shift_kernel(out, -sx, -sy);
  }
  return out;
}

Kernel upsample_kernel(const Kernel& k, int extent, double extent_ratio,
                       double prune_fraction) {
  require(extent % 2 == 1, "kernel extent must be odd");
  require(extent_ratio > 0.0, "extent ratio must be positive");
  const int r = extent / 2;
  Raster raw(extent, extent);
  for (int y = 0; y < extent; ++y)
    for (int x = 0; x < extent; ++x) {
      const double fx = (x - r) / extent_ratio;
      const double fy = (y - r) / extent_ratio;
      const int x0 = static_cast<int>(std::floor(fx));
      const int y0 = static_cast<int>(std::floor(fy));
      const double tx = fx - x0;
      const double ty = fy - y0;
      raw(x, y) = (1 - tx) * (1 - ty) * k.at_offset(x0, y0) +
                  tx * (1 - ty) * k.at_offset(x0 + 1, y0) +
                  (1 - tx) * ty * k.at_offset(x0, y0 + 1) +
                  tx * ty * k.at_offset(x0 + 1, y0 + 1);
    }
  return project_kernel(raw, prune_fraction);
}

void write_kernel_text(std::ostream& out, const Kernel& k) {
  if (k.width() == k.height())
    out << k.width() << '\n';
  else
    out << k.width() << ' ' << k.height() << '\n';
  out.precision(17);
  for (int y = 0; y < k.height(); ++y) {
    for (int x = 0; x < k.width(); ++x) {
      if (x) out << ' ';
      out << k(x, y);
    }
    out << '\n';
  }
}

Kernel read_kernel_text(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw Error(ErrorKind::Parse, "kernel file is empty");
  std::istringstream hs(header);
  int w = 0;
  int h = 0;
  if (!(hs >> w)) throw Error(ErrorKind::Parse, "kernel header must hold the extent");
  if (!(hs >> h)) h = w;
  require(w > 0 && h > 0, "kernel extent must be positive", ErrorKind::Parse);
  std::vector<double> weights;
  weights.reserve(static_cast<std::size_t>(w) * h);
  double v = 0.0;
  while (weights.size() < static_cast<std::size_t>(w) * h && in >> v) weights.push_back(v);
  require(weights.size() == static_cast<std::size_t>(w) * h,
          "kernel file has too few weights", ErrorKind::Parse);
  return Kernel(w, h, std::move(weights));
}

void write_kernel_png(const std::filesystem::path& path, const Kernel& k) {
  constexpr int kSize = 32;
  const double peak = *std::max_element(k.weights().begin(), k.weights().end());
  std::vector<std::uint16_t> pixels(kSize * kSize);
  for (int y = 0; y < kSize; ++y)
    for (int x = 0; x < kSize; ++x) {
      const double v = k(x * k.width() / kSize, y * k.height() / kSize) / peak;
      pixels[y * kSize + x] = static_cast<std::uint16_t>(std::lround(255.0 * v));
    }
  write_png_gray(path, kSize, kSize, 8, pixels);
}

}  // namespace blurmeter
