#include "blurmeter/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "blurmeter/error.hpp"

namespace blurmeter {

namespace {

struct Point {
  double x;
  double y;
};

double edge_side(Point a, Point b, Point p) {
  return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
}

}  // namespace

Raster cartoon_scene(int width, int height, std::uint64_t seed, int shapes) {
  require(width > 0 && height > 0, "scene dimensions must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto intensity = [&] { return 0.1 + 0.8 * unit(rng); };

  Raster img(width, height, intensity());
  const double extent = std::min(width, height);
  for (int s = 0; s < shapes; ++s) {
    const double value = intensity();
    const int kind = static_cast<int>(unit(rng) * 3.0);
    const Point c{unit(rng) * width, unit(rng) * height};
    const double size = extent * (0.04 + 0.18 * unit(rng));
    if (kind == 0) {
      const double hw = size * (0.3 + unit(rng));
      const double hh = size * (0.3 + unit(rng));
      for (int y = std::max(0, int(c.y - hh)); y < std::min(height, int(c.y + hh)); ++y)
        for (int x = std::max(0, int(c.x - hw)); x < std::min(width, int(c.x + hw)); ++x)
          img(x, y) = value;
    } else if (kind == 1) {
      const double r2 = size * size;
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
          const double dx = x + 0.5 - c.x;
          const double dy = y + 0.5 - c.y;
          if (dx * dx + dy * dy <= r2) img(x, y) = value;
        }
    } else {
      std::array<Point, 3> t;
      for (auto& p : t) {
        const double a = unit(rng) * 2.0 * M_PI;
        const double r = size * (0.5 + unit(rng));
        p = {c.x + r * std::cos(a), c.y + r * std::sin(a)};
      }
      const double orient = edge_side(t[0], t[1], t[2]);
      if (orient == 0.0) continue;
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
          const Point p{x + 0.5, y + 0.5};
          const bool inside = edge_side(t[0], t[1], p) * orient >= 0 &&
                              edge_side(t[1], t[2], p) * orient >= 0 &&
                              edge_side(t[2], t[0], p) * orient >= 0;
          if (inside) img(x, y) = value;
        }
    }
  }
  return img;
}

}  // namespace blurmeter
