#pragma once

#include <cstdint>

#include "blurmeter/raster.hpp"

namespace blurmeter {

/// Piecewise-constant test scene: random rectangles, disks and triangles
/// with intensities in [0.1, 0.9] over a flat background. Deterministic in
/// `seed`. Shapes have hard (aliased) edges.
Raster cartoon_scene(int width, int height, std::uint64_t seed, int shapes = 40);

}  // namespace blurmeter
