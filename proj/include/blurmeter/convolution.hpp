#pragma once

#include <cstdint>

#include "blurmeter/kernel.hpp"
#include "blurmeter/raster.hpp"

namespace blurmeter {

/// u * k, output the same size as `image`. Periodic wraps around the image;
/// EdgeReplicatePad extends by edge replication (pad must cover the kernel
/// radius), convolves periodically and crops back.
Raster convolve(const Raster& image, const Kernel& kernel,
                const BoundaryMode& mode = Periodic{});

/// Observation model: clip01(truth * kernel + n), n ~ N(0, noise_sigma^2)
/// drawn from a generator seeded with `seed`. Edge-replicate boundary with
/// pad equal to the kernel extent unless another mode is given.
Raster synthesize(const Raster& truth, const Kernel& kernel, double noise_sigma,
                  std::uint64_t seed);
Raster synthesize(const Raster& truth, const Kernel& kernel, double noise_sigma,
                  std::uint64_t seed, const BoundaryMode& mode);

}  // namespace blurmeter
