#include "blurmeter/convolution.hpp"

#include <algorithm>
#include <random>

#include "blurmeter/error.hpp"
#include "blurmeter/fft.hpp"

namespace blurmeter {

namespace {

Raster convolve_periodic(const Raster& image, const Kernel& kernel) {
  fft::Spectrum s = fft::forward(image);
  const fft::Spectrum t = fft::transfer(kernel, image.width(), image.height());
  for (std::size_t i = 0; i < s.bins.size(); ++i) s.bins[i] *= t.bins[i];
  return fft::inverse(s);
}

}  // namespace

Raster convolve(const Raster& image, const Kernel& kernel, const BoundaryMode& mode) {
  require(!image.empty(), "cannot convolve an empty raster");
  require(kernel.width() <= image.width() && kernel.height() <= image.height(),
          "kernel is larger than the image");
  if (std::holds_alternative<Periodic>(mode)) return convolve_periodic(image, kernel);
  const int pad = std::get<EdgeReplicatePad>(mode).pad;
  require(pad >= std::max(kernel.radius_x(), kernel.radius_y()),
          "padding must cover the kernel radius");
  const Raster padded = pad_replicate(image, pad);
  return crop(convolve_periodic(padded, kernel), pad, pad, image.width(), image.height());
}

Raster synthesize(const Raster& truth, const Kernel& kernel, double noise_sigma,
                  std::uint64_t seed) {
  return synthesize(truth, kernel, noise_sigma, seed,
                    EdgeReplicatePad{std::max(kernel.width(), kernel.height())});
}

Raster synthesize(const Raster& truth, const Kernel& kernel, double noise_sigma,
                  std::uint64_t seed, const BoundaryMode& mode) {
  require(noise_sigma >= 0.0, "noise sigma must be non-negative");
  Raster v = convolve(truth, kernel, mode);
  if (noise_sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (double& x : v.data()) x += noise(rng);
  }
  return clip01(std::move(v));
}

}  // namespace blurmeter
