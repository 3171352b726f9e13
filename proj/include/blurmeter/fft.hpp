#pragma once

#include <complex>
#include <vector>

#include "blurmeter/kernel.hpp"
#include "blurmeter/raster.hpp"

namespace blurmeter::fft {

using Complex = std::complex<double>;

/// Half spectrum of a real image as produced by a real-to-complex 2-D DFT:
/// `height` rows of `width/2 + 1` bins. Unnormalized forward transform.
struct Spectrum {
  int width = 0;   // spatial width
  int height = 0;  // spatial height
  std::vector<Complex> bins;

  int bins_per_row() const noexcept { return width / 2 + 1; }
};

Spectrum forward(const Raster& image);
/// Inverse transform, including the 1/(width*height) normalization.
Raster inverse(const Spectrum& spectrum);

/// Transfer function of `k` on a width x height periodic grid, with the
/// kernel center placed at the origin.
Spectrum transfer(const Kernel& k, int width, int height);
/// Same for an arbitrary odd-sized real filter (kernel center at origin).
Spectrum transfer(const Raster& filter, int width, int height);

/// Transfer functions of the forward-difference operators used by gradient().
struct GradientTransfer {
  Spectrum dx;
  Spectrum dy;
};
GradientTransfer gradient_transfer(int width, int height);

/// Smallest n' >= n whose only prime factors are 2, 3, 5 and 7.
int good_size(int n);

}  // namespace blurmeter::fft
