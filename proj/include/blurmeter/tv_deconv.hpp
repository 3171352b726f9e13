#pragma once

#include <utility>

#include "blurmeter/blind_kernel.hpp"
#include "blurmeter/kernel.hpp"
#include "blurmeter/raster.hpp"

namespace blurmeter {

/// The beta schedule is expressed relative to the data term: the splitting
/// penalty at step beta is alpha*beta/2 and the shrinkage threshold is
/// alpha / (alpha*beta) = 1/beta.
struct DeconvConfig {
  double alpha = 3e-3;  // TV weight
  double beta_init = 1.0;
  double beta_max = 256.0;
  double beta_rate = 2.0 * 1.4142135623730951;
  int inner_iters = 1;

  void validate() const;
};

/// Isotropic soft shrinkage of a gradient pair toward zero by `threshold`.
std::pair<double, double> shrink(double gx, double gy, double threshold);

/// Non-blind deconvolution: argmin_u |u*k - v|^2 + alpha*|grad u|_1 with
/// isotropic TV, via half-quadratic splitting. Edge-replicate padding by the
/// kernel extent, output cropped and clipped to [0,1].
Raster deblur(const Raster& v, const Kernel& k, const DeconvConfig& config = {},
              const HqsObserver& observer = {});

}  // namespace blurmeter
