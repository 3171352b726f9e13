#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "blurmeter/kernel.hpp"
#include "blurmeter/raster.hpp"

namespace blurmeter {

/// Continuation schedule of a half-quadratic splitting: the penalty weight
/// starts at `init` and is multiplied by `rate` until it exceeds `max`.
struct BetaSchedule {
  double init = 4e-3;
  double max = 1e5;
  double rate = 2.0;
};

struct EstimationConfig {
  int kernel_size = 15;
  double lambda = 2e-3;  // weight of the l0 gradient count
  double gamma = 2.0;    // ridge weight on the kernel
  int outer_iters = 5;   // latent/kernel alternations per pyramid level
  int final_iters = 10;  // alternations at full resolution
  std::optional<double> beta_init;  // unset means 2 * lambda
  double beta_max = 1e5;
  double beta_rate = 2.0;
  double pyramid_scale = 0.5;
  double prune_fraction = 0.05;

  BetaSchedule schedule() const {
    return {beta_init.value_or(2.0 * lambda), beta_max, beta_rate};
  }
  /// Throws ErrorKind::InvalidArgument on out-of-range fields.
  void validate() const;
};

struct EstimationResult {
  Kernel kernel;
  Raster latent;
  std::vector<double> energy_trace;  // mean squared residual |u*k - v|^2 per alternation
  bool fallback = false;  // projection failed and `kernel` is a delta stand-in
};

/// One inner step of a splitting solver, reported to an observer. The
/// objectives are the fixed-(auxiliary, beta) quadratic before and after the
/// exact u-solve.
struct HqsStep {
  double beta = 0.0;
  double objective_before = 0.0;
  double objective_after = 0.0;
};
using HqsObserver = std::function<void(const HqsStep&)>;

/// Approximately minimizes |u*k - v|^2 + lambda*|grad u|_0 by half-quadratic
/// splitting, periodic boundary. Starts from u = v.
Raster l0_latent_update(const Raster& v, const Kernel& k, double lambda,
                        const BetaSchedule& schedule, const HqsObserver& observer = {});

/// Closed-form periodic solution of min_k |grad_u * k - grad_v|^2 + gamma*|k|^2,
/// cropped to kernel_size x kernel_size around the origin. No projection.
/// Throws ErrorKind::InsufficientStructure when grad_u vanishes.
Raster kernel_update_raw(const GradientField& grad_u, const GradientField& grad_v,
                         double gamma, int kernel_size);

/// kernel_update_raw followed by project_kernel.
Kernel kernel_update(const GradientField& grad_u, const GradientField& grad_v, double gamma,
                     int kernel_size, double prune_fraction = 0.05);

/// Pyramid kernel sizes, coarse to fine, for an image of the given size.
std::vector<int> kernel_schedule(const EstimationConfig& config, int width, int height);

/// Coarse-to-fine blind kernel estimation. Deterministic; single-threaded.
/// Throws ErrorKind::InsufficientStructure on flat images.
EstimationResult estimate_kernel(const Raster& v, const EstimationConfig& config = {});

/// Extends `image` on the right and bottom with a smooth blend back to the
/// opposite edge so the result is close to periodic; the original occupies
/// the top-left corner. Extended sizes are FFT-friendly.
Raster periodic_extension(const Raster& image, int margin);

}  // namespace blurmeter
