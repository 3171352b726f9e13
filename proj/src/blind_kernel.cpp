#include "blurmeter/blind_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "blurmeter/convolution.hpp"
#include "blurmeter/error.hpp"
#include "blurmeter/fft.hpp"

namespace blurmeter {

namespace {

using fft::Complex;
using fft::Spectrum;

double max_abs(const Raster& r) {
  double m = 0.0;
  for (double v : r.data()) m = std::max(m, std::abs(v));
  return m;
}

void check_finite(const Raster& r, const char* what) {
  if (!r.all_finite())
    throw Error(ErrorKind::NonFinite, std::string(what) + " produced non-finite values");
}

// |u*k - v|^2 + beta*|grad u - g|^2, periodic.
double splitting_objective(const Raster& u, const Raster& v, const Kernel& k,
                           const GradientField& g, double beta) {
  const Raster ku = convolve(u, k, Periodic{});
  const GradientField du = gradient(u);
  double data = 0.0;
  double coupling = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = ku.data()[i] - v.data()[i];
    const double ex = du.gx.data()[i] - g.gx.data()[i];
    const double ey = du.gy.data()[i] - g.gy.data()[i];
    data += r * r;
    coupling += ex * ex + ey * ey;
  }
  return data + beta * coupling;
}

int odd_floor(double x) {
  const int n = static_cast<int>(std::floor(x));
  return std::max(1, n % 2 == 1 ? n : n - 1);
}

double smooth_step(double t) { return 0.5 * (1.0 - std::cos(M_PI * t)); }

}  // namespace

void EstimationConfig::validate() const {
  require(kernel_size >= 3 && kernel_size % 2 == 1, "kernel_size must be odd and >= 3");
  require(lambda > 0.0, "lambda must be positive");
  require(gamma > 0.0, "gamma must be positive");
  require(outer_iters >= 1, "outer_iters must be >= 1");
  require(final_iters >= 1, "final_iters must be >= 1");
  require(!beta_init || *beta_init > 0.0, "beta_init must be positive");
  require(beta_max > 0.0, "beta_max must be positive");
  require(beta_rate > 1.0, "beta_rate must exceed 1");
  require(pyramid_scale > 0.0 && pyramid_scale < 1.0, "pyramid_scale must lie in (0,1)");
  require(prune_fraction >= 0.0 && prune_fraction < 1.0, "prune_fraction must lie in [0,1)");
}

Raster l0_latent_update(const Raster& v, const Kernel& k, double lambda,
                        const BetaSchedule& schedule, const HqsObserver& observer) {
  require(lambda > 0.0, "lambda must be positive");
  require(schedule.init > 0.0 && schedule.rate > 1.0, "invalid beta schedule");
  require(v.all_finite(), "input image is not finite", ErrorKind::NonFinite);
  const int w = v.width();
  const int h = v.height();
  require(k.width() <= w && k.height() <= h, "kernel is larger than the image");

  const Spectrum K = fft::transfer(k, w, h);
  const Spectrum V = fft::forward(v);
  const auto D = fft::gradient_transfer(w, h);
  const std::size_t nb = K.bins.size();

  std::vector<Complex> data_num(nb);
  std::vector<double> data_den(nb);
  std::vector<double> grad_den(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    data_num[i] = std::conj(K.bins[i]) * V.bins[i];
    data_den[i] = std::norm(K.bins[i]);
    grad_den[i] = std::norm(D.dx.bins[i]) + std::norm(D.dy.bins[i]);
  }

  Raster u = v;
  Spectrum U{w, h, std::vector<Complex>(nb)};
  for (double beta = schedule.init; beta <= schedule.max; beta *= schedule.rate) {
    // Hard threshold on the joint gradient magnitude.
    GradientField g = gradient(u);
    const double t = lambda / beta;
    for (std::size_t i = 0; i < u.size(); ++i) {
      double& gx = g.gx.data()[i];
      double& gy = g.gy.data()[i];
      if (gx * gx + gy * gy <= t) gx = gy = 0.0;
    }
    const Spectrum Gx = fft::forward(g.gx);
    const Spectrum Gy = fft::forward(g.gy);
    for (std::size_t i = 0; i < nb; ++i) {
      const Complex num =
          data_num[i] + beta * (std::conj(D.dx.bins[i]) * Gx.bins[i] +
                                std::conj(D.dy.bins[i]) * Gy.bins[i]);
      U.bins[i] = num / (data_den[i] + beta * grad_den[i]);
    }
    Raster next = fft::inverse(U);
    check_finite(next, "l0 latent update");
    if (observer) {
      observer({beta, splitting_objective(u, v, k, g, beta),
                splitting_objective(next, v, k, g, beta)});
    }
    u = std::move(next);
  }
  return u;
}

Raster kernel_update_raw(const GradientField& grad_u, const GradientField& grad_v,
                         double gamma, int kernel_size) {
  const int w = grad_u.gx.width();
  const int h = grad_u.gx.height();
  require(grad_u.gy.width() == w && grad_u.gy.height() == h && grad_v.gx.width() == w &&
              grad_v.gx.height() == h && grad_v.gy.width() == w && grad_v.gy.height() == h,
          "gradient fields must share dimensions");
  require(gamma > 0.0, "gamma must be positive");
  require(kernel_size >= 1 && kernel_size % 2 == 1, "kernel size must be odd");
  require(kernel_size <= w && kernel_size <= h, "kernel is larger than the gradient field");
  if (std::max(max_abs(grad_u.gx), max_abs(grad_u.gy)) == 0.0)
    throw Error(ErrorKind::InsufficientStructure, "latent gradients are all zero");

  const Spectrum Ux = fft::forward(grad_u.gx);
  const Spectrum Uy = fft::forward(grad_u.gy);
  const Spectrum Vx = fft::forward(grad_v.gx);
  const Spectrum Vy = fft::forward(grad_v.gy);
  Spectrum Kf{w, h, std::vector<Complex>(Ux.bins.size())};
  for (std::size_t i = 0; i < Kf.bins.size(); ++i) {
    const Complex num = std::conj(Ux.bins[i]) * Vx.bins[i] + std::conj(Uy.bins[i]) * Vy.bins[i];
    Kf.bins[i] = num / (std::norm(Ux.bins[i]) + std::norm(Uy.bins[i]) + gamma);
  }
  const Raster full = fft::inverse(Kf);
  check_finite(full, "kernel update");
  const int r = kernel_size / 2;
  Raster raw(kernel_size, kernel_size);
  for (int y = 0; y < kernel_size; ++y)
    for (int x = 0; x < kernel_size; ++x) raw(x, y) = full.wrapped(x - r, y - r);
  return raw;
}

Kernel kernel_update(const GradientField& grad_u, const GradientField& grad_v, double gamma,
                     int kernel_size, double prune_fraction) {
  return project_kernel(kernel_update_raw(grad_u, grad_v, gamma, kernel_size), prune_fraction);
}

std::vector<int> kernel_schedule(const EstimationConfig& config, int width, int height) {
  config.validate();
  std::vector<int> sizes{config.kernel_size};
  for (int steps = 1;; ++steps) {
    const double s = std::pow(config.pyramid_scale, steps);
    const int ks = odd_floor(config.kernel_size * s);
    if (ks < 3) break;
    if (scaled_extent(std::min(width, height), s) < 3 * ks) break;
    sizes.insert(sizes.begin(), ks);
  }
  return sizes;
}

Raster periodic_extension(const Raster& image, int margin) {
  require(!image.empty(), "cannot extend an empty raster");
  require(margin >= 1, "extension margin must be positive");
  const int w = image.width();
  const int h = image.height();
  const int ew = fft::good_size(w + margin);
  const int eh = fft::good_size(h + margin);
  Raster out(ew, eh);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out(x, y) = image(x, y);
    for (int x = w; x < ew; ++x) {
      const double t = smooth_step(static_cast<double>(x - w + 1) / (ew - w + 1));
      out(x, y) = (1.0 - t) * image(w - 1, y) + t * image(0, y);
    }
  }
  for (int y = h; y < eh; ++y) {
    const double t = smooth_step(static_cast<double>(y - h + 1) / (eh - h + 1));
    for (int x = 0; x < ew; ++x) out(x, y) = (1.0 - t) * out(x, h - 1) + t * out(x, 0);
  }
  return out;
}

EstimationResult estimate_kernel(const Raster& v, const EstimationConfig& config) {
  config.validate();
  require(v.all_finite(), "input image is not finite", ErrorKind::NonFinite);
  require(v.width() >= 3 * config.kernel_size && v.height() >= 3 * config.kernel_size,
          "image must be at least 3x the kernel size on each axis");
  {
    const GradientField g = gradient(v);
    if (std::max(max_abs(g.gx), max_abs(g.gy)) < 1e-12)
      throw Error(ErrorKind::InsufficientStructure, "image has no gradients");
  }

  const std::vector<int> sizes = kernel_schedule(config, v.width(), v.height());
  const int levels = static_cast<int>(sizes.size());
  const std::vector<Raster> pyramid =
      build_pyramid(v, config.pyramid_scale, levels, 3 * sizes.front());
  const BetaSchedule schedule = config.schedule();

  EstimationResult result{Kernel::horizontal_bar(sizes.front(), 3), Raster{}, {}, false};
  Kernel& k = result.kernel;
  Raster latent;
  try {
    for (int level = 0; level < levels; ++level) {
      const int ks = sizes[level];
      if (level > 0) {
        const double ratio =
            static_cast<double>(pyramid[level].width()) / pyramid[level - 1].width();
        k = upsample_kernel(k, ks, ratio, config.prune_fraction);
      }
      const Raster work = periodic_extension(pyramid[level], 2 * ks);
      const GradientField grad_v = gradient(work);
      const int iters = level == levels - 1 ? config.final_iters : config.outer_iters;
      for (int it = 0; it < iters; ++it) {
        latent = l0_latent_update(work, k, config.lambda, schedule);
        k = kernel_update(gradient(latent), grad_v, config.gamma, ks, config.prune_fraction);
        result.energy_trace.push_back(
            std::pow(rmse(convolve(latent, k, Periodic{}), work), 2));
      }
      k = center_kernel(k);
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InvalidKernel) throw;
    result.kernel = Kernel::delta(config.kernel_size);
    result.fallback = true;
    latent = v;
  }
  result.latent = crop(latent, 0, 0, std::min(v.width(), latent.width()),
                       std::min(v.height(), latent.height()));
  return result;
}

}  // namespace blurmeter
