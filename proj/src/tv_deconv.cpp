#include "blurmeter/tv_deconv.hpp"

#include <algorithm>
#include <cmath>

#include "blurmeter/convolution.hpp"
#include "blurmeter/error.hpp"
#include "blurmeter/fft.hpp"

namespace blurmeter {

namespace {

using fft::Complex;
using fft::Spectrum;

double quadratic_objective(const Raster& u, const Raster& v, const Kernel& k,
                           const GradientField& w, double coupling) {
  const Raster ku = convolve(u, k, Periodic{});
  const GradientField du = gradient(u);
  double total = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = ku.data()[i] - v.data()[i];
    const double ex = du.gx.data()[i] - w.gx.data()[i];
    const double ey = du.gy.data()[i] - w.gy.data()[i];
    total += r * r + coupling * (ex * ex + ey * ey);
  }
  return total;
}

}  // namespace

void DeconvConfig::validate() const {
  require(alpha > 0.0, "alpha must be positive");
  require(beta_init > 0.0 && beta_max > 0.0, "beta bounds must be positive");
  require(beta_rate > 1.0, "beta_rate must exceed 1");
  require(inner_iters >= 1, "inner_iters must be >= 1");
}

std::pair<double, double> shrink(double gx, double gy, double threshold) {
  require(threshold >= 0.0, "shrink threshold must be non-negative");
  const double norm = std::hypot(gx, gy);
  if (norm == 0.0) return {0.0, 0.0};
  const double scale = std::max(norm - threshold, 0.0) / norm;
  return {gx * scale, gy * scale};
}

Raster deblur(const Raster& v, const Kernel& k, const DeconvConfig& config,
              const HqsObserver& observer) {
  config.validate();
  require(v.all_finite(), "input image is not finite", ErrorKind::NonFinite);
  require(k.width() <= v.width() && k.height() <= v.height(),
          "kernel is larger than the image");

  const int pad = std::max(k.width(), k.height());
  const int w = fft::good_size(v.width() + 2 * pad);
  const int h = fft::good_size(v.height() + 2 * pad);
  Raster padded(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) padded(x, y) = v.clamped(x - pad, y - pad);

  const Spectrum K = fft::transfer(k, w, h);
  const Spectrum V = fft::forward(padded);
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

  Raster u = padded;
  Spectrum U{w, h, std::vector<Complex>(nb)};
  for (double beta = config.beta_init; beta <= config.beta_max; beta *= config.beta_rate) {
    const double coupling = 0.5 * config.alpha * beta;
    for (int inner = 0; inner < config.inner_iters; ++inner) {
      GradientField g = gradient(u);
      for (std::size_t i = 0; i < u.size(); ++i) {
        auto [sx, sy] = shrink(g.gx.data()[i], g.gy.data()[i], 1.0 / beta);
        g.gx.data()[i] = sx;
        g.gy.data()[i] = sy;
      }
      const Spectrum Wx = fft::forward(g.gx);
      const Spectrum Wy = fft::forward(g.gy);
      for (std::size_t i = 0; i < nb; ++i) {
        const Complex num = data_num[i] + coupling * (std::conj(D.dx.bins[i]) * Wx.bins[i] +
                                                      std::conj(D.dy.bins[i]) * Wy.bins[i]);
        U.bins[i] = num / (data_den[i] + coupling * grad_den[i]);
      }
      Raster next = fft::inverse(U);
      if (!next.all_finite())
        throw Error(ErrorKind::NonFinite, "deconvolution produced non-finite values");
      if (observer) {
        observer({beta, quadratic_objective(u, padded, k, g, coupling),
                  quadratic_objective(next, padded, k, g, coupling)});
      }
      u = std::move(next);
    }
  }
  return clip01(crop(u, pad, pad, v.width(), v.height()));
}

}  // namespace blurmeter
