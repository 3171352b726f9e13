#include "blurmeter/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "blurmeter/error.hpp"

namespace blurmeter::fft {

namespace {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> allocate(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (!p) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

// The FFTW planner is not thread-safe; plan execution on fresh arrays is.
// Plans are created once per (size, direction) and shared. All buffers come
// from fftw_malloc so the alignment assumptions of a cached plan hold.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int width, int height, bool forward) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(width, height, forward);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    const std::size_t n = static_cast<std::size_t>(width) * height;
    const std::size_t nc = static_cast<std::size_t>(height) * (width / 2 + 1);
    auto real = allocate<double>(n);
    auto cplx = allocate<fftw_complex>(nc);
    fftw_plan plan = forward
                         ? fftw_plan_dft_r2c_2d(height, width, real.get(), cplx.get(),
                                                FFTW_ESTIMATE)
                         : fftw_plan_dft_c2r_2d(height, width, cplx.get(), real.get(),
                                                FFTW_ESTIMATE);
    if (!plan) throw Error(ErrorKind::InvalidArgument, "fftw could not create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, bool>, fftw_plan> plans_;
};

int wrap(int i, int n) {
  int r = i % n;
  return r < 0 ? r + n : r;
}

}  // namespace

Spectrum forward(const Raster& image) {
  require(!image.empty(), "cannot transform an empty raster");
  const int w = image.width();
  const int h = image.height();
  fftw_plan plan = PlanCache::instance().get(w, h, true);
  auto in = allocate<double>(image.size());
  Spectrum s{w, h, {}};
  const std::size_t nc = static_cast<std::size_t>(h) * s.bins_per_row();
  auto out = allocate<fftw_complex>(nc);
  std::memcpy(in.get(), image.data().data(), sizeof(double) * image.size());
  fftw_execute_dft_r2c(plan, in.get(), out.get());
  s.bins.resize(nc);
  std::memcpy(static_cast<void*>(s.bins.data()), out.get(), sizeof(fftw_complex) * nc);
  return s;
}

Raster inverse(const Spectrum& spectrum) {
  const int w = spectrum.width;
  const int h = spectrum.height;
  const std::size_t nc = static_cast<std::size_t>(h) * spectrum.bins_per_row();
  require(spectrum.bins.size() == nc, "spectrum has the wrong number of bins");
  fftw_plan plan = PlanCache::instance().get(w, h, false);
  auto in = allocate<fftw_complex>(nc);
  const std::size_t n = static_cast<std::size_t>(w) * h;
  auto out = allocate<double>(n);
  std::memcpy(in.get(), spectrum.bins.data(), sizeof(fftw_complex) * nc);
  fftw_execute_dft_c2r(plan, in.get(), out.get());
  std::vector<double> data(out.get(), out.get() + n);
  const double norm = 1.0 / static_cast<double>(n);
  for (double& v : data) v *= norm;
  return Raster(w, h, std::move(data));
}

Spectrum transfer(const Raster& filter, int width, int height) {
  require(filter.width() % 2 == 1 && filter.height() % 2 == 1,
          "filter extents must be odd");
  Raster grid(width, height);
  const int rx = filter.width() / 2;
  const int ry = filter.height() / 2;
  for (int y = 0; y < filter.height(); ++y)
    for (int x = 0; x < filter.width(); ++x)
      grid(wrap(x - rx, width), wrap(y - ry, height)) += filter(x, y);
  return forward(grid);
}

Spectrum transfer(const Kernel& k, int width, int height) {
  return transfer(k.as_raster(), width, height);
}

GradientTransfer gradient_transfer(int width, int height) {
  // gx(x) = u(x+1) - u(x): weight +1 at offset -1, -1 at offset 0.
  Raster dx(3, 1, std::vector<double>{1.0, -1.0, 0.0});
  Raster dy(1, 3, std::vector<double>{1.0, -1.0, 0.0});
  return {transfer(dx, width, height), transfer(dy, width, height)};
}

int good_size(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int r = m;
    for (int p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

}  // namespace blurmeter::fft
