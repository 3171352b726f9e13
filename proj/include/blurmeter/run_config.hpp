#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>

#include "blurmeter/blind_kernel.hpp"
#include "blurmeter/fleet.hpp"
#include "blurmeter/sharpness.hpp"
#include "blurmeter/tv_deconv.hpp"

namespace blurmeter {

struct CropWindow {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

/// Parses "x,y,w,h".
CropWindow parse_crop(std::string_view s);

struct RunConfig {
  EstimationConfig estimation;
  DeconvConfig deconv;
  QualityThresholds thresholds;
  int parallelism = 1;
  std::optional<CropWindow> crop;
  std::size_t min_samples = 50;
  HistogramSpec histogram;

  void validate() const;
};

/// Key-value text: one `key = value` per line, `#` starts a comment.
/// Keys:
///   kernel_size lambda gamma outer_iters final_iters beta_init beta_max beta_rate
///   pyramid_scale prune_fraction
///   deconv.alpha deconv.beta_init deconv.beta_max deconv.beta_rate
///   deconv.inner_iters
///   threshold.ortho.sharp threshold.ortho.discard
///   threshold.basic.sharp threshold.basic.discard
///   parallelism crop min_samples histogram.bin_width histogram.lo histogram.hi
/// Unknown keys and malformed values are errors. Values override `base`.
RunConfig parse_run_config(std::istream& in, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

}  // namespace blurmeter
