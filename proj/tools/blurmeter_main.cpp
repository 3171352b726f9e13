// blurmeter: blind blur-kernel estimation, sharpness scoring and deblurring
// for satellite imagery, plus fleet-level reporting.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "blurmeter/error.hpp"
#include "blurmeter/pipeline.hpp"
#include "blurmeter/run_config.hpp"

namespace {

using namespace blurmeter;

struct CommonFlags {
  std::string config_path;
  std::string crop;
  int parallelism = 0;
};

struct MetaFlags {
  std::string product = "ortho";
  std::string satellite;
  std::string image_id;
  std::string acquired;
};

void add_meta(CLI::App* cmd, MetaFlags& m) {
  cmd->add_option("--product", m.product, "basic or ortho")
      ->check(CLI::IsMember({"basic", "ortho"}))
      ->capture_default_str();
  cmd->add_option("--satellite", m.satellite, "Satellite id recorded in the report");
  cmd->add_option("--image-id", m.image_id, "Image id (defaults to the file stem)");
  cmd->add_option("--acquired", m.acquired, "Acquisition date, YYYY-MM-DD");
}

ImageMeta to_meta(const MetaFlags& m) {
  ImageMeta meta;
  meta.product = *parse_product(m.product);
  meta.satellite_id = m.satellite;
  meta.image_id = m.image_id;
  if (!m.acquired.empty()) {
    meta.acquired = parse_date(m.acquired);
    if (!meta.acquired) throw Error(ErrorKind::Parse, "--acquired must be YYYY-MM-DD");
  }
  return meta;
}

RunConfig build_config(const CommonFlags& f) {
  RunConfig c;
  if (!f.config_path.empty()) c = load_run_config(f.config_path);
  if (!f.crop.empty()) c.crop = parse_crop(f.crop);
  if (f.parallelism > 0) c.parallelism = f.parallelism;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blind blur-kernel estimation and sharpness scoring"};
  app.require_subcommand(1);

  CommonFlags common;
  app.add_option("--config", common.config_path, "Key-value run configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--crop", common.crop, "Estimate the kernel on the window x,y,w,h");
  app.add_option("--parallelism", common.parallelism, "Worker count for batch runs")
      ->check(CLI::PositiveNumber);

  MetaFlags score_meta;
  std::string score_image;
  std::string score_kernel_out;
  auto* score = app.add_subcommand("score", "Estimate the kernel and print a sharpness report");
  score->add_option("image", score_image, "Input image (PNG, TIFF or PGM)")->required();
  score->add_option("--kernel-out", score_kernel_out,
                    "Write the kernel grid here and a PNG rendering to <path>.png");
  add_meta(score, score_meta);

  MetaFlags deblur_meta;
  std::string deblur_in;
  std::string deblur_out;
  std::string deblur_kernel_out;
  bool force = false;
  auto* deblur = app.add_subcommand("deblur", "Estimate the kernel and deconvolve the image");
  deblur->add_option("input", deblur_in, "Input image")->required();
  deblur->add_option("output", deblur_out, "Output image (.png, .tif or .pgm, 16-bit)")
      ->required();
  deblur->add_flag("--force", force, "Deblur even when the input classifies as discard");
  deblur->add_option("--kernel-out", deblur_kernel_out, "Write the estimated kernel here");
  add_meta(deblur, deblur_meta);

  std::string manifest;
  std::string batch_out;
  auto* batch = app.add_subcommand("batch", "Score every image of a JSON manifest into a CSV");
  batch->add_option("manifest", manifest, "Manifest JSON")->required();
  batch->add_option("out_csv", batch_out, "Records CSV to write")->required();

  std::string records;
  std::string report_out;
  std::string hist_out;
  auto* report = app.add_subcommand("report", "Per-satellite statistics and ANOVA from records");
  report->add_option("records_csv", records, "Records CSV from `batch`")->required();
  report->add_option("out_json", report_out, "Fleet summary JSON to write")->required();
  report->add_option("--histogram-out", hist_out, "Also write the score histogram as CSV");

  // Flags given after the subcommand name are accepted too.
  for (auto* sub : {score, deblur, batch, report}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  RunConfig config;
  try {
    config = build_config(common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }

  try {
    if (*score) {
      ScoreOptions o{score_image, to_meta(score_meta), std::nullopt};
      if (!score_kernel_out.empty()) o.kernel_out = score_kernel_out;
      return cmd_score(o, config, std::cout, std::cerr);
    }
    if (*deblur) {
      DeblurOptions o{deblur_in, deblur_out, to_meta(deblur_meta), force, std::nullopt};
      if (!deblur_kernel_out.empty()) o.kernel_out = deblur_kernel_out;
      return cmd_deblur(o, config, std::cout, std::cerr);
    }
    if (*batch) return cmd_batch(manifest, batch_out, config, std::cout, std::cerr);
    if (*report) {
      std::optional<std::filesystem::path> hist;
      if (!hist_out.empty()) hist = hist_out;
      return cmd_report(records, report_out, hist, config, std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
