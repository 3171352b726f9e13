#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "blurmeter/fleet.hpp"
#include "blurmeter/kernel.hpp"
#include "blurmeter/run_config.hpp"
#include "blurmeter/sharpness.hpp"

namespace blurmeter {

/// Stable process exit codes.
enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitRejected = 2 };

struct ImageMeta {
  std::string image_id;
  std::string satellite_id;
  ProductType product = ProductType::Ortho;
  std::optional<Date> acquired;
};

struct SharpnessReport {
  double score = 0.0;
  QualityClass quality = QualityClass::Discard;
  ProductType product = ProductType::Ortho;
  Kernel kernel = Kernel::delta();
  std::string image_id;
  std::string satellite_id;
  std::optional<Date> acquired;
  bool fallback = false;  // estimation failed to produce a kernel; delta substituted
};

nlohmann::json to_json(const SharpnessReport& r);
SharpnessReport sharpness_report_from_json(const nlohmann::json& j);

/// Applies the optional crop window of `config`.
Raster prepare_image(const Raster& gray, const RunConfig& config);

/// estimate_kernel -> sharpness -> classify on an already reduced raster.
SharpnessReport score_raster(const Raster& gray, const ImageMeta& meta,
                             const RunConfig& config);

struct ManifestEntry {
  std::filesystem::path path;  // resolved against the manifest's directory
  std::string image_id;        // defaults to the file stem
  std::string satellite_id;
  ProductType product = ProductType::Ortho;
  Date acquired{};
};

/// JSON manifest: either an array of entries or {"entries": [...]}; each
/// entry holds path, satellite_id, product ("basic"/"ortho"), acquired
/// (YYYY-MM-DD) and an optional image_id. Paths must be unique.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// Scores every entry with up to config.parallelism workers. Output order
/// follows the manifest; failures become rows with no score.
std::vector<BatchRow> run_batch(const std::vector<ManifestEntry>& entries,
                                const RunConfig& config);

// Subcommands. Each writes its machine-readable output to `out`,
// diagnostics to `err`, and returns an ExitCode.

struct ScoreOptions {
  std::filesystem::path image;
  ImageMeta meta;
  std::optional<std::filesystem::path> kernel_out;  // text grid; PNG at <path>.png
};
int cmd_score(const ScoreOptions& options, const RunConfig& config, std::ostream& out,
              std::ostream& err);

struct DeblurOptions {
  std::filesystem::path input;
  std::filesystem::path output;
  ImageMeta meta;
  bool force = false;
  std::optional<std::filesystem::path> kernel_out;
};
int cmd_deblur(const DeblurOptions& options, const RunConfig& config, std::ostream& out,
               std::ostream& err);

int cmd_batch(const std::filesystem::path& manifest, const std::filesystem::path& out_csv,
              const RunConfig& config, std::ostream& out, std::ostream& err);

int cmd_report(const std::filesystem::path& records_csv, const std::filesystem::path& out_json,
               const std::optional<std::filesystem::path>& histogram_csv,
               const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace blurmeter
