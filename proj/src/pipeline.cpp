#include "blurmeter/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <ostream>
#include <set>
#include <thread>

#include "blurmeter/blind_kernel.hpp"
#include "blurmeter/error.hpp"
#include "blurmeter/image_io.hpp"
#include "blurmeter/tv_deconv.hpp"

namespace blurmeter {

namespace {

void write_kernel_files(const std::filesystem::path& path, const Kernel& k) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write kernel to " + path.string());
  write_kernel_text(out, k);
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
  std::filesystem::path png = path;
  png += ".png";
  write_kernel_png(png, k);
}

ImageMeta with_default_id(ImageMeta meta, const std::filesystem::path& image) {
  if (meta.image_id.empty()) meta.image_id = image.stem().string();
  return meta;
}

int report_error(std::ostream& err, const std::exception& e) {
  if (const auto* be = dynamic_cast<const Error*>(&e))
    err << "error (" << to_string(be->kind()) << "): " << be->what() << '\n';
  else
    err << "error: " << e.what() << '\n';
  return kExitError;
}

}  // namespace

nlohmann::json to_json(const SharpnessReport& r) {
  nlohmann::json j = {
      {"image_id", r.image_id},
      {"satellite_id", r.satellite_id},
      {"product", std::string(to_string(r.product))},
      {"acquired", r.acquired ? nlohmann::json(format_date(*r.acquired)) : nlohmann::json()},
      {"score", r.score},
      {"class", std::string(to_string(r.quality))},
      {"fallback", r.fallback},
      {"kernel",
       {{"width", r.kernel.width()},
        {"height", r.kernel.height()},
        {"weights", r.kernel.weights()}}}};
  return j;
}

SharpnessReport sharpness_report_from_json(const nlohmann::json& j) {
  try {
    SharpnessReport r;
    r.image_id = j.at("image_id").get<std::string>();
    r.satellite_id = j.at("satellite_id").get<std::string>();
    const auto product = parse_product(j.at("product").get<std::string>());
    const auto quality = parse_quality(j.at("class").get<std::string>());
    if (!product || !quality) throw Error(ErrorKind::Parse, "unknown product or class");
    r.product = *product;
    r.quality = *quality;
    if (!j.at("acquired").is_null()) {
      r.acquired = parse_date(j.at("acquired").get<std::string>());
      if (!r.acquired) throw Error(ErrorKind::Parse, "bad acquisition date");
    }
    r.score = j.at("score").get<double>();
    r.fallback = j.at("fallback").get<bool>();
    const auto& k = j.at("kernel");
    r.kernel = Kernel(k.at("width").get<int>(), k.at("height").get<int>(),
                      k.at("weights").get<std::vector<double>>());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("malformed sharpness report: ") + e.what());
  }
}

Raster prepare_image(const Raster& gray, const RunConfig& config) {
  if (!config.crop) return gray;
  const CropWindow& c = *config.crop;
  return crop(gray, c.x, c.y, c.width, c.height);
}

SharpnessReport score_raster(const Raster& gray, const ImageMeta& meta,
                             const RunConfig& config) {
  const EstimationResult est = estimate_kernel(prepare_image(gray, config), config.estimation);
  SharpnessReport r;
  r.kernel = est.kernel;
  r.score = sharpness(est.kernel);
  r.product = meta.product;
  r.quality = classify(r.score, meta.product, config.thresholds);
  r.image_id = meta.image_id;
  r.satellite_id = meta.satellite_id;
  r.acquired = meta.acquired;
  r.fallback = est.fallback;
  return r;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("manifest is not valid JSON: ") + e.what());
  }
  const nlohmann::json& list = j.is_object() && j.contains("entries") ? j["entries"] : j;
  if (!list.is_array()) throw Error(ErrorKind::Parse, "manifest must be a list of entries");

  const auto base = path.parent_path();
  std::vector<ManifestEntry> entries;
  std::set<std::filesystem::path> seen;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto& e = list[i];
    auto fail = [&](const std::string& what) {
      throw Error(ErrorKind::Parse, "manifest entry " + std::to_string(i) + ": " + what);
    };
    if (!e.is_object()) fail("must be an object");
    ManifestEntry m;
    try {
      std::filesystem::path p = e.at("path").get<std::string>();
      m.path = p.is_absolute() ? p : base / p;
      m.satellite_id = e.at("satellite_id").get<std::string>();
      const auto product = parse_product(e.at("product").get<std::string>());
      if (!product) fail("product must be 'basic' or 'ortho'");
      m.product = *product;
      const auto date = parse_date(e.at("acquired").get<std::string>());
      if (!date) fail("acquired must be YYYY-MM-DD");
      m.acquired = *date;
      m.image_id = e.contains("image_id") ? e["image_id"].get<std::string>()
                                          : m.path.stem().string();
    } catch (const nlohmann::json::exception& ex) {
      fail(ex.what());
    }
    if (!seen.insert(m.path.lexically_normal()).second) fail("duplicate path " + m.path.string());
    entries.push_back(std::move(m));
  }
  return entries;
}

std::vector<BatchRow> run_batch(const std::vector<ManifestEntry>& entries,
                                const RunConfig& config) {
  config.validate();
  std::vector<BatchRow> rows(entries.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      const ManifestEntry& e = entries[i];
      BatchRow& row = rows[i];
      row.image_id = e.image_id;
      row.satellite_id = e.satellite_id;
      row.product = e.product;
      row.acquired = e.acquired;
      try {
        const ImageMeta meta{e.image_id, e.satellite_id, e.product, e.acquired};
        const SharpnessReport r = score_raster(read_grayscale(e.path), meta, config);
        row.score = r.score;
        row.quality = r.quality;
      } catch (const std::exception&) {
        row.score.reset();
        row.quality.reset();
      }
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(config.parallelism), entries.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  return rows;
}

int cmd_score(const ScoreOptions& options, const RunConfig& config, std::ostream& out,
              std::ostream& err) {
  try {
    config.validate();
    const SharpnessReport r = score_raster(read_grayscale(options.image),
                                           with_default_id(options.meta, options.image), config);
    if (options.kernel_out) write_kernel_files(*options.kernel_out, r.kernel);
    out << to_json(r).dump(2) << '\n';
    return r.quality == QualityClass::Discard ? kExitRejected : kExitOk;
  } catch (const std::exception& e) {
    return report_error(err, e);
  }
}

int cmd_deblur(const DeblurOptions& options, const RunConfig& config, std::ostream& out,
               std::ostream& err) {
  try {
    config.validate();
    const Raster input = read_grayscale(options.input);
    const SharpnessReport before =
        score_raster(input, with_default_id(options.meta, options.input), config);
    if (options.kernel_out) write_kernel_files(*options.kernel_out, before.kernel);
    if (before.quality == QualityClass::Discard && !options.force) {
      err << "refusing to deblur: score " << before.score
          << " is in the discard range (use --force to override)\n";
      out << nlohmann::json{{"input", to_json(before)}, {"output", nullptr}}.dump(2) << '\n';
      return kExitRejected;
    }
    const Raster restored = deblur(input, before.kernel, config.deconv);
    write_image(options.output, restored, 16);
    const SharpnessReport after = score_raster(
        restored, ImageMeta{before.image_id, before.satellite_id, before.product, before.acquired},
        config);
    out << nlohmann::json{{"input", to_json(before)},
                          {"output",
                           {{"path", options.output.string()},
                            {"score", after.score},
                            {"class", std::string(to_string(after.quality))}}}}
                   .dump(2)
        << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    return report_error(err, e);
  }
}

int cmd_batch(const std::filesystem::path& manifest, const std::filesystem::path& out_csv,
              const RunConfig& config, std::ostream& out, std::ostream& err) {
  std::vector<ManifestEntry> entries;
  try {
    config.validate();
    entries = read_manifest(manifest);
  } catch (const std::exception& e) {
    return report_error(err, e);
  }
  const std::vector<BatchRow> rows = run_batch(entries, config);
  try {
    std::ofstream csv(out_csv, std::ios::binary);
    if (!csv) throw Error(ErrorKind::Io, "cannot write " + out_csv.string());
    write_batch_csv(csv, rows);
    if (!csv) throw Error(ErrorKind::Io, "write failed for " + out_csv.string());
  } catch (const std::exception& e) {
    return report_error(err, e);
  }
  std::size_t failed = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].quality) continue;
    ++failed;
    err << "warning: could not score " << entries[i].path.string() << '\n';
  }
  out << nlohmann::json{{"images", rows.size()},
                        {"scored", rows.size() - failed},
                        {"errors", failed},
                        {"output", out_csv.string()}}
             .dump(2)
      << '\n';
  return kExitOk;
}

int cmd_report(const std::filesystem::path& records_csv, const std::filesystem::path& out_json,
               const std::optional<std::filesystem::path>& histogram_csv,
               const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    config.validate();
    std::ifstream in(records_csv);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + records_csv.string());
    const RecordsTable table = read_records_csv(in);
    const ReportOptions options{config.thresholds, config.min_samples, config.histogram};
    const FleetSummary summary = summarize(table.records, options);
    for (const auto& p : summary.products)
      if (!p.anova)
        err << "warning: " << to_string(p.product) << " ANOVA skipped: " << p.anova_error
            << '\n';

    const nlohmann::json j = to_json(summary);
    std::ofstream js(out_json);
    if (!js) throw Error(ErrorKind::Io, "cannot write " + out_json.string());
    js << j.dump(2) << '\n';
    if (histogram_csv) {
      std::ofstream hs(*histogram_csv);
      if (!hs) throw Error(ErrorKind::Io, "cannot write " + histogram_csv->string());
      write_histogram_csv(hs, summary);
    }
    nlohmann::json brief = nlohmann::json::array();
    for (const auto& p : summary.products)
      brief.push_back({{"product", std::string(to_string(p.product))},
                       {"satellites", p.per_satellite.size()},
                       {"p_value", p.anova ? nlohmann::json(p.anova->p_value) : nullptr}});
    out << nlohmann::json{{"records", table.records.size()},
                          {"error_rows", table.error_rows},
                          {"products", brief}}
               .dump(2)
        << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    return report_error(err, e);
  }
}

}  // namespace blurmeter
