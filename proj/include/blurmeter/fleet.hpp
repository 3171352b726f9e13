#pragma once

#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "blurmeter/sharpness.hpp"

namespace blurmeter {

using Date = std::chrono::year_month_day;

/// Strict ISO-8601 calendar date, YYYY-MM-DD.
std::optional<Date> parse_date(std::string_view s);
std::string format_date(const Date& d);

struct FleetRecord {
  std::string image_id;
  std::string satellite_id;
  ProductType product = ProductType::Ortho;
  double score = 0.0;
  QualityClass quality = QualityClass::Discard;
  Date acquired{};
};

/// One row of a batch output: a scored record, or a failed image
/// (score and quality absent, written with class "error").
struct BatchRow {
  std::string image_id;
  std::string satellite_id;
  ProductType product = ProductType::Ortho;
  std::optional<double> score;
  std::optional<QualityClass> quality;
  Date acquired{};
};

struct SatelliteStats {
  std::string satellite_id;
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;  // sample (n-1) standard deviation
};

struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<std::size_t> counts;
};

struct HistogramSpec {
  double bin_width = 0.001;
  double lo = 0.0;
  double hi = 0.06;
};

struct AnovaResult {
  double f = 0.0;  // +infinity when within-group variance vanishes
  int df_between = 0;
  int df_within = 0;
  double p_value = 1.0;
};

struct ProductSummary {
  ProductType product = ProductType::Ortho;
  std::size_t retained = 0;  // records surviving filter_valid
  std::vector<SatelliteStats> per_satellite;
  Histogram histogram;
  std::optional<AnovaResult> anova;
  std::string anova_error;  // set when anova is absent
};

struct FleetSummary {
  std::vector<ProductSummary> products;
};

/// Count / mean / centered sum of squares, mergeable in any order.
class RunningStats {
 public:
  void add(double x);
  void merge(const RunningStats& other);

  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double sample_variance() const noexcept;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Drops records whose score is below the Discard threshold of their product.
std::vector<FleetRecord> filter_valid(const std::vector<FleetRecord>& records,
                                      const QualityThresholds& thresholds = {});

/// Per-satellite count/mean/std, keeping satellites with >= min_samples
/// records, sorted ascending by mean (ties by id). Throws ErrorKind::NoData
/// when no satellite survives.
std::vector<SatelliteStats> aggregate(const std::vector<FleetRecord>& records,
                                      std::size_t min_samples = 50);

/// Left-closed, right-open bins; out-of-range scores land in the end bins.
/// Scores within 1e-9 bin widths below an edge are counted in the upper bin.
Histogram histogram(const std::vector<double>& scores, const HistogramSpec& spec = {});

/// One-way ANOVA F-test of equal group means. Needs >= 2 groups of >= 2.
AnovaResult anova_f(const std::vector<std::vector<double>>& groups);

struct ReportOptions {
  QualityThresholds thresholds;
  std::size_t min_samples = 50;
  HistogramSpec histogram;
};

/// filter_valid -> aggregate -> histogram -> anova_f, separately per product.
/// Products without a surviving satellite are omitted; throws NoData when
/// none survive.
FleetSummary summarize(const std::vector<FleetRecord>& records, const ReportOptions& options);

// CSV: image_id,satellite_id,product,score,class,acquired
inline constexpr std::string_view kRecordsHeader =
    "image_id,satellite_id,product,score,class,acquired";

void write_batch_csv(std::ostream& out, const std::vector<BatchRow>& rows);

struct RecordsTable {
  std::vector<FleetRecord> records;
  std::size_t error_rows = 0;
};
/// Parses a records CSV; rows with class "error" are counted and skipped.
/// Throws ErrorKind::Parse with the line number on malformed input.
RecordsTable read_records_csv(std::istream& in);

/// "product,edge,count" rows, one per bin (edge = left edge).
void write_histogram_csv(std::ostream& out, const FleetSummary& summary);

nlohmann::json to_json(const FleetSummary& summary);
FleetSummary fleet_summary_from_json(const nlohmann::json& j);

}  // namespace blurmeter
