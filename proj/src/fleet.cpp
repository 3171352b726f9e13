#include "blurmeter/fleet.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>

#include "blurmeter/error.hpp"
#include "blurmeter/special_functions.hpp"

namespace blurmeter {

namespace {

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  if (quoted)
    throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": unterminated quote");
  return fields;
}

std::string format_score(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.8f", s);
  return buf;
}

nlohmann::json number_or_inf(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

}  // namespace

std::optional<Date> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  const auto y = parse_int(s.substr(0, 4));
  const auto m = parse_int(s.substr(5, 2));
  const auto d = parse_int(s.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  const Date date{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
                  std::chrono::day{static_cast<unsigned>(*d)}};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

void RunningStats::add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

void RunningStats::merge(const RunningStats& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double n = static_cast<double>(n_ + other.n_);
  const double delta = other.mean_ - mean_;
  mean_ = (static_cast<double>(n_) * mean_ + static_cast<double>(other.n_) * other.mean_) / n;
  m2_ += other.m2_ + delta * delta * static_cast<double>(n_) * static_cast<double>(other.n_) / n;
  n_ += other.n_;
}

double RunningStats::sample_variance() const noexcept {
  return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1);
}

std::vector<FleetRecord> filter_valid(const std::vector<FleetRecord>& records,
                                      const QualityThresholds& thresholds) {
  std::vector<FleetRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [&](const FleetRecord& r) { return r.score >= thresholds.of(r.product).discard; });
  return out;
}

std::vector<SatelliteStats> aggregate(const std::vector<FleetRecord>& records,
                                      std::size_t min_samples) {
  std::map<std::string, RunningStats> groups;
  for (const auto& r : records) groups[r.satellite_id].add(r.score);
  std::vector<SatelliteStats> out;
  for (const auto& [id, stats] : groups) {
    if (stats.count() < min_samples) continue;
    out.push_back({id, stats.count(), stats.mean(), std::sqrt(stats.sample_variance())});
  }
  if (out.empty())
    throw Error(ErrorKind::NoData, "no satellite has at least " + std::to_string(min_samples) +
                                       " valid records");
  std::stable_sort(out.begin(), out.end(), [](const SatelliteStats& a, const SatelliteStats& b) {
    return a.mean < b.mean;
  });
  return out;
}

Histogram histogram(const std::vector<double>& scores, const HistogramSpec& spec) {
  require(spec.bin_width > 0.0, "histogram bin width must be positive");
  require(spec.hi > spec.lo, "histogram range must be non-empty");
  const auto bins =
      static_cast<std::size_t>(std::max(1.0, std::round((spec.hi - spec.lo) / spec.bin_width)));
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    h.edges[i] = spec.lo + static_cast<double>(i) * spec.bin_width;
  h.counts.assign(bins, 0);
  for (double s : scores) {
    const double t = (s - spec.lo) / spec.bin_width;
    double idx = std::floor(t);
    // 0.030 / 0.001 evaluates to 29.999999999999996.
    if (t - idx > 1.0 - 1e-9) idx += 1.0;
    const auto bin = static_cast<std::size_t>(
        std::clamp(idx, 0.0, static_cast<double>(bins - 1)));
    ++h.counts[bin];
  }
  return h;
}

AnovaResult anova_f(const std::vector<std::vector<double>>& groups) {
  require(groups.size() >= 2, ">=2 groups required for ANOVA");
  std::size_t total = 0;
  double grand_sum = 0.0;
  for (const auto& g : groups) {
    require(g.size() >= 2, "every ANOVA group needs >=2 samples");
    total += g.size();
    for (double x : g) grand_sum += x;
  }
  const double grand_mean = grand_sum / static_cast<double>(total);
  double ss_between = 0.0;
  double ss_within = 0.0;
  for (const auto& g : groups) {
    double sum = 0.0;
    for (double x : g) sum += x;
    const double m = sum / static_cast<double>(g.size());
    ss_between += static_cast<double>(g.size()) * (m - grand_mean) * (m - grand_mean);
    for (double x : g) ss_within += (x - m) * (x - m);
  }
  AnovaResult r;
  r.df_between = static_cast<int>(groups.size()) - 1;
  r.df_within = static_cast<int>(total - groups.size());
  const double ms_between = ss_between / r.df_between;
  const double ms_within = ss_within / r.df_within;
  if (ms_within == 0.0) {
    r.f = ms_between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    r.p_value = ms_between > 0.0 ? 0.0 : 1.0;
    return r;
  }
  r.f = ms_between / ms_within;
  r.p_value = f_distribution_survival(r.f, r.df_between, r.df_within);
  return r;
}

FleetSummary summarize(const std::vector<FleetRecord>& records, const ReportOptions& options) {
  options.thresholds.validate();
  const auto valid = filter_valid(records, options.thresholds);
  FleetSummary summary;
  for (ProductType product : {ProductType::Basic, ProductType::Ortho}) {
    std::vector<FleetRecord> subset;
    for (const auto& r : valid)
      if (r.product == product) subset.push_back(r);
    if (subset.empty()) continue;
    ProductSummary ps;
    ps.product = product;
    ps.retained = subset.size();
    try {
      ps.per_satellite = aggregate(subset, options.min_samples);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoData) throw;
      continue;
    }
    std::vector<double> scores;
    for (const auto& r : subset) scores.push_back(r.score);
    ps.histogram = histogram(scores, options.histogram);

    std::map<std::string, std::vector<double>> by_sat;
    for (const auto& r : subset) by_sat[r.satellite_id].push_back(r.score);
    std::vector<std::vector<double>> groups;
    for (const auto& s : ps.per_satellite) groups.push_back(std::move(by_sat[s.satellite_id]));
    try {
      ps.anova = anova_f(groups);
    } catch (const Error& e) {
      ps.anova_error = e.what();
    }
    summary.products.push_back(std::move(ps));
  }
  if (summary.products.empty())
    throw Error(ErrorKind::NoData, "no satellite has at least " +
                                       std::to_string(options.min_samples) + " valid records");
  return summary;
}

void write_batch_csv(std::ostream& out, const std::vector<BatchRow>& rows) {
  out << kRecordsHeader << '\n';
  for (const auto& r : rows) {
    out << csv_field(r.image_id) << ',' << csv_field(r.satellite_id) << ','
        << to_string(r.product) << ',' << (r.score ? format_score(*r.score) : "") << ','
        << (r.quality ? to_string(*r.quality) : "error") << ',' << format_date(r.acquired)
        << '\n';
  }
}

RecordsTable read_records_csv(std::istream& in) {
  RecordsTable table;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": " + what);
  };
  if (!std::getline(in, line)) throw Error(ErrorKind::Parse, "records CSV is empty");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRecordsHeader) fail("expected header '" + std::string(kRecordsHeader) + "'");
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line, line_no);
    if (f.size() != 6) fail("expected 6 fields, got " + std::to_string(f.size()));
    if (f[4] == "error") {
      ++table.error_rows;
      continue;
    }
    FleetRecord r;
    r.image_id = f[0];
    r.satellite_id = f[1];
    const auto product = parse_product(f[2]);
    if (!product) fail("unknown product '" + f[2] + "'");
    r.product = *product;
    const auto score = parse_double(f[3]);
    if (!score || *score <= 0.0 || *score > 1.0) fail("score must lie in (0,1]");
    r.score = *score;
    const auto quality = parse_quality(f[4]);
    if (!quality) fail("unknown class '" + f[4] + "'");
    r.quality = *quality;
    const auto date = parse_date(f[5]);
    if (!date) fail("date must be YYYY-MM-DD");
    r.acquired = *date;
    table.records.push_back(std::move(r));
  }
  return table;
}

void write_histogram_csv(std::ostream& out, const FleetSummary& summary) {
  out << "product,edge,count\n";
  for (const auto& p : summary.products) {
    for (std::size_t i = 0; i < p.histogram.counts.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6f", p.histogram.edges[i]);
      out << to_string(p.product) << ',' << buf << ',' << p.histogram.counts[i] << '\n';
    }
  }
}

nlohmann::json to_json(const FleetSummary& summary) {
  nlohmann::json products = nlohmann::json::array();
  for (const auto& p : summary.products) {
    nlohmann::json sats = nlohmann::json::array();
    for (const auto& s : p.per_satellite)
      sats.push_back({{"satellite_id", s.satellite_id},
                      {"count", s.count},
                      {"mean", s.mean},
                      {"std", s.std}});
    nlohmann::json anova = nullptr;
    if (p.anova)
      anova = {{"f", number_or_inf(p.anova->f)},
               {"df_between", p.anova->df_between},
               {"df_within", p.anova->df_within},
               {"p_value", p.anova->p_value}};
    nlohmann::json entry = {
        {"product", std::string(to_string(p.product))},
        {"retained", p.retained},
        {"per_satellite", sats},
        {"histogram", {{"bin_edges", p.histogram.edges}, {"counts", p.histogram.counts}}},
        {"anova", anova}};
    if (!p.anova) entry["anova_error"] = p.anova_error;
    products.push_back(std::move(entry));
  }
  return {{"products", products}};
}

FleetSummary fleet_summary_from_json(const nlohmann::json& j) {
  FleetSummary summary;
  try {
    for (const auto& e : j.at("products")) {
      ProductSummary p;
      const auto product = parse_product(e.at("product").get<std::string>());
      if (!product) throw Error(ErrorKind::Parse, "unknown product in summary");
      p.product = *product;
      p.retained = e.at("retained").get<std::size_t>();
      for (const auto& s : e.at("per_satellite"))
        p.per_satellite.push_back({s.at("satellite_id").get<std::string>(),
                                   s.at("count").get<std::size_t>(), s.at("mean").get<double>(),
                                   s.at("std").get<double>()});
      p.histogram.edges = e.at("histogram").at("bin_edges").get<std::vector<double>>();
      p.histogram.counts = e.at("histogram").at("counts").get<std::vector<std::size_t>>();
      const auto& a = e.at("anova");
      if (!a.is_null()) {
        AnovaResult r;
        r.f = a.at("f").is_string() ? std::numeric_limits<double>::infinity()
                                    : a.at("f").get<double>();
        r.df_between = a.at("df_between").get<int>();
        r.df_within = a.at("df_within").get<int>();
        r.p_value = a.at("p_value").get<double>();
        p.anova = r;
      } else {
        p.anova_error = e.value("anova_error", "");
      }
      summary.products.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::Parse, std::string("malformed fleet summary: ") + ex.what());
  }
  return summary;
}

}  // namespace blurmeter
