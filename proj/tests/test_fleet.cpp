#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "blurmeter/error.hpp"
#include "blurmeter/fleet.hpp"
#include "blurmeter/special_functions.hpp"
#include "oracles.hpp"

using namespace blurmeter;
using namespace std::chrono;

namespace {

FleetRecord rec(std::string sat, double score, ProductType p = ProductType::Ortho,
                std::string id = "img") {
  FleetRecord r;
  r.image_id = std::move(id);
  r.satellite_id = std::move(sat);
  r.product = p;
  r.score = score;
  r.quality = classify(score, p);
  r.acquired = year{2018} / 6 / 1;
  return r;
}

std::vector<FleetRecord> fleet(const std::vector<std::pair<std::string, double>>& sats, int n,
                               double sigma, std::uint64_t seed,
                               ProductType p = ProductType::Ortho) {
  std::mt19937_64 rng(seed);
  std::vector<FleetRecord> out;
  for (const auto& [id, mu] : sats) {
    std::normal_distribution<double> d(mu, sigma);
    for (int i = 0; i < n; ++i)
      out.push_back(rec(id, d(rng), p, id + "_" + std::to_string(i)));
  }
  return out;
}

}  // namespace

TEST_CASE("dates") {
  CHECK(parse_date("2018-03-07") == Date{year{2018}, month{3}, day{7}});
  CHECK(format_date(year{2019} / 12 / 31) == "2019-12-31");
  CHECK_FALSE(parse_date("2018-02-30"));
  CHECK_FALSE(parse_date("2018-3-7"));
  CHECK_FALSE(parse_date("2018-03-07T00:00"));
  CHECK_FALSE(parse_date(""));
}

TEST_CASE("filter_valid") {
  const auto out = filter_valid({rec("a", 0.0279, ProductType::Basic), rec("a", 0.0231),
                                 rec("b", 0.0229), rec("b", 0.028, ProductType::Basic)});
  REQUIRE(out.size() == 2);
  CHECK(out[0].score == 0.0231);
  CHECK(out[1].score == 0.028);
  CHECK(filter_valid({}).empty());
}

TEST_CASE("aggregate") {
  SUBCASE("identical scores") {
    std::vector<FleetRecord> r(50, rec("s1", 0.027));
    const auto s = aggregate(r);
    REQUIRE(s.size() == 1);
    CHECK(s[0].count == 50);
    CHECK(s[0].mean == doctest::Approx(0.027).epsilon(1e-14));
    CHECK(s[0].std == doctest::Approx(0.0).epsilon(1e-14));
  }
  SUBCASE("min_samples filter") {
    std::vector<FleetRecord> r(50, rec("keep", 0.03));
    for (int i = 0; i < 49; ++i) r.push_back(rec("drop", 0.03));
    const auto s = aggregate(r);
    REQUIRE(s.size() == 1);
    CHECK(s[0].satellite_id == "keep");
    try {
      aggregate(std::vector<FleetRecord>(49, rec("x", 0.03)));
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NoData);
    }
  }
  SUBCASE("ordered by mean") {
    std::vector<FleetRecord> r(50, rec("hi", 0.03));
    for (int i = 0; i < 50; ++i) r.push_back(rec("lo", 0.02));
    const auto s = aggregate(r);
    REQUIRE(s.size() == 2);
    CHECK(s[0].satellite_id == "lo");
    CHECK(s[1].satellite_id == "hi");
  }
  SUBCASE("matches a brute-force per-satellite computation") {
    const auto r = fleet({{"a", 0.025}, {"b", 0.031}, {"c", 0.028}}, 70, 0.002, 3);
    std::map<std::string, std::vector<double>> by;
    for (const auto& x : r) by[x.satellite_id].push_back(x.score);
    for (const auto& s : aggregate(r)) {
      const auto& v = by[s.satellite_id];
      double m = 0.0;
      for (double x : v) m += x;
      m /= v.size();
      double ss = 0.0;
      for (double x : v) ss += (x - m) * (x - m);
      CHECK(s.count == v.size());
      CHECK(s.mean == doctest::Approx(m).epsilon(1e-12));
      CHECK(s.std == doctest::Approx(std::sqrt(ss / (v.size() - 1))).epsilon(1e-10));
    }
  }
}

TEST_CASE("RunningStats merges in any order") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d(0.03, 0.004);
  std::vector<double> xs(300);
  for (double& x : xs) x = d(rng);
  RunningStats all;
  for (double x : xs) all.add(x);
  RunningStats a, b, c;
  for (std::size_t i = 0; i < 300; ++i) (i < 40 ? a : i < 170 ? b : c).add(xs[i]);
  RunningStats left = a;
  left.merge(b);
  left.merge(c);
  RunningStats right = c;
  RunningStats bc = b;
  bc.merge(a);
  right.merge(bc);
  for (const RunningStats* s : {&left, &right}) {
    CHECK(s->count() == 300);
    CHECK(s->mean() == doctest::Approx(all.mean()).epsilon(1e-13));
    CHECK(s->sample_variance() == doctest::Approx(all.sample_variance()).epsilon(1e-10));
  }
  RunningStats empty;
  left.merge(empty);
  CHECK(left.count() == 300);
}

TEST_CASE("histogram") {
  SUBCASE("empty input") {
    const Histogram h = histogram({});
    CHECK(h.counts.size() == 60);
    CHECK(h.edges.size() == 61);
    for (auto c : h.counts) CHECK(c == 0);
  }
  SUBCASE("bin arithmetic") {
    const Histogram h = histogram({0.0305});
    CHECK(h.counts[30] == 1);
    CHECK(h.edges[30] == doctest::Approx(0.030));
    CHECK(histogram({0.030}).counts[30] == 1);
    CHECK(histogram({0.0}).counts[0] == 1);
    CHECK(histogram({0.0599}).counts[59] == 1);
  }
  SUBCASE("out-of-range scores land in the end bins") {
    const Histogram h = histogram({-1.0, 0.06, 0.5});
    CHECK(h.counts.front() == 1);
    CHECK(h.counts.back() == 2);
  }
  SUBCASE("conservation") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 0.06);
    std::vector<double> s(100);
    for (double& x : s) x = u(rng);
    const Histogram h = histogram(s);
    std::size_t total = 0;
    for (auto c : h.counts) total += c;
    CHECK(total == 100);
  }
  CHECK_THROWS_AS(histogram({}, {0.0, 0.0, 1.0}), Error);
  CHECK_THROWS_AS(histogram({}, {0.1, 1.0, 1.0}), Error);
}

TEST_CASE("anova_f") {
  SUBCASE("identical groups") {
    const AnovaResult r = anova_f({{1, 2, 3}, {1, 2, 3}});
    CHECK(r.f == 0.0);
    CHECK(r.p_value == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("hand computed case") {
    const AnovaResult r = anova_f({{1, 2, 3}, {2, 3, 4}});
    CHECK(r.f == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(r.df_between == 1);
    CHECK(r.df_within == 4);
    boost::math::fisher_f dist(1, 4);
    CHECK(r.p_value == doctest::Approx(boost::math::cdf(boost::math::complement(dist, 1.5))).epsilon(1e-10));
  }
  SUBCASE("matches the textbook oracle on random sets") {
    std::mt19937_64 rng(77);
    for (int t = 0; t < 100; ++t) {
      const int k = 2 + static_cast<int>(rng() % 6);
      std::vector<std::vector<double>> groups(k);
      for (auto& g : groups) {
        std::normal_distribution<double> d(0.025 + 0.001 * (rng() % 8), 0.003);
        g.resize(2 + rng() % 40);
        for (double& x : g) x = d(rng);
      }
      const AnovaResult r = anova_f(groups);
      const oracle::Anova o = oracle::textbook_anova(groups);
      CHECK(std::abs(r.f - o.f) <= 1e-9 * std::max(1.0, std::abs(o.f)));
      CHECK(std::abs(r.p_value - o.p) <= 1e-6);
      CHECK(r.df_between == o.df_between);
      CHECK(r.df_within == o.df_within);
    }
  }
  SUBCASE("invariant under group order and score offset") {
    std::vector<std::vector<double>> g{{0.021, 0.025, 0.024}, {0.03, 0.029, 0.033, 0.031}, {0.027, 0.026}};
    const AnovaResult base = anova_f(g);
    std::reverse(g.begin(), g.end());
    CHECK(anova_f(g).f == doctest::Approx(base.f).epsilon(1e-12));
    for (auto& grp : g)
      for (double& x : grp) x += 0.5;
    CHECK(anova_f(g).f == doctest::Approx(base.f).epsilon(1e-8));
  }
  SUBCASE("degenerate within-group variance") {
    const AnovaResult r = anova_f({{1, 1}, {2, 2}});
    CHECK(r.f == std::numeric_limits<double>::infinity());
    CHECK(r.p_value == 0.0);
    const AnovaResult z = anova_f({{1, 1}, {1, 1}});
    CHECK(z.f == 0.0);
    CHECK(z.p_value == 1.0);
  }
  SUBCASE("preconditions") {
    CHECK_THROWS_AS(anova_f({{1, 2, 3}}), Error);
    CHECK_THROWS_AS(anova_f({{1, 2, 3}, {4}}), Error);
  }
  SUBCASE("separated fleet rejects equal means") {
    const auto r = fleet({{"a", 0.028}, {"b", 0.030}, {"c", 0.032}}, 60, 0.001, 1);
    std::map<std::string, std::vector<double>> by;
    for (const auto& x : r) by[x.satellite_id].push_back(x.score);
    const AnovaResult a = anova_f({by["a"], by["b"], by["c"]});
    CHECK(a.p_value < 0.001);
  }
}

TEST_CASE("incomplete beta and F tail against Boost") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double a = 0.1 + 60.0 * u(rng);
    const double b = 0.1 + 60.0 * u(rng);
    const double x = u(rng);
    CHECK(std::abs(regularized_incomplete_beta(a, b, x) - boost::math::ibeta(a, b, x)) <= 1e-10);
  }
  CHECK(regularized_incomplete_beta(2, 3, 0) == 0.0);
  CHECK(regularized_incomplete_beta(2, 3, 1) == 1.0);
  for (int i = 0; i < 300; ++i) {
    const double d1 = 1 + rng() % 20;
    const double d2 = 2 + rng() % 20000;
    const double f = 10.0 * u(rng) * u(rng);
    boost::math::fisher_f dist(d1, d2);
    CHECK(std::abs(f_distribution_survival(f, d1, d2) -
                   boost::math::cdf(boost::math::complement(dist, f))) <= 1e-10);
  }
  CHECK(f_distribution_survival(0.0, 2, 10) == 1.0);
  CHECK(f_distribution_survival(std::numeric_limits<double>::infinity(), 2, 10) == 0.0);
  CHECK_THROWS_AS(regularized_incomplete_beta(-1, 1, 0.5), Error);
  CHECK_THROWS_AS(regularized_incomplete_beta(1, 1, 1.5), Error);
}

TEST_CASE("summarize") {
  ReportOptions opt;
  SUBCASE("synthetic fleet") {
    const auto r = fleet({{"a", 0.028}, {"b", 0.030}, {"c", 0.032}}, 60, 0.001, 2);
    const FleetSummary s = summarize(r, opt);
    REQUIRE(s.products.size() == 1);
    const ProductSummary& p = s.products[0];
    CHECK(p.product == ProductType::Ortho);
    CHECK(p.per_satellite.size() == 3);
    CHECK(p.per_satellite[0].satellite_id == "a");
    REQUIRE(p.anova.has_value());
    CHECK(p.anova->p_value < 0.001);
    std::size_t total = 0;
    for (auto c : p.histogram.counts) total += c;
    CHECK(total == p.retained);
  }
  SUBCASE("single satellite keeps the aggregate and reports the ANOVA failure") {
    const FleetSummary s = summarize(fleet({{"solo", 0.03}}, 60, 0.001, 3), opt);
    REQUIRE(s.products.size() == 1);
    CHECK(s.products[0].per_satellite.size() == 1);
    CHECK_FALSE(s.products[0].anova.has_value());
    CHECK(s.products[0].anova_error.find(">=2 groups required") != std::string::npos);
  }
  SUBCASE("no satellite passes min_samples") {
    try {
      summarize(fleet({{"a", 0.03}, {"b", 0.031}, {"c", 0.032}}, 10, 0.001, 4), opt);
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NoData);
    }
  }
  SUBCASE("products are analysed separately") {
    auto r = fleet({{"a", 0.03}, {"b", 0.031}}, 55, 0.001, 5, ProductType::Basic);
    const auto o = fleet({{"a", 0.026}, {"b", 0.027}}, 55, 0.001, 6, ProductType::Ortho);
    r.insert(r.end(), o.begin(), o.end());
    const FleetSummary s = summarize(r, opt);
    REQUIRE(s.products.size() == 2);
    CHECK(s.products[0].product == ProductType::Basic);
    CHECK(s.products[1].product == ProductType::Ortho);
    CHECK(s.products[1].per_satellite[0].mean == doctest::Approx(0.026).epsilon(0.01));
  }
}

TEST_CASE("records CSV") {
  std::vector<BatchRow> rows;
  rows.push_back({"i1", "sat,1", ProductType::Basic, 0.0312345678, QualityClass::Deblurrable,
                  year{2018} / 1 / 2});
  rows.push_back({"i2", "sat2", ProductType::Ortho, std::nullopt, std::nullopt, year{2018} / 1 / 3});
  rows.push_back({"i3", "sat2", ProductType::Ortho, 0.9, QualityClass::Sharp, year{2018} / 1 / 4});
  std::ostringstream out;
  write_batch_csv(out, rows);
  const std::string text = out.str();
  CHECK(text.rfind(std::string(kRecordsHeader) + "\n", 0) == 0);
  CHECK(text.find("i1,\"sat,1\",basic,0.03123457,deblurrable,2018-01-02\n") != std::string::npos);
  CHECK(text.find("i2,sat2,ortho,,error,2018-01-03\n") != std::string::npos);

  std::istringstream in(text);
  const RecordsTable t = read_records_csv(in);
  CHECK(t.error_rows == 1);
  REQUIRE(t.records.size() == 2);
  CHECK(t.records[0].satellite_id == "sat,1");
  CHECK(t.records[0].score == 0.03123457);
  CHECK(t.records[1].quality == QualityClass::Sharp);
  CHECK(t.records[1].acquired == Date{year{2018}, month{1}, day{4}});

  auto parse_error_line = [](const std::string& csv) -> std::string {
    std::istringstream s(csv);
    try {
      read_records_csv(s);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Parse);
      return e.what();
    }
    return "";
  };
  const std::string h = std::string(kRecordsHeader) + "\n";
  CHECK(parse_error_line("") != "");
  CHECK(parse_error_line("a,b\n").find("line 1") != std::string::npos);
  CHECK(parse_error_line(h + "i,s,ortho,0.03,sharp,2018-01-01\ni,s,ortho,abc,sharp,2018-01-01\n")
            .find("line 3") != std::string::npos);
  CHECK(parse_error_line(h + "i,s,pan,0.03,sharp,2018-01-01\n") != "");
  CHECK(parse_error_line(h + "i,s,ortho,0.03,Great,2018-01-01\n") != "");
  CHECK(parse_error_line(h + "i,s,ortho,0.03,Sharp,01/01/2018\n") != "");
  CHECK(parse_error_line(h + "i,\"s,ortho,0.03,sharp,2018-01-01\n") != "");
}

TEST_CASE("summary JSON and histogram CSV") {
  auto r = fleet({{"a", 0.028}, {"b", 0.030}}, 60, 0.001, 8);
  r.push_back(rec("a", 0.028));
  FleetSummary s = summarize(r, {});
  s.products.push_back(summarize(fleet({{"x", 0.04}}, 50, 0.001, 9, ProductType::Basic), {}).products[0]);
  s.products[0].anova->f = std::numeric_limits<double>::infinity();

  const nlohmann::json j = to_json(s);
  CHECK(j["products"][0]["anova"]["f"] == "inf");
  CHECK(j["products"][1]["anova"].is_null());
  const FleetSummary back = fleet_summary_from_json(nlohmann::json::parse(j.dump()));
  REQUIRE(back.products.size() == 2);
  CHECK(back.products[0].anova->f == std::numeric_limits<double>::infinity());
  CHECK(back.products[0].per_satellite[1].mean == s.products[0].per_satellite[1].mean);
  CHECK(back.products[0].histogram.counts == s.products[0].histogram.counts);
  CHECK(back.products[1].anova_error == s.products[1].anova_error);
  CHECK_THROWS_AS(fleet_summary_from_json(nlohmann::json::parse(R"({"products":[{}]})")), Error);

  std::ostringstream csv;
  write_histogram_csv(csv, s);
  const std::string text = csv.str();
  CHECK(text.rfind("product,edge,count\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 60 + 60);
  CHECK(text.find("ortho,0.030000,") != std::string::npos);
}
