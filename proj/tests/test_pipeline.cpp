#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "blurmeter/convolution.hpp"
#include "blurmeter/error.hpp"
#include "blurmeter/image_io.hpp"
#include "blurmeter/pipeline.hpp"
#include "blurmeter/synthetic.hpp"
#include "scratch_dir.hpp"

using namespace blurmeter;
using namespace std::chrono;

namespace {

Raster scene(int seed, const Kernel& k, double noise = 0.004) {
  return synthesize(cartoon_scene(128, 128, seed), k, noise, seed);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd = std::string(BLURMETER_CLI_PATH) + " " + args + " >" + log.string() +
                          " 2>" + log.string() + ".err";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

RunConfig strict_ortho() {
  RunConfig c;
  c.thresholds.ortho = {0.95, 0.9};
  return c;
}

}  // namespace

TEST_CASE("SharpnessReport JSON round trip") {
  SharpnessReport r;
  r.score = 0.25;
  r.quality = QualityClass::Deblurrable;
  r.product = ProductType::Basic;
  r.kernel = Kernel::gaussian(5, 1.0);
  r.image_id = "img";
  r.satellite_id = "0f02";
  r.acquired = year{2018} / 7 / 9;
  r.fallback = true;
  const SharpnessReport b = sharpness_report_from_json(nlohmann::json::parse(to_json(r).dump()));
  CHECK(b.score == r.score);
  CHECK(b.quality == r.quality);
  CHECK(b.product == r.product);
  CHECK(b.kernel == r.kernel);
  CHECK(b.image_id == r.image_id);
  CHECK(b.satellite_id == r.satellite_id);
  CHECK(b.acquired == r.acquired);
  CHECK(b.fallback);
  CHECK_THROWS_AS(sharpness_report_from_json(nlohmann::json::object()), Error);
}

TEST_CASE("prepare_image crops") {
  RunConfig c;
  const Raster img = cartoon_scene(64, 48, 1);
  CHECK(prepare_image(img, c) == img);
  c.crop = CropWindow{8, 4, 20, 30};
  CHECK(prepare_image(img, c) == crop(img, 8, 4, 20, 30));
  c.crop = CropWindow{50, 4, 20, 30};
  CHECK_THROWS_AS(prepare_image(img, c), Error);
}

TEST_CASE("read_manifest") {
  ScratchDir dir("manifest");
  std::ofstream(dir / "m.json") << R"({"entries": [
    {"path": "a.png", "satellite_id": "s1", "product": "ortho", "acquired": "2018-01-01"},
    {"path": "/abs/b.tif", "satellite_id": "s2", "product": "basic", "acquired": "2018-02-01",
     "image_id": "bee"}]})";
  const auto m = read_manifest(dir / "m.json");
  REQUIRE(m.size() == 2);
  CHECK(m[0].path == dir / "a.png");
  CHECK(m[0].image_id == "a");
  CHECK(m[1].path == "/abs/b.tif");
  CHECK(m[1].image_id == "bee");
  CHECK(m[1].product == ProductType::Basic);

  std::ofstream(dir / "arr.json") << R"([{"path": "a.png", "satellite_id": "s", "product": "ortho", "acquired": "2018-01-01"}])";
  CHECK(read_manifest(dir / "arr.json").size() == 1);

  auto kind = [&](const std::string& text) {
    std::ofstream(dir / "bad.json") << text;
    try {
      read_manifest(dir / "bad.json");
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::InvalidArgument;
  };
  CHECK(kind("{not json") == ErrorKind::Parse);
  CHECK(kind(R"({"entries": 3})") == ErrorKind::Parse);
  CHECK(kind(R"([{"path": "a.png"}])") == ErrorKind::Parse);
  CHECK(kind(R"([{"path": "a.png", "satellite_id": "s", "product": "pan", "acquired": "2018-01-01"}])") == ErrorKind::Parse);
  CHECK(kind(R"([{"path": "a.png", "satellite_id": "s", "product": "ortho", "acquired": "2018-01-01"},
                 {"path": "./a.png", "satellite_id": "s", "product": "ortho", "acquired": "2018-01-01"}])") == ErrorKind::Parse);
  try {
    read_manifest(dir / "nope.json");
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

TEST_CASE("cmd_score") {
  ScratchDir dir("score");
  write_image(dir / "sharp.png", scene(1, Kernel::delta(1), 0.0));
  std::ostringstream out, err;
  ScoreOptions o{dir / "sharp.png", {}, dir / "k.txt"};
  o.meta.satellite_id = "sat";
  CHECK(cmd_score(o, {}, out, err) == kExitOk);
  const auto j = nlohmann::json::parse(out.str());
  CHECK(j["class"] == "sharp");
  CHECK(j["image_id"] == "sharp");
  CHECK(j["satellite_id"] == "sat");
  CHECK(j["score"].get<double>() >= 0.8);
  CHECK(std::filesystem::exists(dir / "k.txt"));
  CHECK(std::filesystem::exists(dir / "k.txt.png"));
  std::ifstream kt(dir / "k.txt");
  CHECK(read_kernel_text(kt).width() == 15);

  SUBCASE("discard exits 2") {
    write_image(dir / "blur.png", scene(2, Kernel::gaussian(15, 4.0)));
    std::ostringstream o2, e2;
    CHECK(cmd_score({dir / "blur.png", {}, std::nullopt}, strict_ortho(), o2, e2) == kExitRejected);
    CHECK(nlohmann::json::parse(o2.str())["class"] == "discard");
  }
  SUBCASE("missing file exits 1 with a diagnostic") {
    std::ostringstream o2, e2;
    CHECK(cmd_score({dir / "none.png", {}, std::nullopt}, {}, o2, e2) == kExitError);
    CHECK(e2.str().find("none.png") != std::string::npos);
    CHECK(o2.str().empty());
  }
}

TEST_CASE("no 15x15 kernel can fall below the default ortho discard cut") {
  // Any unit-mass kernel on n x n pixels has S >= 1/n; 1/15 > 0.023.
  CHECK(1.0 / 15.0 > QualityThresholds{}.ortho.discard);
  ScratchDir dir("sigma4");
  write_image(dir / "blur.png", scene(2, Kernel::gaussian(15, 4.0)));
  std::ostringstream out, err;
  CHECK(cmd_score({dir / "blur.png", {}, std::nullopt}, {}, out, err) == kExitOk);
  CHECK(nlohmann::json::parse(out.str())["score"].get<double>() >= 1.0 / 15.0 - 1e-12);
}

TEST_CASE("heavily blurred ortho scene scores Discard with default thresholds" *
          doctest::may_fail()) {
  ScratchDir dir("sigma4d");
  write_image(dir / "blur.png", scene(2, Kernel::gaussian(15, 4.0)));
  std::ostringstream out, err;
  CHECK(cmd_score({dir / "blur.png", {}, std::nullopt}, {}, out, err) == kExitRejected);
}

TEST_CASE("cmd_deblur") {
  ScratchDir dir("deblur");
  SUBCASE("blurred input gets sharper") {
    write_image(dir / "in.png", synthesize(cartoon_scene(256, 256, 4), Kernel::gaussian(15, 2.0), 0.004, 4));
    std::ostringstream out, err;
    CHECK(cmd_deblur({dir / "in.png", dir / "out.png", {}, false, std::nullopt}, {}, out, err) ==
          kExitOk);
    const auto j = nlohmann::json::parse(out.str());
    CHECK(j["output"]["score"].get<double>() > j["input"]["score"].get<double>());
    const MultiBandImage m = read_image(dir / "out.png");
    CHECK(m.max_value == 65535.0);
    CHECK(m.width == 256);
  }
  SUBCASE("sharp input with force is nearly unchanged") {
    const Raster in = scene(5, Kernel::delta(1), 0.0);
    write_image(dir / "in.png", in);
    std::ostringstream out, err;
    CHECK(cmd_deblur({dir / "in.png", dir / "out.tif", {}, true, std::nullopt}, {}, out, err) ==
          kExitOk);
    CHECK(rmse(read_grayscale(dir / "out.tif"), read_grayscale(dir / "in.png")) <= 0.02);
  }
  SUBCASE("discard input without force is refused") {
    write_image(dir / "in.png", scene(6, Kernel::gaussian(15, 2.0)));
    std::ostringstream out, err;
    CHECK(cmd_deblur({dir / "in.png", dir / "out.png", {}, false, std::nullopt}, strict_ortho(),
                     out, err) == kExitRejected);
    CHECK_FALSE(std::filesystem::exists(dir / "out.png"));
    CHECK(err.str().find("--force") != std::string::npos);
    std::ostringstream o2, e2;
    CHECK(cmd_deblur({dir / "in.png", dir / "out.png", {}, true, std::nullopt}, strict_ortho(),
                     o2, e2) == kExitOk);
    CHECK(std::filesystem::exists(dir / "out.png"));
  }
}

TEST_CASE("cmd_batch") {
  ScratchDir dir("batch");
  nlohmann::json entries = nlohmann::json::array();
  const char* names[] = {"c.png", "a.png", "b.png"};
  for (int i = 0; i < 3; ++i) {
    write_image(dir / names[i], scene(10 + i, Kernel::gaussian(15, 0.5 + i)));
    entries.push_back({{"path", names[i]}, {"satellite_id", "s" + std::to_string(i)},
                       {"product", "ortho"}, {"acquired", "2018-05-0" + std::to_string(i + 1)}});
  }
  std::ofstream(dir / "m.json") << entries.dump();
  std::ostringstream out, err;
  CHECK(cmd_batch(dir / "m.json", dir / "r.csv", {}, out, err) == kExitOk);
  std::istringstream csv(slurp(dir / "r.csv"));
  const RecordsTable t = read_records_csv(csv);
  REQUIRE(t.records.size() == 3);
  CHECK(t.records[0].image_id == "c");
  CHECK(t.records[1].image_id == "a");
  CHECK(t.records[2].image_id == "b");
  CHECK(t.records[0].score > t.records[1].score);
  CHECK(t.records[1].score > t.records[2].score);

  SUBCASE("one corrupt file becomes an error row") {
    std::ofstream(dir / "a.png") << "corrupt";
    std::ostringstream o2, e2;
    RunConfig c;
    c.parallelism = 3;
    CHECK(cmd_batch(dir / "m.json", dir / "r2.csv", c, o2, e2) == kExitOk);
    std::istringstream csv2(slurp(dir / "r2.csv"));
    const RecordsTable t2 = read_records_csv(csv2);
    CHECK(t2.records.size() == 2);
    CHECK(t2.error_rows == 1);
    CHECK(slurp(dir / "r2.csv").find("a,s1,ortho,,error,2018-05-02") != std::string::npos);
    CHECK(e2.str().find("a.png") != std::string::npos);
    CHECK(nlohmann::json::parse(o2.str())["errors"] == 1);
  }
  SUBCASE("bad manifest exits 1") {
    std::ostringstream o2, e2;
    CHECK(cmd_batch(dir / "none.json", dir / "r3.csv", {}, o2, e2) == kExitError);
  }
}

TEST_CASE("cmd_report") {
  ScratchDir dir("report");
  auto write_fleet = [&](const std::filesystem::path& p, int per_sat, int sats) {
    std::vector<BatchRow> rows;
    std::mt19937_64 rng(3);
    for (int s = 0; s < sats; ++s) {
      std::normal_distribution<double> d(0.028 + 0.002 * s, 0.001);
      for (int i = 0; i < per_sat; ++i) {
        const double v = d(rng);
        rows.push_back({"i" + std::to_string(s) + "_" + std::to_string(i), "sat" + std::to_string(s),
                        ProductType::Ortho, v, classify(v, ProductType::Ortho), year{2018} / 3 / 1});
      }
    }
    rows.push_back({"broken", "sat0", ProductType::Ortho, std::nullopt, std::nullopt, year{2018} / 3 / 2});
    std::ofstream out(p);
    write_batch_csv(out, rows);
  };

  SUBCASE("three satellites with separated means") {
    write_fleet(dir / "r.csv", 60, 3);
    std::ostringstream out, err;
    CHECK(cmd_report(dir / "r.csv", dir / "s.json", dir / "h.csv", {}, out, err) == kExitOk);
    const FleetSummary s = fleet_summary_from_json(nlohmann::json::parse(slurp(dir / "s.json")));
    REQUIRE(s.products.size() == 1);
    CHECK(s.products[0].per_satellite.size() == 3);
    REQUIRE(s.products[0].anova.has_value());
    CHECK(s.products[0].anova->p_value < 0.001);
    CHECK(slurp(dir / "h.csv").rfind("product,edge,count\n", 0) == 0);
    CHECK(nlohmann::json::parse(out.str())["error_rows"] == 1);
  }
  SUBCASE("single satellite") {
    write_fleet(dir / "r.csv", 60, 1);
    std::ostringstream out, err;
    CHECK(cmd_report(dir / "r.csv", dir / "s.json", std::nullopt, {}, out, err) == kExitOk);
    CHECK(err.str().find(">=2 groups required") != std::string::npos);
  }
  SUBCASE("too few images per satellite") {
    write_fleet(dir / "r.csv", 10, 3);
    std::ostringstream out, err;
    CHECK(cmd_report(dir / "r.csv", dir / "s.json", std::nullopt, {}, out, err) == kExitError);
    CHECK(err.str().find("at least 50") != std::string::npos);
  }
  SUBCASE("malformed CSV") {
    std::ofstream(dir / "bad.csv") << "a,b,c\n";
    std::ostringstream out, err;
    CHECK(cmd_report(dir / "bad.csv", dir / "s.json", std::nullopt, {}, out, err) == kExitError);
    CHECK(err.str().find("line 1") != std::string::npos);
  }
}

TEST_CASE("command-line binary") {
  ScratchDir dir("cli");
  write_image(dir / "sharp.png", scene(1, Kernel::delta(1), 0.0));
  const auto log = dir / "log";
  CHECK(run_cli("score " + (dir / "sharp.png").string(), log) == 0);
  CHECK(nlohmann::json::parse(slurp(log))["class"] == "sharp");
  CHECK(run_cli("score " + (dir / "missing.png").string(), log) == 1);
  CHECK_FALSE(slurp(dir / "log.err").empty());
  CHECK(run_cli("", log) == 1);
  CHECK(run_cli("frobnicate", log) == 1);
  CHECK(run_cli("--help", log) == 0);

  std::ofstream(dir / "strict.conf") << "threshold.ortho.sharp = 0.95\nthreshold.ortho.discard = 0.9\n";
  write_image(dir / "blur.png", scene(3, Kernel::gaussian(15, 2.0)));
  CHECK(run_cli("--config " + (dir / "strict.conf").string() + " score " +
                    (dir / "blur.png").string(), log) == 2);
  CHECK(run_cli("score " + (dir / "blur.png").string() + " --config " +
                    (dir / "strict.conf").string() + " --product ortho", log) == 2);
  CHECK(run_cli("deblur " + (dir / "blur.png").string() + " " + (dir / "o.png").string() +
                    " --config " + (dir / "strict.conf").string(), log) == 2);
  CHECK_FALSE(std::filesystem::exists(dir / "o.png"));
  CHECK(run_cli("score " + (dir / "blur.png").string() + " --acquired 2018-13-01", log) == 1);
  CHECK(run_cli("score " + (dir / "blur.png").string() + " --crop 0,0,64,64", log) == 0);
  std::ofstream(dir / "bad.conf") << "nonsense = 1\n";
  CHECK(run_cli("--config " + (dir / "bad.conf").string() + " score " +
                    (dir / "blur.png").string(), log) == 1);
}
