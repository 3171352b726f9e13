#include "blurmeter/run_config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "blurmeter/error.hpp"

namespace blurmeter {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || !std::isfinite(out))
    throw Error(ErrorKind::Parse, "config key '" + key + "' expects a number, got '" + v + "'");
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  int out = 0;
  try {
    out = std::stoi(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size())
    throw Error(ErrorKind::Parse, "config key '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

}  // namespace

CropWindow parse_crop(std::string_view s) {
  std::vector<int> parts;
  std::string item;
  std::istringstream ss{std::string(s)};
  while (std::getline(ss, item, ',')) parts.push_back(to_int("crop", trim(item)));
  if (parts.size() != 4) throw Error(ErrorKind::Parse, "crop must be x,y,w,h");
  const CropWindow c{parts[0], parts[1], parts[2], parts[3]};
  require(c.x >= 0 && c.y >= 0 && c.width > 0 && c.height > 0,
          "crop needs non-negative origin and positive size", ErrorKind::Parse);
  return c;
}

void RunConfig::validate() const {
  estimation.validate();
  deconv.validate();
  thresholds.validate();
  require(parallelism >= 1, "parallelism must be >= 1");
  require(min_samples >= 1, "min_samples must be >= 1");
  require(histogram.bin_width > 0.0 && histogram.hi > histogram.lo,
          "histogram needs a positive bin width and a non-empty range");
}

RunConfig parse_run_config(std::istream& in, RunConfig base) {
  RunConfig c = std::move(base);
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto dbl = [](double& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = to_double(k, v); };
  };
  auto integer = [](int& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = to_int(k, v); };
  };
  const std::map<std::string, Setter> setters{
      {"kernel_size", integer(c.estimation.kernel_size)},
      {"lambda", dbl(c.estimation.lambda)},
      {"gamma", dbl(c.estimation.gamma)},
      {"outer_iters", integer(c.estimation.outer_iters)},
      {"final_iters", integer(c.estimation.final_iters)},
      {"beta_init",
       [&](const std::string& k, const std::string& v) {
         c.estimation.beta_init = to_double(k, v);
       }},
      {"beta_max", dbl(c.estimation.beta_max)},
      {"beta_rate", dbl(c.estimation.beta_rate)},
      {"pyramid_scale", dbl(c.estimation.pyramid_scale)},
      {"prune_fraction", dbl(c.estimation.prune_fraction)},
      {"deconv.alpha", dbl(c.deconv.alpha)},
      {"deconv.beta_init", dbl(c.deconv.beta_init)},
      {"deconv.beta_max", dbl(c.deconv.beta_max)},
      {"deconv.beta_rate", dbl(c.deconv.beta_rate)},
      {"deconv.inner_iters", integer(c.deconv.inner_iters)},
      {"threshold.ortho.sharp", dbl(c.thresholds.ortho.sharp)},
      {"threshold.ortho.discard", dbl(c.thresholds.ortho.discard)},
      {"threshold.basic.sharp", dbl(c.thresholds.basic.sharp)},
      {"threshold.basic.discard", dbl(c.thresholds.basic.discard)},
      {"parallelism", integer(c.parallelism)},
      {"crop", [&](const std::string&, const std::string& v) { c.crop = parse_crop(v); }},
      {"min_samples",
       [&](const std::string& k, const std::string& v) {
         const int n = to_int(k, v);
         require(n >= 1, "min_samples must be >= 1", ErrorKind::Parse);
         c.min_samples = static_cast<std::size_t>(n);
       }},
      {"histogram.bin_width", dbl(c.histogram.bin_width)},
      {"histogram.lo", dbl(c.histogram.lo)},
      {"histogram.hi", dbl(c.histogram.hi)},
  };

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::Parse,
                  "config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end())
      throw Error(ErrorKind::Parse,
                  "config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    it->second(key, value);
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read config " + path.string());
  return parse_run_config(in, std::move(base));
}

}  // namespace blurmeter
