#include "blurmeter/sharpness.hpp"

#include <cmath>
#include <numeric>

#include "blurmeter/error.hpp"

namespace blurmeter {

std::string_view to_string(ProductType p) {
  return p == ProductType::Ortho ? "ortho" : "basic";
}

std::string_view to_string(QualityClass c) {
  switch (c) {
    case QualityClass::Sharp: return "sharp";
    case QualityClass::Deblurrable: return "deblurrable";
    case QualityClass::Discard: return "discard";
  }
  return "discard";
}

std::optional<ProductType> parse_product(std::string_view s) {
  if (s == "basic") return ProductType::Basic;
  if (s == "ortho") return ProductType::Ortho;
  return std::nullopt;
}

std::optional<QualityClass> parse_quality(std::string_view s) {
  if (s == "sharp") return QualityClass::Sharp;
  if (s == "deblurrable") return QualityClass::Deblurrable;
  if (s == "discard") return QualityClass::Discard;
  return std::nullopt;
}

void QualityThresholds::validate() const {
  for (const ProductThresholds* t : {&ortho, &basic}) {
    require(t->discard > 0.0 && t->sharp <= 1.0 && t->discard <= t->sharp,
            "thresholds must satisfy 0 < discard <= sharp <= 1");
  }
}

double sharpness(const Kernel& k) {
  const auto& w = k.weights();
  const double mass = std::accumulate(w.begin(), w.end(), 0.0);
  require(std::abs(mass - 1.0) <= 1e-6, "kernel is not normalized to unit mass");
  double ss = 0.0;
  for (double v : w) ss += v * v;
  return std::sqrt(ss);
}

QualityClass classify(double score, ProductType product, const QualityThresholds& thresholds) {
  const ProductThresholds& t = thresholds.of(product);
  if (score > t.sharp) return QualityClass::Sharp;
  if (score < t.discard) return QualityClass::Discard;
  return QualityClass::Deblurrable;
}

}  // namespace blurmeter
