#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "blurmeter/kernel.hpp"

namespace blurmeter {

enum class ProductType { Basic, Ortho };

/// Ordered worst to best, so the enum compares like the quality it encodes.
enum class QualityClass { Discard = 0, Deblurrable = 1, Sharp = 2 };

std::string_view to_string(ProductType p);
std::string_view to_string(QualityClass c);
std::optional<ProductType> parse_product(std::string_view s);
std::optional<QualityClass> parse_quality(std::string_view s);

/// Per-product decision thresholds on the sharpness score.
/// Sharp when score > sharp; Discard when score < discard; Deblurrable
/// otherwise, so both boundaries themselves are Deblurrable.
struct ProductThresholds {
  double sharp = 0.0;
  double discard = 0.0;
};

struct QualityThresholds {
  ProductThresholds ortho{0.030, 0.023};
  // basic.sharp is an extrapolated default.
  ProductThresholds basic{0.035, 0.028};

  const ProductThresholds& of(ProductType p) const {
    return p == ProductType::Ortho ? ortho : basic;
  }
  void validate() const;
};

/// l2 norm of a unit-mass kernel; 1 for a delta, 1/n for a uniform n x n.
/// Throws when the kernel's mass differs from 1 by more than 1e-6.
double sharpness(const Kernel& k);

QualityClass classify(double score, ProductType product,
                      const QualityThresholds& thresholds = {});

}  // namespace blurmeter
