#pragma once

namespace blurmeter {

/// Regularized incomplete beta I_x(a, b), for a, b > 0 and x in [0, 1].
double regularized_incomplete_beta(double a, double b, double x);

/// P(F > f) for an F(d1, d2) random variable.
double f_distribution_survival(double f, double d1, double d2);

}  // namespace blurmeter
