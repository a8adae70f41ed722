#pragma once

#include <span>
#include <vector>

namespace fovstream {

// Right-continuous empirical CDF over the sorted distinct sample values.
struct Ecdf {
  std::vector<double> x;
  std::vector<double> f;  // F(x[i]); f.back() == 1

  double cdf(double v) const;
  // Smallest sample value v with F(v) >= p, p in (0, 1].
  double quantile(double p) const;
};

// Throws std::invalid_argument on empty input or NaN samples.
Ecdf ecdf(std::span<const double> samples);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  // Both samples have zero variance; t is 0 or +-inf and p is 1 or 0.
  bool degenerate = false;
};

// Welch's unequal-variance t-test, two-sided. Throws std::invalid_argument
// when either sample has fewer than two values.
WelchResult welch_t(std::span<const double> a, std::span<const double> b);

}  // namespace fovstream
