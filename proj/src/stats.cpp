#include "fovstream/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace fovstream {

double Ecdf::cdf(double v) const {
  const auto it = std::upper_bound(x.begin(), x.end(), v);
  if (it == x.begin()) return 0.0;
  return f[static_cast<std::size_t>(it - x.begin()) - 1];
}

double Ecdf::quantile(double p) const {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("ecdf: quantile level must be in (0, 1]");
  // Guard against F values like 0.05 represented as 0.0499999.
  const auto it = std::lower_bound(f.begin(), f.end(), p - 1e-12);
  return x[static_cast<std::size_t>(std::min(it - f.begin(), static_cast<std::ptrdiff_t>(f.size() - 1)))];
}

Ecdf ecdf(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("ecdf: no samples");
  std::vector<double> s(samples.begin(), samples.end());
  if (std::any_of(s.begin(), s.end(), [](double v) { return std::isnan(v); })) {
    throw std::invalid_argument("ecdf: NaN sample");
  }
  std::sort(s.begin(), s.end());
  Ecdf e;
  const double n = static_cast<double>(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i + 1 < s.size() && s[i + 1] == s[i]) continue;
    e.x.push_back(s[i]);
    e.f.push_back(static_cast<double>(i + 1) / n);
  }
  return e;
}

namespace {

struct Moments {
  double mean;
  double var;
};

Moments moments(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, ss / (n - 1.0)};
}

}  // namespace

WelchResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch_t: each sample needs >= 2 values");
  const Moments ma = moments(a), mb = moments(b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double va = ma.var / na, vb = mb.var / nb;
  WelchResult r;
  if (va + vb == 0.0) {
    r.degenerate = true;
    r.df = na + nb - 2.0;
    if (ma.mean == mb.mean) return r;
    r.t = ma.mean > mb.mean ? std::numeric_limits<double>::infinity()
                            : -std::numeric_limits<double>::infinity();
    r.p = 0.0;
    return r;
  }
  r.t = (ma.mean - mb.mean) / std::sqrt(va + vb);
  r.df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  const boost::math::students_t dist(r.df);
  r.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
  return r;
}

}  // namespace fovstream
