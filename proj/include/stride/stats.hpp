#pragma once

#include <cmath>
#include <limits>
#include <span>

#include "stride/error.hpp"

namespace stride::stats {

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int max_iter = 10000;
  constexpr double eps = 1e-15;
  constexpr double tiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) return h;
  }
  throw Error(ErrorKind::Numerical, "incomplete beta continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, ErrorKind::InvalidArgument, "incomplete_beta needs a, b > 0");
  require(x >= 0.0 && x <= 1.0, ErrorKind::InvalidArgument, "incomplete_beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
inline double student_t_two_sided_p(double t, double dof) {
  require(dof > 0.0, ErrorKind::InvalidArgument, "dof must be > 0");
  if (std::isnan(t)) throw Error(ErrorKind::NonFinite, "t statistic is NaN");
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t));
}

struct WelchResult {
  double t = 0.0;
  double dof = 0.0;
  double p = 1.0;
};

struct SampleMoments {
  double mean = 0.0;
  double var = 0.0;  // ddof = 1
  std::size_t n = 0;
};

inline SampleMoments moments(std::span<const double> x) {
  SampleMoments m;
  m.n = x.size();
  if (m.n == 0) return m;
  for (double v : x) m.mean += v;
  m.mean /= static_cast<double>(m.n);
  if (m.n > 1) {
    for (double v : x) m.var += (v - m.mean) * (v - m.mean);
    m.var /= static_cast<double>(m.n - 1);
  }
  return m;
}

/// Two-sided Welch t-test with Welch-Satterthwaite degrees of freedom.
inline WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  require(a.size() >= 2 && b.size() >= 2, ErrorKind::InvalidArgument, "welch_t_test needs >= 2 samples per side");
  const SampleMoments ma = moments(a);
  const SampleMoments mb = moments(b);
  const double va = ma.var / static_cast<double>(ma.n);
  const double vb = mb.var / static_cast<double>(mb.n);
  const double se2 = va + vb;
  WelchResult r;
  if (se2 <= 0.0) {
    // Both samples constant.
    r.dof = static_cast<double>(ma.n + mb.n - 2);
    if (ma.mean == mb.mean) return r;
    r.t = ma.mean > mb.mean ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.p = 0.0;
    return r;
  }
  r.t = (ma.mean - mb.mean) / std::sqrt(se2);
  r.dof = se2 * se2 /
          (va * va / static_cast<double>(ma.n - 1) + vb * vb / static_cast<double>(mb.n - 1));
  r.p = student_t_two_sided_p(r.t, r.dof);
  return r;
}

}  // namespace stride::stats
