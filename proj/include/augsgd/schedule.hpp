#ifndef AUGSGD_SCHEDULE_HPP
#define AUGSGD_SCHEDULE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>

#include "augsgd/error.hpp"

namespace augsgd {

namespace detail {

/// sum_{n >= first} n^{-s} for s > 1 and first >= 1: explicit terms up to
/// n = 20, then Euler-Maclaurin with four Bernoulli corrections. The
/// truncation error is below 1e-16 relative for s in (1, 2].
inline double zeta_tail(double s, std::size_t first) {
  constexpr std::size_t base = 20;
  double sum = 0.0;
  std::size_t n = std::max<std::size_t>(first, 1);
  for (; n < base; ++n) sum += std::pow(static_cast<double>(n), -s);
  const double a = static_cast<double>(n);
  const double fa = std::pow(a, -s);
  // integral + f(a)/2 - sum_j B_{2j}/(2j)! f^{(2j-1)}(a), f(x) = x^{-s}
  sum += a * fa / (s - 1.0) + 0.5 * fa;
  double deriv = s * fa / a;  // -f'(a)
  constexpr double bernoulli_over_factorial[] = {1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0, -1.0 / 1209600.0};
  double order = s;
  for (double coeff : bernoulli_over_factorial) {
    sum += coeff * deriv;
    deriv *= (order + 1.0) * (order + 2.0) / (a * a);
    order += 2.0;
  }
  return sum;
}

}  // namespace detail

/// Robbins-Monro step sizes a_k = c / (k + 1)^p with p in (1/2, 1]: the
/// steps sum to infinity while their squares have a finite sum.
class Schedule {
 public:
  static Schedule power_law(double c, double p) {
    if (!(c > 0.0) || !std::isfinite(c)) fail(ErrorCode::InvalidConfig, "schedule scale c must be positive");
    if (!(p > 0.5)) fail(ErrorCode::DivergentSquareSum, "p <= 1/2 makes sum a_k^2 diverge");
    if (!(p <= 1.0)) fail(ErrorCode::NonDivergentSum, "p > 1 makes sum a_k converge");
    Schedule s;
    s.c_ = c;
    s.p_ = p;
    s.sum_sq_ = p == 1.0 ? c * c * std::numbers::pi * std::numbers::pi / 6.0 : c * c * detail::zeta_tail(2.0 * p, 1);
    return s;
  }

  double c() const noexcept { return c_; }
  double p() const noexcept { return p_; }

  double at(std::size_t k) const noexcept { return c_ / std::pow(static_cast<double>(k) + 1.0, p_); }

  /// A = sup a_k = a_0.
  double sup() const noexcept { return c_; }

  double sum_sq() const noexcept { return sum_sq_; }

  /// sum_{j >= k} a_j^2.
  double tail_sq(std::size_t k) const {
    if (k == 0) return sum_sq_;
    return c_ * c_ * detail::zeta_tail(2.0 * p_, k + 1);
  }

 private:
  Schedule() = default;

  double c_ = 1.0;
  double p_ = 1.0;
  double sum_sq_ = 0.0;
};

inline Schedule make_schedule(double c, double p) { return Schedule::power_law(c, p); }

/// R_1 = max{ sqrt(|x_0|^2 + S), sqrt(R_0^2 + 2 A R_0 + S) } with S = sum a_k^2.
inline double compute_R1(double x0_norm, double R0, const Schedule& schedule) {
  const double S = schedule.sum_sq();
  const double A = schedule.sup();
  return std::max(std::sqrt(x0_norm * x0_norm + S), std::sqrt(R0 * R0 + 2.0 * A * R0 + S));
}

}  // namespace augsgd

#endif  // AUGSGD_SCHEDULE_HPP
