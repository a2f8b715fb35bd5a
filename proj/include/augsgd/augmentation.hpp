#ifndef AUGSGD_AUGMENTATION_HPP
#define AUGSGD_AUGMENTATION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "augsgd/error.hpp"
#include "augsgd/graph.hpp"
#include "augsgd/propagation.hpp"
#include "augsgd/rng.hpp"
#include "augsgd/sampling.hpp"

namespace augsgd {

/// A radial regularizer alpha(lambda) = profile(||lambda||) from one of the
/// three adequate families, or none.
///
///   power          delta * R^t
///   shifted-power  0 for R < r, delta * (R - r)^t beyond
///   exp-tail       0 for R < r, e^s - sum_{p<=q} s^p/p! with s = R - r
struct AugmentationSpec {
  enum class Kind { None, Power, ShiftedPower, ExpTail };

  Kind kind = Kind::None;
  double delta = 0.0;
  double r = 0.0;
  double t = 0.0;
  int q = 1;

  static AugmentationSpec none() { return {}; }
  static AugmentationSpec power(double delta, double t) { return {Kind::Power, delta, 0.0, t, 1}; }
  static AugmentationSpec shifted_power(double delta, double r, double t) {
    return {Kind::ShiftedPower, delta, r, t, 1};
  }
  static AugmentationSpec exp_tail(double r, int q) { return {Kind::ExpTail, 0.0, r, 0.0, q}; }
};

inline std::string_view to_string(AugmentationSpec::Kind kind) {
  switch (kind) {
    case AugmentationSpec::Kind::None: return "none";
    case AugmentationSpec::Kind::Power: return "power";
    case AugmentationSpec::Kind::ShiftedPower: return "shifted-power";
    case AugmentationSpec::Kind::ExpTail: return "exp-tail";
  }
  return "?";
}

inline AugmentationSpec::Kind augmentation_kind_from_name(std::string_view name) {
  if (name == "none") return AugmentationSpec::Kind::None;
  if (name == "power") return AugmentationSpec::Kind::Power;
  if (name == "shifted-power") return AugmentationSpec::Kind::ShiftedPower;
  if (name == "exp-tail") return AugmentationSpec::Kind::ExpTail;
  fail(ErrorCode::InvalidConfig, "unknown augmentation kind '" + std::string(name) + "'");
}

/// Parameter checks. In provable mode the polynomial families need
/// t > H(G) + 1; unchecked mode only asks for a C^1 profile (t > 1).
inline void validate(const AugmentationSpec& spec, std::size_t graph_height, bool provable = true) {
  using K = AugmentationSpec::Kind;
  if (spec.kind == K::None) return;
  if ((spec.kind == K::ShiftedPower || spec.kind == K::ExpTail) && !(spec.r > 0.0 && std::isfinite(spec.r)))
    fail(ErrorCode::InvalidAugmentation, "radius r must be positive");
  if (spec.kind == K::ExpTail) {
    if (spec.q < 1) fail(ErrorCode::InvalidAugmentation, "exp-tail needs q >= 1");
    return;
  }
  if (!(spec.delta > 0.0 && std::isfinite(spec.delta))) fail(ErrorCode::InvalidAugmentation, "delta must be positive");
  const double floor = provable ? static_cast<double>(graph_height) + 1.0 : 1.0;
  if (!(spec.t > floor))
    fail(ErrorCode::InvalidExponent, "exponent t = " + std::to_string(spec.t) + " must exceed " + std::to_string(floor));
}

namespace detail {

// sum_{p >= from} s^p / p! for s >= 0, without cancellation for moderate s.
inline double exp_series_tail(double s, int from) {
  if (s <= 0.0) return 0.0;
  if (s <= 40.0) {
    double term = 1.0;
    for (int p = 1; p <= from; ++p) term *= s / p;
    double sum = 0.0;
    for (int p = from; p < from + 2000; ++p) {
      sum += term;
      term *= s / (p + 1);
      if (term < 1e-18 * sum) break;
    }
    return sum;
  }
  double head = 0.0;
  double term = 1.0;
  for (int p = 0; p < from; ++p) {
    head += term;
    term *= s / (p + 1);
  }
  return std::exp(s) - head;
}

inline double log_exp_series_tail(double s, int from) {
  if (s <= 0.0) return -std::numeric_limits<double>::infinity();
  if (s <= 40.0) return std::log(exp_series_tail(s, from));
  double head = 0.0;
  double term = 1.0;
  for (int p = 0; p < from; ++p) {
    head += term;
    term *= s / (p + 1);
  }
  return s + std::log1p(-head * std::exp(-s));
}

}  // namespace detail

/// alpha as a function of R = ||lambda||.
inline double radial_value(const AugmentationSpec& spec, double R) {
  using K = AugmentationSpec::Kind;
  switch (spec.kind) {
    case K::None: return 0.0;
    case K::Power: return spec.delta * std::pow(R, spec.t);
    case K::ShiftedPower: return R < spec.r ? 0.0 : spec.delta * std::pow(R - spec.r, spec.t);
    case K::ExpTail: return R < spec.r ? 0.0 : detail::exp_series_tail(R - spec.r, spec.q + 1);
  }
  return 0.0;
}

/// d alpha / dR; non-decreasing in R for every family, so it is also the
/// supremum of ||grad alpha|| over the ball of radius R.
inline double radial_slope(const AugmentationSpec& spec, double R) {
  using K = AugmentationSpec::Kind;
  switch (spec.kind) {
    case K::None: return 0.0;
    case K::Power: return spec.delta * spec.t * std::pow(R, spec.t - 1.0);
    case K::ShiftedPower: return R < spec.r ? 0.0 : spec.delta * spec.t * std::pow(R - spec.r, spec.t - 1.0);
    case K::ExpTail: return R < spec.r ? 0.0 : detail::exp_series_tail(R - spec.r, spec.q);
  }
  return 0.0;
}

inline double log_radial_slope(const AugmentationSpec& spec, double R) {
  using K = AugmentationSpec::Kind;
  constexpr double minus_inf = -std::numeric_limits<double>::infinity();
  switch (spec.kind) {
    case K::None: return minus_inf;
    case K::Power: return R <= 0.0 ? minus_inf : std::log(spec.delta * spec.t) + (spec.t - 1.0) * std::log(R);
    case K::ShiftedPower:
      return R <= spec.r ? minus_inf : std::log(spec.delta * spec.t) + (spec.t - 1.0) * std::log(R - spec.r);
    case K::ExpTail: return detail::log_exp_series_tail(R - spec.r, spec.q);
  }
  return minus_inf;
}

inline double alpha_value(const AugmentationSpec& spec, std::span<const double> lambda) {
  return radial_value(spec, norm(lambda));
}

/// Closed-form gradient slope(R) * lambda / R; zero at the origin.
inline std::vector<double> alpha_grad(const AugmentationSpec& spec, std::span<const double> lambda) {
  std::vector<double> g(lambda.size(), 0.0);
  const double R = norm(lambda);
  if (spec.kind == AugmentationSpec::Kind::None || R == 0.0) return g;
  // delta t R^{t-2} lambda avoids the 0/0 form near the origin.
  const double scale = spec.kind == AugmentationSpec::Kind::Power ? spec.delta * spec.t * std::pow(R, spec.t - 2.0)
                                                                   : radial_slope(spec, R) / R;
  for (std::size_t i = 0; i < lambda.size(); ++i) g[i] = scale * lambda[i];
  return g;
}

// Bound certificate -------------------------------------------------------

/// Constants bounding ||grad_lambda E|| by Theta_rho (||lambda||^H + 1) for
/// squared error, inputs in B_rho and targets bounded by Omega_rho.
struct BoundCertificate {
  double rho = 0.0;
  double omega = 0.0;
  double m_bound = 0.0;
  std::vector<double> theta;  ///< per vertex
  double theta_rho = 0.0;

  double gradient_bound(double lambda_norm, std::size_t graph_height) const {
    return theta_rho * (std::pow(lambda_norm, static_cast<double>(graph_height)) + 1.0);
  }
};

/// M normalised as in the error-bound argument: at least every activation
/// bound, 1 (output identity slope) and rho (input magnitudes).
inline double certificate_m(const AcyclicNet& net, double rho) {
  return std::max({net.activation_bound(), 1.0, rho});
}

/// theta by induction on height (reverse topological order visits every
/// out-neighbour first), then Theta_rho = 2 M^2 sum_e theta(t(e)).
inline BoundCertificate certify_bound(const AcyclicNet& net, double rho, double omega, double m_bound) {
  if (!std::isfinite(rho)) fail(ErrorCode::InfiniteRho, "the certificate needs a finite input radius");
  if (!(rho > 0.0)) fail(ErrorCode::InvalidConfig, "rho must be positive");
  if (!(omega >= 0.0) || !std::isfinite(omega)) fail(ErrorCode::InvalidConfig, "Omega_rho must be finite and >= 0");
  if (!(m_bound >= std::max(1.0, rho)) || !std::isfinite(m_bound))
    fail(ErrorCode::InvalidConfig, "activation bound M must satisfy M >= max(1, rho)");
  if (net.activation_bound() > m_bound)
    fail(ErrorCode::InvalidConfig, "M is smaller than an activation bound of the net");

  BoundCertificate cert;
  cert.rho = rho;
  cert.omega = omega;
  cert.m_bound = m_bound;
  cert.theta.assign(net.vertex_count(), 0.0);
  const auto order = net.topological_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::size_t v = *it;
    if (net.is_output(v)) {
      const double fan_in = static_cast<double>(net.in_edges(v).size());
      cert.theta[v] = std::max(2.0 * m_bound * std::sqrt(fan_in), 2.0 * omega);
    } else {
      double sum = 0.0;
      for (std::size_t e : net.out_edges(v)) sum += cert.theta[net.edge(e).target];
      cert.theta[v] = 2.0 * m_bound * sum;
    }
  }
  double sum = 0.0;
  for (const Edge& e : net.edges()) sum += cert.theta[e.target];
  cert.theta_rho = 2.0 * m_bound * m_bound * sum;
  return cert;
}

inline BoundCertificate certify_bound(const AcyclicNet& net, double rho, double omega) {
  return certify_bound(net, rho, omega, certificate_m(net, rho));
}

// Adequacy radius ---------------------------------------------------------

/// g(R) = R alpha'(R) - Theta (R^{H+1} + R). Where g >= 0,
/// lambda^T grad(E + alpha) >= R alpha'(R) - R Theta (R^H + 1) >= 0.
inline double dominance_gap(double theta_rho, const AugmentationSpec& spec, std::size_t graph_height, double R) {
  return R * radial_slope(spec, R) - theta_rho * (std::pow(R, static_cast<double>(graph_height) + 1.0) + R);
}

inline bool dominance_holds(double theta_rho, const AugmentationSpec& spec, std::size_t graph_height, double R) {
  const double gap = dominance_gap(theta_rho, spec, graph_height, R);
  if (std::isfinite(gap)) return gap >= 0.0;
  if (theta_rho == 0.0) return true;
  // Overflow (exp-tail far from r): compare in log space.
  const double lhs = std::log(R) + log_radial_slope(spec, R);
  const double rhs = std::log(theta_rho) + std::log(R) +
                     std::log1p(std::pow(R, static_cast<double>(graph_height)));
  return lhs >= rhs;
}

/// Smallest bracket end R >= 1 with dominance, found by doubling and then
/// bisection to 1e-9; the upper end is returned so g(R0) >= 0 holds.
inline double solve_R0(double theta_rho, const AugmentationSpec& spec, std::size_t graph_height) {
  if (spec.kind == AugmentationSpec::Kind::None)
    fail(ErrorCode::NoAdequateRadius, "no augmentation: radial dominance is never guaranteed");
  if (!(theta_rho >= 0.0)) fail(ErrorCode::InvalidConfig, "Theta_rho must be non-negative");
  double lo = 1.0;
  double hi = 1.0;
  if (dominance_holds(theta_rho, spec, graph_height, hi)) return hi;
  while (!dominance_holds(theta_rho, spec, graph_height, hi)) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi) || hi > 1e300) fail(ErrorCode::NoAdequateRadius, "radial dominance never reached");
  }
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (dominance_holds(theta_rho, spec, graph_height, mid) ? hi : lo) = mid;
  }
  return hi;
}

inline double solve_R0(const BoundCertificate& cert, const AugmentationSpec& spec, std::size_t graph_height) {
  return solve_R0(cert.theta_rho, spec, graph_height);
}

/// Certified upper bound on ||grad_lambda (E + alpha)|| over ||lambda|| <= R.
inline double analytic_phi_bound(const BoundCertificate& cert, const AugmentationSpec& spec,
                                 std::size_t graph_height, double R) {
  return cert.gradient_bound(R, graph_height) + radial_slope(spec, R);
}

struct AdequacyReport {
  std::vector<double> radii;
  std::vector<double> min_by_radius;
  double min_inner_product = std::numeric_limits<double>::infinity();
  std::size_t samples = 0;
};

/// Samples x uniformly in the closed ball B_rho and lambda on the shells
/// ||lambda|| in {R0, 1.5 R0, 2 R0}; reports min lambda^T grad(E + alpha).
template <class Target>
AdequacyReport adequacy_check(const AcyclicNet& net, const AugmentationSpec& spec, Target&& target, double rho,
                              double R0, std::size_t samples_per_shell, CounterRng rng) {
  AdequacyReport report;
  report.radii = {R0, 1.5 * R0, 2.0 * R0};
  std::uint64_t counter = 0;
  for (double R : report.radii) {
    double shell_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples_per_shell; ++i) {
      RandomStream s = rng.at(counter++);
      const Point x = sample_ball(s, net.input_count(), rho);
      Point dir = sample_sphere(s, net.edge_count());
      for (double& c : dir) c *= R;
      const WeightVector lambda(dir);
      const auto y = target(std::span<const double>(x));
      const auto eg = error_and_grad(net, lambda, x, y);
      const double inner = dot(lambda.flat(), eg.gradient.dlambda.flat()) + R * radial_slope(spec, R);
      shell_min = std::min(shell_min, inner);
      ++report.samples;
    }
    report.min_by_radius.push_back(shell_min);
    report.min_inner_product = std::min(report.min_inner_product, shell_min);
  }
  return report;
}

}  // namespace augsgd

#endif  // AUGSGD_AUGMENTATION_HPP
