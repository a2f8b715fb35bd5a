#ifndef AUGSGD_SAMPLING_HPP
#define AUGSGD_SAMPLING_HPP

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "augsgd/error.hpp"
#include "augsgd/rng.hpp"

namespace augsgd {

using Point = std::vector<double>;

inline double norm(std::span<const double> v) noexcept {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

/// Uniform direction on the unit sphere S^{dim-1} (normalized gaussian).
inline Point sample_sphere(RandomStream& rng, std::size_t dim) {
  Point p(dim);
  double n = 0.0;
  while (n == 0.0) {
    for (double& c : p) c = rng.normal();
    n = norm(p);
  }
  for (double& c : p) c /= n;
  return p;
}

/// Uniform point of the ball of the given radius: direction times radius*U^{1/dim}.
inline Point sample_ball(RandomStream& rng, std::size_t dim, double radius) {
  Point p = sample_sphere(rng, dim);
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
  for (double& c : p) c *= r;
  return p;
}

/// Probability measure on the input ball B_rho: either uniform on the ball
/// or a finite weighted point list.
class Measure {
 public:
  static Measure uniform_ball(std::size_t dim, double rho) {
    if (!(rho > 0.0) || !std::isfinite(rho)) fail(ErrorCode::InvalidConfig, "ball radius must be finite and positive");
    if (dim == 0) fail(ErrorCode::InvalidConfig, "ball dimension must be positive");
    Measure m;
    m.dim_ = dim;
    m.rho_ = rho;
    return m;
  }

  /// Points must lie in the closed ball of radius rho; weights must be
  /// non-negative and sum to 1 within 1e-12 (empty weights mean uniform).
  static Measure finite_support(std::vector<Point> points, std::vector<double> weights, double rho) {
    if (!(rho > 0.0) || !std::isfinite(rho)) fail(ErrorCode::InvalidConfig, "rho must be finite and positive");
    if (points.empty()) fail(ErrorCode::InvalidConfig, "finite-support measure needs at least one point");
    if (weights.empty()) weights.assign(points.size(), 1.0 / static_cast<double>(points.size()));
    if (weights.size() != points.size()) fail(ErrorCode::InvalidConfig, "one weight per support point required");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) fail(ErrorCode::InvalidConfig, "negative support weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) fail(ErrorCode::InvalidConfig, "support weights must sum to 1");
    const std::size_t dim = points.front().size();
    for (const Point& p : points) {
      if (p.size() != dim) fail(ErrorCode::InvalidConfig, "support points have mixed dimensions");
      if (norm(p) > rho) fail(ErrorCode::InvalidConfig, "support point outside the input ball");
    }
    Measure m;
    m.dim_ = dim;
    m.rho_ = rho;
    m.points_ = std::move(points);
    m.weights_ = std::move(weights);
    m.cumulative_.resize(m.weights_.size());
    std::partial_sum(m.weights_.begin(), m.weights_.end(), m.cumulative_.begin());
    return m;
  }

  std::size_t dimension() const noexcept { return dim_; }
  double rho() const noexcept { return rho_; }
  bool finite() const noexcept { return !points_.empty(); }
  const std::vector<Point>& points() const noexcept { return points_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  Point draw(RandomStream& rng) const {
    if (!finite()) return sample_ball(rng, dim_, rho_);
    const double u = rng.uniform() * cumulative_.back();
    for (std::size_t i = 0; i < cumulative_.size(); ++i)
      if (u < cumulative_[i]) return points_[i];
    return points_.back();
  }

 private:
  Measure() = default;

  std::size_t dim_ = 0;
  double rho_ = 0.0;
  std::vector<Point> points_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

}  // namespace augsgd

#endif  // AUGSGD_SAMPLING_HPP
