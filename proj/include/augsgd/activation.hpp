#ifndef AUGSGD_ACTIVATION_HPP
#define AUGSGD_ACTIVATION_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "augsgd/error.hpp"

namespace augsgd {

/// Hidden-vertex activation functions.
///
/// The first three are uniformly C^2-bounded: |s|, |s'| and |s''| are all at
/// most bound() on the whole real line, which is what the convergence
/// certificate needs. Relu and Identity are only accepted in unchecked mode
/// (classical back-propagation comparisons); their bound() is infinite.
class Activation {
 public:
  enum class Kind { Tanh, Logistic, Gaussian, Relu, Identity };

  constexpr Activation() noexcept = default;
  constexpr explicit Activation(Kind kind) noexcept : kind_(kind) {}

  static Activation from_name(std::string_view name) {
    if (auto a = parse(name)) return *a;
    fail(ErrorCode::InvalidConfig, "unknown activation '" + std::string(name) + "'");
  }

  static std::optional<Activation> parse(std::string_view name) noexcept {
    if (name == "tanh") return Activation(Kind::Tanh);
    if (name == "logistic" || name == "sigmoid") return Activation(Kind::Logistic);
    if (name == "gaussian" || name == "gaussian-bump") return Activation(Kind::Gaussian);
    if (name == "relu") return Activation(Kind::Relu);
    if (name == "identity" || name == "linear") return Activation(Kind::Identity);
    return std::nullopt;
  }

  constexpr Kind kind() const noexcept { return kind_; }

  std::string_view name() const noexcept {
    switch (kind_) {
      case Kind::Tanh: return "tanh";
      case Kind::Logistic: return "logistic";
      case Kind::Gaussian: return "gaussian";
      case Kind::Relu: return "relu";
      case Kind::Identity: return "identity";
    }
    return "?";
  }

  /// True when the activation satisfies the uniform C^2 bound.
  constexpr bool provable() const noexcept {
    return kind_ == Kind::Tanh || kind_ == Kind::Logistic || kind_ == Kind::Gaussian;
  }

  /// M_s with |s|, |s'|, |s''| <= M_s everywhere.
  double bound() const noexcept {
    switch (kind_) {
      case Kind::Tanh: return 1.0;
      case Kind::Logistic: return 1.0;
      case Kind::Gaussian: return 2.0;  // |s''(0)| = 2
      default: return std::numeric_limits<double>::infinity();
    }
  }

  double value(double t) const noexcept {
    switch (kind_) {
      case Kind::Tanh: return std::tanh(t);
      case Kind::Logistic: return logistic(t);
      case Kind::Gaussian: return std::exp(-t * t);
      case Kind::Relu: return t > 0.0 ? t : 0.0;
      case Kind::Identity: return t;
    }
    return 0.0;
  }

  double derivative(double t) const noexcept {
    switch (kind_) {
      case Kind::Tanh: {
        const double th = std::tanh(t);
        return 1.0 - th * th;
      }
      case Kind::Logistic: {
        const double s = logistic(t);
        return s * (1.0 - s);
      }
      case Kind::Gaussian: return -2.0 * t * std::exp(-t * t);
      case Kind::Relu: return t > 0.0 ? 1.0 : 0.0;
      case Kind::Identity: return 1.0;
    }
    return 0.0;
  }

  double second_derivative(double t) const noexcept {
    switch (kind_) {
      case Kind::Tanh: {
        const double th = std::tanh(t);
        return -2.0 * th * (1.0 - th * th);
      }
      case Kind::Logistic: {
        const double s = logistic(t);
        return s * (1.0 - s) * (1.0 - 2.0 * s);
      }
      case Kind::Gaussian: return (4.0 * t * t - 2.0) * std::exp(-t * t);
      case Kind::Relu:
      case Kind::Identity: return 0.0;
    }
    return 0.0;
  }

  friend constexpr bool operator==(Activation, Activation) noexcept = default;

 private:
  static double logistic(double t) noexcept {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
  }

  Kind kind_ = Kind::Tanh;
};

}  // namespace augsgd

#endif  // AUGSGD_ACTIVATION_HPP
