#ifndef AUGSGD_OPTIMIZER_HPP
#define AUGSGD_OPTIMIZER_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "augsgd/diagnostics.hpp"
#include "augsgd/error.hpp"
#include "augsgd/rng.hpp"
#include "augsgd/sampling.hpp"
#include "augsgd/schedule.hpp"

namespace augsgd {

/// f(x, y) with its gradient in x. evaluate() writes grad_x f into `grad`
/// (length dimension()) and returns f.
template <class F>
concept StochasticObjective = requires(const F& f, std::span<const double> x, std::span<const double> y,
                                       std::span<double> grad) {
  { f.dimension() } -> std::convertible_to<std::size_t>;
  { f.evaluate(x, y, grad) } -> std::convertible_to<double>;
};

enum class PhiMode { Analytic, Sampled };

inline std::string_view to_string(PhiMode mode) { return mode == PhiMode::Analytic ? "analytic" : "sampled"; }

inline PhiMode phi_mode_from_name(std::string_view name) {
  if (name == "analytic") return PhiMode::Analytic;
  if (name == "sampled") return PhiMode::Sampled;
  fail(ErrorCode::InvalidConfig, "unknown phi mode '" + std::string(name) + "'");
}

/// Certified constants of one run.
struct TrainerBounds {
  double R0 = 0.0;
  double A = 0.0;
  double sum_sq = 0.0;
  double R1 = std::numeric_limits<double>::infinity();
  PhiMode phi_mode = PhiMode::Sampled;
  double Phi_estimate = 0.0;
  double phi = 1.0;
};

struct PhiEstimate {
  double Phi_estimate = 0.0;
  double phi = 0.0;
  double sampled_max = 0.0;  ///< raw max before the safety factor (sampled mode)
};

inline constexpr double phi_floor = 1e-12;

/// Estimates Phi = sup |grad_x f| over B_{R1} x B_rho.
///
/// Analytic mode returns the caller's certified bound. Sampled mode takes the
/// largest gradient norm over uniform draws of (x, y) in the two balls and
/// multiplies by `safety`. phi is the estimate floored at 1e-12.
template <StochasticObjective F>
PhiEstimate estimate_phi(const F& f, std::size_t y_dim, double rho, double R1, PhiMode mode, std::size_t samples,
                         double safety, std::optional<double> analytic_bound, CounterRng rng) {
  PhiEstimate est;
  if (mode == PhiMode::Analytic) {
    if (!analytic_bound) fail(ErrorCode::InvalidConfig, "analytic phi needs a certified gradient bound");
    est.Phi_estimate = *analytic_bound;
  } else {
    std::vector<double> grad(f.dimension());
    for (std::size_t i = 0; i < samples; ++i) {
      RandomStream s = rng.at(i);
      const Point x = sample_ball(s, f.dimension(), R1);
      const Point y = sample_ball(s, y_dim, rho);
      f.evaluate(x, y, grad);
      est.sampled_max = std::max(est.sampled_max, norm(grad));
    }
    est.Phi_estimate = safety * est.sampled_max;
  }
  est.phi = std::max(est.Phi_estimate, phi_floor);
  return est;
}

/// x_{k+1} = x_k - (a_k / phi) grad.
inline std::vector<double> sgd_step(std::span<const double> x, std::span<const double> grad, double a_k, double phi) {
  if (!(phi > 0.0)) fail(ErrorCode::InvalidConfig, "phi must be positive");
  if (x.size() != grad.size()) fail(ErrorCode::DimensionMismatch, "gradient and iterate differ in length");
  std::vector<double> next(x.size());
  const double scale = a_k / phi;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(grad[i])) fail(ErrorCode::NonFiniteGradient, "gradient entry " + std::to_string(i) + " is not finite");
    next[i] = x[i] - scale * grad[i];
  }
  return next;
}

struct MeanEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::vector<double> gradient;
  bool exact = false;
};

/// F(x) = E_mu f(x, .) and its gradient: an exact weighted sum when mu has
/// finite support of at most `exact_limit` points, otherwise a Monte-Carlo
/// mean over `samples` draws with the standard error of the value.
template <StochasticObjective F>
MeanEstimate mean_objective(const F& f, const Measure& mu, std::span<const double> x, std::size_t samples,
                            RandomStream rng, std::size_t exact_limit = 4096) {
  MeanEstimate est;
  est.gradient.assign(f.dimension(), 0.0);
  std::vector<double> grad(f.dimension());
  if (mu.finite() && mu.points().size() <= exact_limit) {
    est.exact = true;
    for (std::size_t i = 0; i < mu.points().size(); ++i) {
      const double w = mu.weights()[i];
      est.value += w * f.evaluate(x, mu.points()[i], grad);
      for (std::size_t d = 0; d < grad.size(); ++d) est.gradient[d] += w * grad[d];
    }
    return est;
  }
  samples = std::max<std::size_t>(samples, 2);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double v = f.evaluate(x, mu.draw(rng), grad);
    sum += v;
    sum_sq += v * v;
    for (std::size_t d = 0; d < grad.size(); ++d) est.gradient[d] += grad[d];
  }
  const double n = static_cast<double>(samples);
  est.value = sum / n;
  const double var = std::max(0.0, (sum_sq - n * est.value * est.value) / (n - 1.0));
  est.standard_error = std::sqrt(var / n);
  for (double& g : est.gradient) g /= n;
  return est;
}

struct RunOptions {
  std::size_t steps = 0;
  std::size_t cadence = 100;    ///< F / grad F refresh period
  std::size_t mc_samples = 256;
  bool enforce_bounds = true;   ///< false for the classical baseline
};

struct RunResult {
  Diagnostics diagnostics;
  std::vector<double> x;
};

/// Runs K steps of x_{k+1} = x_k - (a_k/phi) grad_x f(x_k, y_k) with y_k
/// drawn from mu by the counter-based generator (draw k of the samples
/// channel), so a run is a pure function of its inputs and seed.
///
/// With enforce_bounds the induction claim |x_k|^2 + sum_{j>=k} a_j^2 <= R1^2
/// is checked at every k (tolerance 1e-9 R1^2) together with |x_k| < R1, and a
/// violation raises BoundednessViolation. Without it (classical runs) a
/// non-finite gradient or iterate ends the run with diagnostics.diverged set.
///
/// F and grad F are refreshed every `cadence` steps and at the last step;
/// S_k and z_k use the most recent grad F estimate.
template <StochasticObjective F>
RunResult run(const F& f, const Measure& mu, const Schedule& schedule, const TrainerBounds& bounds,
              std::vector<double> x0, const RunOptions& options, CounterRng rng) {
  if (x0.size() != f.dimension()) fail(ErrorCode::DimensionMismatch, "initial point has the wrong dimension");
  if (options.cadence == 0) fail(ErrorCode::InvalidConfig, "diagnostics cadence must be positive");
  const CounterRng samples = rng.with_channel(channel::samples);
  const CounterRng monte_carlo = rng.with_channel(channel::monte_carlo);
  const double R1sq = bounds.R1 * bounds.R1;
  const double tolerance = 1e-9 * R1sq;

  RunResult result;
  result.x = std::move(x0);
  Diagnostics& diag = result.diagnostics;
  diag.steps.reserve(options.steps);

  auto check_bounds = [&](std::size_t k, double x_norm, double margin) {
    if (!options.enforce_bounds) return;
    if (margin < -tolerance || !(x_norm < bounds.R1))
      fail(ErrorCode::BoundednessViolation,
           "step " + std::to_string(k) + ": |x| = " + std::to_string(x_norm) + ", R1 = " + std::to_string(bounds.R1) +
               ", margin = " + std::to_string(margin) + " (a hypothesis of the certificate does not hold)");
  };
  auto margin_at = [&](std::size_t k, double x_norm) {
    return options.enforce_bounds ? R1sq - (x_norm * x_norm + schedule.tail_sq(k)) : missing;
  };

  std::vector<double> grad(f.dimension());
  std::vector<double> gradF(f.dimension(), 0.0);
  double S = 0.0;
  double z = 0.0;
  for (std::size_t k = 0; k < options.steps; ++k) {
    StepRecord rec;
    rec.k = k;
    rec.a_k = schedule.at(k);
    rec.x_norm = norm(result.x);
    rec.margin = margin_at(k, rec.x_norm);
    check_bounds(k, rec.x_norm, rec.margin);

    RandomStream draw = samples.at(k);
    const Point y = mu.draw(draw);
    rec.f_inst = f.evaluate(result.x, y, grad);
    rec.grad_inst_norm = norm(grad);

    if (k % options.cadence == 0 || k + 1 == options.steps) {
      const MeanEstimate mean = mean_objective(f, mu, result.x, options.mc_samples, monte_carlo.at(k));
      rec.F_est = mean.value;
      rec.F_se = mean.standard_error;
      rec.gradF_norm_est = norm(mean.gradient);
      gradF = mean.gradient;
    }
    const double gradF_sq = dot(gradF, gradF);
    S += rec.a_k * gradF_sq;
    z += rec.a_k * (dot(gradF, grad) - gradF_sq);
    rec.S_k = S;
    rec.z_k = z;
    diag.steps.push_back(rec);

    if (!options.enforce_bounds) {
      bool finite = std::isfinite(rec.f_inst);
      for (double g : grad) finite = finite && std::isfinite(g);
      if (!finite) {
        diag.diverged = true;
        diag.note = "non-finite gradient at step " + std::to_string(k);
        break;
      }
    }
    result.x = sgd_step(result.x, grad, rec.a_k, bounds.phi);
  }

  diag.final_x_norm = norm(result.x);
  if (!std::isfinite(diag.final_x_norm) && !options.enforce_bounds) {
    diag.diverged = true;
    if (diag.note.empty()) diag.note = "non-finite weights after the last step";
  }
  if (!diag.diverged) {
    const std::size_t K = diag.steps.size();
    diag.final_margin = margin_at(K, diag.final_x_norm);
    check_bounds(K, diag.final_x_norm, diag.final_margin);
  }
  return result;
}

/// Largest ratio |grad f(x,y) - grad f(x',y)| / |x - x'| over random pairs in
/// B_{R1}; half the pairs are local perturbations. Reported, never certified.
template <StochasticObjective F>
double estimate_lipschitz(const F& f, const Measure& mu, double R1, std::size_t pairs, CounterRng rng) {
  double best = 0.0;
  std::vector<double> g1(f.dimension()), g2(f.dimension());
  for (std::size_t i = 0; i < pairs; ++i) {
    RandomStream s = rng.at(i);
    const Point y = mu.draw(s);
    const Point x = sample_ball(s, f.dimension(), R1);
    Point x2;
    if (i % 2 == 0) {
      x2 = sample_ball(s, f.dimension(), R1);
    } else {
      x2 = x;
      const Point step = sample_ball(s, f.dimension(), 1e-3 * std::max(R1, 1.0));
      for (std::size_t d = 0; d < x2.size(); ++d) x2[d] += step[d];
    }
    Point diff(x.size());
    for (std::size_t d = 0; d < x.size(); ++d) diff[d] = x[d] - x2[d];
    const double dx = norm(diff);
    if (dx == 0.0) continue;
    f.evaluate(x, y, g1);
    f.evaluate(x2, y, g2);
    for (std::size_t d = 0; d < g1.size(); ++d) g1[d] -= g2[d];
    best = std::max(best, norm(g1) / dx);
  }
  return best;
}

}  // namespace augsgd

#endif  // AUGSGD_OPTIMIZER_HPP
