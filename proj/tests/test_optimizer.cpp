#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "augsgd/harness.hpp"
#include "augsgd/optimizer.hpp"
#include "augsgd/schedule.hpp"
#include "support/oracles.hpp"

using namespace augsgd;

namespace {

/// f(x, y) = |x - y|^2.
struct Quadratic {
  std::size_t dim = 1;
  std::size_t dimension() const { return dim; }
  double evaluate(std::span<const double> x, std::span<const double> y, std::span<double> grad) const {
    double v = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      v += (x[i] - y[i]) * (x[i] - y[i]);
      grad[i] = 2.0 * (x[i] - y[i]);
    }
    return v;
  }
};

struct Flat {
  std::size_t dimension() const { return 3; }
  double evaluate(std::span<const double>, std::span<const double>, std::span<double> grad) const {
    std::fill(grad.begin(), grad.end(), 0.0);
    return 0.0;
  }
};

static_assert(StochasticObjective<Quadratic>);
static_assert(StochasticObjective<NetworkObjective>);

Measure two_points() { return Measure::finite_support({{-0.5}, {0.5}}, {}, 0.5); }

/// Certified constants for the quadratic toy: x f'(x) = 2x(x - y) >= 0 once
/// |x| >= 0.5, and |f'| <= 2(R1 + 0.5) on B_R1 x B_0.5.
TrainerBounds quadratic_bounds(const Schedule& s, double x0_norm) {
  TrainerBounds b;
  b.R0 = 0.5;
  b.A = s.sup();
  b.sum_sq = s.sum_sq();
  b.R1 = compute_R1(x0_norm, b.R0, s);
  b.phi_mode = PhiMode::Analytic;
  b.Phi_estimate = 2.0 * (b.R1 + 0.5);
  b.phi = b.Phi_estimate;
  return b;
}

}  // namespace

TEST(Schedule, BaselSum) {
  const Schedule s = make_schedule(1.0, 1.0);
  EXPECT_EQ(s.sup(), 1.0);
  EXPECT_NEAR(s.sum_sq(), 1.6449340668482264, 1e-15);
}

TEST(Schedule, ZetaSumsMatchStandardLibrary) {
  for (double p : {0.55, 0.6, 0.75, 0.8, 0.9, 0.99, 1.0}) {
    for (double c : {0.1, 1.0, 2.0}) {
      const Schedule s = make_schedule(c, p);
      const double want = c * c * std::riemann_zeta(2.0 * p);
      EXPECT_NEAR(s.sum_sq(), want, 1e-12 * want) << "p=" << p;
    }
  }
  // c = 2, p = 0.75: 4 zeta(1.5).
  EXPECT_NEAR(make_schedule(2.0, 0.75).sum_sq(), 10.449501394741953, 1e-11);
}

TEST(Schedule, TailsAreConsistentWithPartialSums) {
  for (double p : {0.6, 0.75, 1.0}) {
    const Schedule s = make_schedule(1.5, p);
    double head = 0.0;
    for (std::size_t k = 0; k <= 2000; ++k) {
      if (k % 97 == 0) {
        EXPECT_NEAR(s.tail_sq(k), s.sum_sq() - head, 1e-12 * s.sum_sq()) << "k=" << k;
      }
      head += s.at(k) * s.at(k);
    }
  }
}

TEST(Schedule, PositiveAndNonIncreasing) {
  const Schedule s = make_schedule(0.7, 0.8);
  for (std::size_t k = 0; k < 10000; ++k) {
    EXPECT_GT(s.at(k), 0.0);
    EXPECT_LE(s.at(k + 1), s.at(k));
  }
}

TEST(Schedule, DomainErrors) {
  auto code_of = [](double c, double p) {
    try {
      make_schedule(c, p);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  EXPECT_EQ(code_of(1.0, 0.5), ErrorCode::DivergentSquareSum);
  EXPECT_EQ(code_of(1.0, 1.01), ErrorCode::NonDivergentSum);
  EXPECT_EQ(code_of(0.0, 1.0), ErrorCode::InvalidConfig);
}

TEST(ComputeR1, Examples) {
  const Schedule s = make_schedule(1.0, 1.0);
  const double basel = std::numbers::pi * std::numbers::pi / 6.0;
  EXPECT_NEAR(compute_R1(0.0, 1.0, s), 2.1552109100615249, 1e-15);
  EXPECT_DOUBLE_EQ(compute_R1(0.0, 0.0, s), std::sqrt(basel));
  EXPECT_DOUBLE_EQ(compute_R1(1e6, 1.0, s), std::sqrt(1e12 + basel));
}

TEST(SgdStep, Examples) {
  const std::vector<double> x = {1.0, 1.0};
  const std::vector<double> zero = {0.0, 0.0};
  EXPECT_EQ(sgd_step(x, zero, 0.5, 2.0), x);
  const std::vector<double> g = {0.2, -0.4};
  const auto next = sgd_step(x, g, 0.5, 2.0);
  EXPECT_DOUBLE_EQ(next[0], 0.95);
  EXPECT_DOUBLE_EQ(next[1], 1.1);
  const std::vector<double> bad = {std::nan(""), 0.0};
  try {
    sgd_step(x, bad, 0.5, 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteGradient);
  }
  EXPECT_THROW(sgd_step(x, g, 0.5, 0.0), Error);
}

TEST(EstimatePhi, DegenerateObjectiveHitsFloor) {
  const PhiEstimate est = estimate_phi(Flat{}, 2, 1.0, 3.0, PhiMode::Sampled, 100, 2.0, std::nullopt, CounterRng(1));
  EXPECT_EQ(est.Phi_estimate, 0.0);
  EXPECT_EQ(est.phi, 1e-12);
}

TEST(EstimatePhi, AnalyticDominatesSampledMax) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 20; ++trial) {
    const AcyclicNet net = validate_graph(oracle::random_raw_dag(gen, 7));
    const std::size_t H = compute_metrics(net).graph_height;
    const double rho = 1.0;
    const auto spec = AugmentationSpec::shifted_power(0.1, 2.0, static_cast<double>(H) + 1.5);
    const Target target = Target::linear_tanh(net.input_count(), net.output_count(), 0.7, 1.3);
    const BoundCertificate cert = certify_bound(net, rho, target.omega(rho));
    const double R0 = solve_R0(cert, spec, H);
    const double R1 = compute_R1(0.0, R0, make_schedule(1.0, 1.0));
    const NetworkObjective f(net, target, spec);
    const PhiEstimate analytic = estimate_phi(f, net.input_count(), rho, R1, PhiMode::Analytic, 0, 1.0,
                                              analytic_phi_bound(cert, spec, H, R1), CounterRng(trial));
    const PhiEstimate sampled =
        estimate_phi(f, net.input_count(), rho, R1, PhiMode::Sampled, 500, 2.0, std::nullopt, CounterRng(trial));
    EXPECT_GE(analytic.Phi_estimate, sampled.sampled_max) << "trial " << trial;
    EXPECT_DOUBLE_EQ(sampled.Phi_estimate, 2.0 * sampled.sampled_max);
    EXPECT_GE(analytic.phi, analytic.Phi_estimate);
  }
}

TEST(Run, QuadraticToyConverges) {
  const Schedule s = make_schedule(1.0, 1.0);
  const std::vector<double> x0 = {1.0};
  const TrainerBounds b = quadratic_bounds(s, 1.0);
  RunOptions opt;
  opt.steps = 100000;
  const RunResult r = run(Quadratic{}, two_points(), s, b, x0, opt, CounterRng(42));
  EXPECT_LE(std::abs(r.x[0]), 0.05);
  // F(x) = x^2 + 0.25 exactly on the two-point measure.
  const StepRecord& last = r.diagnostics.steps.back();
  const double xK = last.x_norm;
  EXPECT_NEAR(last.F_est, xK * xK + 0.25, 1e-12);
  EXPECT_NEAR(last.gradF_norm_est, 2.0 * xK, 1e-12);
  EXPECT_EQ(last.F_se, 0.0);
}

TEST(Run, ZeroStepsReturnsStart) {
  const Schedule s = make_schedule(1.0, 1.0);
  const std::vector<double> x0 = {0.3};
  RunOptions opt;
  opt.steps = 0;
  const RunResult r = run(Quadratic{}, two_points(), s, quadratic_bounds(s, 0.3), x0, opt, CounterRng(1));
  EXPECT_TRUE(r.diagnostics.steps.empty());
  EXPECT_EQ(r.x, x0);
}

TEST(Run, DeterministicForEqualSeeds) {
  const Schedule s = make_schedule(1.0, 0.8);
  const Measure mu = Measure::uniform_ball(2, 1.0);
  const std::vector<double> x0 = {0.4, -0.2};
  TrainerBounds b = quadratic_bounds(s, norm(x0));
  b.phi = b.Phi_estimate = 2.0 * (b.R1 + 1.0);
  RunOptions opt;
  opt.steps = 3000;
  opt.cadence = 50;
  const auto a = run(Quadratic{2}, mu, s, b, x0, opt, CounterRng(5));
  const auto c = run(Quadratic{2}, mu, s, b, x0, opt, CounterRng(5));
  const auto d = run(Quadratic{2}, mu, s, b, x0, opt, CounterRng(6));
  EXPECT_EQ(to_csv(a.diagnostics), to_csv(c.diagnostics));
  EXPECT_NE(to_csv(a.diagnostics), to_csv(d.diagnostics));
}

TEST(Run, ViolatedHypothesisIsReported) {
  const Schedule s = make_schedule(1.0, 1.0);
  TrainerBounds b = quadratic_bounds(s, 0.0);
  b.R1 = 0.5;  // smaller than the start point: the certificate cannot hold
  const std::vector<double> x0 = {1.0};
  RunOptions opt;
  opt.steps = 10;
  try {
    run(Quadratic{}, two_points(), s, b, x0, opt, CounterRng(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BoundednessViolation);
  }
}

TEST(Run, InvariantsOnCertifiedRun) {
  const Schedule s = make_schedule(1.0, 1.0);
  const std::vector<double> x0 = {0.9};
  const Quadratic f;
  const Measure mu = two_points();
  const TrainerBounds b = quadratic_bounds(s, 0.9);
  RunOptions opt;
  opt.steps = 20000;
  opt.cadence = 10;
  const RunResult r = run(f, mu, s, b, x0, opt, CounterRng(3));
  const auto& steps = r.diagnostics.steps;
  double prevS = 0.0;
  double B = 0.0;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const StepRecord& rec = steps[k];
    EXPECT_LT(rec.x_norm, b.R1);
    EXPECT_GE(rec.margin, -1e-9 * b.R1 * b.R1);
    // |x_{k+1} - x_k| = (a_k / phi) |grad| <= a_k.
    EXPECT_LE(rec.grad_inst_norm, b.phi);
    const double next = k + 1 < steps.size() ? steps[k + 1].x_norm : r.diagnostics.final_x_norm;
    EXPECT_LE(std::abs(next - rec.x_norm), rec.a_k * (1.0 + 1e-12));
    EXPECT_GE(rec.S_k, prevS);
    prevS = rec.S_k;
    if (!std::isnan(rec.F_est)) B = std::max(B, std::abs(rec.F_est));
  }
  const double lipschitz = estimate_lipschitz(f, mu, b.R1, 200, CounterRng(3, channel::lipschitz));
  EXPECT_NEAR(lipschitz, 2.0, 1e-6);
  const double F0 = steps.front().F_est;
  EXPECT_LE(steps.back().S_k, b.phi * (B + F0 + 0.5 * lipschitz * s.sum_sq()));
}

TEST(Run, TailDecayOnToy) {
  const Schedule s = make_schedule(1.0, 1.0);
  const std::vector<double> x0 = {1.2};
  RunOptions opt;
  opt.steps = 50000;
  opt.cadence = 50;
  const RunResult r = run(Quadratic{}, two_points(), s, quadratic_bounds(s, 1.2), x0, opt, CounterRng(9));
  std::vector<double> g;
  for (const auto& rec : r.diagnostics.steps)
    if (!std::isnan(rec.gradF_norm_est)) g.push_back(rec.gradF_norm_est);
  const std::size_t tenth = g.size() / 10;
  std::vector<double> first(g.begin(), g.begin() + tenth), last(g.end() - tenth, g.end());
  auto median = [](std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
  };
  EXPECT_LT(median(last), median(first));
}

TEST(MeanObjective, MonteCarloAgreesWithExactSum) {
  const Quadratic f{2};
  std::vector<Point> pts;
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> unit(-0.6, 0.6);
  for (int i = 0; i < 40; ++i) pts.push_back({unit(gen), unit(gen)});
  const Measure exact = Measure::finite_support(pts, {}, 1.0);
  const std::vector<double> x = {0.3, -0.1};
  const MeanEstimate e = mean_objective(f, exact, x, 0, CounterRng(1).at(0));
  const MeanEstimate mc = mean_objective(f, exact, x, 4000, CounterRng(1).at(0), 10);
  EXPECT_TRUE(e.exact);
  EXPECT_FALSE(mc.exact);
  EXPECT_GT(mc.standard_error, 0.0);
  EXPECT_LE(std::abs(mc.value - e.value), 4.0 * mc.standard_error);
}

TEST(Diagnostics, CsvRoundTripIsExact) {
  Diagnostics d;
  for (std::size_t k = 0; k < 5; ++k) {
    StepRecord r;
    r.k = k;
    r.a_k = 1.0 / (k + 1.0);
    r.x_norm = std::sqrt(2.0) * k;
    r.margin = -1e-300;
    r.f_inst = 0.1 + k;
    r.grad_inst_norm = 1.0 / 3.0;
    if (k % 2 == 0) {
      r.F_est = std::exp(-static_cast<double>(k));
      r.F_se = 0.0;
      r.gradF_norm_est = 7e-17;
    }
    r.S_k = 1e10 * k;
    r.z_k = -0.5 * k;
    d.steps.push_back(r);
  }
  std::istringstream in(to_csv(d));
  const auto back = read_csv(in);
  ASSERT_EQ(back.size(), d.steps.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].k, d.steps[i].k);
    EXPECT_EQ(back[i].a_k, d.steps[i].a_k);
    EXPECT_EQ(back[i].x_norm, d.steps[i].x_norm);
    EXPECT_EQ(back[i].margin, d.steps[i].margin);
    EXPECT_EQ(std::isnan(back[i].F_est), std::isnan(d.steps[i].F_est));
    EXPECT_EQ(back[i].S_k, d.steps[i].S_k);
  }
  EXPECT_EQ(to_csv(d).substr(0, to_csv(d).find('\n')),
            "k,a_k,x_norm,margin,f_inst,grad_inst_norm,F_est,F_se,gradF_norm_est,S_k,z_k");
}

TEST(Diagnostics, MalformedCsvRejected) {
  for (const char* text : {"", "k,a_k\n", "k,a_k,x_norm,margin,f_inst,grad_inst_norm,F_est,F_se,gradF_norm_est,S_k,z_k\n1,2\n",
                           "k,a_k,x_norm,margin,f_inst,grad_inst_norm,F_est,F_se,gradF_norm_est,S_k,z_k\n0,x,,,,,,,,,\n"}) {
    std::istringstream in(text);
    try {
      read_csv(in);
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::MalformedCsv);
    }
  }
}
