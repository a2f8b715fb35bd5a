#ifndef AUGSGD_HARNESS_HPP
#define AUGSGD_HARNESS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "augsgd/activation.hpp"
#include "augsgd/augmentation.hpp"
#include "augsgd/diagnostics.hpp"
#include "augsgd/error.hpp"
#include "augsgd/graph.hpp"
#include "augsgd/layered.hpp"
#include "augsgd/network_io.hpp"
#include "augsgd/optimizer.hpp"
#include "augsgd/propagation.hpp"
#include "augsgd/rng.hpp"
#include "augsgd/sampling.hpp"
#include "augsgd/schedule.hpp"

namespace augsgd {

// Targets -----------------------------------------------------------------

/// A bounded target map g : B_rho -> R^m from one of the built-in families.
///
///   linear-tanh  g_j(x) = amplitude * tanh(slope * (W x)_j), W all-ones by default
///   teacher      output of a fixed network with known weights
///   constant     g(x) = value
class Target {
 public:
  enum class Kind { LinearTanh, Teacher, Constant };

  static Target linear_tanh(std::size_t inputs, std::size_t outputs, double amplitude, double slope,
                            std::vector<std::vector<double>> W = {}) {
    if (W.empty()) W.assign(outputs, std::vector<double>(inputs, 1.0));
    if (W.size() != outputs) fail(ErrorCode::DimensionMismatch, "linear-tanh W needs one row per output");
    for (const auto& row : W)
      if (row.size() != inputs) fail(ErrorCode::DimensionMismatch, "linear-tanh W needs one column per input");
    Target t(Kind::LinearTanh, inputs, outputs);
    t.amplitude_ = amplitude;
    t.slope_ = slope;
    t.W_ = std::move(W);
    return t;
  }

  static Target teacher(AcyclicNet net, WeightVector weights) {
    if (weights.size() != net.edge_count()) fail(ErrorCode::DimensionMismatch, "teacher weights do not fit its net");
    Target t(Kind::Teacher, net.input_count(), net.output_count());
    t.net_ = std::move(net);
    t.weights_ = std::move(weights);
    return t;
  }

  static Target constant(std::size_t inputs, std::vector<double> value) {
    Target t(Kind::Constant, inputs, value.size());
    t.value_ = std::move(value);
    return t;
  }

  Kind kind() const noexcept { return kind_; }
  std::size_t input_dim() const noexcept { return inputs_; }
  std::size_t output_dim() const noexcept { return outputs_; }
  const std::optional<AcyclicNet>& teacher_net() const noexcept { return net_; }
  const WeightVector& teacher_weights() const noexcept { return weights_; }

  std::vector<double> operator()(std::span<const double> x) const {
    switch (kind_) {
      case Kind::LinearTanh: {
        std::vector<double> y(outputs_);
        for (std::size_t j = 0; j < outputs_; ++j) {
          double s = 0.0;
          for (std::size_t i = 0; i < inputs_; ++i) s += W_[j][i] * x[i];
          y[j] = amplitude_ * std::tanh(slope_ * s);
        }
        return y;
      }
      case Kind::Teacher: return forward(*net_, weights_, x).output;
      case Kind::Constant: return value_;
    }
    return {};
  }

  /// Omega_rho >= sup_{|x| <= rho} |g(x)|.
  ///
  /// For a teacher net each vertex carries a bound on |z(v)|: rho at the
  /// inputs, sum |w| * bound(source) at the outputs, and at hidden vertices
  /// the activation bound (tanh also obeys |tanh t| <= |t|, relu and the
  /// identity only the latter).
  double omega(double rho) const {
    switch (kind_) {
      case Kind::LinearTanh: return std::abs(amplitude_) * std::sqrt(static_cast<double>(outputs_));
      case Kind::Constant: return norm(value_);
      case Kind::Teacher: {
        const AcyclicNet& net = *net_;
        std::vector<double> bound(net.vertex_count(), 0.0);
        for (std::size_t v : net.topological_order()) {
          if (net.is_input(v)) {
            bound[v] = rho;
            continue;
          }
          double linear = 0.0;
          for (std::size_t e : net.in_edges(v)) linear += std::abs(weights_[e]) * bound[net.edge(e).source];
          if (net.is_output(v)) {
            bound[v] = linear;
            continue;
          }
          const Activation& act = *net.activation(v);
          switch (act.kind()) {
            case Activation::Kind::Tanh: bound[v] = std::min(act.bound(), linear); break;
            case Activation::Kind::Relu:
            case Activation::Kind::Identity: bound[v] = linear; break;
            default: bound[v] = act.bound(); break;
          }
        }
        double sq = 0.0;
        for (std::size_t v : net.outputs()) sq += bound[v] * bound[v];
        return std::sqrt(sq);
      }
    }
    return 0.0;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    switch (kind_) {
      case Kind::LinearTanh:
        j = {{"kind", "linear-tanh"}, {"amplitude", amplitude_}, {"slope", slope_}, {"W", W_}};
        break;
      case Kind::Teacher:
        j = {{"kind", "teacher"}, {"network", network_to_json(*net_)}, {"weights", weights_.values()}};
        break;
      case Kind::Constant: j = {{"kind", "constant"}, {"value", value_}}; break;
    }
    return j;
  }

 private:
  Target(Kind kind, std::size_t inputs, std::size_t outputs) : kind_(kind), inputs_(inputs), outputs_(outputs) {}

  Kind kind_;
  std::size_t inputs_;
  std::size_t outputs_;
  double amplitude_ = 0.0;
  double slope_ = 0.0;
  std::vector<std::vector<double>> W_;
  std::optional<AcyclicNet> net_;
  WeightVector weights_;
  std::vector<double> value_;
};

// Configuration -----------------------------------------------------------

enum class Engine { Dag, Layered };

struct InitSpec {
  enum class Kind { Uniform, Constant, Values };
  Kind kind = Kind::Uniform;
  double low = -0.5;
  double high = 0.5;
  double value = 0.0;
  std::vector<double> values;
};

struct ExperimentConfig {
  ParsedNetwork network;
  Engine engine = Engine::Dag;
  Target target = Target::constant(1, {0.0});
  Measure measure = Measure::uniform_ball(1, 1.0);
  AugmentationSpec augmentation;
  double c = 1.0;
  double p = 1.0;
  PhiMode phi_mode = PhiMode::Analytic;
  std::size_t phi_samples = 4096;
  double phi_safety = 2.0;
  InitSpec init;
  std::size_t steps = 1000;
  std::uint64_t seed = 0;
  std::size_t cadence = 100;
  std::size_t mc_samples = 256;
  bool unchecked = false;
};

namespace detail {

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string(key) + ": " + e.what());
  }
}

inline const nlohmann::json& require(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) fail(ErrorCode::InvalidConfig, std::string("missing field '") + key + "'");
  return j.at(key);
}

inline WeightVector uniform_weights(std::size_t n, double low, double high, RandomStream rng) {
  WeightVector w = WeightVector::zeros(n);
  for (std::size_t e = 0; e < n; ++e) w[e] = rng.uniform(low, high);
  return w;
}

inline Target parse_target(const nlohmann::json& j, const AcyclicNet& student, std::uint64_t seed,
                           const std::filesystem::path& base_dir) {
  const std::string kind = get_or<std::string>(j, "kind", "");
  if (kind == "linear-tanh") {
    return Target::linear_tanh(student.input_count(), student.output_count(), get_or(j, "amplitude", 1.0),
                               get_or(j, "slope", 1.0), get_or<std::vector<std::vector<double>>>(j, "W", {}));
  }
  if (kind == "teacher") {
    AcyclicNet net = j.contains("network") ? parse_network(j.at("network"), base_dir).net : student;
    if (net.input_count() != student.input_count() || net.output_count() != student.output_count())
      fail(ErrorCode::DimensionMismatch, "teacher and student nets differ in input or output count");
    WeightVector w;
    if (j.contains("weights")) {
      w = weights_from_json(net, j.at("weights").is_object() ? j.at("weights") : nlohmann::json{{"weights", j.at("weights")}});
    } else {
      const double scale = get_or(j, "scale", 1.0);
      const std::uint64_t teacher_seed = get_or<std::uint64_t>(j, "seed", seed);
      w = uniform_weights(net.edge_count(), -scale, scale, CounterRng(teacher_seed, channel::teacher).at(0));
    }
    return Target::teacher(std::move(net), std::move(w));
  }
  if (kind == "constant") {
    auto value = get_or<std::vector<double>>(j, "value", std::vector<double>(student.output_count(), 0.0));
    if (value.size() != student.output_count()) fail(ErrorCode::DimensionMismatch, "constant target has wrong length");
    return Target::constant(student.input_count(), std::move(value));
  }
  fail(ErrorCode::InvalidConfig, "target.kind must be linear-tanh, teacher or constant");
}

inline Measure parse_measure(const nlohmann::json& j, std::size_t input_dim) {
  const std::string kind = get_or<std::string>(j, "kind", "");
  const double rho = get_or(j, "rho", std::numeric_limits<double>::quiet_NaN());
  if (!std::isfinite(rho)) fail(ErrorCode::InfiniteRho, "measure.rho must be a finite number");
  if (kind == "uniform-ball") return Measure::uniform_ball(input_dim, rho);
  if (kind == "finite") {
    auto points = get_or<std::vector<Point>>(j, "points", {});
    Measure m = Measure::finite_support(std::move(points), get_or<std::vector<double>>(j, "weights", {}), rho);
    if (m.dimension() != input_dim) fail(ErrorCode::DimensionMismatch, "support points do not match the input count");
    return m;
  }
  fail(ErrorCode::InvalidConfig, "measure.kind must be finite or uniform-ball");
}

inline AugmentationSpec parse_augmentation(const nlohmann::json& j) {
  AugmentationSpec spec;
  spec.kind = augmentation_kind_from_name(get_or<std::string>(j, "kind", "none"));
  spec.delta = get_or(j, "delta", 0.0);
  spec.r = get_or(j, "r", 0.0);
  spec.t = get_or(j, "t", 0.0);
  spec.q = get_or(j, "q", 1);
  return spec;
}

inline InitSpec parse_init(const nlohmann::json& j) {
  InitSpec init;
  const std::string kind = get_or<std::string>(j, "kind", "uniform");
  if (kind == "uniform") {
    init.low = get_or(j, "low", -0.5);
    init.high = get_or(j, "high", 0.5);
    if (!(init.low <= init.high)) fail(ErrorCode::InvalidConfig, "init.low must not exceed init.high");
  } else if (kind == "constant") {
    init.kind = InitSpec::Kind::Constant;
    init.value = get_or(j, "value", 0.0);
  } else if (kind == "values") {
    init.kind = InitSpec::Kind::Values;
    init.values = get_or<std::vector<double>>(j, "values", {});
  } else {
    fail(ErrorCode::InvalidConfig, "init.kind must be uniform, constant or values");
  }
  return init;
}

}  // namespace detail

/// Builds a config from its JSON form; relative file references resolve
/// against `base_dir`.
inline ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  if (!j.is_object()) fail(ErrorCode::InvalidConfig, "config must be a JSON object");
  using detail::get_or;
  ExperimentConfig cfg;
  cfg.network = parse_network(detail::require(j, "network"), base_dir);
  const std::string engine = get_or<std::string>(j, "engine", "dag");
  if (engine == "layered") {
    if (!cfg.network.layered) fail(ErrorCode::InvalidConfig, "the layered engine needs the layered network shorthand");
    cfg.engine = Engine::Layered;
  } else if (engine != "dag") {
    fail(ErrorCode::InvalidConfig, "engine must be dag or layered");
  }
  const std::string error = get_or<std::string>(j, "error", "squared");
  if (error != "squared") fail(ErrorCode::InvalidConfig, "only the squared error is supported");

  cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
  const AcyclicNet& net = cfg.network.net;
  cfg.target = detail::parse_target(detail::require(j, "target"), net, cfg.seed, base_dir);
  cfg.measure = detail::parse_measure(detail::require(j, "measure"), net.input_count());
  cfg.augmentation = detail::parse_augmentation(get_or(j, "augmentation", nlohmann::json::object()));
  const auto sched = get_or(j, "schedule", nlohmann::json::object());
  cfg.c = get_or(sched, "c", 1.0);
  cfg.p = get_or(sched, "p", 1.0);
  Schedule::power_law(cfg.c, cfg.p);
  const auto phi = get_or(j, "phi", nlohmann::json::object());
  cfg.phi_mode = phi_mode_from_name(get_or<std::string>(phi, "mode", "analytic"));
  cfg.phi_samples = get_or<std::size_t>(phi, "samples", 4096);
  cfg.phi_safety = get_or(phi, "safety", 2.0);
  if (!(cfg.phi_safety >= 1.0)) fail(ErrorCode::InvalidConfig, "phi.safety must be at least 1");
  cfg.init = detail::parse_init(get_or(j, "init", nlohmann::json::object()));
  if (cfg.init.kind == InitSpec::Kind::Values && cfg.init.values.size() != net.edge_count())
    fail(ErrorCode::DimensionMismatch, "init.values needs one entry per edge");
  cfg.steps = get_or<std::size_t>(j, "steps", 1000);
  cfg.cadence = get_or<std::size_t>(j, "cadence", 100);
  if (cfg.cadence == 0) fail(ErrorCode::InvalidConfig, "cadence must be positive");
  cfg.mc_samples = get_or<std::size_t>(j, "mc_samples", 256);
  cfg.unchecked = get_or(j, "unchecked", false);
  return cfg;
}

/// AUGSGD_SEED, when set to an unsigned integer, replaces the config seed.
inline void apply_seed_override(ExperimentConfig& cfg) {
  const char* env = std::getenv("AUGSGD_SEED");
  if (!env || !*env) return;
  char* end = nullptr;
  const unsigned long long seed = std::strtoull(env, &end, 10);
  if (*end != '\0') fail(ErrorCode::InvalidConfig, std::string("AUGSGD_SEED is not an unsigned integer: ") + env);
  cfg.seed = seed;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  ExperimentConfig cfg = parse_config(read_json_file(path), path.parent_path());
  apply_seed_override(cfg);
  return cfg;
}

inline WeightVector initial_weights(const ExperimentConfig& cfg) {
  const std::size_t n = cfg.network.net.edge_count();
  switch (cfg.init.kind) {
    case InitSpec::Kind::Uniform:
      return detail::uniform_weights(n, cfg.init.low, cfg.init.high, CounterRng(cfg.seed, channel::init).at(0));
    case InitSpec::Kind::Constant: return WeightVector(std::vector<double>(n, cfg.init.value));
    case InitSpec::Kind::Values: return WeightVector(cfg.init.values);
  }
  return WeightVector::zeros(n);
}

// Objective ---------------------------------------------------------------

/// f(lambda, x) = |F(x, lambda) - g(x)|^2 + alpha(lambda) with its gradient
/// in lambda, computed by either propagation engine.
class NetworkObjective {
 public:
  NetworkObjective(AcyclicNet net, Target target, AugmentationSpec alpha,
                   std::optional<LayeredNetwork> layered = std::nullopt)
      : net_(std::move(net)), target_(std::move(target)), alpha_(alpha), layered_(std::move(layered)) {
    if (target_.input_dim() != net_.input_count() || target_.output_dim() != net_.output_count())
      fail(ErrorCode::DimensionMismatch, "target and net differ in input or output count");
    if (layered_) index_ = layer_edge_index(*layered_, net_);
  }

  std::size_t dimension() const noexcept { return net_.edge_count(); }
  const AcyclicNet& net() const noexcept { return net_; }
  const Target& target() const noexcept { return target_; }
  const AugmentationSpec& augmentation() const noexcept { return alpha_; }

  double evaluate(std::span<const double> lambda, std::span<const double> x, std::span<double> grad) const {
    const std::vector<double> y = target_(x);
    double value = layered_ ? layered_error(lambda, x, y, grad) : dag_error(lambda, x, y, grad);
    if (alpha_.kind != AugmentationSpec::Kind::None) {
      value += alpha_value(alpha_, lambda);
      const std::vector<double> ga = alpha_grad(alpha_, lambda);
      for (std::size_t e = 0; e < grad.size(); ++e) grad[e] += ga[e];
    }
    return value;
  }

  /// Network output F(x, lambda).
  std::vector<double> output(std::span<const double> lambda, std::span<const double> x) const {
    if (layered_) return forward_layered(*layered_, to_layer_weights(*layered_, index_, lambda), x);
    return forward(net_, WeightVector({lambda.begin(), lambda.end()}), x).output;
  }

 private:
  double dag_error(std::span<const double> lambda, std::span<const double> x, std::span<const double> y,
                   std::span<double> grad) const {
    const ErrorGradient eg = error_and_grad(net_, WeightVector({lambda.begin(), lambda.end()}), x, y);
    std::copy(eg.gradient.dlambda.flat().begin(), eg.gradient.dlambda.flat().end(), grad.begin());
    return eg.error;
  }

  double layered_error(std::span<const double> lambda, std::span<const double> x, std::span<const double> y,
                       std::span<double> grad) const {
    const LayerWeights w = to_layer_weights(*layered_, index_, lambda);
    const LayeredRecord rec = forward_layered_record(*layered_, w, x);
    std::vector<double> seed(y.size());
    double error = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) {
      const double diff = rec.z[0][j] - y[j];
      error += diff * diff;
      seed[j] = 2.0 * diff;
    }
    const LayeredGradient g = backward_layered(*layered_, w, rec, seed);
    const WeightVector flat = from_layer_weights(*layered_, index_, g.dweights);
    std::copy(flat.flat().begin(), flat.flat().end(), grad.begin());
    return error;
  }

  AcyclicNet net_;
  Target target_;
  AugmentationSpec alpha_;
  std::optional<LayeredNetwork> layered_;
  std::vector<std::vector<std::size_t>> index_;
};

inline NetworkObjective make_objective(const ExperimentConfig& cfg, bool with_augmentation = true) {
  return NetworkObjective(cfg.network.net, cfg.target,
                          with_augmentation ? cfg.augmentation : AugmentationSpec::none(),
                          cfg.engine == Engine::Layered ? cfg.network.layered : std::nullopt);
}

/// Mean error E(lambda) = E_mu |F(x, lambda) - g(x)|^2 (plus alpha when the
/// objective carries one) and its gradient; exact for finite-support mu.
inline MeanEstimate mean_error(const NetworkObjective& f, const Measure& mu, std::span<const double> lambda,
                               std::size_t samples, RandomStream rng) {
  return mean_objective(f, mu, lambda, samples, rng);
}

// Pipelines ---------------------------------------------------------------

/// Every certified constant of an augmented run.
struct CertifiedConstants {
  std::size_t graph_height = 0;
  double omega = 0.0;
  BoundCertificate certificate;
  double R0 = 0.0;
  double x0_norm = 0.0;
  double R1 = 0.0;
  PhiEstimate phi;
  TrainerBounds bounds;
};

inline CertifiedConstants certify(const ExperimentConfig& cfg) {
  const AcyclicNet& net = cfg.network.net;
  if (cfg.augmentation.kind == AugmentationSpec::Kind::None)
    fail(ErrorCode::InvalidAugmentation, "augmented training needs an augmentation other than none");
  if (!cfg.unchecked) require_provable(net);
  if (!std::isfinite(net.activation_bound()))
    fail(ErrorCode::UncheckedActivation, "the bound certificate needs bounded activations");

  CertifiedConstants out;
  out.graph_height = compute_metrics(net).graph_height;
  validate(cfg.augmentation, out.graph_height, !cfg.unchecked);
  out.omega = cfg.target.omega(cfg.measure.rho());
  out.certificate = certify_bound(net, cfg.measure.rho(), out.omega);
  out.R0 = solve_R0(out.certificate, cfg.augmentation, out.graph_height);
  const Schedule schedule = Schedule::power_law(cfg.c, cfg.p);
  out.x0_norm = initial_weights(cfg).norm();
  out.R1 = compute_R1(out.x0_norm, out.R0, schedule);

  const NetworkObjective f = make_objective(cfg);
  out.phi = estimate_phi(f, net.input_count(), cfg.measure.rho(), out.R1, cfg.phi_mode, cfg.phi_samples,
                         cfg.phi_safety, analytic_phi_bound(out.certificate, cfg.augmentation, out.graph_height, out.R1),
                         CounterRng(cfg.seed, channel::phi));

  out.bounds.R0 = out.R0;
  out.bounds.A = schedule.sup();
  out.bounds.sum_sq = schedule.sum_sq();
  out.bounds.R1 = out.R1;
  out.bounds.phi_mode = cfg.phi_mode;
  out.bounds.Phi_estimate = out.phi.Phi_estimate;
  out.bounds.phi = out.phi.phi;
  return out;
}

struct TrainOutcome {
  bool augmented = true;
  std::optional<CertifiedConstants> constants;
  TrainerBounds bounds;
  RunResult result;
};

inline RunOptions run_options(const ExperimentConfig& cfg, bool enforce) {
  RunOptions options;
  options.steps = cfg.steps;
  options.cadence = cfg.cadence;
  options.mc_samples = cfg.mc_samples;
  options.enforce_bounds = enforce;
  return options;
}

/// certify -> run lambda_{k+1} = lambda_k - (a_k / phi) grad(E + alpha).
inline TrainOutcome train_augmented(const ExperimentConfig& cfg) {
  TrainOutcome out;
  out.constants = certify(cfg);
  out.bounds = out.constants->bounds;
  out.result = run(make_objective(cfg), cfg.measure, Schedule::power_law(cfg.c, cfg.p), out.bounds,
                   initial_weights(cfg).values(), run_options(cfg, true), CounterRng(cfg.seed));
  return out;
}

/// Plain back-propagation with raw steps a_k, no augmentation and no
/// boundedness check; divergence is recorded, not raised.
inline TrainOutcome train_classical(const ExperimentConfig& cfg) {
  if (!cfg.unchecked) require_provable(cfg.network.net);
  TrainOutcome out;
  out.augmented = false;
  const Schedule schedule = Schedule::power_law(cfg.c, cfg.p);
  out.bounds.A = schedule.sup();
  out.bounds.sum_sq = schedule.sum_sq();
  out.bounds.phi = 1.0;
  out.result = run(make_objective(cfg, false), cfg.measure, schedule, out.bounds, initial_weights(cfg).values(),
                   run_options(cfg, false), CounterRng(cfg.seed));
  return out;
}

inline nlohmann::json bounds_to_json(const ExperimentConfig& cfg, const TrainOutcome& out) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json j;
  j["mode"] = out.augmented ? "augmented" : "classical";
  j["seed"] = cfg.seed;
  j["A"] = out.bounds.A;
  j["sum_sq"] = out.bounds.sum_sq;
  j["phi"] = out.bounds.phi;
  if (out.constants) {
    const CertifiedConstants& c = *out.constants;
    j["graph_height"] = c.graph_height;
    j["omega"] = c.omega;
    j["M"] = c.certificate.m_bound;
    j["theta_rho"] = c.certificate.theta_rho;
    j["R0"] = c.R0;
    j["R1"] = c.R1;
    j["Phi_estimate"] = c.phi.Phi_estimate;
    j["phi_mode"] = std::string(to_string(c.bounds.phi_mode));
  } else {
    j["R1"] = nullptr;
  }
  j["final_x_norm"] = num(out.result.diagnostics.final_x_norm);
  j["final_margin"] = num(out.result.diagnostics.final_margin);
  j["diverged"] = out.result.diagnostics.diverged;
  if (!out.result.diagnostics.note.empty()) j["note"] = out.result.diagnostics.note;
  return j;
}

// Gradient check ----------------------------------------------------------

/// Random acyclic net with at most `max_vertices` vertices: inputs first,
/// outputs last, hidden vertices between, random forward edges, then one
/// extra edge wherever a vertex would lack an in- or out-neighbour.
inline AcyclicNet random_dag(RandomStream& rng, std::size_t max_vertices, std::span<const Activation> activations,
                             double edge_probability = 0.4) {
  const std::size_t n = 2 + static_cast<std::size_t>(rng.below(std::max<std::size_t>(max_vertices, 2) - 1));
  const std::size_t n_in = 1 + static_cast<std::size_t>(rng.below(std::max<std::size_t>(1, (n - 1) / 2)));
  const std::size_t n_out = 1 + static_cast<std::size_t>(rng.below(std::max<std::size_t>(1, (n - n_in) / 2)));
  auto role = [&](std::size_t i) { return i < n_in ? 0 : (i >= n - n_out ? 2 : 1); };
  auto vid = [](std::size_t i) { return std::string(i < 10 ? "v0" : "v") + std::to_string(i); };

  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (role(i) != 2 && role(j) != 0 && rng.uniform() < edge_probability) adj[i][j] = true;
  for (std::size_t j = n_in; j < n; ++j) {
    bool has_in = false;
    for (std::size_t i = 0; i < j; ++i) has_in = has_in || adj[i][j];
    if (!has_in) {
      std::size_t upper = std::min(j, n - n_out);  // candidate sources: 0 .. upper-1
      adj[rng.below(upper)][j] = true;
    }
  }
  for (std::size_t i = 0; i < n - n_out; ++i) {
    bool has_out = false;
    for (std::size_t j = i + 1; j < n; ++j) has_out = has_out || adj[i][j];
    if (!has_out) {
      const std::size_t lower = std::max(i + 1, n_in);  // candidate targets: lower .. n-1
      adj[i][lower + rng.below(n - lower)] = true;
    }
  }

  RawGraph raw;
  for (std::size_t i = 0; i < n; ++i) {
    raw.vertices.push_back(vid(i));
    if (role(i) == 0) raw.inputs.push_back(vid(i));
    if (role(i) == 2) raw.outputs.push_back(vid(i));
    if (role(i) == 1) raw.activations.emplace(vid(i), activations[rng.below(activations.size())]);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (adj[i][j]) raw.edges.emplace_back(vid(i), vid(j));
  return validate_graph(raw);
}

/// Random layered shape: 2 to 4 layers, input width <= 4, hidden <= 5,
/// output <= 2.
inline LayeredNetwork random_layered(RandomStream& rng, std::span<const Activation> activations) {
  LayeredNetwork shape;
  const std::size_t layers = 2 + static_cast<std::size_t>(rng.below(3));
  shape.sizes.push_back(1 + rng.below(4));
  for (std::size_t i = 0; i + 2 < layers; ++i) {
    shape.sizes.push_back(1 + rng.below(5));
    shape.hidden.push_back(activations[rng.below(activations.size())]);
  }
  shape.sizes.push_back(1 + rng.below(2));
  return shape;
}

struct GradCheckReport {
  std::size_t instances = 0;
  std::size_t entries = 0;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;  ///< over entries whose absolute error exceeds the floor
  std::size_t worst_instance = 0;
};

/// Compares the backward pass against central differences of the squared
/// error, alternating random DAGs (<= 10 vertices) and random layered nets
/// (<= [4, 5, 5, 2]) run through the layered engine. Weights, inputs and
/// targets are uniform in [-1, 1]; the step is 1e-6 max(1, |lambda_e|).
/// An entry counts toward max_rel_error only when its absolute error
/// exceeds `abs_floor`.
inline GradCheckReport grad_check(std::size_t instances, std::uint64_t seed, double abs_floor = 1e-8) {
  const Activation acts[] = {Activation(Activation::Kind::Tanh), Activation(Activation::Kind::Logistic),
                             Activation(Activation::Kind::Gaussian)};
  const CounterRng corpus(seed, channel::corpus);
  GradCheckReport report;
  report.instances = instances;
  for (std::size_t i = 0; i < instances; ++i) {
    RandomStream rng = corpus.at(i);
    std::optional<LayeredNetwork> shape;
    AcyclicNet net = [&] {
      if (i % 2 == 0) return random_dag(rng, 10, acts);
      shape = random_layered(rng, acts);
      return shape->to_graph();
    }();
    std::vector<double> lambda(net.edge_count()), x(net.input_count()), y(net.output_count());
    for (double& v : lambda) v = rng.uniform(-1.0, 1.0);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    for (double& v : y) v = rng.uniform(-1.0, 1.0);
    const NetworkObjective f(net, Target::constant(x.size(), y), AugmentationSpec::none(), shape);

    std::vector<double> grad(lambda.size()), scratch(lambda.size());
    f.evaluate(lambda, x, grad);
    for (std::size_t e = 0; e < lambda.size(); ++e) {
      const double h = 1e-6 * std::max(1.0, std::abs(lambda[e]));
      std::vector<double> lp = lambda, lm = lambda;
      lp[e] += h;
      lm[e] -= h;
      const double fd = (f.evaluate(lp, x, scratch) - f.evaluate(lm, x, scratch)) / (2.0 * h);
      const double abs_err = std::abs(fd - grad[e]);
      ++report.entries;
      if (abs_err > report.max_abs_error) report.max_abs_error = abs_err;
      if (abs_err > abs_floor) {
        const double rel = abs_err / std::max(std::abs(fd), std::abs(grad[e]));
        if (rel > report.max_rel_error) {
          report.max_rel_error = rel;
          report.worst_instance = i;
        }
      }
    }
  }
  return report;
}

// Report ------------------------------------------------------------------

struct RunSummary {
  std::string file;
  std::size_t steps = 0;
  double final_objective = missing;   ///< last F_est: mean error plus augmentation
  double final_grad_norm = missing;   ///< last gradF_norm_est
  double max_x_norm = missing;
  double R1 = missing;
  double min_margin = missing;
  double S_K = missing;
  double z_K = missing;
};

inline RunSummary summarize(const std::vector<StepRecord>& rows, std::string file, double R1 = missing) {
  RunSummary s;
  s.file = std::move(file);
  s.steps = rows.size();
  s.R1 = R1;
  for (const StepRecord& r : rows) {
    if (!std::isnan(r.F_est)) s.final_objective = r.F_est;
    if (!std::isnan(r.gradF_norm_est)) s.final_grad_norm = r.gradF_norm_est;
    if (!std::isnan(r.x_norm) && (std::isnan(s.max_x_norm) || r.x_norm > s.max_x_norm)) s.max_x_norm = r.x_norm;
    if (!std::isnan(r.margin) && (std::isnan(s.min_margin) || r.margin < s.min_margin)) s.min_margin = r.margin;
  }
  if (!rows.empty()) {
    s.S_K = rows.back().S_k;
    s.z_K = rows.back().z_k;
  }
  return s;
}

inline nlohmann::json to_json(const RunSummary& s) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json j = {{"file", s.file},
                      {"steps", s.steps},
                      {"final_objective", num(s.final_objective)},
                      {"final_grad_norm", num(s.final_grad_norm)},
                      {"max_x_norm", num(s.max_x_norm)},
                      {"R1", num(s.R1)},
                      {"min_margin", num(s.min_margin)},
                      {"S_K", num(s.S_K)},
                      {"z_K", num(s.z_K)}};
  if (std::isfinite(s.R1) && std::isfinite(s.max_x_norm))
    j["bounded"] = s.max_x_norm < s.R1;
  else
    j["bounded"] = nullptr;
  return j;
}

/// Plot table: k followed by objective and gradient-norm columns for every
/// run, on the union of steps where any run has an estimate.
inline void write_plot_csv(std::ostream& out, const std::vector<std::vector<StepRecord>>& runs) {
  std::map<std::size_t, std::vector<std::pair<double, double>>> table;
  for (std::size_t i = 0; i < runs.size(); ++i)
    for (const StepRecord& r : runs[i]) {
      if (std::isnan(r.F_est) && std::isnan(r.gradF_norm_est)) continue;
      auto& row = table[r.k];
      row.resize(runs.size(), {missing, missing});
      row[i] = {r.F_est, r.gradF_norm_est};
    }
  out << 'k';
  for (std::size_t i = 0; i < runs.size(); ++i) out << ",run" << i << "_objective,run" << i << "_grad_norm";
  out << '\n';
  for (auto& [k, row] : table) {
    row.resize(runs.size(), {missing, missing});
    out << k;
    for (const auto& [obj, grad] : row) {
      out << ',';
      detail::put_number(out, obj);
      out << ',';
      detail::put_number(out, grad);
    }
    out << '\n';
  }
}

/// R1 from the bounds.json written next to a diagnostics file, if any.
inline double sidecar_R1(const std::filesystem::path& csv) {
  const auto sidecar = csv.parent_path() / "bounds.json";
  if (!std::filesystem::exists(sidecar)) return missing;
  const nlohmann::json j = read_json_file(sidecar);
  return j.contains("R1") && j.at("R1").is_number() ? j.at("R1").get<double>() : missing;
}

/// Reads every diagnostics CSV, writes the JSON summary to `summary_path`
/// and the plot table next to it (same stem, suffix _plot.csv).
inline nlohmann::json report(const std::vector<std::filesystem::path>& csvs, const std::filesystem::path& summary_path) {
  if (csvs.empty()) fail(ErrorCode::InvalidConfig, "report needs at least one diagnostics file");
  std::vector<std::vector<StepRecord>> runs;
  nlohmann::json summary;
  summary["runs"] = nlohmann::json::array();
  for (const auto& path : csvs) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    runs.push_back(read_csv(in));
    summary["runs"].push_back(to_json(summarize(runs.back(), path.string(), sidecar_R1(path))));
  }
  std::filesystem::path plot = summary_path;
  plot.replace_filename(summary_path.stem().string() + "_plot.csv");
  summary["plot"] = plot.string();
  {
    std::ofstream out(summary_path);
    if (!out) fail(ErrorCode::Io, "cannot write " + summary_path.string());
    out << summary.dump(2) << '\n';
  }
  std::ofstream out(plot);
  if (!out) fail(ErrorCode::Io, "cannot write " + plot.string());
  write_plot_csv(out, runs);
  return summary;
}

}  // namespace augsgd

#endif  // AUGSGD_HARNESS_HPP
