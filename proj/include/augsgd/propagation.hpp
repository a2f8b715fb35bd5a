#ifndef AUGSGD_PROPAGATION_HPP
#define AUGSGD_PROPAGATION_HPP

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "augsgd/error.hpp"
#include "augsgd/graph.hpp"

namespace augsgd {

/// The weights lambda as a flat vector in canonical edge order.
class WeightVector {
 public:
  WeightVector() = default;
  explicit WeightVector(std::vector<double> values) : values_(std::move(values)) {}

  static WeightVector zeros(std::size_t n) { return WeightVector(std::vector<double>(n, 0.0)); }
  static WeightVector zeros(const AcyclicNet& net) { return zeros(net.edge_count()); }

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t e) const { return values_[e]; }
  double& operator[](std::size_t e) { return values_[e]; }

  std::span<const double> flat() const noexcept { return values_; }
  std::span<double> flat() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  /// Weight of the edge (source, target), looked up by vertex id.
  double at(const AcyclicNet& net, const std::string& source, const std::string& target) const {
    auto e = net.find_edge(source, target);
    if (!e) fail(ErrorCode::UnknownVertexInEdge, "no edge (" + source + "," + target + ")");
    return values_.at(*e);
  }

  double norm() const noexcept { return std::sqrt(squared_norm()); }
  double squared_norm() const noexcept {
    return std::inner_product(values_.begin(), values_.end(), values_.begin(), 0.0);
  }

  bool finite() const noexcept {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const WeightVector&, const WeightVector&) = default;

 private:
  std::vector<double> values_;
};

/// Everything forward propagation computes, kept for the backward pass.
struct ActivationRecord {
  std::vector<double> pre_activation;   ///< weighted input sum; 0 for inputs
  std::vector<double> post_activation;  ///< z(v)
  std::vector<double> output;           ///< z(u_1), ..., z(u_m)
};

struct GradientRecord {
  std::vector<double> dz;  ///< dE/dz(v) per vertex
  WeightVector dlambda;    ///< dE/dlambda(e) per edge
};

namespace detail {

inline void require_weights(const AcyclicNet& net, const WeightVector& lambda) {
  if (lambda.size() != net.edge_count())
    fail(ErrorCode::DimensionMismatch, "weight vector has " + std::to_string(lambda.size()) +
                                           " entries, net has " + std::to_string(net.edge_count()) + " edges");
}

// sigma'(t) with the identity convention at output vertices.
inline double slope_at(const AcyclicNet& net, std::size_t v, double pre) {
  const auto& act = net.activation(v);
  return act ? act->derivative(pre) : 1.0;
}

}  // namespace detail

/// Forward propagation: inputs copy x, hidden vertices apply their
/// activation to the weighted in-sum, outputs keep the weighted in-sum.
inline ActivationRecord forward(const AcyclicNet& net, const WeightVector& lambda, std::span<const double> x) {
  detail::require_weights(net, lambda);
  if (x.size() != net.input_count())
    fail(ErrorCode::DimensionMismatch, "input has " + std::to_string(x.size()) + " entries, net expects " +
                                           std::to_string(net.input_count()));
  ActivationRecord rec;
  rec.pre_activation.assign(net.vertex_count(), 0.0);
  rec.post_activation.assign(net.vertex_count(), 0.0);
  for (std::size_t i = 0; i < net.input_count(); ++i) rec.post_activation[net.inputs()[i]] = x[i];

  for (std::size_t v : net.topological_order()) {
    if (net.is_input(v)) continue;
    double sum = 0.0;
    for (std::size_t e : net.in_edges(v)) sum += lambda[e] * rec.post_activation[net.edge(e).source];
    rec.pre_activation[v] = sum;
    const auto& act = net.activation(v);
    rec.post_activation[v] = act ? act->value(sum) : sum;
  }
  rec.output.reserve(net.output_count());
  for (std::size_t u : net.outputs()) rec.output.push_back(rec.post_activation[u]);
  return rec;
}

/// Backward propagation of dE/dz at the outputs through the record of a
/// forward pass with the same (net, lambda). Vertices are visited in
/// reverse topological order, so every dE/dz(t(e)) for e in Out(v) is final
/// before v is reached.
inline GradientRecord backward(const AcyclicNet& net, const WeightVector& lambda, const ActivationRecord& record,
                               std::span<const double> dE_dz_out) {
  detail::require_weights(net, lambda);
  if (record.pre_activation.size() != net.vertex_count() || record.post_activation.size() != net.vertex_count() ||
      record.output.size() != net.output_count())
    fail(ErrorCode::StaleRecord, "activation record does not match the network");
  if (dE_dz_out.size() != net.output_count())
    fail(ErrorCode::DimensionMismatch, "output gradient has " + std::to_string(dE_dz_out.size()) +
                                           " entries, net has " + std::to_string(net.output_count()) + " outputs");

  GradientRecord grad;
  grad.dz.assign(net.vertex_count(), 0.0);
  grad.dlambda = WeightVector::zeros(net);
  // delta[v] = dE/dz(v) * sigma_v'(pre(v)), filled once v is final.
  std::vector<double> delta(net.vertex_count(), 0.0);
  for (std::size_t j = 0; j < net.output_count(); ++j) grad.dz[net.outputs()[j]] = dE_dz_out[j];

  const auto order = net.topological_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::size_t v = *it;
    if (!net.is_output(v)) {
      double sum = 0.0;
      for (std::size_t e : net.out_edges(v)) sum += delta[net.edge(e).target] * lambda[e];
      grad.dz[v] = sum;
    }
    if (!net.is_input(v)) delta[v] = grad.dz[v] * detail::slope_at(net, v, record.pre_activation[v]);
  }
  for (std::size_t e = 0; e < net.edge_count(); ++e)
    grad.dlambda[e] = delta[net.edge(e).target] * record.post_activation[net.edge(e).source];
  return grad;
}

struct ErrorGradient {
  double error = 0.0;
  ActivationRecord record;
  GradientRecord gradient;
};

/// E(z, y) = ||z - y||^2 and its gradient with respect to the weights.
inline ErrorGradient error_and_grad(const AcyclicNet& net, const WeightVector& lambda, std::span<const double> x,
                                    std::span<const double> y) {
  if (y.size() != net.output_count())
    fail(ErrorCode::DimensionMismatch, "target has " + std::to_string(y.size()) + " entries, net has " +
                                           std::to_string(net.output_count()) + " outputs");
  ErrorGradient out;
  out.record = forward(net, lambda, x);
  std::vector<double> seed(y.size());
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double diff = out.record.output[j] - y[j];
    out.error += diff * diff;
    seed[j] = 2.0 * diff;
  }
  out.gradient = backward(net, lambda, out.record, seed);
  return out;
}

/// Rejects nets whose activations are not uniformly C^2-bounded.
inline void require_provable(const AcyclicNet& net) {
  for (std::size_t v = 0; v < net.vertex_count(); ++v) {
    const auto& act = net.activation(v);
    if (act && !act->provable())
      fail(ErrorCode::UncheckedActivation, "activation '" + std::string(act->name()) + "' at vertex '" + net.id(v) +
                                               "' is not uniformly C2-bounded; enable unchecked mode to use it");
  }
}

}  // namespace augsgd

#endif  // AUGSGD_PROPAGATION_HPP
