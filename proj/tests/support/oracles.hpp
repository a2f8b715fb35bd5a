#ifndef AUGSGD_TESTS_ORACLES_HPP
#define AUGSGD_TESTS_ORACLES_HPP

// Reference computations that share no code with the library: a memoised
// recursive network evaluator over the raw edge list, exhaustive path
// enumeration, central differences and an independent random-DAG corpus.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "augsgd/graph.hpp"

namespace oracle {

inline double activate(const std::string& name, double t) {
  if (name == "tanh") return std::tanh(t);
  if (name == "logistic") return 1.0 / (1.0 + std::exp(-t));
  if (name == "gaussian") return std::exp(-t * t);
  if (name == "relu") return t > 0.0 ? t : 0.0;
  return t;
}

/// A network as plain strings: edges carry their weight directly.
struct Net {
  std::vector<std::string> vertices;
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::map<std::string, std::string> activation;  // hidden vertex -> name
};

inline Net from_raw(const augsgd::RawGraph& raw) {
  Net n{raw.vertices, raw.edges, raw.inputs, raw.outputs, {}};
  for (const auto& [v, a] : raw.activations) n.activation[v] = std::string(a.name());
  return n;
}

/// Evaluates z(v) by recursion on in-edges with memoisation; `weight(s, t)`
/// supplies lambda of the edge s -> t.
inline std::vector<double> evaluate(const Net& net, const std::function<double(const std::string&, const std::string&)>& weight,
                                    const std::vector<double>& x) {
  std::map<std::string, double> memo;
  for (std::size_t i = 0; i < net.inputs.size(); ++i) memo[net.inputs[i]] = x.at(i);
  std::function<double(const std::string&)> z = [&](const std::string& v) -> double {
    if (auto it = memo.find(v); it != memo.end()) return it->second;
    double sum = 0.0;
    for (const auto& [s, t] : net.edges)
      if (t == v) sum += weight(s, t) * z(s);
    const auto act = net.activation.find(v);
    const double value = act == net.activation.end() ? sum : activate(act->second, sum);
    memo[v] = value;
    return value;
  };
  std::vector<double> out;
  for (const auto& u : net.outputs) out.push_back(z(u));
  return out;
}

/// Squared error with weights given in the canonical order: edges sorted by
/// (source id, target id).
inline double squared_error(const Net& net, const std::vector<double>& lambda, const std::vector<double>& x,
                            const std::vector<double>& y) {
  auto sorted = net.edges;
  std::sort(sorted.begin(), sorted.end());
  std::map<std::pair<std::string, std::string>, double> w;
  for (std::size_t e = 0; e < sorted.size(); ++e) w[sorted[e]] = lambda.at(e);
  const auto z = evaluate(net, [&](const std::string& s, const std::string& t) { return w.at({s, t}); }, x);
  double err = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) err += (z[j] - y[j]) * (z[j] - y[j]);
  return err;
}

inline double central_difference(const std::function<double(const std::vector<double>&)>& f, std::vector<double> at,
                                  std::size_t i, double h) {
  const double saved = at[i];
  at[i] = saved + h;
  const double up = f(at);
  at[i] = saved - h;
  const double down = f(at);
  return (up - down) / (2.0 * h);
}

/// Longest path ending at / starting from each vertex, by enumerating every
/// directed path explicitly (exponential; fine for small graphs).
struct PathLengths {
  std::map<std::string, std::size_t> depth;
  std::map<std::string, std::size_t> height;
  std::size_t paths = 0;
};

inline PathLengths enumerate_paths(const Net& net) {
  PathLengths out;
  for (const auto& v : net.vertices) out.depth[v] = out.height[v] = 0;
  std::vector<std::string> path;
  std::function<void(const std::string&)> walk = [&](const std::string& v) {
    path.push_back(v);
    ++out.paths;
    const std::size_t len = path.size() - 1;
    out.depth[v] = std::max(out.depth[v], len);
    out.height[path.front()] = std::max(out.height[path.front()], len);
    for (const auto& [s, t] : net.edges)
      if (s == v) walk(t);
    path.pop_back();
  };
  for (const auto& v : net.vertices) walk(v);
  return out;
}

/// Random DAG: a random vertex permutation, each forward pair joined with
/// probability p; inputs and outputs are then whatever vertices lack in- or
/// out-edges, and isolated vertices are dropped. Hidden vertices receive a
/// random bounded activation.
inline augsgd::RawGraph random_raw_dag(std::mt19937_64& gen, std::size_t max_vertices, double p = 0.35) {
  std::uniform_int_distribution<std::size_t> count(2, max_vertices);
  std::bernoulli_distribution coin(p);
  static const char* names[] = {"tanh", "logistic", "gaussian"};
  for (;;) {
    const std::size_t n = count(gen);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), gen);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (coin(gen)) edges.emplace_back(order[i], order[j]);
    if (edges.empty()) continue;
    std::vector<int> in(n, 0), out(n, 0);
    for (auto [s, t] : edges) ++out[s], ++in[t];
    auto id = [](std::size_t v) { return "n" + std::to_string(100 + v); };
    augsgd::RawGraph raw;
    std::uniform_int_distribution<int> pick(0, 2);
    for (std::size_t v = 0; v < n; ++v) {
      if (in[v] == 0 && out[v] == 0) continue;
      raw.vertices.push_back(id(v));
      if (in[v] == 0) raw.inputs.push_back(id(v));
      else if (out[v] == 0) raw.outputs.push_back(id(v));
      else raw.activations.emplace(id(v), augsgd::Activation::from_name(names[pick(gen)]));
    }
    for (auto [s, t] : edges) raw.edges.emplace_back(id(s), id(t));
    return raw;
  }
}

}  // namespace oracle

#endif  // AUGSGD_TESTS_ORACLES_HPP
