#ifndef AUGSGD_GRAPH_HPP
#define AUGSGD_GRAPH_HPP

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "augsgd/activation.hpp"
#include "augsgd/error.hpp"

namespace augsgd {

/// Unvalidated network description, as read from a file or built by hand.
struct RawGraph {
  std::vector<std::string> vertices;
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::map<std::string, Activation> activations;
};

struct Edge {
  std::size_t source;
  std::size_t target;
  friend constexpr bool operator==(const Edge&, const Edge&) = default;
};

/// A validated acyclic neural network graph.
///
/// Vertices are indexed in lexicographic order of their ids and edges in
/// lexicographic order of (source id, target id); the latter is the
/// canonical flattening of the weights into a vector. Immutable once built.
class AcyclicNet {
 public:
  std::size_t vertex_count() const noexcept { return ids_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::size_t input_count() const noexcept { return inputs_.size(); }
  std::size_t output_count() const noexcept { return outputs_.size(); }

  const std::string& id(std::size_t v) const { return ids_.at(v); }
  const std::vector<std::string>& vertex_ids() const noexcept { return ids_; }

  std::span<const Edge> edges() const noexcept { return edges_; }
  const Edge& edge(std::size_t e) const { return edges_.at(e); }

  /// Input vertices in the declared input order (v_1, ..., v_n).
  std::span<const std::size_t> inputs() const noexcept { return inputs_; }
  /// Output vertices in the declared output order (u_1, ..., u_m).
  std::span<const std::size_t> outputs() const noexcept { return outputs_; }

  std::span<const std::size_t> in_edges(std::size_t v) const { return in_.at(v); }
  std::span<const std::size_t> out_edges(std::size_t v) const { return out_.at(v); }

  bool is_input(std::size_t v) const { return role_.at(v) == Role::Input; }
  bool is_output(std::size_t v) const { return role_.at(v) == Role::Output; }
  bool is_hidden(std::size_t v) const { return role_.at(v) == Role::Hidden; }

  /// Activation of a hidden vertex; empty for inputs and outputs.
  const std::optional<Activation>& activation(std::size_t v) const { return activation_.at(v); }

  /// Deterministic topological order (Kahn's algorithm, ties by vertex id).
  std::span<const std::size_t> topological_order() const noexcept { return topo_; }

  std::optional<std::size_t> find_vertex(const std::string& id) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - ids_.begin());
  }

  std::optional<std::size_t> find_edge(std::size_t source, std::size_t target) const {
    auto it = std::lower_bound(edges_.begin(), edges_.end(), Edge{source, target},
                               [](const Edge& a, const Edge& b) {
                                 return std::pair(a.source, a.target) < std::pair(b.source, b.target);
                               });
    if (it == edges_.end() || !(*it == Edge{source, target})) return std::nullopt;
    return static_cast<std::size_t>(it - edges_.begin());
  }

  std::optional<std::size_t> find_edge(const std::string& source, const std::string& target) const {
    auto s = find_vertex(source);
    auto t = find_vertex(target);
    if (!s || !t) return std::nullopt;
    return find_edge(*s, *t);
  }

  /// True when every hidden activation is uniformly C^2-bounded.
  bool provable() const {
    return std::all_of(activation_.begin(), activation_.end(),
                       [](const auto& a) { return !a || a->provable(); });
  }

  /// Largest activation bound over hidden vertices (0 when there are none).
  double activation_bound() const {
    double m = 0.0;
    for (const auto& a : activation_)
      if (a) m = std::max(m, a->bound());
    return m;
  }

  RawGraph to_raw() const {
    RawGraph raw;
    raw.vertices = ids_;
    for (const Edge& e : edges_) raw.edges.emplace_back(ids_[e.source], ids_[e.target]);
    for (std::size_t v : inputs_) raw.inputs.push_back(ids_[v]);
    for (std::size_t v : outputs_) raw.outputs.push_back(ids_[v]);
    for (std::size_t v = 0; v < ids_.size(); ++v)
      if (activation_[v]) raw.activations.emplace(ids_[v], *activation_[v]);
    return raw;
  }

 private:
  enum class Role { Input, Hidden, Output };

  friend AcyclicNet validate_graph(const RawGraph& raw);

  std::vector<std::string> ids_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> inputs_;
  std::vector<std::size_t> outputs_;
  std::vector<std::vector<std::size_t>> in_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<Role> role_;
  std::vector<std::optional<Activation>> activation_;
  std::vector<std::size_t> topo_;
};

namespace detail {

// Returns vertex indices along one directed cycle among `remaining` vertices
// (those Kahn's algorithm could not schedule).
inline std::vector<std::size_t> find_cycle(const std::vector<std::vector<std::size_t>>& succ,
                                           const std::vector<bool>& remaining) {
  const std::size_t n = succ.size();
  std::vector<int> state(n, 0);  // 0 new, 1 on stack, 2 done
  std::vector<std::size_t> stack;
  std::vector<std::size_t> cycle;

  std::function<bool(std::size_t)> dfs = [&](std::size_t v) {
    state[v] = 1;
    stack.push_back(v);
    for (std::size_t w : succ[v]) {
      if (!remaining[w]) continue;
      if (state[w] == 1) {
        auto it = std::find(stack.begin(), stack.end(), w);
        cycle.assign(it, stack.end());
        return true;
      }
      if (state[w] == 0 && dfs(w)) return true;
    }
    stack.pop_back();
    state[v] = 2;
    return false;
  };
  for (std::size_t v = 0; v < n; ++v)
    if (remaining[v] && state[v] == 0 && dfs(v)) break;
  return cycle;
}

}  // namespace detail

/// Checks every structural invariant of an acyclic neural network and
/// returns the validated, index-based representation.
inline AcyclicNet validate_graph(const RawGraph& raw) {
  AcyclicNet net;
  net.ids_ = raw.vertices;
  std::sort(net.ids_.begin(), net.ids_.end());
  if (auto dup = std::adjacent_find(net.ids_.begin(), net.ids_.end()); dup != net.ids_.end())
    fail(ErrorCode::DuplicateVertex, "vertex '" + *dup + "' listed twice");

  const std::size_t n = net.ids_.size();
  auto index_of = [&](const std::string& id, const char* where) {
    auto v = net.find_vertex(id);
    if (!v) fail(ErrorCode::UnknownVertexInEdge, std::string(where) + " names unknown vertex '" + id + "'");
    return *v;
  };

  for (const auto& [s, t] : raw.edges) {
    const std::size_t si = index_of(s, "edge");
    const std::size_t ti = index_of(t, "edge");
    if (si == ti) fail(ErrorCode::LoopEdge, "edge (" + s + "," + t + ") is a loop");
    net.edges_.push_back({si, ti});
  }
  std::sort(net.edges_.begin(), net.edges_.end(), [](const Edge& a, const Edge& b) {
    return std::pair(a.source, a.target) < std::pair(b.source, b.target);
  });
  if (auto dup = std::adjacent_find(net.edges_.begin(), net.edges_.end()); dup != net.edges_.end())
    fail(ErrorCode::ParallelEdge,
         "edge (" + net.ids_[dup->source] + "," + net.ids_[dup->target] + ") appears twice");

  net.in_.assign(n, {});
  net.out_.assign(n, {});
  std::vector<std::vector<std::size_t>> succ(n);
  for (std::size_t e = 0; e < net.edges_.size(); ++e) {
    net.out_[net.edges_[e].source].push_back(e);
    net.in_[net.edges_[e].target].push_back(e);
    succ[net.edges_[e].source].push_back(net.edges_[e].target);
  }

  // Kahn with a min-heap on vertex index gives the id-ordered tie break.
  std::vector<std::size_t> indegree(n);
  for (std::size_t v = 0; v < n; ++v) indegree[v] = net.in_[v].size();
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t v = 0; v < n; ++v)
    if (indegree[v] == 0) ready.push(v);
  while (!ready.empty()) {
    const std::size_t v = ready.top();
    ready.pop();
    net.topo_.push_back(v);
    for (std::size_t w : succ[v])
      if (--indegree[w] == 0) ready.push(w);
  }
  if (net.topo_.size() != n) {
    std::vector<bool> remaining(n, true);
    for (std::size_t v : net.topo_) remaining[v] = false;
    std::string names;
    for (std::size_t v : detail::find_cycle(succ, remaining)) names += net.ids_[v] + " -> ";
    fail(ErrorCode::CycleDetected, "cycle " + names + "...");
  }

  for (const auto& id : raw.inputs) net.inputs_.push_back(index_of(id, "input list"));
  for (const auto& id : raw.outputs) net.outputs_.push_back(index_of(id, "output list"));

  net.role_.assign(n, AcyclicNet::Role::Hidden);
  for (std::size_t v : net.inputs_) {
    if (net.role_[v] == AcyclicNet::Role::Input)
      fail(ErrorCode::BoundaryMismatch, "input '" + net.ids_[v] + "' listed twice");
    net.role_[v] = AcyclicNet::Role::Input;
  }
  for (std::size_t v : net.outputs_) {
    if (net.role_[v] == AcyclicNet::Role::Input)
      fail(ErrorCode::InputOutputOverlap, "vertex '" + net.ids_[v] + "' is both input and output");
    if (net.role_[v] == AcyclicNet::Role::Output)
      fail(ErrorCode::BoundaryMismatch, "output '" + net.ids_[v] + "' listed twice");
    net.role_[v] = AcyclicNet::Role::Output;
  }
  for (std::size_t v = 0; v < n; ++v) {
    const bool source = net.in_[v].empty();
    const bool sink = net.out_[v].empty();
    if (source && sink && net.role_[v] != AcyclicNet::Role::Hidden)
      fail(ErrorCode::InputOutputOverlap, "isolated vertex '" + net.ids_[v] + "' is both input and output");
    if (source != (net.role_[v] == AcyclicNet::Role::Input))
      fail(ErrorCode::BoundaryMismatch, "vertex '" + net.ids_[v] +
                                            (source ? "' has no incoming edge but is not an input"
                                                    : "' is listed as input but has incoming edges"));
    if (sink != (net.role_[v] == AcyclicNet::Role::Output))
      fail(ErrorCode::BoundaryMismatch, "vertex '" + net.ids_[v] +
                                            (sink ? "' has no outgoing edge but is not an output"
                                                  : "' is listed as output but has outgoing edges"));
  }

  net.activation_.assign(n, std::nullopt);
  for (const auto& [id, act] : raw.activations) {
    auto v = net.find_vertex(id);
    if (!v) fail(ErrorCode::DanglingActivation, "activation on unknown vertex '" + id + "'");
    if (!net.is_hidden(*v))
      fail(ErrorCode::DanglingActivation, "activation on boundary vertex '" + id + "'");
    net.activation_[*v] = act;
  }
  for (std::size_t v = 0; v < n; ++v)
    if (net.is_hidden(v) && !net.activation_[v])
      fail(ErrorCode::DanglingActivation, "hidden vertex '" + net.ids_[v] + "' has no activation");

  return net;
}

/// Depth d(v), height h(v) and the graph height H(G).
struct GraphMetrics {
  std::vector<std::size_t> depth;
  std::vector<std::size_t> height;
  std::size_t graph_height = 0;
};

/// Longest-path dynamic programme over the cached topological order.
inline GraphMetrics compute_metrics(const AcyclicNet& net) {
  GraphMetrics m;
  m.depth.assign(net.vertex_count(), 0);
  m.height.assign(net.vertex_count(), 0);
  const auto order = net.topological_order();
  for (std::size_t v : order)
    for (std::size_t e : net.in_edges(v))
      m.depth[v] = std::max(m.depth[v], m.depth[net.edge(e).source] + 1);
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    for (std::size_t e : net.out_edges(*it))
      m.height[*it] = std::max(m.height[*it], m.height[net.edge(e).target] + 1);
  for (std::size_t v = 0; v < net.vertex_count(); ++v)
    m.graph_height = std::max(m.graph_height, m.depth[v]);
  return m;
}

inline std::vector<std::size_t> topological_schedule(const AcyclicNet& net) {
  auto order = net.topological_order();
  return {order.begin(), order.end()};
}

// Feed-forward networks ---------------------------------------------------

/// Vertex id of node j (1-based) of layer i in a layered net with the given
/// sizes; sizes are listed input layer first, i.e. [n_{l+1}, ..., n_0].
inline std::string layer_vertex_id(std::span<const std::size_t> sizes, std::size_t layer, std::size_t node) {
  auto digits = [](std::size_t x) {
    std::size_t d = 1;
    while (x >= 10) x /= 10, ++d;
    return d;
  };
  const std::size_t widest = *std::max_element(sizes.begin(), sizes.end());
  std::string li = std::to_string(layer);
  std::string ni = std::to_string(node);
  li.insert(0, digits(sizes.size() - 1) - li.size(), '0');
  ni.insert(0, digits(widest) - ni.size(), '0');
  return "L" + li + "_" + ni;
}

/// Fully connected layered network. `activations` holds one entry per
/// hidden layer (listed in the same top-down order as `sizes`) or a single
/// entry applied to all hidden layers.
inline AcyclicNet feed_forward_builder(std::span<const std::size_t> sizes,
                                       std::span<const Activation> activations) {
  if (sizes.size() < 2) fail(ErrorCode::EmptyLayer, "a feed-forward net needs at least two layers");
  for (std::size_t s : sizes)
    if (s == 0) fail(ErrorCode::EmptyLayer, "layer of size 0");
  const std::size_t hidden = sizes.size() - 2;
  if (hidden > 0 && activations.size() != 1 && activations.size() != hidden)
    fail(ErrorCode::DimensionMismatch, "need 1 or " + std::to_string(hidden) + " hidden activations");

  const std::size_t top = sizes.size() - 1;  // layer index l+1
  auto layer_size = [&](std::size_t i) { return sizes[top - i]; };

  RawGraph raw;
  for (std::size_t i = 0; i <= top; ++i)
    for (std::size_t j = 1; j <= layer_size(i); ++j) raw.vertices.push_back(layer_vertex_id(sizes, i, j));
  for (std::size_t j = 1; j <= layer_size(top); ++j) raw.inputs.push_back(layer_vertex_id(sizes, top, j));
  for (std::size_t j = 1; j <= layer_size(0); ++j) raw.outputs.push_back(layer_vertex_id(sizes, 0, j));
  for (std::size_t i = top; i >= 1; --i)
    for (std::size_t j = 1; j <= layer_size(i); ++j)
      for (std::size_t jp = 1; jp <= layer_size(i - 1); ++jp)
        raw.edges.emplace_back(layer_vertex_id(sizes, i, j), layer_vertex_id(sizes, i - 1, jp));
  for (std::size_t i = 1; i < top; ++i) {
    const Activation act = activations.size() == 1 ? activations[0] : activations[top - 1 - i];
    for (std::size_t j = 1; j <= layer_size(i); ++j) raw.activations.emplace(layer_vertex_id(sizes, i, j), act);
  }
  return validate_graph(raw);
}

inline AcyclicNet feed_forward_builder(std::span<const std::size_t> sizes, Activation activation) {
  return feed_forward_builder(sizes, std::span<const Activation>(&activation, 1));
}

}  // namespace augsgd

#endif  // AUGSGD_GRAPH_HPP
