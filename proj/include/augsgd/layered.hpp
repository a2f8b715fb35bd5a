#ifndef AUGSGD_LAYERED_HPP
#define AUGSGD_LAYERED_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "augsgd/activation.hpp"
#include "augsgd/error.hpp"
#include "augsgd/graph.hpp"
#include "augsgd/propagation.hpp"

// Layer-by-layer propagation for feed-forward networks. Layers are numbered
// top-down: layer l+1 takes the input, layer 0 produces the output, and
// every arrow goes from layer i to layer i-1. This path exists alongside the
// general DAG engine so the two can be checked against each other.

namespace augsgd {

struct LayeredNetwork {
  std::vector<std::size_t> sizes;   ///< [n_{l+1}, ..., n_0]
  std::vector<Activation> hidden;   ///< one per hidden layer, layer l first

  std::size_t top() const noexcept { return sizes.size() - 1; }
  std::size_t width(std::size_t layer) const { return sizes.at(top() - layer); }
  const Activation& activation(std::size_t layer) const { return hidden.at(top() - 1 - layer); }

  void validate() const {
    if (sizes.size() < 2) fail(ErrorCode::EmptyLayer, "a feed-forward net needs at least two layers");
    for (std::size_t s : sizes)
      if (s == 0) fail(ErrorCode::EmptyLayer, "layer of size 0");
    if (hidden.size() != sizes.size() - 2)
      fail(ErrorCode::DimensionMismatch, "need one activation per hidden layer");
  }

  AcyclicNet to_graph() const { return feed_forward_builder(sizes, hidden); }
};

/// Per-layer weight matrices; layer i (1..l+1) is n_i x n_{i-1}, row-major,
/// entry (j, j') being the arrow from node j of layer i to node j' of i-1.
class LayerWeights {
 public:
  LayerWeights() = default;
  explicit LayerWeights(const LayeredNetwork& shape) : sizes_(shape.sizes), blocks_(shape.sizes.size()) {
    for (std::size_t i = 1; i < blocks_.size(); ++i) blocks_[i].assign(width(i) * width(i - 1), 0.0);
  }

  double& at(std::size_t layer, std::size_t j, std::size_t jp) { return blocks_.at(layer).at(j * width(layer - 1) + jp); }
  double at(std::size_t layer, std::size_t j, std::size_t jp) const {
    return blocks_.at(layer).at(j * width(layer - 1) + jp);
  }
  std::span<const double> block(std::size_t layer) const { return blocks_.at(layer); }
  std::size_t layers() const noexcept { return blocks_.size(); }

 private:
  std::size_t width(std::size_t layer) const { return sizes_.at(sizes_.size() - 1 - layer); }

  std::vector<std::size_t> sizes_;
  std::vector<std::vector<double>> blocks_;
};

struct LayeredRecord {
  std::vector<std::vector<double>> pre;  ///< pre[i][j]: weighted sum into node j of layer i
  std::vector<std::vector<double>> z;    ///< z[i][j]
};

struct LayeredGradient {
  std::vector<std::vector<double>> dz;
  LayerWeights dweights;
};

inline LayeredRecord forward_layered_record(const LayeredNetwork& shape, const LayerWeights& w,
                                            std::span<const double> x) {
  shape.validate();
  const std::size_t top = shape.top();
  if (x.size() != shape.width(top))
    fail(ErrorCode::DimensionMismatch, "input has " + std::to_string(x.size()) + " entries, layer " +
                                           std::to_string(top) + " has " + std::to_string(shape.width(top)));
  if (w.layers() != shape.sizes.size()) fail(ErrorCode::DimensionMismatch, "weights do not match layer count");

  LayeredRecord rec;
  rec.pre.resize(top + 1);
  rec.z.resize(top + 1);
  rec.pre[top].assign(x.size(), 0.0);
  rec.z[top].assign(x.begin(), x.end());
  for (std::size_t i = top; i-- > 0;) {
    const std::size_t n = shape.width(i);
    rec.pre[i].assign(n, 0.0);
    rec.z[i].assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (std::size_t jp = 0; jp < shape.width(i + 1); ++jp) sum += w.at(i + 1, jp, j) * rec.z[i + 1][jp];
      rec.pre[i][j] = sum;
      rec.z[i][j] = i == 0 ? sum : shape.activation(i).value(sum);
    }
  }
  return rec;
}

inline std::vector<double> forward_layered(const LayeredNetwork& shape, const LayerWeights& w,
                                           std::span<const double> x) {
  return forward_layered_record(shape, w, x).z[0];
}

/// Layer-wise backward recursion: dE/dz^i_j sums over the layer below,
/// dE/dlambda^i_{j,j'} uses the derivative at node j' of layer i-1.
inline LayeredGradient backward_layered(const LayeredNetwork& shape, const LayerWeights& w, const LayeredRecord& rec,
                                        std::span<const double> dE_dz_out) {
  const std::size_t top = shape.top();
  if (rec.z.size() != top + 1 || rec.z[0].size() != shape.width(0))
    fail(ErrorCode::StaleRecord, "layered record does not match the network");
  if (dE_dz_out.size() != shape.width(0)) fail(ErrorCode::DimensionMismatch, "output gradient size mismatch");

  LayeredGradient g;
  g.dz.resize(top + 1);
  g.dweights = LayerWeights(shape);
  g.dz[0].assign(dE_dz_out.begin(), dE_dz_out.end());
  std::vector<double> delta(dE_dz_out.begin(), dE_dz_out.end());  // layer 0: identity slope
  for (std::size_t i = 1; i <= top; ++i) {
    const std::size_t n = shape.width(i);
    const std::size_t below = shape.width(i - 1);
    g.dz[i].assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (std::size_t jp = 0; jp < below; ++jp) {
        sum += delta[jp] * w.at(i, j, jp);
        g.dweights.at(i, j, jp) = delta[jp] * rec.z[i][j];
      }
      g.dz[i][j] = sum;
    }
    if (i < top) {
      delta.assign(n, 0.0);
      for (std::size_t j = 0; j < n; ++j) delta[j] = g.dz[i][j] * shape.activation(i).derivative(rec.pre[i][j]);
    }
  }
  return g;
}

/// Canonical edge index of every layered weight, in LayerWeights block
/// order; throws if `net` is not the graph feed_forward_builder makes.
inline std::vector<std::vector<std::size_t>> layer_edge_index(const LayeredNetwork& shape, const AcyclicNet& net) {
  std::vector<std::vector<std::size_t>> index(shape.sizes.size());
  for (std::size_t i = 1; i <= shape.top(); ++i)
    for (std::size_t j = 0; j < shape.width(i); ++j)
      for (std::size_t jp = 0; jp < shape.width(i - 1); ++jp) {
        auto e = net.find_edge(layer_vertex_id(shape.sizes, i, j + 1), layer_vertex_id(shape.sizes, i - 1, jp + 1));
        if (!e) fail(ErrorCode::DimensionMismatch, "net is not the layered graph of this shape");
        index[i].push_back(*e);
      }
  return index;
}

inline LayerWeights to_layer_weights(const LayeredNetwork& shape, const std::vector<std::vector<std::size_t>>& index,
                                     std::span<const double> lambda) {
  LayerWeights w(shape);
  for (std::size_t i = 1; i <= shape.top(); ++i)
    for (std::size_t j = 0; j < shape.width(i); ++j)
      for (std::size_t jp = 0; jp < shape.width(i - 1); ++jp)
        w.at(i, j, jp) = lambda[index[i][j * shape.width(i - 1) + jp]];
  return w;
}

inline LayerWeights to_layer_weights(const LayeredNetwork& shape, const AcyclicNet& net, const WeightVector& lambda) {
  return to_layer_weights(shape, layer_edge_index(shape, net), lambda.flat());
}

inline WeightVector from_layer_weights(const LayeredNetwork& shape, const std::vector<std::vector<std::size_t>>& index,
                                       const LayerWeights& w) {
  std::size_t edges = 0;
  for (const auto& block : index) edges += block.size();
  WeightVector lambda = WeightVector::zeros(edges);
  for (std::size_t i = 1; i <= shape.top(); ++i)
    for (std::size_t j = 0; j < shape.width(i); ++j)
      for (std::size_t jp = 0; jp < shape.width(i - 1); ++jp)
        lambda[index[i][j * shape.width(i - 1) + jp]] = w.at(i, j, jp);
  return lambda;
}

inline WeightVector from_layer_weights(const LayeredNetwork& shape, const AcyclicNet& net, const LayerWeights& w) {
  return from_layer_weights(shape, layer_edge_index(shape, net), w);
}

}  // namespace augsgd

#endif  // AUGSGD_LAYERED_HPP
