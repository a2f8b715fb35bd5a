#ifndef AUGSGD_NETWORK_IO_HPP
#define AUGSGD_NETWORK_IO_HPP

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "augsgd/activation.hpp"
#include "augsgd/error.hpp"
#include "augsgd/graph.hpp"
#include "augsgd/layered.hpp"
#include "augsgd/propagation.hpp"

// Network-description files:
//   { "vertices": [...], "edges": [[src, dst], ...], "inputs": [...],
//     "outputs": [...], "activations": { vertex: name } }
// or the layered shorthand
//   { "layers": [n_{l+1}, ..., n_0], "activation": name | [name per hidden layer] }

namespace augsgd {

using json = nlohmann::json;

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
}

struct ParsedNetwork {
  AcyclicNet net;
  std::optional<LayeredNetwork> layered;  ///< set for the layered shorthand
};

inline LayeredNetwork parse_layered(const json& j) {
  LayeredNetwork shape;
  try {
    shape.sizes = j.at("layers").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("network.layers: ") + e.what());
  }
  if (shape.sizes.size() < 2) fail(ErrorCode::EmptyLayer, "a feed-forward net needs at least two layers");
  const std::size_t hidden = shape.sizes.size() - 2;
  const json act = j.value("activation", json("tanh"));
  if (act.is_string()) {
    shape.hidden.assign(hidden, Activation::from_name(act.get<std::string>()));
  } else if (act.is_array()) {
    for (const auto& a : act) shape.hidden.push_back(Activation::from_name(a.get<std::string>()));
    if (shape.hidden.size() == 1 && hidden > 1) shape.hidden.assign(hidden, shape.hidden.front());
  } else {
    fail(ErrorCode::InvalidConfig, "network.activation must be a name or a list of names");
  }
  shape.validate();
  return shape;
}

inline RawGraph parse_raw_graph(const json& j) {
  RawGraph raw;
  try {
    raw.vertices = j.at("vertices").get<std::vector<std::string>>();
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) fail(ErrorCode::InvalidConfig, "each edge must be [source, target]");
      raw.edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
    raw.inputs = j.at("inputs").get<std::vector<std::string>>();
    raw.outputs = j.at("outputs").get<std::vector<std::string>>();
    if (j.contains("activations"))
      for (const auto& [vertex, name] : j.at("activations").items())
        raw.activations.emplace(vertex, Activation::from_name(name.get<std::string>()));
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("network description: ") + e.what());
  }
  return raw;
}

/// Accepts an inline description, the layered shorthand, or a string path
/// (resolved against `base_dir`) to a file holding either.
inline ParsedNetwork parse_network(const json& j, const std::filesystem::path& base_dir = {}) {
  if (j.is_string()) {
    std::filesystem::path path(j.get<std::string>());
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    return parse_network(read_json_file(path), path.parent_path());
  }
  if (!j.is_object()) fail(ErrorCode::InvalidConfig, "network must be an object or a file path");
  if (j.contains("layers")) {
    LayeredNetwork shape = parse_layered(j);
    AcyclicNet net = shape.to_graph();
    return {std::move(net), std::move(shape)};
  }
  return {validate_graph(parse_raw_graph(j)), std::nullopt};
}

inline json network_to_json(const AcyclicNet& net) {
  const RawGraph raw = net.to_raw();
  json j;
  j["vertices"] = raw.vertices;
  j["edges"] = json::array();
  for (const auto& [s, t] : raw.edges) j["edges"].push_back({s, t});
  j["inputs"] = raw.inputs;
  j["outputs"] = raw.outputs;
  j["activations"] = json::object();
  for (const auto& [v, a] : raw.activations) j["activations"][v] = std::string(a.name());
  return j;
}

/// Weights file: the canonical edge list next to the flat weight array.
inline json weights_to_json(const AcyclicNet& net, const WeightVector& lambda) {
  json j;
  j["edges"] = json::array();
  for (const Edge& e : net.edges()) j["edges"].push_back({net.id(e.source), net.id(e.target)});
  j["weights"] = lambda.values();
  return j;
}

inline WeightVector weights_from_json(const AcyclicNet& net, const json& j) {
  std::vector<double> values;
  try {
    values = j.at("weights").get<std::vector<double>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("weights: ") + e.what());
  }
  if (values.size() != net.edge_count())
    fail(ErrorCode::DimensionMismatch, "weights file has " + std::to_string(values.size()) + " entries, net has " +
                                           std::to_string(net.edge_count()) + " edges");
  if (j.contains("edges")) {
    const auto& edges = j.at("edges");
    for (std::size_t e = 0; e < net.edge_count(); ++e)
      if (edges.at(e).at(0).get<std::string>() != net.id(net.edge(e).source) ||
          edges.at(e).at(1).get<std::string>() != net.id(net.edge(e).target))
        fail(ErrorCode::DimensionMismatch, "weights file edge order differs from the canonical order");
  }
  return WeightVector(std::move(values));
}

}  // namespace augsgd

#endif  // AUGSGD_NETWORK_IO_HPP
