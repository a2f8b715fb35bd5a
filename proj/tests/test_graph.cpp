#include <gtest/gtest.h>

#include <random>
#include <set>

#include "augsgd/graph.hpp"
#include "augsgd/network_io.hpp"
#include "support/oracles.hpp"

using namespace augsgd;

namespace {

const Activation tanh_act(Activation::Kind::Tanh);

RawGraph chain_raw() {
  RawGraph raw;
  raw.vertices = {"a", "b", "c"};
  raw.edges = {{"a", "b"}, {"b", "c"}};
  raw.inputs = {"a"};
  raw.outputs = {"c"};
  raw.activations.emplace("b", tanh_act);
  return raw;
}

RawGraph diamond_raw() {
  RawGraph raw;
  raw.vertices = {"d", "c", "b", "a"};
  raw.edges = {{"a", "b"}, {"a", "c"}, {"b", "d"}, {"c", "d"}, {"a", "d"}};
  raw.inputs = {"a"};
  raw.outputs = {"d"};
  raw.activations.emplace("b", tanh_act);
  raw.activations.emplace("c", tanh_act);
  return raw;
}

void expect_code(const RawGraph& raw, ErrorCode code) {
  try {
    validate_graph(raw);
    FAIL() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

std::size_t vertex(const AcyclicNet& net, const std::string& id) { return *net.find_vertex(id); }

}  // namespace

TEST(ValidateGraph, MinimalSingleEdge) {
  RawGraph raw;
  raw.vertices = {"a", "b"};
  raw.edges = {{"a", "b"}};
  raw.inputs = {"a"};
  raw.outputs = {"b"};
  const AcyclicNet net = validate_graph(raw);
  EXPECT_EQ(net.vertex_count(), 2u);
  EXPECT_EQ(net.edge_count(), 1u);
  EXPECT_TRUE(net.is_input(0));
  EXPECT_TRUE(net.is_output(1));
}

TEST(ValidateGraph, TwoCycleRejected) {
  RawGraph raw;
  raw.vertices = {"a", "b"};
  raw.edges = {{"a", "b"}, {"b", "a"}};
  expect_code(raw, ErrorCode::CycleDetected);
}

TEST(ValidateGraph, CycleMessageNamesTheCycle) {
  RawGraph raw;
  raw.vertices = {"x", "p", "q", "r", "y"};
  raw.edges = {{"x", "p"}, {"p", "q"}, {"q", "r"}, {"r", "p"}, {"r", "y"}};
  raw.inputs = {"x"};
  raw.outputs = {"y"};
  try {
    validate_graph(raw);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CycleDetected);
    const std::string msg = e.what();
    for (const char* v : {"p", "q", "r"}) EXPECT_NE(msg.find(v), std::string::npos) << msg;
  }
}

TEST(ValidateGraph, TriangleWithShortcutIsValid) {
  RawGraph raw;
  raw.vertices = {"a", "b", "c"};
  raw.edges = {{"a", "b"}, {"b", "c"}, {"a", "c"}};
  raw.inputs = {"a"};
  raw.outputs = {"c"};
  raw.activations.emplace("b", tanh_act);
  EXPECT_NO_THROW(validate_graph(raw));
}

TEST(ValidateGraph, StructuralErrors) {
  {
    RawGraph raw = chain_raw();
    raw.edges.push_back({"b", "b"});
    expect_code(raw, ErrorCode::LoopEdge);
  }
  {
    RawGraph raw = chain_raw();
    raw.edges.push_back({"a", "b"});
    expect_code(raw, ErrorCode::ParallelEdge);
  }
  {
    RawGraph raw = chain_raw();
    raw.edges.push_back({"a", "zz"});
    expect_code(raw, ErrorCode::UnknownVertexInEdge);
  }
  {
    RawGraph raw = chain_raw();
    raw.vertices.push_back("a");
    expect_code(raw, ErrorCode::DuplicateVertex);
  }
  {
    RawGraph raw = chain_raw();
    raw.activations.emplace("a", tanh_act);
    expect_code(raw, ErrorCode::DanglingActivation);
  }
  {
    RawGraph raw = chain_raw();
    raw.activations.clear();
    expect_code(raw, ErrorCode::DanglingActivation);
  }
  {
    RawGraph raw = chain_raw();
    raw.outputs = {"c", "a"};
    expect_code(raw, ErrorCode::InputOutputOverlap);
  }
  {
    RawGraph raw = chain_raw();
    raw.inputs = {};
    expect_code(raw, ErrorCode::BoundaryMismatch);
  }
}

TEST(ValidateGraph, CanonicalEdgeOrderIsLexicographic) {
  const AcyclicNet net = validate_graph(diamond_raw());
  std::vector<std::pair<std::string, std::string>> got;
  for (const Edge& e : net.edges()) got.emplace_back(net.id(e.source), net.id(e.target));
  const std::vector<std::pair<std::string, std::string>> want = {
      {"a", "b"}, {"a", "c"}, {"a", "d"}, {"b", "d"}, {"c", "d"}};
  EXPECT_EQ(got, want);
}

TEST(Metrics, Chain) {
  const AcyclicNet net = validate_graph(chain_raw());
  const GraphMetrics m = compute_metrics(net);
  EXPECT_EQ(m.depth[vertex(net, "a")], 0u);
  EXPECT_EQ(m.depth[vertex(net, "b")], 1u);
  EXPECT_EQ(m.depth[vertex(net, "c")], 2u);
  EXPECT_EQ(m.height[vertex(net, "a")], 2u);
  EXPECT_EQ(m.height[vertex(net, "b")], 1u);
  EXPECT_EQ(m.height[vertex(net, "c")], 0u);
  EXPECT_EQ(m.graph_height, 2u);
}

TEST(Metrics, DiamondWithShortcut) {
  const AcyclicNet net = validate_graph(diamond_raw());
  const GraphMetrics m = compute_metrics(net);
  EXPECT_EQ(m.depth[vertex(net, "d")], 2u);
  EXPECT_EQ(m.height[vertex(net, "a")], 2u);
  EXPECT_EQ(m.graph_height, 2u);
  const auto brute = oracle::enumerate_paths(oracle::from_raw(diamond_raw()));
  EXPECT_EQ(brute.depth.at("d"), 2u);
  EXPECT_EQ(brute.height.at("a"), 2u);
}

TEST(TopologicalSchedule, ChainAndDiamond) {
  const AcyclicNet chain = validate_graph(chain_raw());
  std::vector<std::string> ids;
  for (std::size_t v : topological_schedule(chain)) ids.push_back(chain.id(v));
  EXPECT_EQ(ids, (std::vector<std::string>{"a", "b", "c"}));

  const AcyclicNet diamond = validate_graph(diamond_raw());
  ids.clear();
  for (std::size_t v : topological_schedule(diamond)) ids.push_back(diamond.id(v));
  EXPECT_EQ(ids, (std::vector<std::string>{"a", "b", "c", "d"}));
}

TEST(FeedForwardBuilder, EdgeCountsAndHeight) {
  struct Case {
    std::vector<std::size_t> sizes;
    std::size_t edges;
    std::size_t height;
  };
  for (const Case& c : {Case{{1, 1}, 1, 1}, Case{{2, 3, 1}, 9, 2}, Case{{4, 5, 5, 2}, 55, 3}}) {
    const AcyclicNet net = feed_forward_builder(c.sizes, tanh_act);
    EXPECT_EQ(net.edge_count(), c.edges);
    EXPECT_EQ(compute_metrics(net).graph_height, c.height);
    std::size_t vertices = 0;
    for (std::size_t s : c.sizes) vertices += s;
    EXPECT_EQ(net.vertex_count(), vertices);
  }
}

TEST(FeedForwardBuilder, DepthIsLayerOffset) {
  const std::vector<std::size_t> sizes = {3, 4, 2, 2};
  const AcyclicNet net = feed_forward_builder(sizes, tanh_act);
  const GraphMetrics m = compute_metrics(net);
  const std::size_t top = sizes.size() - 1;
  for (std::size_t layer = 0; layer <= top; ++layer)
    for (std::size_t j = 1; j <= sizes[top - layer]; ++j) {
      const std::size_t v = vertex(net, layer_vertex_id(sizes, layer, j));
      EXPECT_EQ(m.depth[v], top - layer);
      EXPECT_EQ(m.height[v], layer);
    }
}

TEST(FeedForwardBuilder, EmptyLayerRejected) {
  const std::vector<std::size_t> zero = {2, 0, 1};
  EXPECT_THROW(feed_forward_builder(zero, tanh_act), Error);
  const std::vector<std::size_t> single = {2};
  try {
    feed_forward_builder(single, tanh_act);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyLayer);
  }
}

TEST(MetricsProperty, RandomDagsUpToTwentyVertices) {
  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const RawGraph raw = oracle::random_raw_dag(gen, 20);
    const AcyclicNet net = validate_graph(raw);
    const GraphMetrics m = compute_metrics(net);
    for (const Edge& e : net.edges()) {
      EXPECT_LT(m.depth[e.source], m.depth[e.target]);
      EXPECT_LT(m.height[e.target], m.height[e.source]);
    }
    std::size_t max_d = 0, max_h = 0;
    std::set<std::size_t> dset, hset;
    for (std::size_t v = 0; v < net.vertex_count(); ++v) {
      EXPECT_EQ(m.depth[v] == 0, net.is_input(v));
      EXPECT_EQ(m.height[v] == 0, net.is_output(v));
      max_d = std::max(max_d, m.depth[v]);
      max_h = std::max(max_h, m.height[v]);
      dset.insert(m.depth[v]);
      hset.insert(m.height[v]);
    }
    EXPECT_EQ(max_d, max_h);
    EXPECT_EQ(max_d, m.graph_height);
    EXPECT_EQ(dset.size(), m.graph_height + 1);
    EXPECT_EQ(hset.size(), m.graph_height + 1);

    // Topological order: every edge forward; sorting by depth is also valid.
    std::vector<std::size_t> pos(net.vertex_count());
    const auto order = topological_schedule(net);
    for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
    for (const Edge& e : net.edges()) EXPECT_LT(pos[e.source], pos[e.target]);
  }
}

TEST(MetricsProperty, DynamicProgrammeMatchesPathEnumeration) {
  std::mt19937_64 gen(99);
  for (int trial = 0; trial < 500; ++trial) {
    const RawGraph raw = oracle::random_raw_dag(gen, 12);
    const AcyclicNet net = validate_graph(raw);
    const GraphMetrics m = compute_metrics(net);
    const auto brute = oracle::enumerate_paths(oracle::from_raw(raw));
    for (std::size_t v = 0; v < net.vertex_count(); ++v) {
      ASSERT_EQ(m.depth[v], brute.depth.at(net.id(v))) << "trial " << trial;
      ASSERT_EQ(m.height[v], brute.height.at(net.id(v))) << "trial " << trial;
    }
  }
}

TEST(NetworkIo, JsonRoundTrip) {
  const AcyclicNet net = validate_graph(diamond_raw());
  const ParsedNetwork back = parse_network(network_to_json(net));
  EXPECT_EQ(back.net.vertex_ids(), net.vertex_ids());
  ASSERT_EQ(back.net.edge_count(), net.edge_count());
  for (std::size_t e = 0; e < net.edge_count(); ++e) EXPECT_EQ(back.net.edge(e), net.edge(e));
  EXPECT_FALSE(back.layered.has_value());
}

TEST(NetworkIo, LayeredShorthand) {
  const ParsedNetwork p = parse_network(nlohmann::json::parse(R"({"layers": [2, 3, 1], "activation": "tanh"})"));
  ASSERT_TRUE(p.layered.has_value());
  EXPECT_EQ(p.net.edge_count(), 9u);
  EXPECT_EQ(p.net.input_count(), 2u);
  EXPECT_EQ(p.net.output_count(), 1u);

  const ParsedNetwork q =
      parse_network(nlohmann::json::parse(R"({"layers": [1, 2, 2, 1], "activation": ["tanh", "logistic"]})"));
  EXPECT_EQ(q.layered->hidden.at(0).kind(), Activation::Kind::Tanh);
  EXPECT_EQ(q.layered->hidden.at(1).kind(), Activation::Kind::Logistic);
}

TEST(NetworkIo, WeightsFileRoundTripAndOrderCheck) {
  const AcyclicNet net = validate_graph(diamond_raw());
  const WeightVector w(std::vector<double>{0.1, -0.2, 0.3, 0.4, -0.5});
  nlohmann::json j = weights_to_json(net, w);
  EXPECT_EQ(weights_from_json(net, j), w);
  std::swap(j["edges"][0], j["edges"][1]);
  EXPECT_THROW(weights_from_json(net, j), Error);
}
