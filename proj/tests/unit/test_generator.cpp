#include <algorithm>
#include <set>

#include "doctest.h"
#include "support.hpp"
#include "vigraph/errors.hpp"
#include "vigraph/generator.hpp"

using namespace vigraph;

namespace {

/// 3 classes with 20 labeled nodes each, class 2 cut to 2.
struct Scenario {
  AttributedGraph graph;
  ImbalanceScenario scenario;
  LabeledPools pools;
  VgaeParameters params;
};

Scenario imbalanced() {
  const AttributedGraph full = fixtures::random_graph(90, 5, 3, 0.06, 2, 20);
  auto [g, s] = construct_rigorous(full, 0.1, {2}, 4);
  Scenario out{g, s, make_pools(g), init_parameters({5, 8, 4}, 3)};
  return out;
}

std::multiset<std::pair<int, std::vector<double>>> as_multiset(const LabeledPools& p) {
  std::multiset<std::pair<int, std::vector<double>>> out;
  for (const LatentExample& e : p.synthesized) {
    out.insert({e.class_id, std::vector<double>(e.latent.data(), e.latent.data() + e.latent.size())});
  }
  return out;
}

}  // namespace

TEST_CASE("tops minority classes up to the largest class") {
  Scenario s = imbalanced();
  REQUIRE(class_counts(s.pools, 3) == std::vector<int>{20, 20, 2});
  const auto nodes = generate_minority_nodes(s.params, s.graph, s.pools, s.scenario, 7);
  CHECK(nodes.size() == 18);
  std::set<int> class2;
  for (const LabeledNode& l : s.pools.labeled) {
    if (l.class_id == 2) class2.insert(l.node);
  }
  for (const GeneratedNode& g : nodes) {
    CHECK(g.class_id == 2);
    CHECK(class2.count(g.source_node) == 1);
    CHECK(g.latent.size() == 4);
  }
  const LabeledPools balanced = assemble_balanced_set(s.pools, nodes, s.params, s.graph);
  CHECK(synthesized_class_counts(balanced, 3) == std::vector<int>{20, 20, 20});
  CHECK(balanced.generated.size() == 18);
  CHECK(balanced.labeled == s.pools.labeled);
}

TEST_CASE("balanced pools generate nothing") {
  const AttributedGraph g = fixtures::random_graph(40, 3, 2, 0.1, 1, 6);
  const VgaeParameters p = init_parameters({3, 4, 2}, 1);
  ImbalanceScenario none;
  none.minority_classes = {0};
  const LabeledPools pools = make_pools(g);
  const auto nodes = generate_minority_nodes(p, g, pools, none, 1);
  CHECK(nodes.empty());
  const LabeledPools out = assemble_balanced_set(pools, nodes, p, g);
  const Matrix mu = posterior(p, g).mu;
  REQUIRE(out.synthesized.size() == pools.labeled.size());
  for (std::size_t i = 0; i < out.synthesized.size(); ++i) {
    CHECK(out.synthesized[i].latent == Vector(mu.row(pools.labeled[i].node).transpose()));
    CHECK(out.synthesized[i].class_id == pools.labeled[i].class_id);
  }
}

TEST_CASE("zero noise reproduces the source mean") {
  Scenario s = imbalanced();
  const NoiseSource zero = [](std::uint64_t, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  const auto nodes = generate_minority_nodes(s.params, s.graph, s.pools, s.scenario, 3, {}, zero);
  const Matrix mu = posterior(s.params, s.graph).mu;
  REQUIRE_FALSE(nodes.empty());
  for (const GeneratedNode& g : nodes) {
    CHECK(g.latent == Vector(mu.row(g.source_node).transpose()));
  }
}

TEST_CASE("samples from one source follow its posterior") {
  const int d = 6;
  const int n = 1002;
  vigraph::Rng rng(12);
  NodePosterior post{fixtures::random_matrix(n, d, rng, -1, 1), fixtures::random_matrix(n, d, rng, -1, 0.5)};
  LabeledPools pools;
  pools.labeled.push_back({0, 1});
  for (int i = 1; i <= 1001; ++i) pools.labeled.push_back({i, 0});
  const auto nodes = generate_from_posterior(post, pools, 2, 99);
  REQUIRE(nodes.size() == 1000);
  Matrix z(1000, d);
  for (int i = 0; i < 1000; ++i) {
    CHECK(nodes[static_cast<std::size_t>(i)].source_node == 0);
    z.row(i) = nodes[static_cast<std::size_t>(i)].latent.transpose();
  }
  for (int c = 0; c < d; ++c) {
    const double sigma = std::exp(post.log_sigma(0, c));
    const double mean = z.col(c).mean();
    const double sd = std::sqrt((z.col(c).array() - mean).square().sum() / 999.0);
    CHECK(std::abs(mean - post.mu(0, c)) < 3.0 * sigma / std::sqrt(1000.0));
    CHECK(std::abs(sd - sigma) < 0.1 * sigma);
  }
}

TEST_CASE("class-pooled sampling matches the mixture moments") {
  const int d = 3;
  vigraph::Rng rng(5);
  NodePosterior post{fixtures::random_matrix(4003, d, rng, -2, 2),
                     fixtures::random_matrix(4003, d, rng, -1, 0)};
  LabeledPools pools;
  for (int i = 0; i < 3; ++i) pools.labeled.push_back({i, 1});
  for (int i = 3; i < 4003; ++i) pools.labeled.push_back({i, 0});
  GeneratorConfig cfg;
  cfg.sampling = SourceSampling::class_pooled;
  const auto nodes = generate_from_posterior(post, pools, 2, 1, cfg);
  REQUIRE(nodes.size() == 3997);
  for (int c = 0; c < d; ++c) {
    double m = 0.0, second = 0.0;
    for (int v = 0; v < 3; ++v) {
      const double var = std::exp(2.0 * post.log_sigma(v, c));
      m += post.mu(v, c) / 3.0;
      second += (var + post.mu(v, c) * post.mu(v, c)) / 3.0;
    }
    const double sd = std::sqrt(second - m * m);
    double mean = 0.0;
    for (const GeneratedNode& g : nodes) mean += g.latent(c) / static_cast<double>(nodes.size());
    CHECK(std::abs(mean - m) < 4.0 * sd / std::sqrt(static_cast<double>(nodes.size())));
    CHECK(nodes.front().source_node == -1);
  }
  CHECK(parse_source_sampling("class-pooled") == SourceSampling::class_pooled);
  CHECK(to_string(SourceSampling::per_node) == "per-node");
  CHECK_THROWS_AS(parse_source_sampling("pooled"), InvalidArgument);
}

TEST_CASE("assembly ignores the order of generated nodes") {
  Scenario s = imbalanced();
  auto nodes = generate_minority_nodes(s.params, s.graph, s.pools, s.scenario, 8);
  const LabeledPools a = assemble_balanced_set(s.pools, nodes, s.params, s.graph);
  std::reverse(nodes.begin(), nodes.end());
  std::swap(nodes[1], nodes[5]);
  const LabeledPools b = assemble_balanced_set(s.pools, nodes, s.params, s.graph);
  CHECK(as_multiset(a) == as_multiset(b));
  REQUIRE(a.synthesized.size() == b.synthesized.size());
  for (std::size_t i = 0; i < a.synthesized.size(); ++i) {
    CHECK(a.synthesized[i].latent == b.synthesized[i].latent);
  }
}

TEST_CASE("generation is deterministic and leaves the graph alone") {
  Scenario s = imbalanced();
  const AttributedGraph before = s.graph;
  const auto a = generate_minority_nodes(s.params, s.graph, s.pools, s.scenario, 21);
  const auto b = generate_minority_nodes(s.params, s.graph, s.pools, s.scenario, 21);
  const auto c = generate_minority_nodes(s.params, s.graph, s.pools, s.scenario, 22);
  REQUIRE(a.size() == b.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].latent == b[i].latent);
    CHECK(a[i].source_node == b[i].source_node);
    CHECK(a[i].epsilon_seed == b[i].epsilon_seed);
    differs = differs || !(a[i].latent == c[i].latent);
  }
  CHECK(differs);
  CHECK(s.graph == before);
  // Replaying a node from its recorded seed.
  Vector eps(4);
  gaussian_noise(a[3].epsilon_seed, std::span<double>(eps.data(), 4));
  const NodePosterior post = posterior(s.params, s.graph);
  const Vector expect = post.mu.row(a[3].source_node).transpose().array() +
                        post.log_sigma.row(a[3].source_node).transpose().array().exp() * eps.array();
  CHECK(a[3].latent == expect);
}

TEST_CASE("generation errors") {
  Scenario s = imbalanced();
  SUBCASE("minority class without labeled nodes") {
    LabeledPools pools = s.pools;
    std::erase_if(pools.labeled, [](const LabeledNode& l) { return l.class_id == 2; });
    CHECK_THROWS_AS(generate_minority_nodes(s.params, s.graph, pools, s.scenario, 1), ScenarioError);
  }
  SUBCASE("non-finite parameters") {
    VgaeParameters bad = s.params;
    bad.mu_weight(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(generate_minority_nodes(bad, s.graph, s.pools, s.scenario, 1), InvalidArgument);
  }
}
