#include "vigraph/generator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vigraph/errors.hpp"
#include "vigraph/rng.hpp"

namespace vigraph {

std::string_view to_string(SourceSampling s) {
  return s == SourceSampling::per_node ? "per-node" : "class-pooled";
}

SourceSampling parse_source_sampling(std::string_view name) {
  if (name == "per-node") return SourceSampling::per_node;
  if (name == "class-pooled") return SourceSampling::class_pooled;
  throw InvalidArgument("unknown source sampling '" + std::string(name) + "'");
}

void gaussian_noise(std::uint64_t epsilon_seed, std::span<double> out) {
  Rng rng(epsilon_seed);
  rng.fill_normal(out);
}

NodePosterior posterior(const VgaeParameters& params, const AttributedGraph& graph) {
  const NormalizedAdjacency adj = normalize_adjacency(graph);
  const Matrix hidden = encode(graph.features(), adj, params);
  VariationalHeads heads = variational_heads(hidden, adj, params);
  return {std::move(heads.mu), std::move(heads.log_sigma)};
}

std::vector<GeneratedNode> generate_from_posterior(const NodePosterior& post,
                                                   const LabeledPools& pools, int num_classes,
                                                   std::uint64_t seed,
                                                   const GeneratorConfig& config,
                                                   const NoiseSource& noise) {
  std::vector<std::vector<int>> members(static_cast<std::size_t>(num_classes));
  for (const LabeledNode& ln : pools.labeled) {
    if (ln.class_id < 0 || ln.class_id >= num_classes) {
      throw InvalidArgument("labeled class " + std::to_string(ln.class_id) + " out of range");
    }
    if (ln.node < 0 || ln.node >= post.mu.rows()) {
      throw InvalidArgument("labeled node " + std::to_string(ln.node) + " outside the embedding");
    }
    members[static_cast<std::size_t>(ln.class_id)].push_back(ln.node);
  }
  std::size_t target = 0;
  for (const auto& m : members) target = std::max(target, m.size());

  const Eigen::Index d = post.mu.cols();
  Rng rng(seed);
  std::vector<GeneratedNode> out;
  Vector eps(d);
  for (int c = 0; c < num_classes; ++c) {
    const auto& nodes = members[static_cast<std::size_t>(c)];
    if (nodes.size() >= target) continue;
    if (nodes.empty()) {
      throw ScenarioError("class " + std::to_string(c) + " has no labeled node to generate from");
    }
    Vector pooled_mean, pooled_sd;
    if (config.sampling == SourceSampling::class_pooled) {
      // Moments of the equal-weight mixture of the class's posteriors.
      pooled_mean = Vector::Zero(d);
      Vector second = Vector::Zero(d);
      for (int v : nodes) {
        const Vector mu = post.mu.row(v).transpose();
        const Vector var = (2.0 * post.log_sigma.row(v).transpose().array()).exp();
        pooled_mean += mu;
        second += (var.array() + mu.array().square()).matrix();
      }
      pooled_mean /= static_cast<double>(nodes.size());
      second /= static_cast<double>(nodes.size());
      pooled_sd = (second.array() - pooled_mean.array().square()).max(0.0).sqrt();
    }
    for (std::size_t i = nodes.size(); i < target; ++i) {
      GeneratedNode g;
      g.class_id = c;
      if (config.sampling == SourceSampling::per_node) {
        g.source_node = nodes[rng.below(nodes.size())];
      }
      g.epsilon_seed = rng.next_u64();
      noise(g.epsilon_seed, std::span<double>(eps.data(), static_cast<std::size_t>(d)));
      if (config.sampling == SourceSampling::per_node) {
        const auto mu = post.mu.row(g.source_node).transpose();
        const auto sigma = post.log_sigma.row(g.source_node).transpose().array().exp();
        g.latent = mu.array() + sigma * eps.array();
      } else {
        g.latent = pooled_mean.array() + pooled_sd.array() * eps.array();
      }
      out.push_back(std::move(g));
    }
  }
  return out;
}

std::vector<GeneratedNode> generate_minority_nodes(const VgaeParameters& params,
                                                   const AttributedGraph& graph,
                                                   const LabeledPools& pools,
                                                   const ImbalanceScenario& scenario,
                                                   std::uint64_t seed,
                                                   const GeneratorConfig& config,
                                                   const NoiseSource& noise) {
  if (!params.all_finite()) throw InvalidArgument("parameters contain non-finite values");
  const std::vector<int> counts = class_counts(pools, graph.num_classes());
  for (int c : scenario.minority_classes) {
    if (c < 0 || c >= graph.num_classes() || counts[static_cast<std::size_t>(c)] == 0) {
      throw ScenarioError("minority class " + std::to_string(c) + " has no labeled node");
    }
  }
  return generate_from_posterior(posterior(params, graph), pools, graph.num_classes(), seed, config,
                                 noise);
}

LabeledPools assemble_from_embedding(const LabeledPools& pools,
                                     std::vector<GeneratedNode> generated, const Matrix& mu) {
  std::sort(generated.begin(), generated.end(), [](const GeneratedNode& a, const GeneratedNode& b) {
    if (a.class_id != b.class_id) return a.class_id < b.class_id;
    return std::lexicographical_compare(a.latent.data(), a.latent.data() + a.latent.size(),
                                        b.latent.data(), b.latent.data() + b.latent.size());
  });
  LabeledPools out;
  out.labeled = pools.labeled;
  out.unlabeled = pools.unlabeled;
  out.synthesized.reserve(pools.labeled.size() + generated.size());
  for (const LabeledNode& ln : pools.labeled) {
    out.synthesized.push_back({mu.row(ln.node).transpose(), ln.class_id});
  }
  for (const GeneratedNode& g : generated) out.synthesized.push_back({g.latent, g.class_id});
  out.generated = std::move(generated);
  return out;
}

LabeledPools assemble_balanced_set(const LabeledPools& pools, std::vector<GeneratedNode> generated,
                                   const VgaeParameters& params, const AttributedGraph& graph) {
  return assemble_from_embedding(pools, std::move(generated), posterior(params, graph).mu);
}

}  // namespace vigraph
