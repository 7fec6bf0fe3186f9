#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "vigraph/graph.hpp"
#include "vigraph/imbalance.hpp"
#include "vigraph/vgae.hpp"

namespace vigraph {

enum class SourceSampling {
  /// Reparameterize a uniformly drawn labeled node of the class.
  per_node,
  /// Sample one Gaussian moment-matched to the class's labeled posteriors.
  class_pooled,
};

std::string_view to_string(SourceSampling s);
SourceSampling parse_source_sampling(std::string_view name);

/// Fills `out` with standard-normal draws for the node whose epsilon seed is
/// given. Tests substitute a stub.
using NoiseSource = std::function<void(std::uint64_t epsilon_seed, std::span<double> out)>;

/// Default noise: Rng(epsilon_seed).fill_normal.
void gaussian_noise(std::uint64_t epsilon_seed, std::span<double> out);

struct GeneratorConfig {
  SourceSampling sampling = SourceSampling::per_node;
  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

/// Per-node posterior from a deterministic forward pass.
struct NodePosterior {
  Matrix mu;
  Matrix log_sigma;
};

NodePosterior posterior(const VgaeParameters& params, const AttributedGraph& graph);

/// Tops up every class of D_L to T = max class count.
///
/// A node of class c is drawn as z = μ_s + σ_s ⊙ ε with source s uniform over
/// the labeled nodes of c (with replacement) and ε from `noise`. Output is
/// ordered by class, then draw. Throws ScenarioError when a class that needs
/// nodes has no labeled node to sample from.
std::vector<GeneratedNode> generate_from_posterior(const NodePosterior& post,
                                                   const LabeledPools& pools, int num_classes,
                                                   std::uint64_t seed,
                                                   const GeneratorConfig& config = {},
                                                   const NoiseSource& noise = gaussian_noise);

/// Runs the forward pass on `graph` and generates as above. Also checks that
/// each of the scenario's minority classes still has a labeled node and that
/// the parameters are finite.
std::vector<GeneratedNode> generate_minority_nodes(const VgaeParameters& params,
                                                   const AttributedGraph& graph,
                                                   const LabeledPools& pools,
                                                   const ImbalanceScenario& scenario,
                                                   std::uint64_t seed,
                                                   const GeneratorConfig& config = {},
                                                   const NoiseSource& noise = gaussian_noise);

/// D_S = D_L (as μ rows of `mu`) ∪ D_G. Generated nodes are stored in a
/// canonical order so a permuted input yields the same pools.
LabeledPools assemble_from_embedding(const LabeledPools& pools,
                                     std::vector<GeneratedNode> generated, const Matrix& mu);

LabeledPools assemble_balanced_set(const LabeledPools& pools, std::vector<GeneratedNode> generated,
                                   const VgaeParameters& params, const AttributedGraph& graph);

}  // namespace vigraph
