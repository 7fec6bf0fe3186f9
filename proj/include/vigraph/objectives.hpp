#pragma once

#include <string_view>
#include <vector>

#include "vigraph/graph.hpp"

namespace vigraph {

/// Weights of the joint objective and the contrastive temperature.
struct LossWeights {
  double alpha = 1.0;  // KL alignment
  double beta = 1.0;   // structure reconstruction
  double gamma = 1.0;  // siamese contrastive
  double tau = 0.5;
  void validate() const;
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

struct LossTerms {
  /// KL per node, as returned by kl_standard_normal.
  double kl = 0.0;
  /// The KL term as it enters the weighted sum (see ElboScale).
  double elbo = 0.0;
  double rec = 0.0;
  double gcl = 0.0;
  double total = 0.0;
};

/// Normalization of the KL term inside the joint objective.
enum class ElboScale {
  /// KL per node divided by N, i.e. per adjacency entry like the structure
  /// loss. With α of order one this keeps the KL from swamping the other
  /// terms and collapsing the posterior onto the prior.
  per_entry,
  /// KL per node as is.
  per_node,
};

std::string_view to_string(ElboScale scale);
ElboScale parse_elbo_scale(std::string_view name);

/// The KL term entering the weighted sum for a graph with `nodes` nodes.
double elbo_term(double kl, Eigen::Index nodes, ElboScale scale);

/// Mean over nodes of KL(N(μ_i, diag σ_i²) ‖ N(0, I)).
double kl_standard_normal(const Matrix& mu, const Matrix& log_sigma);

/// Positive-class weight per adjacency row: W_i = (N − P_i) / P_i, or 0 for
/// rows without positives (listed in `degenerate_rows`).
struct RowWeights {
  Vector weights;
  std::vector<int> positives;
  std::vector<int> degenerate_rows;
};

RowWeights row_positive_weights(const Matrix& target);
RowWeights row_positive_weights(const SparseMatrix& target);

/// Clamp applied to reconstructed probabilities before taking logs.
inline constexpr double kProbabilityClamp = 1e-12;

/// −(1/N²) Σ_ij [W_i A_ij ln Â_ij + (1 − A_ij) ln(1 − Â_ij)]; the row weight
/// multiplies only the positive term.
double structure_reconstruction_loss(const Matrix& target, const Matrix& a_hat);

struct Cosine {
  double value = 0.0;
  /// Set when either vector is zero; value is then 0.
  bool degenerate = false;
};

Cosine cosine_similarity(const Vector& a, const Vector& b);

/// Symmetric InfoNCE over two decoded views: positive (x1_i, x2_i), inter-view
/// negatives (x1_i, x2_k) and intra-view negatives (x1_i, x1_k) for k ≠ i,
/// averaged over both anchor directions.
double siamese_contrastive_loss(const Matrix& x1, const Matrix& x2, double tau);

double total_loss(double kl, double rec, double gcl, const LossWeights& weights);

}  // namespace vigraph
