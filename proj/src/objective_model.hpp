#pragma once

// Forward and backward pass of the joint objective over every VGAE tensor.

#include "loss_kernels.hpp"
#include "vigraph/graph.hpp"
#include "vigraph/objectives.hpp"
#include "vigraph/vgae.hpp"

namespace vigraph::detail {

/// Graph-dependent operands, built once per training run.
struct ObjectiveInputs {
  SparseMatrix features;
  SparseMatrix features_t;
  SparseMatrix adjacency;  // Â_sym
  SparseMatrix target;     // A + I
  Vector row_weights;
  Eigen::Index node_count = 0;

  static ObjectiveInputs from_graph(const AttributedGraph& graph);
};

struct ObjectiveOptions {
  LossWeights weights;
  /// Average the structure loss over both decoded views, else use view 2 only.
  bool both_views = true;
  ElboScale elbo_scale = ElboScale::per_entry;
};

/// Loss terms at `params` with the given noise. When `grad` is non-null it
/// receives d total / d tensor in the same layout as `params`; terms with a
/// zero weight are still evaluated but contribute no gradient.
LossTerms evaluate(const ObjectiveInputs& in, const VgaeParameters& params, const Matrix& eps1,
                   const Matrix& eps2, const ObjectiveOptions& options, VgaeParameters* grad,
                   kernels::Scratch<double>* scratch = nullptr);

}  // namespace vigraph::detail
