#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace vigraph {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class SplitTag : std::uint8_t { train, val, test, unlabeled };

std::string_view to_string(SplitTag tag);

/// Undirected edge, stored with u < v.
struct Edge {
  int u = 0;
  int v = 0;
  auto operator<=>(const Edge&) const = default;
};

/// Node-attributed, labeled, undirected graph with a train/val/test split.
///
/// Edges are canonicalized on construction (ordered endpoints, sorted,
/// duplicates merged). Self-loops are rejected; they only appear in the
/// derived propagation and reconstruction matrices.
class AttributedGraph {
 public:
  AttributedGraph() = default;

  /// `num_classes` < 0 means "one past the largest label".
  AttributedGraph(Matrix features, std::vector<Edge> edges, std::vector<int> labels,
                  std::vector<SplitTag> split, int num_classes = -1);

  int node_count() const noexcept { return static_cast<int>(labels_.size()); }
  int feature_dim() const noexcept { return static_cast<int>(features_.cols()); }
  int num_classes() const noexcept { return num_classes_; }

  const Matrix& features() const noexcept { return features_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<SplitTag>& split() const noexcept { return split_; }

  std::vector<int> nodes_with(SplitTag tag) const;
  bool has_edge(int u, int v) const;

  /// Returns a copy with a different split; structure and features are kept.
  AttributedGraph with_split(std::vector<SplitTag> split) const;

  /// Returns a copy with replaced features (same node count).
  AttributedGraph with_features(Matrix features) const;

  friend bool operator==(const AttributedGraph& a, const AttributedGraph& b);

 private:
  void validate() const;

  Matrix features_;
  std::vector<Edge> edges_;
  std::vector<int> labels_;
  std::vector<SplitTag> split_;
  int num_classes_ = 0;
};

/// D̃^{-1/2}(A+I)D̃^{-1/2}, the GCN propagation operator.
struct NormalizedAdjacency {
  SparseMatrix matrix;
};

NormalizedAdjacency normalize_adjacency(const AttributedGraph& graph);

/// Binary A + I, the structure reconstruction target.
SparseMatrix adjacency_with_self_loops(const AttributedGraph& graph);

/// Each row scaled to sum to one (zero rows stay zero).
Matrix row_normalized(const Matrix& features);

struct LabeledNode {
  int node = 0;
  int class_id = 0;
  auto operator<=>(const LabeledNode&) const = default;
};

/// A latent-space node produced by reparameterizing a labeled node's (μ, σ).
struct GeneratedNode {
  Vector latent;
  int class_id = 0;
  /// Original labeled node whose posterior was sampled; -1 for class-pooled draws.
  int source_node = -1;
  std::uint64_t epsilon_seed = 0;
};

struct LatentExample {
  Vector latent;
  int class_id = 0;
};

/// D_L, D_U, D_G and the union D_S = D_L ∪ D_G used by the downstream classifier.
struct LabeledPools {
  std::vector<LabeledNode> labeled;
  std::vector<int> unlabeled;
  std::vector<GeneratedNode> generated;
  std::vector<LatentExample> synthesized;
};

/// Labeled = nodes tagged train; unlabeled = every other node.
LabeledPools make_pools(const AttributedGraph& graph);

std::vector<int> class_counts(std::span<const int> labels, int num_classes);
/// Counts over D_L.
std::vector<int> class_counts(const LabeledPools& pools, int num_classes);
/// Counts over D_S.
std::vector<int> synthesized_class_counts(const LabeledPools& pools, int num_classes);

}  // namespace vigraph
