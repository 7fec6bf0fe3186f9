#include "vigraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vigraph/errors.hpp"

namespace vigraph {

std::string_view to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::train:
      return "train";
    case SplitTag::val:
      return "val";
    case SplitTag::test:
      return "test";
    case SplitTag::unlabeled:
      return "unlabeled";
  }
  return "unlabeled";
}

AttributedGraph::AttributedGraph(Matrix features, std::vector<Edge> edges, std::vector<int> labels,
                                 std::vector<SplitTag> split, int num_classes)
    : features_(std::move(features)),
      edges_(std::move(edges)),
      labels_(std::move(labels)),
      split_(std::move(split)) {
  for (Edge& e : edges_) {
    if (e.u == e.v) {
      throw InvalidArgument("self-loop on node " + std::to_string(e.u) + " cannot be stored");
    }
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

  if (num_classes < 0) {
    num_classes_ = labels_.empty() ? 0 : *std::max_element(labels_.begin(), labels_.end()) + 1;
  } else {
    num_classes_ = num_classes;
  }
  validate();
}

void AttributedGraph::validate() const {
  const int n = node_count();
  if (features_.rows() != n) {
    throw InvalidArgument("feature matrix has " + std::to_string(features_.rows()) +
                          " rows for " + std::to_string(n) + " nodes");
  }
  if (static_cast<int>(split_.size()) != n) {
    throw InvalidArgument("split has " + std::to_string(split_.size()) + " tags for " +
                          std::to_string(n) + " nodes");
  }
  for (const Edge& e : edges_) {
    if (e.u < 0 || e.v >= n) {
      throw InvalidArgument("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                            ") has an endpoint outside [0, " + std::to_string(n) + ")");
    }
  }
  for (int c : labels_) {
    if (c < 0 || c >= num_classes_) {
      throw InvalidArgument("label " + std::to_string(c) + " outside [0, " +
                            std::to_string(num_classes_) + ")");
    }
  }
}

std::vector<int> AttributedGraph::nodes_with(SplitTag tag) const {
  std::vector<int> out;
  for (int i = 0; i < node_count(); ++i) {
    if (split_[i] == tag) out.push_back(i);
  }
  return out;
}

bool AttributedGraph::has_edge(int u, int v) const {
  if (u > v) std::swap(u, v);
  return std::binary_search(edges_.begin(), edges_.end(), Edge{u, v});
}

AttributedGraph AttributedGraph::with_split(std::vector<SplitTag> split) const {
  AttributedGraph out = *this;
  out.split_ = std::move(split);
  out.validate();
  return out;
}

AttributedGraph AttributedGraph::with_features(Matrix features) const {
  AttributedGraph out = *this;
  out.features_ = std::move(features);
  out.validate();
  return out;
}

bool operator==(const AttributedGraph& a, const AttributedGraph& b) {
  return a.num_classes_ == b.num_classes_ && a.labels_ == b.labels_ && a.split_ == b.split_ &&
         a.edges_ == b.edges_ && a.features_.rows() == b.features_.rows() &&
         a.features_.cols() == b.features_.cols() && a.features_ == b.features_;
}

NormalizedAdjacency normalize_adjacency(const AttributedGraph& graph) {
  const int n = graph.node_count();
  std::vector<double> degree(n, 1.0);
  for (const Edge& e : graph.edges()) {
    degree[e.u] += 1.0;
    degree[e.v] += 1.0;
  }
  std::vector<double> inv_sqrt(n);
  for (int i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(n + 2 * graph.edges().size());
  for (int i = 0; i < n; ++i) triplets.emplace_back(i, i, inv_sqrt[i] * inv_sqrt[i]);
  for (const Edge& e : graph.edges()) {
    const double w = inv_sqrt[e.u] * inv_sqrt[e.v];
    triplets.emplace_back(e.u, e.v, w);
    triplets.emplace_back(e.v, e.u, w);
  }
  NormalizedAdjacency out;
  out.matrix.resize(n, n);
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

SparseMatrix adjacency_with_self_loops(const AttributedGraph& graph) {
  const int n = graph.node_count();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(n + 2 * graph.edges().size());
  for (int i = 0; i < n; ++i) triplets.emplace_back(i, i, 1.0);
  for (const Edge& e : graph.edges()) {
    triplets.emplace_back(e.u, e.v, 1.0);
    triplets.emplace_back(e.v, e.u, 1.0);
  }
  SparseMatrix out(n, n);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

Matrix row_normalized(const Matrix& features) {
  Matrix out = features;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double s = out.row(i).sum();
    if (s != 0.0) out.row(i) /= s;
  }
  return out;
}

LabeledPools make_pools(const AttributedGraph& graph) {
  LabeledPools pools;
  for (int i = 0; i < graph.node_count(); ++i) {
    if (graph.split()[i] == SplitTag::train) {
      pools.labeled.push_back({i, graph.labels()[i]});
    } else {
      pools.unlabeled.push_back(i);
    }
  }
  return pools;
}

std::vector<int> class_counts(std::span<const int> labels, int num_classes) {
  std::vector<int> counts(num_classes, 0);
  for (int c : labels) {
    if (c < 0 || c >= num_classes) {
      throw InvalidArgument("class id " + std::to_string(c) + " outside [0, " +
                            std::to_string(num_classes) + ")");
    }
    ++counts[c];
  }
  return counts;
}

std::vector<int> class_counts(const LabeledPools& pools, int num_classes) {
  std::vector<int> labels;
  labels.reserve(pools.labeled.size());
  for (const LabeledNode& n : pools.labeled) labels.push_back(n.class_id);
  return class_counts(labels, num_classes);
}

std::vector<int> synthesized_class_counts(const LabeledPools& pools, int num_classes) {
  std::vector<int> labels;
  labels.reserve(pools.synthesized.size());
  for (const LatentExample& e : pools.synthesized) labels.push_back(e.class_id);
  return class_counts(labels, num_classes);
}

}  // namespace vigraph
