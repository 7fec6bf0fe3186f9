#pragma once

#include <cstdint>
#include <vector>

#include "vigraph/graph.hpp"

namespace vigraph {

/// Two-layer GCN trained with plain cross-entropy on the train-tagged nodes.
struct BaselineConfig {
  int hidden = 64;
  double dropout = 0.5;
  double learning_rate = 0.01;
  /// L2 penalty on the first layer's weight.
  double weight_decay = 5e-4;
  int epochs = 200;
  /// Row-normalize the input features (the usual GCN preprocessing)
  /// regardless of the pipeline's own feature setting.
  bool normalize_features = true;
  friend bool operator==(const BaselineConfig&, const BaselineConfig&) = default;
};

struct BaselineResult {
  /// Predicted class for every node, from the epoch with the best
  /// validation macro-F1 (the last epoch when there are no val nodes).
  std::vector<int> predictions;
  int best_epoch = -1;
  double best_val_f1 = 0.0;
};

BaselineResult train_gcn_baseline(const AttributedGraph& graph, const BaselineConfig& config,
                                  std::uint64_t seed);

}  // namespace vigraph
