#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vigraph/graph.hpp"

namespace vigraph {

struct MetricTriple {
  double acc = 0.0;
  double bacc = 0.0;
  double macro_f1 = 0.0;
};

/// Accuracy, balanced accuracy and macro-F1.
///
/// bAcc and macro-F1 average over the classes that occur in `gold`; a class
/// that is predicted but absent from gold only lowers the precision of the
/// classes it steals from.
MetricTriple compute_metrics(std::span<const int> predictions, std::span<const int> gold,
                             int num_classes);

struct ClassifierConfig {
  int steps = 300;
  double learning_rate = 0.01;
  /// Kept for the manifest. Training starts from zero weights and is
  /// full-batch, so the seed does not change the result.
  std::uint64_t seed = 0;
  friend bool operator==(const ClassifierConfig&, const ClassifierConfig&) = default;
};

/// Softmax regression: scores = x W + b.
class LinearClassifier {
 public:
  LinearClassifier() = default;
  LinearClassifier(Matrix weight, Vector bias);

  int num_classes() const { return static_cast<int>(bias_.size()); }
  const Matrix& weight() const { return weight_; }
  const Vector& bias() const { return bias_; }

  Matrix scores(const Matrix& latents) const;
  std::vector<int> predict(const Matrix& latents) const;

 private:
  Matrix weight_;
  Vector bias_;
};

/// Full-batch Adam on mean cross-entropy over inputs standardized per
/// dimension with the training set's mean and spread; the standardization is
/// folded into the returned weight and bias. Throws InvalidArgument when some
/// class in [0, num_classes) has no example.
LinearClassifier train_classifier(const std::vector<LatentExample>& train, int num_classes,
                                  const ClassifierConfig& config = {});

/// Stacks the rows of `nodes` from an N×d embedding.
Matrix gather_rows(const Matrix& embedding, std::span<const int> nodes);

}  // namespace vigraph
