#include "vigraph/classifier.hpp"

#include <cmath>
#include <string>

#include "vigraph/errors.hpp"

namespace vigraph {

MetricTriple compute_metrics(std::span<const int> predictions, std::span<const int> gold,
                             int num_classes) {
  if (predictions.size() != gold.size()) {
    throw InvalidArgument("predictions and gold differ in length");
  }
  if (gold.empty()) throw InvalidArgument("metrics need at least one example");
  const auto k = static_cast<std::size_t>(num_classes);
  std::vector<long> tp(k, 0), gold_n(k, 0), pred_n(k, 0);
  long correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const int g = gold[i];
    const int p = predictions[i];
    if (g < 0 || g >= num_classes) throw InvalidArgument("gold class out of range");
    if (p < 0 || p >= num_classes) throw InvalidArgument("predicted class out of range");
    ++gold_n[static_cast<std::size_t>(g)];
    ++pred_n[static_cast<std::size_t>(p)];
    if (g == p) {
      ++correct;
      ++tp[static_cast<std::size_t>(g)];
    }
  }
  MetricTriple m;
  m.acc = static_cast<double>(correct) / static_cast<double>(gold.size());
  int present = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (gold_n[c] == 0) continue;
    ++present;
    const double recall = static_cast<double>(tp[c]) / static_cast<double>(gold_n[c]);
    const double precision =
        pred_n[c] > 0 ? static_cast<double>(tp[c]) / static_cast<double>(pred_n[c]) : 0.0;
    m.bacc += recall;
    if (precision + recall > 0) m.macro_f1 += 2.0 * precision * recall / (precision + recall);
  }
  m.bacc /= present;
  m.macro_f1 /= present;
  return m;
}

LinearClassifier::LinearClassifier(Matrix weight, Vector bias)
    : weight_(std::move(weight)), bias_(std::move(bias)) {
  if (weight_.cols() != bias_.size()) throw InvalidArgument("classifier weight/bias mismatch");
}

Matrix LinearClassifier::scores(const Matrix& latents) const {
  if (latents.cols() != weight_.rows()) {
    throw InvalidArgument("latent width " + std::to_string(latents.cols()) +
                          " does not match classifier input " + std::to_string(weight_.rows()));
  }
  Matrix s = latents * weight_;
  s.rowwise() += bias_.transpose();
  return s;
}

std::vector<int> LinearClassifier::predict(const Matrix& latents) const {
  const Matrix s = scores(latents);
  std::vector<int> out(static_cast<std::size_t>(s.rows()));
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < s.cols(); ++c) {
      if (s(i, c) > s(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

LinearClassifier train_classifier(const std::vector<LatentExample>& train, int num_classes,
                                  const ClassifierConfig& config) {
  if (train.empty()) throw InvalidArgument("classifier training set is empty");
  if (num_classes < 1) throw InvalidArgument("num_classes must be positive");
  const auto n = static_cast<Eigen::Index>(train.size());
  const Eigen::Index d = train.front().latent.size();
  Matrix x(n, d);
  Matrix y = Matrix::Zero(n, num_classes);
  std::vector<int> seen(static_cast<std::size_t>(num_classes), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const LatentExample& ex = train[static_cast<std::size_t>(i)];
    if (ex.latent.size() != d) throw InvalidArgument("latent widths differ");
    if (ex.class_id < 0 || ex.class_id >= num_classes) {
      throw InvalidArgument("class " + std::to_string(ex.class_id) + " out of range");
    }
    x.row(i) = ex.latent.transpose();
    y(i, ex.class_id) = 1.0;
    seen[static_cast<std::size_t>(ex.class_id)] = 1;
  }
  for (int c = 0; c < num_classes; ++c) {
    if (!seen[static_cast<std::size_t>(c)]) {
      throw InvalidArgument("class " + std::to_string(c) + " missing from training set");
    }
  }

  // Train on standardized inputs and fold the affine map back into (w, b).
  // Latent scales vary by orders of magnitude between runs, and a zero-init
  // model with a fixed step budget cannot grow its weights to match.
  const Vector mean = x.colwise().mean().transpose();
  Vector scale = (x.rowwise() - mean.transpose()).colwise().norm().transpose() /
                 std::sqrt(static_cast<double>(n));
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!(scale(j) > 1e-12 * (1.0 + std::abs(mean(j))))) scale(j) = 1.0;
  }
  x.rowwise() -= mean.transpose();
  x.array().rowwise() /= scale.transpose().array();

  Matrix w = Matrix::Zero(d, num_classes);
  Vector b = Vector::Zero(num_classes);
  Matrix mw = w, vw = w;
  Vector mb = b, vb = b;
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double lr = config.learning_rate;
  for (int t = 1; t <= config.steps; ++t) {
    Matrix logits = x * w;
    logits.rowwise() += b.transpose();
    const Vector row_max = logits.rowwise().maxCoeff();
    logits.colwise() -= row_max;
    Matrix prob = logits.array().exp();
    const Vector z = prob.rowwise().sum();
    for (Eigen::Index i = 0; i < n; ++i) prob.row(i) /= z(i);
    const Matrix delta = (prob - y) / static_cast<double>(n);
    const Matrix gw = x.transpose() * delta;
    const Vector gb = delta.colwise().sum().transpose();

    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);
    mw = b1 * mw + (1 - b1) * gw;
    vw = b2 * vw + (1 - b2) * gw.cwiseProduct(gw);
    mb = b1 * mb + (1 - b1) * gb;
    vb = b2 * vb + (1 - b2) * gb.cwiseProduct(gb);
    w.array() -= lr * (mw.array() / c1) / ((vw.array() / c2).sqrt() + eps);
    b.array() -= lr * (mb.array() / c1) / ((vb.array() / c2).sqrt() + eps);
  }
  for (Eigen::Index j = 0; j < d; ++j) w.row(j) /= scale(j);
  b -= (mean.transpose() * w).transpose();
  return LinearClassifier(std::move(w), std::move(b));
}

Matrix gather_rows(const Matrix& embedding, std::span<const int> nodes) {
  Matrix out(static_cast<Eigen::Index>(nodes.size()), embedding.cols());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const int v = nodes[i];
    if (v < 0 || v >= embedding.rows()) throw InvalidArgument("node id outside the embedding");
    out.row(static_cast<Eigen::Index>(i)) = embedding.row(v);
  }
  return out;
}

}  // namespace vigraph
