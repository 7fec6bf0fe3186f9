#include "vigraph/baseline.hpp"

#include <cmath>
#include <limits>

#include "vigraph/classifier.hpp"
#include "vigraph/errors.hpp"
#include "vigraph/rng.hpp"

namespace vigraph {

namespace {

struct AdamSlot {
  Matrix m, v;
  explicit AdamSlot(const Matrix& like)
      : m(Matrix::Zero(like.rows(), like.cols())), v(Matrix::Zero(like.rows(), like.cols())) {}
  void step(Matrix& p, const Matrix& g, double lr, int t) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

Matrix glorot(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-a, a);
  return m;
}

std::vector<int> argmax_rows(const Matrix& s) {
  std::vector<int> out(static_cast<std::size_t>(s.rows()));
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    Eigen::Index best = 0;
    s.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

}  // namespace

BaselineResult train_gcn_baseline(const AttributedGraph& graph, const BaselineConfig& config,
                                  std::uint64_t seed) {
  if (config.hidden < 1 || config.epochs < 0 || config.dropout < 0 || config.dropout >= 1) {
    throw InvalidArgument("invalid baseline configuration");
  }
  const std::vector<int> train_nodes = graph.nodes_with(SplitTag::train);
  if (train_nodes.empty()) throw InvalidArgument("baseline needs train nodes");
  const std::vector<int> val_nodes = graph.nodes_with(SplitTag::val);
  const int k = graph.num_classes();
  const Eigen::Index n = graph.node_count();
  const SparseMatrix adj = normalize_adjacency(graph).matrix;
  const SparseMatrix x = config.normalize_features
                             ? SparseMatrix(row_normalized(graph.features()).sparseView())
                             : SparseMatrix(graph.features().sparseView());

  Rng rng(seed);
  Matrix w1 = glorot(graph.feature_dim(), config.hidden, rng);
  Matrix b1 = Matrix::Zero(1, config.hidden);
  Matrix w2 = glorot(config.hidden, k, rng);
  Matrix b2 = Matrix::Zero(1, k);
  AdamSlot s_w1(w1), s_b1(b1), s_w2(w2), s_b2(b2);

  auto forward_eval = [&]() {
    Matrix a1 = adj * (x * w1);
    a1.rowwise() += b1.row(0);
    const Matrix h = a1.cwiseMax(0.0);
    Matrix logits = adj * (h * w2);
    logits.rowwise() += b2.row(0);
    return logits;
  };
  std::vector<int> val_gold;
  for (int v : val_nodes) val_gold.push_back(graph.labels()[static_cast<std::size_t>(v)]);

  BaselineResult result;
  result.best_val_f1 = -std::numeric_limits<double>::infinity();
  const double keep = 1.0 - config.dropout;
  const double inv_train = 1.0 / static_cast<double>(train_nodes.size());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    SparseMatrix xd = x;
    for (Eigen::Index i = 0; i < xd.nonZeros(); ++i) {
      xd.valuePtr()[i] = rng.uniform() < keep ? xd.valuePtr()[i] / keep : 0.0;
    }
    Matrix a1 = adj * (xd * w1);
    a1.rowwise() += b1.row(0);
    Matrix mask(n, config.hidden);
    for (Eigen::Index i = 0; i < mask.size(); ++i) {
      mask.data()[i] = rng.uniform() < keep ? 1.0 / keep : 0.0;
    }
    const Matrix hd = a1.cwiseMax(0.0).cwiseProduct(mask);
    Matrix logits = adj * (hd * w2);
    logits.rowwise() += b2.row(0);

    Matrix dlogits = Matrix::Zero(n, k);
    for (int v : train_nodes) {
      auto row = logits.row(v);
      const double mx = row.maxCoeff();
      Eigen::RowVectorXd p = (row.array() - mx).exp();
      p /= p.sum();
      p(graph.labels()[static_cast<std::size_t>(v)]) -= 1.0;
      dlogits.row(v) = p * inv_train;
    }
    const Matrix dq = adj * dlogits;
    const Matrix gw2 = hd.transpose() * dq;
    const Matrix gb2 = dlogits.colwise().sum();
    const Matrix dhd = dq * w2.transpose();
    const Matrix da1 = (a1.array() > 0.0).select(dhd.cwiseProduct(mask), 0.0);
    const Matrix gb1 = da1.colwise().sum();
    const Matrix dp = adj * da1;
    const Matrix gw1 = Matrix(xd.transpose() * dp) + config.weight_decay * w1;

    const int t = epoch + 1;
    s_w1.step(w1, gw1, config.learning_rate, t);
    s_b1.step(b1, gb1, config.learning_rate, t);
    s_w2.step(w2, gw2, config.learning_rate, t);
    s_b2.step(b2, gb2, config.learning_rate, t);

    const std::vector<int> pred = argmax_rows(forward_eval());
    if (val_nodes.empty()) {
      result.predictions = pred;
      result.best_epoch = epoch;
      continue;
    }
    std::vector<int> val_pred;
    for (int v : val_nodes) val_pred.push_back(pred[static_cast<std::size_t>(v)]);
    const double f1 = compute_metrics(val_pred, val_gold, k).macro_f1;
    if (f1 > result.best_val_f1) {
      result.best_val_f1 = f1;
      result.best_epoch = epoch;
      result.predictions = pred;
    }
  }
  if (result.predictions.empty()) result.predictions = argmax_rows(forward_eval());
  if (std::isinf(result.best_val_f1)) result.best_val_f1 = std::numeric_limits<double>::quiet_NaN();
  return result;
}

}  // namespace vigraph
