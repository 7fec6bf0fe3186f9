#include "vigraph/objectives.hpp"

#include <cmath>
#include <string>

#include "loss_kernels.hpp"
#include "vigraph/errors.hpp"

namespace vigraph {

void LossWeights::validate() const {
  if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(gamma) || alpha < 0 ||
      beta < 0 || gamma < 0) {
    throw InvalidArgument("loss weights must be finite and non-negative");
  }
  if (!(tau > 0) || !std::isfinite(tau)) throw InvalidArgument("tau must be positive");
}

std::string_view to_string(ElboScale scale) {
  return scale == ElboScale::per_entry ? "per-entry" : "per-node";
}

ElboScale parse_elbo_scale(std::string_view name) {
  if (name == "per-entry") return ElboScale::per_entry;
  if (name == "per-node") return ElboScale::per_node;
  throw InvalidArgument("unknown ELBO scale '" + std::string(name) + "'");
}

double elbo_term(double kl, Eigen::Index nodes, ElboScale scale) {
  if (scale == ElboScale::per_node || nodes < 1) return kl;
  return kl / static_cast<double>(nodes);
}

double kl_standard_normal(const Matrix& mu, const Matrix& log_sigma) {
  if (mu.rows() != log_sigma.rows() || mu.cols() != log_sigma.cols()) {
    throw InvalidArgument("mu and log_sigma must share a shape");
  }
  if (!mu.allFinite() || !log_sigma.allFinite()) throw InvalidArgument("non-finite KL input");
  if (mu.rows() == 0) return 0.0;
  const auto ls = log_sigma.array();
  const double sum = 0.5 * (mu.array().square() + (2.0 * ls).exp() - 2.0 * ls - 1.0).sum();
  return sum / static_cast<double>(mu.rows());
}

namespace {

RowWeights finish_weights(std::vector<int> positives) {
  const auto n = static_cast<double>(positives.size());
  RowWeights out;
  out.weights = Vector::Zero(static_cast<Eigen::Index>(positives.size()));
  for (std::size_t i = 0; i < positives.size(); ++i) {
    if (positives[i] > 0) {
      out.weights(static_cast<Eigen::Index>(i)) = (n - positives[i]) / positives[i];
    } else {
      out.degenerate_rows.push_back(static_cast<int>(i));
    }
  }
  out.positives = std::move(positives);
  return out;
}

}  // namespace

RowWeights row_positive_weights(const Matrix& target) {
  if (target.rows() != target.cols()) throw InvalidArgument("adjacency target must be square");
  std::vector<int> p(static_cast<std::size_t>(target.rows()));
  for (Eigen::Index i = 0; i < target.rows(); ++i) {
    p[static_cast<std::size_t>(i)] = static_cast<int>((target.row(i).array() != 0.0).count());
  }
  return finish_weights(std::move(p));
}

RowWeights row_positive_weights(const SparseMatrix& target) {
  if (target.rows() != target.cols()) throw InvalidArgument("adjacency target must be square");
  std::vector<int> p(static_cast<std::size_t>(target.rows()), 0);
  for (Eigen::Index i = 0; i < target.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(target, i); it; ++it) {
      if (it.value() != 0.0) ++p[static_cast<std::size_t>(i)];
    }
  }
  return finish_weights(std::move(p));
}

double structure_reconstruction_loss(const Matrix& target, const Matrix& a_hat) {
  if (target.rows() != a_hat.rows() || target.cols() != a_hat.cols() ||
      target.rows() != target.cols()) {
    throw InvalidArgument("target and a_hat must be equal square matrices");
  }
  if (!a_hat.allFinite() || (a_hat.array() < 0.0).any() || (a_hat.array() > 1.0).any()) {
    throw InvalidArgument("a_hat entries must be probabilities");
  }
  const Eigen::Index n = target.rows();
  if (n == 0) return 0.0;
  const RowWeights rw = row_positive_weights(target);
  const auto p = a_hat.array().max(kProbabilityClamp).min(1.0 - kProbabilityClamp);
  const auto positive = (target.array() != 0.0).cast<double>();
  const Matrix pos_term = (positive * p.log()).matrix();
  const Matrix neg_term = ((1.0 - positive) * (1.0 - p).log()).matrix();
  const double weighted_pos = rw.weights.dot(pos_term.rowwise().sum());
  const double nn = static_cast<double>(n) * static_cast<double>(n);
  return -(weighted_pos + neg_term.sum()) / nn;
}

Cosine cosine_similarity(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw InvalidArgument("cosine operands differ in length");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return {0.0, true};
  return {a.dot(b) / (na * nb), false};
}

double siamese_contrastive_loss(const Matrix& x1, const Matrix& x2, double tau) {
  if (!(tau > 0)) throw InvalidArgument("tau must be positive");
  if (x1.rows() != x2.rows() || x1.cols() != x2.cols()) {
    throw InvalidArgument("views must share a shape");
  }
  if (x1.rows() == 0) throw InvalidArgument("contrastive loss needs at least one node");
  return kernels::contrastive<double>(x1, x2, tau, nullptr, nullptr);
}

double total_loss(double kl, double rec, double gcl, const LossWeights& weights) {
  return weights.alpha * kl + weights.beta * rec + weights.gamma * gcl;
}

}  // namespace vigraph
