#pragma once

// Dense loss kernels with analytic gradients, templated on the compute type.
// The public functions in objectives.cpp and the trainer both go through
// these, so the scalar-loop oracles in the tests check the training path.

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace vigraph::kernels {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using Sparse = Eigen::SparseMatrix<T, Eigen::RowMajor>;

/// Rows scaled to unit length; zero rows stay zero. Returns the norms.
template <typename T>
Vec<T> normalize_rows(const Mat<T>& x, Mat<T>& unit) {
  Vec<T> norms = x.rowwise().norm();
  unit = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (norms(i) > T(0)) unit.row(i) /= norms(i);
  }
  return norms;
}

/// Backward pass of normalize_rows.
template <typename T>
Mat<T> normalize_rows_backward(const Mat<T>& unit, const Vec<T>& norms, const Mat<T>& d_unit) {
  Mat<T> dx(unit.rows(), unit.cols());
  for (Eigen::Index i = 0; i < unit.rows(); ++i) {
    if (norms(i) > T(0)) {
      const T proj = unit.row(i).dot(d_unit.row(i));
      dx.row(i) = (d_unit.row(i) - proj * unit.row(i)) / norms(i);
    } else {
      dx.row(i).setZero();
    }
  }
  return dx;
}

/// Rows are processed in square tiles of this size so that each tile's
/// similarities are produced, transformed and consumed while in cache.
inline constexpr Eigen::Index kTile = 128;

template <typename T>
struct Scratch {
  Mat<T> e12, e11, e22;  // contrastive: stored exp-similarities
  Mat<T> tile;
};

/// Siamese contrastive loss; gradients are written when dx1/dx2 are non-null.
///
/// Cosines lie in [-1, 1], so every logit is at most 1/τ and the log-sum-exp
/// uses that constant shift: exp((cos − 1)/τ) ∈ [e^{−2/τ}, 1]. The intra-view
/// matrices are symmetric and only their lower tiles are formed.
template <typename T>
double contrastive(const Mat<T>& x1, const Mat<T>& x2, double tau, Mat<T>* dx1, Mat<T>* dx2,
                   Scratch<T>* scratch = nullptr) {
  const Eigen::Index n = x1.rows();
  Scratch<T> local;
  Scratch<T>& ws = scratch != nullptr ? *scratch : local;
  const T inv_tau = T(1.0 / tau);
  Mat<T> u1, u2;
  const Vec<T> n1 = normalize_rows(x1, u1);
  const Vec<T> n2 = normalize_rows(x2, u2);
  const Vec<T> positive = (u1.array() * u2.array()).rowwise().sum();

  Mat<T>& e12 = ws.e12;
  Mat<T>& e11 = ws.e11;
  Mat<T>& e22 = ws.e22;
  e12.resize(n, n);
  e11.resize(n, n);
  e22.resize(n, n);
  Vec<T> r1 = Vec<T>::Zero(n), r2 = Vec<T>::Zero(n);

  for (Eigen::Index i0 = 0; i0 < n; i0 += kTile) {
    const Eigen::Index bi = std::min(kTile, n - i0);
    for (Eigen::Index j0 = 0; j0 < n; j0 += kTile) {
      const Eigen::Index bj = std::min(kTile, n - j0);
      auto t12 = e12.block(i0, j0, bi, bj);
      t12.noalias() = u1.middleRows(i0, bi) * u2.middleRows(j0, bj).transpose();
      t12 = ((t12.array() - T(1)) * inv_tau).exp();
      r1.segment(i0, bi) += t12.rowwise().sum();
      r2.segment(j0, bj) += t12.colwise().sum().transpose();
      if (j0 > i0) continue;
      auto t11 = e11.block(i0, j0, bi, bj);
      auto t22 = e22.block(i0, j0, bi, bj);
      t11.noalias() = u1.middleRows(i0, bi) * u1.middleRows(j0, bj).transpose();
      t22.noalias() = u2.middleRows(i0, bi) * u2.middleRows(j0, bj).transpose();
      t11 = ((t11.array() - T(1)) * inv_tau).exp();
      t22 = ((t22.array() - T(1)) * inv_tau).exp();
      if (j0 == i0) {
        t11.diagonal().setZero();
        t22.diagonal().setZero();
      }
      r1.segment(i0, bi) += t11.rowwise().sum();
      r2.segment(i0, bi) += t22.rowwise().sum();
      if (j0 != i0) {
        r1.segment(j0, bj) += t11.colwise().sum().transpose();
        r2.segment(j0, bj) += t22.colwise().sum().transpose();
      }
    }
  }

  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double shifted_pos = (static_cast<double>(positive(i)) - 1.0) / tau;
    loss += -shifted_pos + std::log(static_cast<double>(r1(i)));
    loss += -shifted_pos + std::log(static_cast<double>(r2(i)));
  }
  loss /= 2.0 * static_cast<double>(n);

  if (dx1 == nullptr && dx2 == nullptr) return loss;

  // d loss / d cos, up to the common factor 1/(2Nτ): inter-view entries get
  // a_i + b_k (minus 2 on the positives), intra-view entries a_i + a_j.
  const Vec<T> a = r1.cwiseInverse();
  const Vec<T> b = r2.cwiseInverse();
  Mat<T> du1 = Mat<T>::Zero(n, u1.cols());
  Mat<T> du2 = Mat<T>::Zero(n, u2.cols());
  for (Eigen::Index i0 = 0; i0 < n; i0 += kTile) {
    const Eigen::Index bi = std::min(kTile, n - i0);
    const auto ai = a.segment(i0, bi).array();
    const auto bi_ = b.segment(i0, bi).array();
    for (Eigen::Index j0 = 0; j0 < n; j0 += kTile) {
      const Eigen::Index bj = std::min(kTile, n - j0);
      const auto bj_row = b.segment(j0, bj).transpose().array();
      auto t12 = e12.block(i0, j0, bi, bj);
      for (Eigen::Index r = 0; r < bi; ++r) t12.row(r).array() *= bj_row + ai(r);
      if (j0 == i0) t12.diagonal().array() -= T(2);
      du1.middleRows(i0, bi).noalias() += t12 * u2.middleRows(j0, bj);
      du2.middleRows(j0, bj).noalias() += t12.transpose() * u1.middleRows(i0, bi);
      if (j0 > i0) continue;
      const auto aj_row = a.segment(j0, bj).transpose().array();
      auto t11 = e11.block(i0, j0, bi, bj);
      auto t22 = e22.block(i0, j0, bi, bj);
      for (Eigen::Index r = 0; r < bi; ++r) {
        t11.row(r).array() *= aj_row + ai(r);
        t22.row(r).array() *= bj_row + bi_(r);
      }
      du1.middleRows(i0, bi).noalias() += t11 * u1.middleRows(j0, bj);
      du2.middleRows(i0, bi).noalias() += t22 * u2.middleRows(j0, bj);
      if (j0 != i0) {
        du1.middleRows(j0, bj).noalias() += t11.transpose() * u1.middleRows(i0, bi);
        du2.middleRows(j0, bj).noalias() += t22.transpose() * u2.middleRows(i0, bi);
      }
    }
  }
  const T scale = T(1.0 / (2.0 * static_cast<double>(n) * tau));
  du1 *= scale;
  du2 *= scale;
  if (dx1 != nullptr) *dx1 = normalize_rows_backward(u1, n1, du1);
  if (dx2 != nullptr) *dx2 = normalize_rows_backward(u2, n2, du2);
  return loss;
}

/// Row-weighted structure reconstruction loss on logits S = X̃X̃ᵀ, written
/// with softplus: −ln σ(s) = softplus(−s) and −ln(1 − σ(s)) = softplus(s).
/// `target` holds the positive entries (value ignored).
///
/// The dense part Σ softplus(s) and its gradient 2σ(S)X̃ are accumulated over
/// the lower tiles of S; the positives are a sparse correction.
template <typename T>
double structure(const Mat<T>& xt, const Sparse<T>& target, const Vec<T>& row_weights,
                 Mat<T>* dxt, Scratch<T>* scratch = nullptr) {
  const Eigen::Index n = xt.rows();
  Scratch<T> local;
  Scratch<T>& ws = scratch != nullptr ? *scratch : local;
  Mat<T>& tile = ws.tile;
  if (dxt != nullptr) *dxt = Mat<T>::Zero(n, xt.cols());

  double negatives = 0.0;
  for (Eigen::Index i0 = 0; i0 < n; i0 += kTile) {
    const Eigen::Index bi = std::min(kTile, n - i0);
    for (Eigen::Index j0 = 0; j0 <= i0; j0 += kTile) {
      const Eigen::Index bj = std::min(kTile, n - j0);
      tile.resize(bi, bj);
      tile.noalias() = xt.middleRows(i0, bi) * xt.middleRows(j0, bj).transpose();
      // decay = e^{-|s|}; softplus(s) = max(s, 0) + ln(1 + decay).
      Mat<T>& decay = ws.e11;
      decay = (-tile.array().abs()).exp();
      const double part = static_cast<double>(
          (tile.array().max(T(0)) + (decay.array() + T(1)).log()).sum());
      // A diagonal tile already holds both triangles.
      negatives += j0 == i0 ? part : 2.0 * part;
      if (dxt == nullptr) continue;
      // 2σ(s) for the symmetric gradient.
      tile = (tile.array() >= T(0)).select(T(1), decay.array()) * T(2) / (T(1) + decay.array());
      dxt->middleRows(i0, bi).noalias() += tile * xt.middleRows(j0, bj);
      if (j0 != i0) dxt->middleRows(j0, bj).noalias() += tile.transpose() * xt.middleRows(i0, bi);
    }
  }

  auto softplus = [](double s) { return std::max(s, 0.0) + std::log1p(std::exp(-std::abs(s))); };
  auto sigmoid = [](double s) {
    const double e = std::exp(-std::abs(s));
    return s >= 0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
  };

  // Positive (i, j) shifts the symmetric gradient by δ_ij at both (i, j)
  // and (j, i).
  double correction = 0.0;
  for (Eigen::Index i = 0; i < target.outerSize(); ++i) {
    const double w = static_cast<double>(row_weights(i));
    for (typename Sparse<T>::InnerIterator it(target, i); it; ++it) {
      const Eigen::Index j = it.col();
      const double s = static_cast<double>(xt.row(i).dot(xt.row(j)));
      correction += w * softplus(-s) - softplus(s);
      if (dxt == nullptr) continue;
      const double sg = sigmoid(s);
      const T delta = static_cast<T>(-w * (1.0 - sg) - sg);
      dxt->row(i).noalias() += delta * xt.row(j);
      dxt->row(j).noalias() += delta * xt.row(i);
    }
  }
  const double nn = static_cast<double>(n) * static_cast<double>(n);
  if (dxt != nullptr) *dxt *= static_cast<T>(1.0 / nn);
  return (negatives + correction) / nn;
}

}  // namespace vigraph::kernels
