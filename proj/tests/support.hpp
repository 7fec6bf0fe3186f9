#pragma once

// Fixture graphs and scalar-loop reference implementations shared by the unit
// and acceptance tests. The references are written from the definitions with
// plain loops so that they share no code with the library kernels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vigraph/graph.hpp"
#include "vigraph/rng.hpp"

namespace fixtures {

using vigraph::AttributedGraph;
using vigraph::Edge;
using vigraph::Matrix;
using vigraph::SplitTag;

inline std::filesystem::path data_root() { return VIGRAPH_TEST_DATA; }

inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("vigraph_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline AttributedGraph path3() {
  Matrix x(3, 2);
  x << 1, 0, 0, 1, 1, 1;
  return AttributedGraph(x, {{0, 1}, {1, 2}}, {0, 1, 0},
                         {SplitTag::train, SplitTag::train, SplitTag::test});
}

/// Toy graph of the construction figure: a 5-cycle with a chord; nodes 2 and
/// 4 are labeled members of the minority class 1.
inline AttributedGraph fig1_toy() {
  Matrix x = Matrix::Identity(5, 5);
  return AttributedGraph(x, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}, {1, 3}}, {0, 1, 1, 0, 1},
                         {SplitTag::train, SplitTag::train, SplitTag::train, SplitTag::test,
                          SplitTag::train});
}

/// 6 nodes, 3 features, 7 edges; the gradient-check fixture.
inline AttributedGraph six_node() {
  Matrix x(6, 3);
  x << 1.0, 0.0, 0.5,  //
      0.0, 1.0, 0.0,   //
      0.3, 0.2, 1.0,   //
      1.0, 1.0, 0.0,   //
      0.0, 0.4, 0.7,   //
      0.6, 0.0, 0.1;
  return AttributedGraph(x, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}, {1, 4}},
                         {0, 0, 1, 1, 0, 1},
                         {SplitTag::train, SplitTag::train, SplitTag::train, SplitTag::train,
                          SplitTag::val, SplitTag::test});
}

/// Two planted communities of n/2 nodes each (intra-edge probability 0.4,
/// inter 0.02) with community-indicator features plus noise. Labels are the
/// community; per class 6 train, 3 val and the rest test.
inline AttributedGraph two_community(int n = 30, std::uint64_t seed = 3, int features = 4) {
  vigraph::Rng rng(seed);
  const int half = n / 2;
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i < half ? 0 : 1;
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const bool same = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)];
      if (rng.uniform() < (same ? 0.4 : 0.02)) edges.push_back({i, j});
    }
  }
  Matrix x(n, features);
  for (int i = 0; i < n; ++i) {
    for (int f = 0; f < features; ++f) {
      const bool on = (f % 2) == labels[static_cast<std::size_t>(i)];
      x(i, f) = (on ? 1.0 : 0.0) + 0.1 * rng.uniform();
    }
  }
  std::vector<SplitTag> split(static_cast<std::size_t>(n), SplitTag::test);
  for (int c = 0; c < 2; ++c) {
    for (int r = 0; r < half; ++r) {
      const auto v = static_cast<std::size_t>(c * half + r);
      split[v] = r < 6 ? SplitTag::train : (r < 9 ? SplitTag::val : SplitTag::test);
    }
  }
  return AttributedGraph(x, edges, labels, split, 2);
}

/// Random graph with k classes, every class labeled `per_class` times in
/// train; the remaining nodes alternate val/test.
inline AttributedGraph random_graph(int n, int features, int k, double p, std::uint64_t seed,
                                    int per_class = 4) {
  vigraph::Rng rng(seed);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % k;
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (rng.uniform() < p) edges.push_back({i, j});
    }
  }
  Matrix x(n, features);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform() < 0.3 ? 1.0 : 0.0;
  std::vector<SplitTag> split(static_cast<std::size_t>(n));
  std::vector<int> seen(static_cast<std::size_t>(k), 0);
  int other = 0;
  for (int i = 0; i < n; ++i) {
    int& s = seen[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    if (s < per_class) {
      split[static_cast<std::size_t>(i)] = SplitTag::train;
      ++s;
    } else {
      split[static_cast<std::size_t>(i)] = (other++ % 2 == 0) ? SplitTag::val : SplitTag::test;
    }
  }
  return AttributedGraph(x, edges, labels, split, k);
}

inline Matrix random_matrix(int rows, int cols, vigraph::Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

}  // namespace fixtures

namespace oracle {

using vigraph::Matrix;

inline double kl(const Matrix& mu, const Matrix& log_sigma) {
  double total = 0.0;
  for (int i = 0; i < mu.rows(); ++i) {
    for (int d = 0; d < mu.cols(); ++d) {
      const double m = mu(i, d);
      const double ls = log_sigma(i, d);
      const double var = std::exp(ls) * std::exp(ls);
      total += 0.5 * (m * m + var - 2.0 * ls - 1.0);
    }
  }
  return total / static_cast<double>(mu.rows());
}

inline double structure(const Matrix& target, const Matrix& a_hat) {
  const int n = static_cast<int>(target.rows());
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    int positives = 0;
    for (int j = 0; j < n; ++j) positives += target(i, j) != 0.0 ? 1 : 0;
    const double w = positives > 0 ? static_cast<double>(n - positives) / positives : 0.0;
    for (int j = 0; j < n; ++j) {
      const double p = std::min(std::max(a_hat(i, j), 1e-12), 1.0 - 1e-12);
      if (target(i, j) != 0.0) {
        total += w * std::log(p);
      } else {
        total += std::log(1.0 - p);
      }
    }
  }
  return -total / (static_cast<double>(n) * n);
}

inline double cosine(const Matrix& a, int i, const Matrix& b, int j) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int f = 0; f < a.cols(); ++f) {
    dot += a(i, f) * b(j, f);
    na += a(i, f) * a(i, f);
    nb += b(j, f) * b(j, f);
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Anchor i of view `a` against view `b`: positive (a_i, b_i), negatives
/// (a_i, b_k) and (a_i, a_k) for k ≠ i.
inline double anchor_loss(const Matrix& a, const Matrix& b, int i, double tau) {
  const int n = static_cast<int>(a.rows());
  const double pos = std::exp(cosine(a, i, b, i) / tau);
  double denom = pos;
  for (int k = 0; k < n; ++k) {
    if (k == i) continue;
    denom += std::exp(cosine(a, i, b, k) / tau);
    denom += std::exp(cosine(a, i, a, k) / tau);
  }
  return -std::log(pos / denom);
}

inline double contrastive(const Matrix& x1, const Matrix& x2, double tau) {
  const int n = static_cast<int>(x1.rows());
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += anchor_loss(x1, x2, i, tau) + anchor_loss(x2, x1, i, tau);
  return total / (2.0 * n);
}

struct Metrics {
  double acc = 0.0, bacc = 0.0, f1 = 0.0;
};

/// Confusion-matrix evaluation; classes absent from gold are skipped.
inline Metrics metrics(const std::vector<int>& pred, const std::vector<int>& gold, int k) {
  std::vector<std::vector<int>> confusion(static_cast<std::size_t>(k),
                                          std::vector<int>(static_cast<std::size_t>(k), 0));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++confusion[static_cast<std::size_t>(gold[i])][static_cast<std::size_t>(pred[i])];
  }
  Metrics m;
  int correct = 0, present = 0;
  for (int c = 0; c < k; ++c) correct += confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
  m.acc = static_cast<double>(correct) / static_cast<double>(gold.size());
  for (int c = 0; c < k; ++c) {
    int row = 0, col = 0;
    for (int j = 0; j < k; ++j) {
      row += confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
      col += confusion[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)];
    }
    if (row == 0) continue;
    ++present;
    const double tp = confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
    const double recall = tp / row;
    const double precision = col > 0 ? tp / col : 0.0;
    m.bacc += recall;
    m.f1 += precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
  }
  m.bacc /= present;
  m.f1 /= present;
  return m;
}

/// D̃^{-1/2}(A+I)D̃^{-1/2} from an edge list, dense.
inline Matrix normalized_adjacency(int n, const std::vector<vigraph::Edge>& edges) {
  Matrix a = Matrix::Identity(n, n);
  for (const auto& e : edges) {
    a(e.u, e.v) = 1.0;
    a(e.v, e.u) = 1.0;
  }
  std::vector<double> deg(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) deg[static_cast<std::size_t>(i)] += a(i, j);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      a(i, j) /= std::sqrt(deg[static_cast<std::size_t>(i)] * deg[static_cast<std::size_t>(j)]);
    }
  }
  return a;
}

}  // namespace oracle
