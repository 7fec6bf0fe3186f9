#include "vigraph/dataset_io.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "text_util.hpp"
#include "vigraph/errors.hpp"
#include "vigraph/hash.hpp"

namespace vigraph {

namespace fs = std::filesystem;
using detail::Tokens;
using json = nlohmann::json;

namespace {

constexpr const char* kDatasetFiles[] = {"edges.tsv", "features.tsv", "labels.tsv", "split.json"};

std::string where(const char* file, std::size_t line) {
  return std::string(file) + ":" + std::to_string(line);
}

Matrix read_features(const fs::path& root) {
  const std::string text = detail::read_file(root / "features.tsv");
  std::vector<std::vector<double>> rows;
  std::vector<int> ids;
  long width = -1;
  detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    Tokens tok(line);
    std::string_view t;
    if (!tok.next(t)) return;
    int id = 0;
    if (!detail::parse_number(t, id) || id < 0) {
      throw MalformedLineError(where("features.tsv", line_no) + ": bad node id '" +
                               std::string(t) + "'");
    }
    std::vector<double> values;
    if (width > 0) values.reserve(width);
    while (tok.next(t)) {
      double v = 0.0;
      if (!detail::parse_number(t, v)) {
        throw MalformedLineError(where("features.tsv", line_no) + ": bad feature value '" +
                                 std::string(t) + "'");
      }
      values.push_back(v);
    }
    if (width < 0) {
      width = static_cast<long>(values.size());
    } else if (static_cast<long>(values.size()) != width) {
      throw FeatureWidthError(where("features.tsv", line_no) + ": " +
                              std::to_string(values.size()) + " values, expected " +
                              std::to_string(width));
    }
    ids.push_back(id);
    rows.push_back(std::move(values));
  });

  const int n = static_cast<int>(rows.size());
  Matrix features(n, std::max<long>(width, 0));
  std::vector<bool> seen(n, false);
  for (int r = 0; r < n; ++r) {
    const int id = ids[r];
    if (id >= n) {
      throw NodeIdOutOfRangeError("features.tsv: node id " + std::to_string(id) +
                                  " outside [0, " + std::to_string(n) + ")");
    }
    if (seen[id]) {
      throw MalformedLineError("features.tsv: node id " + std::to_string(id) + " repeated");
    }
    seen[id] = true;
    for (long c = 0; c < width; ++c) features(id, c) = rows[r][c];
  }
  return features;
}

std::vector<Edge> read_edges(const fs::path& root, int n) {
  const std::string text = detail::read_file(root / "edges.tsv");
  std::vector<Edge> edges;
  detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    Tokens tok(line);
    std::string_view a, b;
    if (!tok.next(a)) return;
    int u = 0, v = 0;
    if (!tok.next(b) || !tok.done() || !detail::parse_number(a, u) ||
        !detail::parse_number(b, v)) {
      throw MalformedLineError(where("edges.tsv", line_no) + ": expected 'u<TAB>v'");
    }
    if (u < 0 || v < 0 || u >= n || v >= n) {
      throw NodeIdOutOfRangeError(where("edges.tsv", line_no) + ": edge (" + std::to_string(u) +
                                  ", " + std::to_string(v) + ") outside [0, " +
                                  std::to_string(n) + ")");
    }
    if (u == v) {
      throw MalformedLineError(where("edges.tsv", line_no) + ": self-loop on node " +
                               std::to_string(u));
    }
    edges.push_back({u, v});
  });
  return edges;
}

std::vector<int> read_labels(const fs::path& root, int n) {
  const std::string text = detail::read_file(root / "labels.tsv");
  std::vector<int> labels(n, -1);
  detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    Tokens tok(line);
    std::string_view a, b;
    if (!tok.next(a)) return;
    int node = 0, cls = 0;
    if (!tok.next(b) || !tok.done() || !detail::parse_number(a, node) ||
        !detail::parse_number(b, cls) || cls < 0) {
      throw MalformedLineError(where("labels.tsv", line_no) + ": expected 'node<TAB>class'");
    }
    if (node < 0 || node >= n) {
      throw NodeIdOutOfRangeError(where("labels.tsv", line_no) + ": node " +
                                  std::to_string(node) + " outside [0, " + std::to_string(n) +
                                  ")");
    }
    if (labels[node] != -1) {
      throw MalformedLineError(where("labels.tsv", line_no) + ": node " + std::to_string(node) +
                               " labeled twice");
    }
    labels[node] = cls;
  });
  for (int i = 0; i < n; ++i) {
    if (labels[i] < 0) throw MissingLabelError("labels.tsv: node " + std::to_string(i) + " has no label");
  }
  return labels;
}

std::vector<SplitTag> read_split(const fs::path& root, int n) {
  const std::string text = detail::read_file(root / "split.json");
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw MalformedLineError(std::string("split.json: ") + e.what());
  }
  if (!doc.is_object()) throw MalformedLineError("split.json: top level must be an object");

  std::vector<SplitTag> split(n, SplitTag::unlabeled);
  std::vector<bool> assigned(n, false);
  for (const auto& [key, ids] : doc.items()) {
    SplitTag tag;
    if (key == "train") {
      tag = SplitTag::train;
    } else if (key == "val") {
      tag = SplitTag::val;
    } else if (key == "test") {
      tag = SplitTag::test;
    } else {
      throw UnknownSplitTagError("split.json: unknown split tag '" + key + "'");
    }
    if (!ids.is_array()) throw MalformedLineError("split.json: '" + key + "' must be an array");
    for (const auto& v : ids) {
      if (!v.is_number_integer()) {
        throw MalformedLineError("split.json: '" + key + "' holds a non-integer id");
      }
      const long long id = v.get<long long>();
      if (id < 0 || id >= n) {
        throw NodeIdOutOfRangeError("split.json: node " + std::to_string(id) + " in '" + key +
                                    "' outside [0, " + std::to_string(n) + ")");
      }
      if (assigned[id]) {
        throw MalformedLineError("split.json: node " + std::to_string(id) +
                                 " appears in more than one split");
      }
      assigned[id] = true;
      split[id] = tag;
    }
  }
  return split;
}

}  // namespace

AttributedGraph load_dataset(const fs::path& root) {
  for (const char* name : kDatasetFiles) {
    if (!fs::exists(root / name)) {
      throw MissingFileError("dataset " + root.string() + " is missing " + name);
    }
  }
  Matrix features = read_features(root);
  const int n = static_cast<int>(features.rows());
  std::vector<Edge> edges = read_edges(root, n);
  std::vector<int> labels = read_labels(root, n);
  std::vector<SplitTag> split = read_split(root, n);
  return AttributedGraph(std::move(features), std::move(edges), std::move(labels),
                         std::move(split));
}

void save_dataset(const AttributedGraph& graph, const fs::path& root) {
  fs::create_directories(root);
  std::string edges;
  for (const Edge& e : graph.edges()) {
    edges += std::to_string(e.u);
    edges += '\t';
    edges += std::to_string(e.v);
    edges += '\n';
  }
  detail::write_file(root / "edges.tsv", edges);

  std::string features;
  const Matrix& x = graph.features();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    features += std::to_string(i);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      features += '\t';
      detail::append_double(features, x(i, j));
    }
    features += '\n';
  }
  detail::write_file(root / "features.tsv", features);

  std::string labels;
  for (int i = 0; i < graph.node_count(); ++i) {
    labels += std::to_string(i);
    labels += '\t';
    labels += std::to_string(graph.labels()[i]);
    labels += '\n';
  }
  detail::write_file(root / "labels.tsv", labels);

  json split = {{"train", graph.nodes_with(SplitTag::train)},
                {"val", graph.nodes_with(SplitTag::val)},
                {"test", graph.nodes_with(SplitTag::test)}};
  detail::write_file(root / "split.json", split.dump() + "\n");
}

std::string dataset_hash(const fs::path& root) {
  Sha256 h;
  for (const char* name : kDatasetFiles) {
    const std::string bytes = detail::read_file(root / name);
    h.update(name);
    h.update(std::string_view("\0", 1));
    h.update(std::to_string(bytes.size()));
    h.update(std::string_view("\0", 1));
    h.update(bytes);
  }
  return h.hex_digest();
}

}  // namespace vigraph
