#pragma once

#include <filesystem>
#include <string>

#include "vigraph/graph.hpp"

namespace vigraph {

/// Reads edges.tsv, features.tsv, labels.tsv and split.json from `root`.
///
/// Reversed and repeated edge lines collapse to one undirected edge. Nodes
/// not listed in split.json are tagged unlabeled. Throws a LoadError subtype
/// naming the file and line on any violation.
AttributedGraph load_dataset(const std::filesystem::path& root);

/// Writes the layout read by load_dataset. Features use the shortest decimal
/// form that round-trips to the same double.
void save_dataset(const AttributedGraph& graph, const std::filesystem::path& root);

/// SHA-256 over the four dataset files, in a fixed order.
std::string dataset_hash(const std::filesystem::path& root);

}  // namespace vigraph
