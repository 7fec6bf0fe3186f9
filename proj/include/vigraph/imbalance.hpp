#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "vigraph/graph.hpp"

namespace vigraph {

enum class ConstructionMode { rigorous, legacy };

std::string_view to_string(ConstructionMode mode);
ConstructionMode parse_construction_mode(std::string_view name);

/// How the minority quota is computed.
enum class QuotaRule {
  /// ⌊λ·N_c⌋ per minority class.
  per_class,
  /// ⌊λ·N_max⌋ for every minority class, N_max = largest labeled class.
  relative_to_largest,
};

/// Minority selection policies.
struct HalfClasses {};
struct BelowAverage {};
struct ExplicitClasses {
  std::vector<int> classes;
};
using MinorityPolicy = std::variant<HalfClasses, BelowAverage, ExplicitClasses>;

/// Parses "half", "below-average" or a comma-separated class list.
MinorityPolicy parse_minority_policy(std::string_view text);
std::string to_string(const MinorityPolicy& policy);

/// Picks minority classes from labeled (train) counts. Sorted ascending.
///
/// half: the ⌊k/2⌋ classes with the fewest labeled nodes, ties to the lower
/// id. below-average: classes whose labeled count is below the mean.
std::vector<int> select_minority_classes(const AttributedGraph& graph, const MinorityPolicy& policy);

struct ImbalanceScenario {
  ConstructionMode mode = ConstructionMode::rigorous;
  double lambda = 1.0;
  std::vector<int> minority_classes;
  QuotaRule quota_rule = QuotaRule::per_class;
  std::uint64_t seed = 0;
  int original_node_count = 0;
  /// Original ids of labeled minority nodes dropped from D_L, ascending.
  std::vector<int> removed_nodes;
  /// original id → new id; -1 for deleted nodes. Identity in legacy mode.
  std::vector<int> index_map;
  std::vector<int> per_class_quota;

  nlohmann::json to_json() const;
  static ImbalanceScenario from_json(const nlohmann::json& doc);
  friend bool operator==(const ImbalanceScenario&, const ImbalanceScenario&) = default;
};

/// Removed labeled minority nodes are deleted from the graph along with every
/// incident edge; the result is the induced subgraph on the kept nodes,
/// reindexed in ascending original order.
std::pair<AttributedGraph, ImbalanceScenario> construct_rigorous(
    const AttributedGraph& graph, double lambda, const std::vector<int>& minority,
    std::uint64_t seed, QuotaRule rule = QuotaRule::per_class);

/// Removed nodes are only untagged from the training split; structure and
/// features are unchanged. Node selection matches construct_rigorous.
std::pair<AttributedGraph, ImbalanceScenario> construct_legacy(
    const AttributedGraph& graph, double lambda, const std::vector<int>& minority,
    std::uint64_t seed, QuotaRule rule = QuotaRule::per_class);

std::pair<AttributedGraph, ImbalanceScenario> construct_scenario(
    const AttributedGraph& graph, ConstructionMode mode, double lambda,
    const std::vector<int>& minority, std::uint64_t seed, QuotaRule rule = QuotaRule::per_class);

/// Rebuilds the scenario graph from the original graph and a stored scenario.
AttributedGraph apply_scenario(const AttributedGraph& original, const ImbalanceScenario& scenario);

/// min over nonzero counts divided by max.
double imbalance_ratio(std::span<const int> counts);

struct AuditCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct AuditReport {
  std::vector<AuditCheck> checks;
  int leakage_edge_count = 0;
  int missing_edge_count = 0;
  int edge_delta = 0;
  int removed_nodes_present = 0;
  double realized_ratio = 0.0;

  bool passed() const;
  /// Name of the first failing check, empty when everything passed.
  std::string first_failure() const;
  nlohmann::json to_json() const;
};

/// Checks a constructed graph against the original it was derived from.
///
/// Quotas: labeled counts equal per_class_quota. Rigorous: no surviving edge
/// touches a removed original and the edge set is exactly the induced
/// subgraph. Legacy: identical edge set and features, removed nodes absent
/// from the training split.
AuditReport audit_scenario(const AttributedGraph& original, const AttributedGraph& constructed,
                           const ImbalanceScenario& scenario);

}  // namespace vigraph
