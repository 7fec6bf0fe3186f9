#include "vigraph/imbalance.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "vigraph/errors.hpp"
#include "vigraph/rng.hpp"

namespace vigraph {

using nlohmann::json;

std::string_view to_string(ConstructionMode mode) {
  return mode == ConstructionMode::rigorous ? "rigorous" : "legacy";
}

ConstructionMode parse_construction_mode(std::string_view name) {
  if (name == "rigorous") return ConstructionMode::rigorous;
  if (name == "legacy") return ConstructionMode::legacy;
  throw InvalidArgument("unknown construction mode '" + std::string(name) +
                        "' (expected rigorous or legacy)");
}

MinorityPolicy parse_minority_policy(std::string_view text) {
  if (text == "half" || text == "half-classes") return HalfClasses{};
  if (text == "below-average") return BelowAverage{};
  ExplicitClasses out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string_view item =
        text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    int c = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), c);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size() || c < 0) {
      throw InvalidArgument("minority policy must be 'half', 'below-average' or a class list, got '" +
                            std::string(text) + "'");
    }
    out.classes.push_back(c);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string to_string(const MinorityPolicy& policy) {
  if (std::holds_alternative<HalfClasses>(policy)) return "half";
  if (std::holds_alternative<BelowAverage>(policy)) return "below-average";
  std::string out;
  for (int c : std::get<ExplicitClasses>(policy).classes) {
    if (!out.empty()) out += ',';
    out += std::to_string(c);
  }
  return out;
}

namespace {

std::vector<int> train_labels(const AttributedGraph& graph) {
  std::vector<int> out;
  for (int i = 0; i < graph.node_count(); ++i) {
    if (graph.split()[i] == SplitTag::train) out.push_back(graph.labels()[i]);
  }
  return out;
}

int floor_quota(double lambda, int count) {
  // The epsilon absorbs representation error such as 0.29 * 100 = 28.999...
  return static_cast<int>(std::floor(lambda * count + 1e-9));
}

struct Selection {
  std::vector<int> removed;
  std::vector<int> quota;
};

/// Shared by both construction modes so they drop the same nodes.
Selection select_removed(const AttributedGraph& graph, double lambda,
                         const std::vector<int>& minority, std::uint64_t seed, QuotaRule rule) {
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw InvalidArgument("lambda must lie in (0, 1], got " + std::to_string(lambda));
  }
  if (minority.empty()) throw InvalidArgument("minority class set is empty");
  const int k = graph.num_classes();
  for (int c : minority) {
    if (c < 0 || c >= k) throw InvalidArgument("minority class " + std::to_string(c) + " unknown");
  }
  std::vector<int> sorted_minority = minority;
  std::sort(sorted_minority.begin(), sorted_minority.end());
  sorted_minority.erase(std::unique(sorted_minority.begin(), sorted_minority.end()),
                        sorted_minority.end());

  const std::vector<int> counts = class_counts(train_labels(graph), k);
  const int largest = *std::max_element(counts.begin(), counts.end());

  Selection sel;
  sel.quota = counts;
  Rng rng(seed);
  for (int c : sorted_minority) {
    std::vector<int> candidates;
    for (int i = 0; i < graph.node_count(); ++i) {
      if (graph.split()[i] == SplitTag::train && graph.labels()[i] == c) candidates.push_back(i);
    }
    if (candidates.empty()) {
      throw ScenarioError("minority class " + std::to_string(c) + " has no labeled nodes");
    }
    const int base = rule == QuotaRule::per_class ? counts[c] : largest;
    const int quota = std::min(floor_quota(lambda, base), counts[c]);
    if (quota == 0) {
      throw ScenarioError("lambda " + std::to_string(lambda) + " leaves class " +
                          std::to_string(c) + " with no labeled nodes (degenerate ratio)");
    }
    rng.shuffle(std::span<int>(candidates));
    sel.removed.insert(sel.removed.end(), candidates.begin() + quota, candidates.end());
    sel.quota[c] = quota;
  }
  std::sort(sel.removed.begin(), sel.removed.end());
  return sel;
}

ImbalanceScenario make_scenario(const AttributedGraph& graph, ConstructionMode mode,
                                double lambda, const std::vector<int>& minority,
                                std::uint64_t seed, QuotaRule rule, Selection sel) {
  ImbalanceScenario s;
  s.mode = mode;
  s.lambda = lambda;
  s.minority_classes = minority;
  std::sort(s.minority_classes.begin(), s.minority_classes.end());
  s.minority_classes.erase(std::unique(s.minority_classes.begin(), s.minority_classes.end()),
                           s.minority_classes.end());
  s.quota_rule = rule;
  s.seed = seed;
  s.original_node_count = graph.node_count();
  s.removed_nodes = std::move(sel.removed);
  s.per_class_quota = std::move(sel.quota);
  s.index_map.resize(graph.node_count());
  if (mode == ConstructionMode::legacy) {
    std::iota(s.index_map.begin(), s.index_map.end(), 0);
  } else {
    std::vector<bool> removed(graph.node_count(), false);
    for (int r : s.removed_nodes) removed[r] = true;
    int next = 0;
    for (int i = 0; i < graph.node_count(); ++i) s.index_map[i] = removed[i] ? -1 : next++;
  }
  return s;
}

AttributedGraph induced_subgraph(const AttributedGraph& graph, const std::vector<int>& index_map) {
  int kept = 0;
  for (int id : index_map) kept += id >= 0 ? 1 : 0;
  Matrix features(kept, graph.feature_dim());
  std::vector<int> labels(kept);
  std::vector<SplitTag> split(kept);
  for (int i = 0; i < graph.node_count(); ++i) {
    const int j = index_map[i];
    if (j < 0) continue;
    features.row(j) = graph.features().row(i);
    labels[j] = graph.labels()[i];
    split[j] = graph.split()[i];
  }
  std::vector<Edge> edges;
  for (const Edge& e : graph.edges()) {
    const int a = index_map[e.u];
    const int b = index_map[e.v];
    if (a >= 0 && b >= 0) edges.push_back({a, b});
  }
  return AttributedGraph(std::move(features), std::move(edges), std::move(labels),
                         std::move(split), graph.num_classes());
}

AttributedGraph untag_removed(const AttributedGraph& graph, const std::vector<int>& removed) {
  std::vector<SplitTag> split = graph.split();
  for (int r : removed) split[r] = SplitTag::unlabeled;
  return graph.with_split(std::move(split));
}

}  // namespace

std::vector<int> select_minority_classes(const AttributedGraph& graph, const MinorityPolicy& policy) {
  const int k = graph.num_classes();
  if (k < 2) throw InvalidArgument("minority selection needs at least two classes");
  const std::vector<int> counts = class_counts(train_labels(graph), k);

  std::vector<int> out;
  if (std::holds_alternative<HalfClasses>(policy)) {
    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return counts[a] < counts[b]; });
    out.assign(order.begin(), order.begin() + k / 2);
  } else if (std::holds_alternative<BelowAverage>(policy)) {
    const double mean = std::accumulate(counts.begin(), counts.end(), 0.0) / k;
    for (int c = 0; c < k; ++c) {
      if (counts[c] < mean) out.push_back(c);
    }
  } else {
    for (int c : std::get<ExplicitClasses>(policy).classes) {
      if (c < 0 || c >= k) {
        throw InvalidArgument("minority class " + std::to_string(c) + " is not in [0, " +
                              std::to_string(k) + ")");
      }
      out.push_back(c);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::pair<AttributedGraph, ImbalanceScenario> construct_rigorous(
    const AttributedGraph& graph, double lambda, const std::vector<int>& minority,
    std::uint64_t seed, QuotaRule rule) {
  ImbalanceScenario s = make_scenario(graph, ConstructionMode::rigorous, lambda, minority, seed,
                                      rule, select_removed(graph, lambda, minority, seed, rule));
  AttributedGraph out = induced_subgraph(graph, s.index_map);
  return {std::move(out), std::move(s)};
}

std::pair<AttributedGraph, ImbalanceScenario> construct_legacy(
    const AttributedGraph& graph, double lambda, const std::vector<int>& minority,
    std::uint64_t seed, QuotaRule rule) {
  ImbalanceScenario s = make_scenario(graph, ConstructionMode::legacy, lambda, minority, seed,
                                      rule, select_removed(graph, lambda, minority, seed, rule));
  AttributedGraph out = untag_removed(graph, s.removed_nodes);
  return {std::move(out), std::move(s)};
}

std::pair<AttributedGraph, ImbalanceScenario> construct_scenario(
    const AttributedGraph& graph, ConstructionMode mode, double lambda,
    const std::vector<int>& minority, std::uint64_t seed, QuotaRule rule) {
  return mode == ConstructionMode::rigorous ? construct_rigorous(graph, lambda, minority, seed, rule)
                                            : construct_legacy(graph, lambda, minority, seed, rule);
}

AttributedGraph apply_scenario(const AttributedGraph& original, const ImbalanceScenario& scenario) {
  if (scenario.original_node_count != original.node_count() ||
      static_cast<int>(scenario.index_map.size()) != original.node_count()) {
    throw ScenarioError("scenario was built for a graph with " +
                        std::to_string(scenario.original_node_count) + " nodes, got " +
                        std::to_string(original.node_count()));
  }
  if (scenario.mode == ConstructionMode::legacy) {
    return untag_removed(original, scenario.removed_nodes);
  }
  return induced_subgraph(original, scenario.index_map);
}

double imbalance_ratio(std::span<const int> counts) {
  int lo = 0, hi = 0;
  for (int c : counts) {
    if (c <= 0) continue;
    lo = lo == 0 ? c : std::min(lo, c);
    hi = std::max(hi, c);
  }
  if (hi == 0) throw InvalidArgument("imbalance ratio is undefined when every count is zero");
  return static_cast<double>(lo) / hi;
}

json ImbalanceScenario::to_json() const {
  return json{{"mode", std::string(vigraph::to_string(mode))},
              {"lambda", lambda},
              {"minority_classes", minority_classes},
              {"quota_rule", quota_rule == QuotaRule::per_class ? "per_class" : "relative_to_largest"},
              {"seed", seed},
              {"original_node_count", original_node_count},
              {"removed_nodes", removed_nodes},
              {"index_map", index_map},
              {"per_class_quota", per_class_quota}};
}

ImbalanceScenario ImbalanceScenario::from_json(const json& doc) {
  try {
    ImbalanceScenario s;
    s.mode = parse_construction_mode(doc.at("mode").get<std::string>());
    s.lambda = doc.at("lambda").get<double>();
    s.minority_classes = doc.at("minority_classes").get<std::vector<int>>();
    const std::string rule = doc.value("quota_rule", std::string("per_class"));
    s.quota_rule = rule == "relative_to_largest" ? QuotaRule::relative_to_largest : QuotaRule::per_class;
    s.seed = doc.at("seed").get<std::uint64_t>();
    s.original_node_count = doc.at("original_node_count").get<int>();
    s.removed_nodes = doc.at("removed_nodes").get<std::vector<int>>();
    s.index_map = doc.at("index_map").get<std::vector<int>>();
    s.per_class_quota = doc.at("per_class_quota").get<std::vector<int>>();
    return s;
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("malformed scenario.json: ") + e.what());
  }
}

bool AuditReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const AuditCheck& c) { return c.passed; });
}

std::string AuditReport::first_failure() const {
  for (const AuditCheck& c : checks) {
    if (!c.passed) return c.name;
  }
  return {};
}

json AuditReport::to_json() const {
  json checks_json = json::object();
  for (const AuditCheck& c : checks) checks_json[c.name] = c.passed;
  json details = json::object();
  for (const AuditCheck& c : checks) {
    if (!c.detail.empty()) details[c.name] = c.detail;
  }
  return json{{"passed", passed()},
              {"checks", checks_json},
              {"details", details},
              {"leakage_edge_count", leakage_edge_count},
              {"missing_edge_count", missing_edge_count},
              {"edge_delta", edge_delta},
              {"removed_nodes_present", removed_nodes_present},
              {"realized_ratio", realized_ratio}};
}

AuditReport audit_scenario(const AttributedGraph& original, const AttributedGraph& constructed,
                           const ImbalanceScenario& scenario) {
  AuditReport report;
  auto add = [&](std::string name, bool ok, std::string detail = {}) {
    report.checks.push_back({std::move(name), ok, std::move(detail)});
  };

  const int k = original.num_classes();
  const std::vector<int> counts = class_counts(train_labels(constructed), k);
  report.realized_ratio = imbalance_ratio(counts);
  add("labeled_quota_exact", counts == scenario.per_class_quota);

  auto eval_count = [](const AttributedGraph& g) {
    return std::count_if(g.split().begin(), g.split().end(),
                         [](SplitTag t) { return t == SplitTag::val || t == SplitTag::test; });
  };
  add("eval_nodes_preserved", eval_count(original) == eval_count(constructed));

  std::vector<bool> removed(original.node_count(), false);
  for (int r : scenario.removed_nodes) {
    if (r >= 0 && r < original.node_count()) removed[r] = true;
  }

  if (scenario.mode == ConstructionMode::rigorous) {
    std::vector<int> to_original(constructed.node_count(), -1);
    for (int i = 0; i < static_cast<int>(scenario.index_map.size()); ++i) {
      const int j = scenario.index_map[i];
      if (j >= 0 && j < constructed.node_count()) to_original[j] = i;
      if (j >= 0 && removed[i]) ++report.removed_nodes_present;
    }
    std::set<Edge> mapped;
    int unmapped = 0;
    for (const Edge& e : constructed.edges()) {
      const int a = to_original[e.u];
      const int b = to_original[e.v];
      if (a < 0 || b < 0) {
        ++unmapped;
        continue;
      }
      if (removed[a] || removed[b]) ++report.leakage_edge_count;
      mapped.insert({std::min(a, b), std::max(a, b)});
    }
    std::set<Edge> induced;
    for (const Edge& e : original.edges()) {
      if (!removed[e.u] && !removed[e.v]) induced.insert(e);
    }
    for (const Edge& e : induced) {
      if (!mapped.count(e)) ++report.missing_edge_count;
    }
    int foreign = unmapped;
    for (const Edge& e : mapped) {
      if (!induced.count(e) && !removed[e.u] && !removed[e.v]) ++foreign;
    }
    add("no_leakage_edges", report.leakage_edge_count == 0,
        std::to_string(report.leakage_edge_count) + " edges touch removed nodes");
    add("removed_nodes_absent", report.removed_nodes_present == 0 &&
                                    constructed.node_count() ==
                                        original.node_count() -
                                            static_cast<int>(scenario.removed_nodes.size()));
    add("induced_subgraph_exact", report.missing_edge_count == 0 && foreign == 0,
        std::to_string(report.missing_edge_count) + " missing, " + std::to_string(foreign) +
            " foreign edges");
  } else {
    std::vector<Edge> delta;
    std::set_symmetric_difference(original.edges().begin(), original.edges().end(),
                                  constructed.edges().begin(), constructed.edges().end(),
                                  std::back_inserter(delta));
    report.edge_delta = static_cast<int>(delta.size());
    add("edge_set_unchanged", report.edge_delta == 0,
        std::to_string(report.edge_delta) + " edges differ");
    add("features_unchanged", original.features().rows() == constructed.features().rows() &&
                                  original.features().cols() == constructed.features().cols() &&
                                  original.features() == constructed.features());
    bool unlabeled = constructed.node_count() == original.node_count();
    for (int r : scenario.removed_nodes) {
      if (!unlabeled) break;
      unlabeled = constructed.split()[r] != SplitTag::train;
    }
    add("removed_nodes_unlabeled", unlabeled);
  }
  return report;
}

}  // namespace vigraph
