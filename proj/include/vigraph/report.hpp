#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vigraph/evaluate.hpp"

namespace vigraph {

/// dataset,mode,lambda,seed,acc,bacc,f1 with one line per seed row, metrics
/// in [0, 1].
std::string report_csv(const std::vector<RunReport>& reports);

/// Same columns for the cross-entropy GCN rows (skips reports without them).
std::string baseline_csv(const std::vector<RunReport>& reports);

/// Markdown table of mean ± std per report, in percentage points.
std::string report_markdown(const std::vector<RunReport>& reports);

/// λ on the x-axis, Acc / bAcc / macro-F1 means as lines.
std::string sweep_svg(const SweepTable& table, const std::string& title);

nlohmann::json to_json(const RunReport& report);
RunReport run_report_from_json(const nlohmann::json& doc);

/// One JSON object per line: class_id, source_node, epsilon_seed, latent.
std::string generated_jsonl(const std::vector<GeneratedNode>& nodes);

}  // namespace vigraph
