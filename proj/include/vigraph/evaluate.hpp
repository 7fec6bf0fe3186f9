#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vigraph/baseline.hpp"
#include "vigraph/classifier.hpp"
#include "vigraph/generator.hpp"
#include "vigraph/graph.hpp"
#include "vigraph/imbalance.hpp"
#include "vigraph/trainer.hpp"

namespace vigraph {

/// μ for every node; no sampling.
Matrix embed_nodes(const VgaeParameters& params, const AttributedGraph& graph);

struct PipelineConfig {
  TrainConfig train;
  BaselineConfig baseline;
  /// Also train the cross-entropy GCN on each scenario.
  bool run_baseline = true;
  MinorityPolicy minority = HalfClasses{};
  QuotaRule quota_rule = QuotaRule::per_class;
  /// Seed of the construction sampler. Held fixed across training seeds so
  /// every seed of a run (and both modes) sees the same removed nodes.
  std::uint64_t scenario_seed = 0;
  /// Scale feature rows to sum one before training the VGAE. Off by default:
  /// on sparse bag-of-words features the scaled encoder signal is too small
  /// for the posterior to separate from the prior.
  bool normalize_features = false;
  /// Worker threads for independent seeds.
  int jobs = 1;
};

struct SeedRow {
  std::uint64_t seed = 0;
  MetricTriple metrics;
  std::optional<MetricTriple> baseline;
  int generated = 0;
  int best_epoch = -1;
  int epochs_run = 0;
  double best_val_f1 = 0.0;
};

struct MetricSummary {
  MetricTriple mean;
  /// Sample standard deviation; zero with fewer than two rows.
  MetricTriple std;
  int count = 0;
};

MetricSummary summarize(std::span<const MetricTriple> rows);

struct RunReport {
  std::string dataset;
  ConstructionMode mode = ConstructionMode::rigorous;
  double lambda = 1.0;
  std::string variant = "full";
  std::string scenario_hash;
  std::string config_hash;
  std::vector<int> minority_classes;
  std::vector<SeedRow> rows;

  MetricSummary summary() const;
  std::optional<MetricSummary> baseline_summary() const;
};

/// Everything one seed produced, handed to an observer (the CLI writes it out).
struct SeedArtifacts {
  std::uint64_t seed = 0;
  const AttributedGraph* scenario_graph = nullptr;
  const ImbalanceScenario* scenario = nullptr;
  const TrainResult* training = nullptr;
  const std::vector<GeneratedNode>* generated = nullptr;
  const SeedRow* row = nullptr;
};
using SeedObserver = std::function<void(const SeedArtifacts&)>;

/// Graph after the configured feature preprocessing.
AttributedGraph preprocess(const AttributedGraph& dataset, const PipelineConfig& config);

/// Scenario for (dataset, λ, mode) under `config`; throws StageError when the
/// audit fails.
std::pair<AttributedGraph, ImbalanceScenario> prepare_scenario(const AttributedGraph& dataset,
                                                               double lambda,
                                                               ConstructionMode mode,
                                                               const PipelineConfig& config);

/// Trains on `scenario_graph`, generates, assembles D_S, fits the classifier
/// and scores the test nodes.
SeedRow run_seed(const AttributedGraph& scenario_graph, const ImbalanceScenario& scenario,
                 std::uint64_t seed, const PipelineConfig& config,
                 const SeedObserver& observer = {});

/// construct → train → generate → assemble → classify → score, per seed.
/// Failures are rethrown as StageError naming the stage.
RunReport run_pipeline(const AttributedGraph& dataset, std::string dataset_id, double lambda,
                       ConstructionMode mode, std::span<const std::uint64_t> seeds,
                       const PipelineConfig& config, const SeedObserver& observer = {});

struct SweepTable {
  std::vector<RunReport> rows;
};

SweepTable ratio_sweep(const AttributedGraph& dataset, std::string dataset_id,
                       std::span<const double> lambdas, ConstructionMode mode,
                       std::span<const std::uint64_t> seeds, const PipelineConfig& config,
                       const SeedObserver& observer = {});

/// "start:stop:step", both ends inclusive within 1e-9; or a single value.
std::vector<double> parse_lambda_range(std::string_view text);

enum class LossTerm { rec, elbo, gcl };
std::string_view to_string(LossTerm term);
LossTerm parse_loss_term(std::string_view name);

/// Copy of `config` with the weight of `term` (β, α or γ) set to zero.
PipelineConfig drop_term(PipelineConfig config, LossTerm term);

RunReport ablation(const AttributedGraph& dataset, std::string dataset_id, double lambda,
                   LossTerm drop, std::span<const std::uint64_t> seeds,
                   const PipelineConfig& config, const SeedObserver& observer = {});

}  // namespace vigraph
