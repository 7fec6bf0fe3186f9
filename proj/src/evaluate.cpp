#include "vigraph/evaluate.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "text_util.hpp"
#include "vigraph/config.hpp"
#include "vigraph/errors.hpp"
#include "vigraph/hash.hpp"
#include "vigraph/rng.hpp"

namespace vigraph {

Matrix embed_nodes(const VgaeParameters& params, const AttributedGraph& graph) {
  return posterior(params, graph).mu;
}

MetricSummary summarize(std::span<const MetricTriple> rows) {
  MetricSummary s;
  s.count = static_cast<int>(rows.size());
  if (rows.empty()) return s;
  const double n = static_cast<double>(rows.size());
  for (const MetricTriple& r : rows) {
    s.mean.acc += r.acc / n;
    s.mean.bacc += r.bacc / n;
    s.mean.macro_f1 += r.macro_f1 / n;
  }
  if (rows.size() < 2) return s;
  for (const MetricTriple& r : rows) {
    s.std.acc += (r.acc - s.mean.acc) * (r.acc - s.mean.acc);
    s.std.bacc += (r.bacc - s.mean.bacc) * (r.bacc - s.mean.bacc);
    s.std.macro_f1 += (r.macro_f1 - s.mean.macro_f1) * (r.macro_f1 - s.mean.macro_f1);
  }
  s.std.acc = std::sqrt(s.std.acc / (n - 1));
  s.std.bacc = std::sqrt(s.std.bacc / (n - 1));
  s.std.macro_f1 = std::sqrt(s.std.macro_f1 / (n - 1));
  return s;
}

MetricSummary RunReport::summary() const {
  std::vector<MetricTriple> m;
  for (const SeedRow& r : rows) m.push_back(r.metrics);
  return summarize(m);
}

std::optional<MetricSummary> RunReport::baseline_summary() const {
  std::vector<MetricTriple> m;
  for (const SeedRow& r : rows) {
    if (r.baseline) m.push_back(*r.baseline);
  }
  if (m.empty()) return std::nullopt;
  return summarize(m);
}

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::vector<int> labels_of(const AttributedGraph& g, const std::vector<int>& nodes) {
  std::vector<int> out;
  out.reserve(nodes.size());
  for (int v : nodes) out.push_back(g.labels()[static_cast<std::size_t>(v)]);
  return out;
}

/// Runs fn(i) for i in [0, count) on up to `jobs` threads; rethrows the first
/// failure in index order.
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  std::vector<std::exception_ptr> errors(count);
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, count); ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

constexpr std::uint64_t kGenerationSalt = 0x5bd1e9955bd1e995ULL;

}  // namespace

AttributedGraph preprocess(const AttributedGraph& dataset, const PipelineConfig& config) {
  if (!config.normalize_features) return dataset;
  return dataset.with_features(row_normalized(dataset.features()));
}

std::pair<AttributedGraph, ImbalanceScenario> prepare_scenario(const AttributedGraph& dataset,
                                                               double lambda,
                                                               ConstructionMode mode,
                                                               const PipelineConfig& config) {
  return stage("construct", [&] {
    const std::vector<int> minority = select_minority_classes(dataset, config.minority);
    auto built =
        construct_scenario(dataset, mode, lambda, minority, config.scenario_seed, config.quota_rule);
    const AuditReport audit = audit_scenario(dataset, built.first, built.second);
    if (!audit.passed()) throw ScenarioError("audit check failed: " + audit.first_failure());
    return built;
  });
}

SeedRow run_seed(const AttributedGraph& scenario_graph, const ImbalanceScenario& scenario,
                 std::uint64_t seed, const PipelineConfig& config, const SeedObserver& observer) {
  const int k = scenario_graph.num_classes();
  const LabeledPools pools = make_pools(scenario_graph);
  TrainConfig tc = config.train;
  tc.seed = seed;
  tc.construction_mode = scenario.mode;

  SeedRow row;
  row.seed = seed;
  const TrainResult trained = stage("train", [&] { return train(scenario_graph, pools, tc); });
  row.best_epoch = trained.history.best_epoch;
  row.epochs_run = static_cast<int>(trained.history.epochs.size());
  row.best_val_f1 = trained.history.best_val_f1;

  const NodePosterior post = posterior(trained.params, scenario_graph);
  std::vector<GeneratedNode> generated = stage("generate", [&] {
    return generate_minority_nodes(trained.params, scenario_graph, pools, scenario,
                                   seed ^ kGenerationSalt, tc.generator);
  });
  row.generated = static_cast<int>(generated.size());

  const std::vector<int> test_nodes = scenario_graph.nodes_with(SplitTag::test);
  const std::vector<int> gold = labels_of(scenario_graph, test_nodes);
  row.metrics = stage("classify", [&] {
    const LabeledPools balanced = assemble_from_embedding(pools, generated, post.mu);
    const LinearClassifier clf = train_classifier(balanced.synthesized, k, tc.classifier);
    const std::vector<int> pred = clf.predict(gather_rows(post.mu, test_nodes));
    return compute_metrics(pred, gold, k);
  });

  if (config.run_baseline) {
    row.baseline = stage("baseline", [&] {
      const BaselineResult b = train_gcn_baseline(scenario_graph, config.baseline, seed);
      std::vector<int> pred;
      for (int v : test_nodes) pred.push_back(b.predictions[static_cast<std::size_t>(v)]);
      return compute_metrics(pred, gold, k);
    });
  }

  if (observer) {
    SeedArtifacts a;
    a.seed = seed;
    a.scenario_graph = &scenario_graph;
    a.scenario = &scenario;
    a.training = &trained;
    a.generated = &generated;
    a.row = &row;
    observer(a);
  }
  return row;
}

RunReport run_pipeline(const AttributedGraph& dataset, std::string dataset_id, double lambda,
                       ConstructionMode mode, std::span<const std::uint64_t> seeds,
                       const PipelineConfig& config, const SeedObserver& observer) {
  if (seeds.empty()) throw InvalidArgument("at least one seed is required");
  config.train.validate();
  const AttributedGraph graph = preprocess(dataset, config);
  const auto [scenario_graph, scenario] = prepare_scenario(graph, lambda, mode, config);

  RunReport report;
  report.dataset = std::move(dataset_id);
  report.mode = mode;
  report.lambda = lambda;
  report.scenario_hash = sha256_hex(scenario.to_json().dump());
  report.config_hash = config_hash(config);
  report.minority_classes = scenario.minority_classes;
  report.rows.resize(seeds.size());

  std::mutex observer_lock;
  SeedObserver guarded;
  if (observer) {
    guarded = [&](const SeedArtifacts& a) {
      std::lock_guard<std::mutex> hold(observer_lock);
      observer(a);
    };
  }
  parallel_for(seeds.size(), config.jobs, [&](std::size_t i) {
    report.rows[i] = run_seed(scenario_graph, scenario, seeds[i], config, guarded);
  });
  return report;
}

SweepTable ratio_sweep(const AttributedGraph& dataset, std::string dataset_id,
                       std::span<const double> lambdas, ConstructionMode mode,
                       std::span<const std::uint64_t> seeds, const PipelineConfig& config,
                       const SeedObserver& observer) {
  if (lambdas.empty()) throw InvalidArgument("sweep needs at least one lambda");
  for (double l : lambdas) {
    if (!(l > 0.0 && l <= 1.0)) {
      throw InvalidArgument("lambda " + detail::format_double(l) + " outside (0, 1]");
    }
  }
  SweepTable table;
  for (double l : lambdas) {
    table.rows.push_back(run_pipeline(dataset, dataset_id, l, mode, seeds, config, observer));
  }
  return table;
}

std::vector<double> parse_lambda_range(std::string_view text) {
  auto number = [&](std::string_view part) {
    double v = 0;
    if (!detail::parse_number(part, v)) {
      throw InvalidArgument("bad lambda value '" + std::string(part) + "'");
    }
    return v;
  };
  const auto c1 = text.find(':');
  if (c1 == std::string_view::npos) return {number(text)};
  const auto c2 = text.find(':', c1 + 1);
  if (c2 == std::string_view::npos) {
    throw InvalidArgument("lambda range must be start:stop:step");
  }
  const double start = number(text.substr(0, c1));
  const double stop = number(text.substr(c1 + 1, c2 - c1 - 1));
  const double step = number(text.substr(c2 + 1));
  if (!(step > 0) || stop < start) throw InvalidArgument("lambda range needs step > 0, stop ≥ start");
  std::vector<double> out;
  constexpr double kTol = 1e-9;
  for (long i = 0;; ++i) {
    double v = start + static_cast<double>(i) * step;
    if (v > stop + kTol) break;
    // Snap to the decimal grid so 0.1 + 2·0.1 prints and compares as 0.3.
    v = std::round(v * 1e9) / 1e9;
    out.push_back(v);
  }
  return out;
}

std::string_view to_string(LossTerm term) {
  switch (term) {
    case LossTerm::rec:
      return "rec";
    case LossTerm::elbo:
      return "elbo";
    case LossTerm::gcl:
      return "gcl";
  }
  return "rec";
}

LossTerm parse_loss_term(std::string_view name) {
  if (name == "rec") return LossTerm::rec;
  if (name == "elbo") return LossTerm::elbo;
  if (name == "gcl") return LossTerm::gcl;
  throw InvalidArgument("unknown loss term '" + std::string(name) + "' (expected rec, elbo or gcl)");
}

PipelineConfig drop_term(PipelineConfig config, LossTerm term) {
  LossWeights& w = config.train.loss_weights;
  switch (term) {
    case LossTerm::rec:
      w.beta = 0.0;
      break;
    case LossTerm::elbo:
      w.alpha = 0.0;
      break;
    case LossTerm::gcl:
      w.gamma = 0.0;
      break;
  }
  return config;
}

RunReport ablation(const AttributedGraph& dataset, std::string dataset_id, double lambda,
                   LossTerm drop, std::span<const std::uint64_t> seeds,
                   const PipelineConfig& config, const SeedObserver& observer) {
  RunReport r = run_pipeline(dataset, std::move(dataset_id), lambda, config.train.construction_mode,
                             seeds, drop_term(config, drop), observer);
  r.variant = "w/o " + std::string(to_string(drop));
  return r;
}

}  // namespace vigraph
