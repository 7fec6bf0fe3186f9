// Acceptance suites. `invariants` covers criteria 1-5, `desk` criteria 6-9 on
// Cora. Each criterion prints one PASS/FAIL line; the exit status is non-zero
// when any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "support.hpp"
#include "text_util.hpp"
#include "vigraph/config.hpp"
#include "vigraph/dataset_io.hpp"
#include "vigraph/evaluate.hpp"
#include "vigraph/generator.hpp"
#include "vigraph/imbalance.hpp"
#include "vigraph/objectives.hpp"
#include "vigraph/report.hpp"
#include "vigraph/trainer.hpp"

using namespace vigraph;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Tolerances.
constexpr double kOracleTol = 1e-9;
constexpr double kOracleSeconds = 10.0;
constexpr double kGradTol = 1e-4;
constexpr double kGradSeconds = 30.0;
constexpr double kMonteCarloTol = 0.01;
constexpr double kMarginPoints = 10.0;
constexpr double kTargetF1 = 70.0;
constexpr double kDeskSeconds = 30.0 * 60.0;
constexpr double kModeSlackPoints = 0.5;
constexpr double kAblationSlackPoints = 0.5;
constexpr double kSweepSpreadPoints = 10.0;

// Desk protocol.
constexpr int kDeskSeeds = 10;
constexpr int kSweepSeeds = 3;
constexpr double kDeskLambda = 0.1;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << id << "  " << name << "  " << detail
            << std::endl;
}

std::string fmt(double v, int digits = 3) { return detail::format_fixed(v, digits); }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

Matrix random_target(int n, double p, vigraph::Rng& rng) {
  Matrix a = Matrix::Identity(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (rng.uniform() < p) a(i, j) = a(j, i) = 1.0;
    }
  }
  return a;
}

Matrix sigmoid_gram(const Matrix& x) {
  const Matrix logits = x * x.transpose();
  return (1.0 + (-logits.array()).exp()).inverse().matrix();
}

// ----------------------------------------------------------------------------
// Invariants

void criterion_1() {
  const auto start = Clock::now();
  vigraph::Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(8));
    const int f = 1 + static_cast<int>(rng.below(4));
    const Matrix target = random_target(n, rng.uniform(0.1, 0.7), rng);
    const Matrix a_hat = sigmoid_gram(fixtures::random_matrix(n, f, rng, -2, 2));
    worst = std::max(worst, std::abs(structure_reconstruction_loss(target, a_hat) -
                                     oracle::structure(target, a_hat)));
    const double tau = rng.uniform(0.1, 1.5);
    const Matrix x1 = fixtures::random_matrix(n, f, rng, -1, 1);
    const Matrix x2 = fixtures::random_matrix(n, f, rng, -1, 1);
    worst = std::max(worst, std::abs(siamese_contrastive_loss(x1, x2, tau) - oracle::contrastive(x1, x2, tau)));
    const Matrix mu = fixtures::random_matrix(n, f, rng, -2, 2);
    const Matrix ls = fixtures::random_matrix(n, f, rng, -1.5, 1.0);
    worst = std::max(worst, std::abs(kl_standard_normal(mu, ls) - oracle::kl(mu, ls)));
  }
  const double t = seconds_since(start);
  report(1, "loss oracle equivalence", worst < kOracleTol && t < kOracleSeconds,
         "max |diff| " + sci(worst) + " (tol " + sci(kOracleTol) + "), " + fmt(t) + " s (limit " +
             fmt(kOracleSeconds, 0) + ")");
}

void criterion_2() {
  const auto start = Clock::now();
  const AttributedGraph g = fixtures::six_node();
  const VgaeParameters p = init_parameters({g.feature_dim(), 5, 4}, 3);
  const GradientReport rep = gradient_check(g, p, TrainConfig{}, 11);
  bool ok = true;
  std::string detail;
  for (const TensorGradientCheck& tc : rep.tensors) {
    ok = ok && tc.max_relative_error < kGradTol && tc.received_signal;
    detail += tc.name + " " + sci(tc.max_relative_error) + "; ";
  }
  const double t = seconds_since(start);
  report(2, "gradient check", ok && t < kGradSeconds,
         detail + "tol " + sci(kGradTol) + ", " + fmt(t) + " s (limit " + fmt(kGradSeconds, 0) + ")");
}

double kl_monte_carlo(double mu, double sigma, int draws, std::uint64_t seed) {
  vigraph::Rng rng(seed);
  double total = 0.0;
  for (int s = 0; s < draws; ++s) {
    const double eps = rng.normal();
    const double z = mu + sigma * eps;
    total += (-0.5 * eps * eps - std::log(sigma)) - (-0.5 * z * z);
  }
  return total / draws;
}

void criterion_3() {
  struct Case {
    double mu, sigma, expected;
  };
  const Case cases[] = {{1.0, 1.0, 0.5}, {0.0, 2.0, 0.8069}};
  bool ok = true;
  std::string detail;
  for (const Case& c : cases) {
    const double closed =
        kl_standard_normal(Matrix::Constant(1, 1, c.mu), Matrix::Constant(1, 1, std::log(c.sigma)));
    const double mc = kl_monte_carlo(c.mu, c.sigma, 1000000, 7);
    ok = ok && std::abs(closed - mc) < kMonteCarloTol && std::abs(closed - c.expected) < 1e-4;
    detail += "(mu " + fmt(c.mu, 0) + ", sigma " + fmt(c.sigma, 0) + "): closed " + fmt(closed, 4) +
              ", MC " + fmt(mc, 4) + "; ";
  }
  report(3, "KL Monte-Carlo", ok, detail + "tol " + fmt(kMonteCarloTol, 2));
}

struct NamedGraph {
  std::string name;
  AttributedGraph graph;
};

std::vector<NamedGraph> construction_fixtures() {
  std::vector<NamedGraph> out;
  out.push_back({"cora", load_dataset(fixtures::data_root() / "cora")});
  out.push_back({"random k2", fixtures::random_graph(80, 4, 2, 0.08, 1, 20)});
  out.push_back({"random k3", fixtures::random_graph(120, 4, 3, 0.05, 2, 20)});
  out.push_back({"random k4", fixtures::random_graph(160, 3, 4, 0.04, 3, 20)});
  out.push_back({"random k5 uneven", fixtures::random_graph(150, 3, 5, 0.06, 4, 10)});
  return out;
}

/// Independent check of one constructed scenario; returns an empty string on success.
std::string construction_issue(const AttributedGraph& original, const AttributedGraph& built,
                               const ImbalanceScenario& s, const std::vector<int>& expected_quota) {
  const int k = original.num_classes();
  std::vector<int> quota(static_cast<std::size_t>(k), 0);
  for (int v : built.nodes_with(SplitTag::train)) ++quota[static_cast<std::size_t>(built.labels()[static_cast<std::size_t>(v)])];
  if (quota != expected_quota) return "labeled quotas differ";
  const std::set<int> removed(s.removed_nodes.begin(), s.removed_nodes.end());
  if (s.mode == ConstructionMode::legacy) {
    if (built.edges() != original.edges()) return "legacy edge set changed";
    if (built.node_count() != original.node_count()) return "legacy node count changed";
    return {};
  }
  if (built.node_count() != original.node_count() - static_cast<int>(removed.size())) return "node count";
  std::set<std::pair<int, int>> expected;
  for (const Edge& e : original.edges()) {
    if (removed.count(e.u) || removed.count(e.v)) continue;
    int a = s.index_map[static_cast<std::size_t>(e.u)];
    int b = s.index_map[static_cast<std::size_t>(e.v)];
    expected.insert({std::min(a, b), std::max(a, b)});
  }
  std::set<std::pair<int, int>> got;
  for (const Edge& e : built.edges()) got.insert({std::min(e.u, e.v), std::max(e.u, e.v)});
  if (got != expected) return "edge set is not the induced subgraph";
  return {};
}

void criterion_4() {
  bool ok = true;
  std::string detail;
  int scenarios = 0;
  int leakage = 0;
  for (const NamedGraph& fx : construction_fixtures()) {
    const AttributedGraph& g = fx.graph;
    const std::vector<int> minority = select_minority_classes(g, HalfClasses{});
    const std::vector<int> labeled = class_counts(make_pools(g), g.num_classes());
    for (double lambda : {0.1, 0.5}) {
      std::vector<int> expected = labeled;
      for (int c : minority) {
        expected[static_cast<std::size_t>(c)] =
            static_cast<int>(std::floor(lambda * labeled[static_cast<std::size_t>(c)] + 1e-9));
      }
      auto [rg, rs] = construct_rigorous(g, lambda, minority, 0);
      auto [lg, ls] = construct_legacy(g, lambda, minority, 0);
      const AuditReport ra = audit_scenario(g, rg, rs);
      const AuditReport la = audit_scenario(g, lg, ls);
      leakage += ra.leakage_edge_count;
      std::string issue = construction_issue(g, rg, rs, expected);
      if (issue.empty()) issue = construction_issue(g, lg, ls, expected);
      if (issue.empty() && ra.leakage_edge_count != 0) issue = "leakage edges";
      if (issue.empty() && (!ra.passed() || !la.passed())) issue = "audit: " + ra.first_failure() + la.first_failure();
      if (issue.empty() && rs.removed_nodes != ls.removed_nodes) issue = "modes removed different nodes";
      if (!issue.empty()) {
        ok = false;
        detail += fx.name + " lambda " + fmt(lambda, 1) + ": " + issue + "; ";
      }
      ++scenarios;
    }
  }
  report(4, "construction audit", ok,
         std::to_string(scenarios) + " fixture/lambda pairs, total leakage edges " + std::to_string(leakage) +
             (detail.empty() ? "" : "; " + detail));
}

void criterion_5() {
  bool ok = true;
  std::string detail;
  int scenarios = 0;
  for (const NamedGraph& fx : construction_fixtures()) {
    for (ConstructionMode mode : {ConstructionMode::rigorous, ConstructionMode::legacy}) {
      const std::vector<int> minority = select_minority_classes(fx.graph, HalfClasses{});
      auto [g, s] = construct_scenario(fx.graph, mode, 0.1, minority, 0);
      const LabeledPools pools = make_pools(g);
      const VgaeParameters params = init_parameters({g.feature_dim(), 16, 8}, 1);
      const auto nodes = generate_minority_nodes(params, g, pools, s, 5);
      const LabeledPools set = assemble_balanced_set(pools, nodes, params, g);
      const std::vector<int> before = class_counts(pools, g.num_classes());
      const std::vector<int> after = synthesized_class_counts(set, g.num_classes());
      const int target = *std::max_element(before.begin(), before.end());
      if (std::any_of(after.begin(), after.end(), [&](int c) { return c != target; })) {
        ok = false;
        detail += fx.name + " " + std::string(to_string(mode)) + " not uniform; ";
      }
      ++scenarios;
    }
  }
  // 1000 samples from a single source node.
  const int d = 8;
  vigraph::Rng rng(77);
  NodePosterior post{fixtures::random_matrix(1002, d, rng, -1, 1), fixtures::random_matrix(1002, d, rng, -1.5, 0.5)};
  LabeledPools pools;
  pools.labeled.push_back({0, 1});
  for (int i = 1; i <= 1001; ++i) pools.labeled.push_back({i, 0});
  const auto nodes = generate_from_posterior(post, pools, 2, 13);
  double worst = 0.0;
  for (int c = 0; c < d; ++c) {
    double mean = 0.0;
    for (const GeneratedNode& gnode : nodes) mean += gnode.latent(c) / static_cast<double>(nodes.size());
    const double bound = 3.0 * std::exp(post.log_sigma(0, c)) / std::sqrt(1000.0);
    worst = std::max(worst, std::abs(mean - post.mu(0, c)) / bound);
  }
  const bool fidelity = nodes.size() == 1000 && worst < 1.0;
  report(5, "generation balance", ok && fidelity,
         std::to_string(scenarios) + " scenarios uniform" + (detail.empty() ? "" : " except " + detail) +
             "; 1000 draws, worst |mean - mu| = " + fmt(worst, 3) + " x 3sigma/sqrt(1000)");
}

// ----------------------------------------------------------------------------
// Desk suite

struct CachedRun {
  RunReport report;
  double seconds = 0.0;
};

class Desk {
 public:
  Desk(fs::path work) : work_(std::move(work)), cora_(load_dataset(fixtures::data_root() / "cora")) {
    fs::create_directories(work_);
  }

  /// Runs (or reloads) one pipeline invocation.
  CachedRun run(const std::string& tag, const PipelineConfig& config, double lambda, ConstructionMode mode,
                int seeds, std::optional<LossTerm> drop = std::nullopt) {
    std::vector<std::uint64_t> seed_list(static_cast<std::size_t>(seeds));
    std::iota(seed_list.begin(), seed_list.end(), 0);
    const std::string key = tag + "_" + std::string(to_string(mode)) + "_l" + detail::format_double(lambda) +
                            "_s" + std::to_string(seeds) + "_" + config_hash(config).substr(0, 12) +
                            (config.run_baseline ? "_b" : "");
    const fs::path file = work_ / (key + ".json");
    if (fs::exists(file)) {
      const json doc = json::parse(detail::read_file(file));
      return {run_report_from_json(doc.at("report")), doc.at("seconds").get<double>()};
    }
    const auto start = Clock::now();
    CachedRun out;
    if (drop) {
      out.report = ablation(cora_, "cora", lambda, *drop, seed_list, config);
    } else {
      out.report = run_pipeline(cora_, "cora", lambda, mode, seed_list, config);
    }
    out.seconds = seconds_since(start);
    detail::write_file(file, json{{"report", to_json(out.report)}, {"seconds", out.seconds}}.dump(2) + "\n");
    std::cerr << "  ran " << key << " in " << fmt(out.seconds, 1) << " s\n";
    return out;
  }

  const fs::path& work() const { return work_; }

 private:
  fs::path work_;
  AttributedGraph cora_;
};

PipelineConfig desk_config() {
  PipelineConfig c;
  c.train.epochs = 150;
  c.train.patience = 4;
  c.train.eval_interval = 5;
  c.train.learning_rate = 0.01;
  return c;
}

double f1_points(const RunReport& r) { return 100.0 * r.summary().mean.macro_f1; }
double acc_points(const RunReport& r) { return 100.0 * r.summary().mean.acc; }

/// Coordinate-wise search over the loss weights on seed 0, selected by
/// validation macro-F1; returns the chosen configuration and the time spent.
std::pair<PipelineConfig, double> grid_search(Desk& desk) {
  PipelineConfig best = desk_config();
  best.run_baseline = false;
  double seconds = 0.0;
  auto score = [&](const PipelineConfig& c) {
    const CachedRun r = desk.run("grid", c, kDeskLambda, ConstructionMode::rigorous, 1);
    seconds += r.seconds;
    return r.report.rows.front().best_val_f1;
  };
  double best_score = score(best);
  const std::vector<double> weights = {0.5, 1.0, 2.0};
  const std::vector<double> taus = {0.2, 0.5, 1.0};
  using Field = double LossWeights::*;
  const std::pair<Field, const std::vector<double>*> axes[] = {{&LossWeights::alpha, &weights},
                                                               {&LossWeights::beta, &weights},
                                                               {&LossWeights::gamma, &weights},
                                                               {&LossWeights::tau, &taus}};
  for (const auto& [field, values] : axes) {
    for (double v : *values) {
      if (best.train.loss_weights.*field == v) continue;
      PipelineConfig c = best;
      c.train.loss_weights.*field = v;
      const double s = score(c);
      if (s > best_score) {
        best_score = s;
        best = c;
      }
    }
  }
  const LossWeights& w = best.train.loss_weights;
  std::cout << "grid choice (validation macro-F1 " << fmt(100 * best_score, 2) << "): alpha " << fmt(w.alpha, 1)
            << ", beta " << fmt(w.beta, 1) << ", gamma " << fmt(w.gamma, 1) << ", tau " << fmt(w.tau, 1)
            << std::endl;
  best.run_baseline = true;
  return {best, seconds};
}

std::string summary_text(const RunReport& r) {
  const MetricSummary s = r.summary();
  return "acc " + fmt(100 * s.mean.acc, 1) + "+-" + fmt(100 * s.std.acc, 1) + ", bacc " + fmt(100 * s.mean.bacc, 1) +
         "+-" + fmt(100 * s.std.bacc, 1) + ", f1 " + fmt(100 * s.mean.macro_f1, 1) + "+-" +
         fmt(100 * s.std.macro_f1, 1);
}

void desk_suite(Desk& desk) {
  const auto [config, grid_seconds] = grid_search(desk);

  const CachedRun main = desk.run("main", config, kDeskLambda, ConstructionMode::rigorous, kDeskSeeds);
  const MetricSummary base = *main.report.baseline_summary();
  const double vg = f1_points(main.report);
  const double ce = 100.0 * base.mean.macro_f1;
  const double total = grid_seconds + main.seconds;
  report(6, "desk-scale end-to-end", vg - ce >= kMarginPoints && total < kDeskSeconds,
         "model " + summary_text(main.report) + "; CE GCN f1 " + fmt(ce, 1) + "+-" +
             fmt(100 * base.std.macro_f1, 1) + "; margin " + fmt(vg - ce, 1) + " (need " + fmt(kMarginPoints, 0) +
             "); " + fmt(total / 60.0, 1) + " min incl. grid (limit 30)");
  std::cout << (vg >= kTargetF1 ? "TARGET MET " : "TARGET MISS") << "  criterion 6 band  macro-F1 "
            << fmt(vg, 1) << " vs band >= " << fmt(kTargetF1, 0) << std::endl;

  const CachedRun legacy = desk.run("main", config, kDeskLambda, ConstructionMode::legacy, kDeskSeeds);
  const double lf = f1_points(legacy.report);
  report(7, "construction-mode direction", lf >= vg - kModeSlackPoints,
         "legacy f1 " + fmt(lf, 2) + " vs rigorous " + fmt(vg, 2) + " (slack " + fmt(kModeSlackPoints, 1) + ")");

  PipelineConfig ablate = config;
  ablate.run_baseline = false;
  const double full_acc = acc_points(main.report);
  bool ok = true;
  std::string detail = "full acc " + fmt(full_acc, 2);
  for (LossTerm term : {LossTerm::gcl, LossTerm::rec, LossTerm::elbo}) {
    const CachedRun r =
        desk.run("ablate_" + std::string(to_string(term)), ablate, kDeskLambda, ConstructionMode::rigorous, kDeskSeeds, term);
    const double a = acc_points(r.report);
    ok = ok && full_acc >= a - kAblationSlackPoints;
    detail += "; w/o " + std::string(to_string(term)) + " " + fmt(a, 2);
  }
  report(8, "ablation direction", ok, detail + " (slack " + fmt(kAblationSlackPoints, 1) + ")");

  SweepTable table;
  for (double lambda : parse_lambda_range("0.1:0.8:0.1")) {
    table.rows.push_back(desk.run("sweep", ablate, lambda, ConstructionMode::rigorous, kSweepSeeds).report);
  }
  const std::string svg = sweep_svg(table, "cora ratio sweep");
  detail::write_file(desk.work() / "sweep_plot.svg", svg);
  const double low = f1_points(table.rows.front());
  const double high = f1_points(table.rows.back());
  std::string curve;
  for (const RunReport& r : table.rows) curve += fmt(f1_points(r), 1) + " ";
  report(9, "ratio sweep", table.rows.size() == 8 && svg.find("<svg") != std::string::npos &&
                               std::abs(low - high) <= kSweepSpreadPoints,
         std::to_string(table.rows.size()) + " rows, f1 by lambda: " + curve + "; |f1(0.1) - f1(0.8)| " +
             fmt(std::abs(low - high), 1) + " (limit " + fmt(kSweepSpreadPoints, 0) + ", " +
             std::to_string(kSweepSeeds) + " seeds)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("vigraph acceptance suites");
  std::string suite = "invariants";
  std::string work = "acceptance_work";
  app.add_option("--suite", suite, "invariants, desk or all")->check(CLI::IsMember({"invariants", "desk", "all"}));
  app.add_option("--work", work, "Cache directory for desk-suite runs");
  CLI11_PARSE(app, argc, argv);

  try {
    if (suite == "invariants" || suite == "all") {
      criterion_1();
      criterion_2();
      criterion_3();
      criterion_4();
      criterion_5();
    }
    if (suite == "desk" || suite == "all") {
      Desk desk(work);
      desk_suite(desk);
    }
  } catch (const std::exception& e) {
    std::cout << "FAIL  error: " << e.what() << std::endl;
    return 1;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
