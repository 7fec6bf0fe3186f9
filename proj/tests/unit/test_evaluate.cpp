#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "support.hpp"
#include "vigraph/baseline.hpp"
#include "vigraph/errors.hpp"
#include "vigraph/evaluate.hpp"
#include "vigraph/report.hpp"

using namespace vigraph;

namespace {

PipelineConfig quick_config() {
  PipelineConfig c;
  c.train.epochs = 20;
  c.train.hidden_dim = 16;
  c.train.latent_dim = 8;
  c.train.eval_interval = 5;
  c.train.patience = 0;
  c.train.classifier.steps = 100;
  c.baseline.epochs = 60;
  c.baseline.hidden = 16;
  return c;
}

/// Planted two-community graph with 20 labeled nodes per class and noisy
/// community features; large enough for λ = 0.1 to leave two labeled nodes.
AttributedGraph planted(std::uint64_t seed) {
  vigraph::Rng rng(seed);
  const int n = 200;
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % 2;
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const bool same = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)];
      if (rng.uniform() < (same ? 0.04 : 0.01)) edges.push_back({i, j});
    }
  }
  Matrix x(n, 10);
  for (int i = 0; i < n; ++i) {
    for (int f = 0; f < 10; ++f) {
      const double p = (f % 2 == labels[static_cast<std::size_t>(i)]) ? 0.35 : 0.15;
      x(i, f) = rng.uniform() < p ? 1.0 : 0.0;
    }
  }
  std::vector<SplitTag> split(n, SplitTag::test);
  for (int i = 0; i < 40; ++i) split[static_cast<std::size_t>(i)] = SplitTag::train;
  for (int i = 40; i < 80; ++i) split[static_cast<std::size_t>(i)] = SplitTag::val;
  return AttributedGraph(x, edges, labels, split, 2);
}

}  // namespace

TEST_CASE("embed_nodes") {
  const AttributedGraph g = fixtures::two_community();
  const VgaeParameters p = init_parameters({g.feature_dim(), 128, 64}, 2);
  const Matrix a = embed_nodes(p, g);
  CHECK(a == embed_nodes(p, g));
  CHECK(a.rows() == g.node_count());
  CHECK(a.cols() == 64);
  VgaeParameters zero = p;
  for (Matrix* m : zero.tensors()) m->setZero();
  CHECK(embed_nodes(zero, g).isZero(0.0));
}

TEST_CASE("compute_metrics examples") {
  const std::vector<int> gold = {0, 0, 1, 1};
  const MetricTriple perfect = compute_metrics(gold, gold, 2);
  CHECK(perfect.acc == 1.0);
  CHECK(perfect.bacc == 1.0);
  CHECK(perfect.macro_f1 == 1.0);
  const MetricTriple zeros = compute_metrics(std::vector<int>{0, 0, 0, 0}, gold, 2);
  CHECK(zeros.acc == 0.5);
  CHECK(zeros.bacc == 0.5);
  CHECK(zeros.macro_f1 == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  const MetricTriple swapped = compute_metrics(std::vector<int>{1, 0}, std::vector<int>{0, 1}, 2);
  CHECK(swapped.acc == 0.0);
  CHECK(swapped.bacc == 0.0);
  CHECK(swapped.macro_f1 == 0.0);
  CHECK_THROWS_AS(compute_metrics(std::vector<int>{0}, gold, 2), InvalidArgument);
  CHECK_THROWS_AS(compute_metrics(std::vector<int>{}, std::vector<int>{}, 2), InvalidArgument);
}

TEST_CASE("compute_metrics matches a confusion-matrix oracle") {
  vigraph::Rng rng(33);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(5));
    const int n = 1 + static_cast<int>(rng.below(40));
    std::vector<int> pred(static_cast<std::size_t>(n)), gold(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      gold[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
      pred[static_cast<std::size_t>(i)] = rng.uniform() < 0.5
                                              ? gold[static_cast<std::size_t>(i)]
                                              : static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    }
    const MetricTriple m = compute_metrics(pred, gold, k);
    const oracle::Metrics ref = oracle::metrics(pred, gold, k);
    CHECK(std::abs(m.acc - ref.acc) < 1e-12);
    CHECK(std::abs(m.bacc - ref.bacc) < 1e-12);
    CHECK(std::abs(m.macro_f1 - ref.f1) < 1e-12);
    CHECK(m.acc >= 0.0);
    CHECK(m.macro_f1 <= 1.0);
  }
}

TEST_CASE("bacc is unchanged by duplicating a whole class") {
  const std::vector<int> gold = {0, 0, 0, 1, 1, 2};
  const std::vector<int> pred = {0, 1, 0, 1, 2, 2};
  const double base = compute_metrics(pred, gold, 3).bacc;
  std::vector<int> g2 = gold, p2 = pred;
  for (int copy = 0; copy < 3; ++copy) {
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (gold[i] == 1) {
        g2.push_back(gold[i]);
        p2.push_back(pred[i]);
      }
    }
  }
  CHECK(compute_metrics(p2, g2, 3).bacc == doctest::Approx(base).epsilon(1e-15));
}

TEST_CASE("train_classifier") {
  SUBCASE("separable classes in 2-D") {
    std::vector<LatentExample> train;
    vigraph::Rng rng(1);
    for (int i = 0; i < 40; ++i) {
      Vector v(2);
      v << rng.uniform(-1, 1), rng.uniform(0.2, 1.0);
      const int c = i % 2;
      if (c == 1) v(1) = -v(1);
      train.push_back({v, c});
    }
    const LinearClassifier clf = train_classifier(train, 2);
    Matrix x(40, 2);
    std::vector<int> gold;
    for (int i = 0; i < 40; ++i) {
      x.row(i) = train[static_cast<std::size_t>(i)].latent.transpose();
      gold.push_back(train[static_cast<std::size_t>(i)].class_id);
    }
    CHECK(compute_metrics(clf.predict(x), gold, 2).acc == 1.0);
  }
  SUBCASE("one point per class") {
    std::vector<LatentExample> train;
    Matrix x(3, 3);
    x << 1, 0, 0, 0, 5, 0, 0, 0, -2;
    for (int c = 0; c < 3; ++c) train.push_back({x.row(c).transpose(), c});
    CHECK(train_classifier(train, 3).predict(x) == std::vector<int>{0, 1, 2});
  }
  SUBCASE("permuting labels permutes predictions") {
    vigraph::Rng rng(2);
    std::vector<LatentExample> a, b;
    const int perm[] = {2, 0, 1};
    for (int i = 0; i < 30; ++i) {
      Vector v(2);
      const int c = i % 3;
      v << c + rng.uniform(-0.8, 0.8), rng.uniform(-1, 1);
      a.push_back({v, c});
      b.push_back({v, perm[c]});
    }
    const Matrix probe = fixtures::random_matrix(25, 2, rng, -1, 3);
    const auto pa = train_classifier(a, 3).predict(probe);
    const auto pb = train_classifier(b, 3).predict(probe);
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pb[i] == perm[pa[i]]);
  }
  SUBCASE("missing class") {
    std::vector<LatentExample> train = {{Vector::Ones(2), 0}};
    CHECK_THROWS_AS(train_classifier(train, 2), InvalidArgument);
  }
}

TEST_CASE("run_pipeline without imbalance generates nothing") {
  const AttributedGraph g = fixtures::two_community();
  const std::vector<std::uint64_t> seeds = {0};
  const RunReport r = run_pipeline(g, "fixture", 1.0, ConstructionMode::rigorous, seeds, quick_config());
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].generated == 0);
  CHECK(r.rows[0].baseline.has_value());
  CHECK(r.rows[0].metrics.acc >= 0.0);
}

TEST_CASE("run_pipeline is deterministic and modes share removals") {
  const AttributedGraph g = planted(1);
  const std::vector<std::uint64_t> seeds = {3, 4};
  const PipelineConfig c = quick_config();
  std::vector<std::vector<int>> removed;
  auto keep = [&](const SeedArtifacts& a) { removed.push_back(a.scenario->removed_nodes); };
  const RunReport a = run_pipeline(g, "planted", 0.3, ConstructionMode::rigorous, seeds, c, keep);
  const RunReport b = run_pipeline(g, "planted", 0.3, ConstructionMode::rigorous, seeds, c);
  CHECK(to_json(a).dump() == to_json(b).dump());
  const RunReport l = run_pipeline(g, "planted", 0.3, ConstructionMode::legacy, seeds, c, keep);
  REQUIRE(removed.size() == 4);
  CHECK(removed[0] == removed[2]);
  CHECK(removed[1] == removed[3]);
  CHECK_FALSE(removed[0].empty());
  CHECK(l.mode == ConstructionMode::legacy);
  CHECK(a.summary().count == 2);
  PipelineConfig threaded = c;
  threaded.jobs = 2;
  const RunReport t = run_pipeline(g, "planted", 0.3, ConstructionMode::rigorous, seeds, threaded);
  CHECK(to_json(t).dump() == to_json(a).dump());
}

TEST_CASE("stage failures name the stage") {
  const AttributedGraph g = fixtures::two_community();
  const std::vector<std::uint64_t> seeds = {0};
  try {
    run_pipeline(g, "fixture", 0.01, ConstructionMode::rigorous, seeds, quick_config());
    FAIL("expected a construction failure");
  } catch (const StageError& e) {
    CHECK(e.stage() == "construct");
  }
}

TEST_CASE("summarize uses the sample standard deviation") {
  const std::vector<MetricTriple> rows = {{0.5, 0.4, 0.3}, {0.7, 0.6, 0.5}};
  const MetricSummary s = summarize(rows);
  CHECK(s.mean.acc == doctest::Approx(0.6));
  CHECK(s.std.acc == doctest::Approx(std::sqrt(0.02)));
  CHECK(summarize(std::vector<MetricTriple>{{0.5, 0.5, 0.5}}).std.acc == 0.0);
}

TEST_CASE("lambda ranges") {
  const auto v = parse_lambda_range("0.1:0.8:0.1");
  REQUIRE(v.size() == 8);
  CHECK(v.front() == doctest::Approx(0.1));
  CHECK(v[2] == 0.3);
  CHECK(v.back() == doctest::Approx(0.8));
  CHECK(parse_lambda_range("0.5") == std::vector<double>{0.5});
  CHECK(parse_lambda_range("0.2:0.3:0.05").size() == 3);
  CHECK_THROWS_AS(parse_lambda_range("0.1:0.8"), InvalidArgument);
  CHECK_THROWS_AS(parse_lambda_range("0.1:0.8:0"), InvalidArgument);
  CHECK_THROWS_AS(parse_lambda_range("x"), InvalidArgument);
}

TEST_CASE("ratio_sweep") {
  const AttributedGraph g = fixtures::two_community();
  const std::vector<std::uint64_t> seeds = {1};
  const std::vector<double> one = {0.5};
  const SweepTable t = ratio_sweep(g, "fixture", one, ConstructionMode::rigorous, seeds, quick_config());
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0].lambda == 0.5);
  CHECK(sweep_svg(t, "fixture").find("<svg") != std::string::npos);
}

TEST_CASE("milder imbalance does not hurt the cross-entropy baseline") {
  const AttributedGraph g = planted(7);
  PipelineConfig c = quick_config();
  c.train.epochs = 1;
  const std::vector<std::uint64_t> seeds = {0, 1, 2};
  const std::vector<double> lambdas = {0.1, 0.8};
  const SweepTable t = ratio_sweep(g, "planted", lambdas, ConstructionMode::rigorous, seeds, c);
  const double low = t.rows[0].baseline_summary()->mean.macro_f1;
  const double high = t.rows[1].baseline_summary()->mean.macro_f1;
  MESSAGE("baseline macro-F1 at 0.1: " << low << ", at 0.8: " << high);
  CHECK(high >= low);
}

TEST_CASE("ablation") {
  const PipelineConfig base = quick_config();
  const PipelineConfig no_gcl = drop_term(base, LossTerm::gcl);
  CHECK(no_gcl.train.loss_weights.gamma == 0.0);
  CHECK(no_gcl.train.loss_weights.alpha == base.train.loss_weights.alpha);
  CHECK(no_gcl.train.loss_weights.beta == base.train.loss_weights.beta);
  CHECK(no_gcl.train.loss_weights.tau == base.train.loss_weights.tau);
  CHECK(drop_term(base, LossTerm::rec).train.loss_weights.beta == 0.0);
  CHECK(drop_term(base, LossTerm::elbo).train.loss_weights.alpha == 0.0);
  CHECK(parse_loss_term("gcl") == LossTerm::gcl);
  CHECK(to_string(LossTerm::elbo) == "elbo");
  CHECK_THROWS_AS(parse_loss_term("kl"), InvalidArgument);

  const AttributedGraph g = fixtures::two_community();
  const std::vector<std::uint64_t> seeds = {0};
  const RunReport r = ablation(g, "fixture", 0.5, LossTerm::rec, seeds, base);
  CHECK(r.variant == "w/o rec");
  CHECK(r.rows.size() == 1);
}

TEST_CASE("baseline predicts every node") {
  const AttributedGraph g = planted(2);
  BaselineConfig c;
  c.epochs = 50;
  const BaselineResult r = train_gcn_baseline(g, c, 1);
  CHECK(r.predictions.size() == static_cast<std::size_t>(g.node_count()));
  CHECK(r.best_epoch >= 0);
  CHECK(train_gcn_baseline(g, c, 1).predictions == r.predictions);
}

TEST_CASE("report formats") {
  RunReport r;
  r.dataset = "fixture";
  r.lambda = 0.1;
  r.scenario_hash = "abc";
  r.minority_classes = {0};
  SeedRow row;
  row.seed = 4;
  row.metrics = {0.5, 0.25, 0.125};
  row.baseline = MetricTriple{0.1, 0.2, 0.3};
  r.rows = {row};
  const std::string csv = report_csv({r});
  CHECK(csv.rfind("dataset,mode,lambda,seed,acc,bacc,f1\n", 0) == 0);
  CHECK(csv.find("fixture,rigorous,0.1,4,0.5,0.25,0.125") != std::string::npos);
  CHECK(baseline_csv({r}).find("0.1,0.2,0.3") != std::string::npos);
  CHECK(report_markdown({r}).find("50.0") != std::string::npos);
  const RunReport back = run_report_from_json(to_json(r));
  CHECK(to_json(back).dump() == to_json(r).dump());
  GeneratedNode gn;
  gn.latent = Vector::Ones(2);
  gn.class_id = 1;
  gn.source_node = 3;
  gn.epsilon_seed = 9;
  const auto line = nlohmann::json::parse(generated_jsonl({gn}));
  CHECK(line["class_id"] == 1);
  CHECK(line["source_node"] == 3);
  CHECK(line["latent"].size() == 2);
}
