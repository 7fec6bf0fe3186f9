#include "vigraph/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <optional>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "text_util.hpp"
#include "vigraph/config.hpp"
#include "vigraph/dataset_io.hpp"
#include "vigraph/errors.hpp"
#include "vigraph/evaluate.hpp"
#include "vigraph/hash.hpp"
#include "vigraph/manifest.hpp"
#include "vigraph/report.hpp"

namespace vigraph {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Bad flags or flag combinations; maps to exit status 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct Options {
  std::string command;
  std::string dataset;
  std::string scenario;
  std::string config;
  std::string out;
  std::string model;
  std::string generated;
  std::string mode;
  std::string minority;
  std::string drop;
  std::string lambdas;
  std::string seeds;
  std::vector<std::string> inputs;
  double lambda = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  bool seed_given = false;
  int jobs = 0;
  bool strict = false;
  bool no_baseline = false;
  std::vector<std::string> command_line;
};

fs::path require_dir(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
  return fs::path(value);
}

/// --dataset resolves against VIGRAPH_DATA when it is not a directory itself;
/// without --dataset, VIGRAPH_DATA is the dataset.
fs::path resolve_dataset(const Options& o) {
  const char* env = std::getenv("VIGRAPH_DATA");
  if (o.dataset.empty()) {
    if (env == nullptr || *env == '\0') throw UsageError("--dataset is required (or set VIGRAPH_DATA)");
    return fs::path(env);
  }
  fs::path p(o.dataset);
  if (!fs::is_directory(p) && env != nullptr && *env != '\0' && p.is_relative()) {
    const fs::path alt = fs::path(env) / p;
    if (fs::is_directory(alt)) return alt;
  }
  return p;
}

std::string dataset_id(const fs::path& root) {
  fs::path p = root;
  if (p.filename().empty()) p = p.parent_path();
  return p.filename().string();
}

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw MissingFileError("missing upstream artifact: " + p.string());
}

double checked_lambda(double lambda) {
  if (std::isnan(lambda)) throw UsageError("--lambda is required");
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw UsageError("--lambda must lie in (0, 1], got " + detail::format_double(lambda));
  }
  return lambda;
}

std::vector<std::uint64_t> parse_seeds(const Options& o) {
  if (o.seeds.empty()) return {o.seed};
  std::vector<std::uint64_t> out;
  auto number = [&](std::string_view t) {
    std::uint64_t v = 0;
    if (!detail::parse_number(t, v)) throw UsageError("bad seed '" + std::string(t) + "'");
    return v;
  };
  std::string_view rest = o.seeds;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      out.push_back(number(item));
    } else {
      const std::uint64_t a = number(item.substr(0, colon));
      const std::uint64_t b = number(item.substr(colon + 1));
      if (b < a) throw UsageError("seed range must be ascending");
      for (std::uint64_t s = a; s <= b; ++s) out.push_back(s);
    }
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (out.empty()) throw UsageError("--seeds is empty");
  return out;
}

/// Defaults, then the config file, then flags.
PipelineConfig resolve_config(const Options& o) {
  PipelineConfig c;
  if (!o.config.empty()) c = load_config(o.config);
  if (!o.mode.empty()) {
    try {
      c.train.construction_mode = parse_construction_mode(o.mode);
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
  }
  if (!o.minority.empty()) {
    try {
      c.minority = parse_minority_policy(o.minority);
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
  }
  if (o.jobs > 0) c.jobs = o.jobs;
  if (o.strict) c.jobs = 1;
  if (o.no_baseline) c.run_baseline = false;
  return c;
}

RunManifest base_manifest(const Options& o, const PipelineConfig& config) {
  RunManifest m;
  m.command_line = o.command_line;
  m.config = to_json(config);
  m.started_at = utc_timestamp();
  m.extra["strict_deterministic"] = o.strict;
  m.extra["split_source"] = "dataset split.json";
  return m;
}

void finish(RunManifest m, const fs::path& dir) {
  m.finished_at = utc_timestamp();
  write_manifest(m, dir);
}

void write_reports(const fs::path& dir, const std::vector<RunReport>& reports) {
  detail::write_file(dir / "report.csv", report_csv(reports));
  detail::write_file(dir / "report.md", report_markdown(reports));
  json all = json::array();
  for (const RunReport& r : reports) all.push_back(to_json(r));
  detail::write_file(dir / "report.json", all.dump(2) + "\n");
  bool any_baseline = false;
  for (const RunReport& r : reports) any_baseline = any_baseline || r.baseline_summary().has_value();
  if (any_baseline) detail::write_file(dir / "baseline.csv", baseline_csv(reports));
}

struct ScenarioDir {
  AttributedGraph graph;
  ImbalanceScenario scenario;
  std::string scenario_hash;
  std::string dataset_hash;
};

ScenarioDir load_scenario_dir(const fs::path& dir) {
  require_file(dir / "scenario.json");
  require_file(dir / "dataset");
  ScenarioDir s;
  const std::string text = detail::read_file(dir / "scenario.json");
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error("scenario.json is not valid JSON: " + std::string(e.what()));
  }
  s.scenario = ImbalanceScenario::from_json(doc);
  s.scenario_hash = sha256_hex(s.scenario.to_json().dump());
  s.graph = load_dataset(dir / "dataset");
  s.dataset_hash = dataset_hash(dir / "dataset");
  return s;
}

int cmd_prepare(const Options& o, std::ostream& out) {
  const fs::path root = resolve_dataset(o);
  const fs::path dest = require_dir(o.out, "--out");
  const double lambda = checked_lambda(o.lambda);
  const PipelineConfig config = resolve_config(o);
  const AttributedGraph graph = load_dataset(root);
  const std::vector<int> minority = select_minority_classes(graph, config.minority);
  const std::uint64_t seed = o.seed_given ? o.seed : config.scenario_seed;
  auto [built, scenario] = construct_scenario(graph, config.train.construction_mode, lambda,
                                              minority, seed, config.quota_rule);
  const AuditReport audit = audit_scenario(graph, built, scenario);
  detail::write_file(dest / "audit.json", audit.to_json().dump(2) + "\n");
  if (!audit.passed()) {
    throw ScenarioError("audit failed: " + audit.first_failure());
  }
  detail::write_file(dest / "scenario.json", scenario.to_json().dump(2) + "\n");
  save_dataset(built, dest / "dataset");

  RunManifest m = base_manifest(o, config);
  m.dataset_hash = dataset_hash(root);
  m.scenario_hash = sha256_hex(scenario.to_json().dump());
  m.seeds = {seed};
  m.extra["dataset"] = dataset_id(root);
  m.extra["scenario_dataset_hash"] = dataset_hash(dest / "dataset");
  finish(m, dest);
  out << "prepared " << to_string(scenario.mode) << " scenario, lambda "
      << detail::format_double(lambda) << ", removed " << scenario.removed_nodes.size()
      << " nodes, leakage edges " << audit.leakage_edge_count << "\n";
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const fs::path sdir = require_dir(o.scenario, "--scenario");
  const fs::path dest = require_dir(o.out, "--out");
  PipelineConfig config = resolve_config(o);
  const ScenarioDir s = load_scenario_dir(sdir);
  config.train.seed = o.seed;
  config.train.construction_mode = s.scenario.mode;
  const AttributedGraph graph = preprocess(s.graph, config);
  const TrainResult r = train(graph, make_pools(graph), config.train);
  save_checkpoint(r.params, dest / "checkpoint.vgck");
  detail::write_file(dest / "history.csv", r.history.to_csv());

  RunManifest m = base_manifest(o, config);
  m.dataset_hash = s.dataset_hash;
  m.scenario_hash = s.scenario_hash;
  m.seeds = {o.seed};
  m.extra["best_epoch"] = r.history.best_epoch;
  m.extra["stopped_early"] = r.history.stopped_early;
  finish(m, dest);
  out << "trained " << r.history.epochs.size() << " epochs, best epoch " << r.history.best_epoch
      << "\n";
  return kExitOk;
}

VgaeParameters load_model(const Options& o) {
  const fs::path model = require_dir(o.model, "--model");
  require_file(model / "checkpoint.vgck");
  return load_checkpoint(model / "checkpoint.vgck");
}

int cmd_generate(const Options& o, std::ostream& out) {
  const fs::path sdir = require_dir(o.scenario, "--scenario");
  const fs::path dest = require_dir(o.out, "--out");
  const PipelineConfig config = resolve_config(o);
  const ScenarioDir s = load_scenario_dir(sdir);
  const VgaeParameters params = load_model(o);
  const AttributedGraph graph = preprocess(s.graph, config);
  const auto nodes = generate_minority_nodes(params, graph, make_pools(graph), s.scenario, o.seed,
                                             config.train.generator);
  detail::write_file(dest / "generated.jsonl", generated_jsonl(nodes));
  RunManifest m = base_manifest(o, config);
  m.dataset_hash = s.dataset_hash;
  m.scenario_hash = s.scenario_hash;
  m.seeds = {o.seed};
  m.extra["generated"] = nodes.size();
  finish(m, dest);
  out << "generated " << nodes.size() << " nodes\n";
  return kExitOk;
}

std::vector<GeneratedNode> read_generated(const fs::path& dir) {
  require_file(dir / "generated.jsonl");
  std::vector<GeneratedNode> nodes;
  const std::string text = detail::read_file(dir / "generated.jsonl");
  detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (line.empty()) return;
    try {
      const json j = json::parse(line);
      GeneratedNode g;
      g.class_id = j.at("class_id").get<int>();
      g.source_node = j.at("source_node").get<int>();
      g.epsilon_seed = j.at("epsilon_seed").get<std::uint64_t>();
      const auto latent = j.at("latent").get<std::vector<double>>();
      g.latent = Eigen::Map<const Vector>(latent.data(), static_cast<Eigen::Index>(latent.size()));
      nodes.push_back(std::move(g));
    } catch (const json::exception& e) {
      throw MalformedLineError("generated.jsonl line " + std::to_string(line_no) + ": " + e.what());
    }
  });
  return nodes;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const fs::path dest = require_dir(o.out, "--out");
  PipelineConfig config = resolve_config(o);
  RunManifest m = base_manifest(o, config);
  std::vector<RunReport> reports;

  if (!o.model.empty()) {
    const fs::path sdir = require_dir(o.scenario, "--scenario");
    const ScenarioDir s = load_scenario_dir(sdir);
    const VgaeParameters params = load_model(o);
    const AttributedGraph graph = preprocess(s.graph, config);
    const LabeledPools pools = make_pools(graph);
    const NodePosterior post = posterior(params, graph);
    std::vector<GeneratedNode> nodes =
        o.generated.empty()
            ? generate_minority_nodes(params, graph, pools, s.scenario, o.seed,
                                      config.train.generator)
            : read_generated(o.generated);
    const LabeledPools balanced = assemble_from_embedding(pools, nodes, post.mu);
    const int k = graph.num_classes();
    const LinearClassifier clf = train_classifier(balanced.synthesized, k, config.train.classifier);
    const std::vector<int> test = graph.nodes_with(SplitTag::test);
    std::vector<int> gold;
    for (int v : test) gold.push_back(graph.labels()[static_cast<std::size_t>(v)]);
    RunReport r;
    r.dataset = dataset_id(sdir);
    r.mode = s.scenario.mode;
    r.lambda = s.scenario.lambda;
    r.scenario_hash = s.scenario_hash;
    r.config_hash = config_hash(config);
    r.minority_classes = s.scenario.minority_classes;
    SeedRow row;
    row.seed = o.seed;
    row.generated = static_cast<int>(nodes.size());
    row.metrics = compute_metrics(clf.predict(gather_rows(post.mu, test)), gold, k);
    r.rows.push_back(row);
    reports.push_back(r);
    m.dataset_hash = s.dataset_hash;
    m.scenario_hash = s.scenario_hash;
    m.seeds = {o.seed};
  } else {
    const fs::path root = resolve_dataset(o);
    const double lambda = checked_lambda(o.lambda);
    const auto seeds = parse_seeds(o);
    const AttributedGraph graph = load_dataset(root);
    reports.push_back(run_pipeline(graph, dataset_id(root), lambda, config.train.construction_mode,
                                   seeds, config));
    m.dataset_hash = dataset_hash(root);
    m.scenario_hash = reports.back().scenario_hash;
    m.seeds = seeds;
  }
  write_reports(dest, reports);
  finish(m, dest);
  const MetricSummary sum = reports.front().summary();
  out << "acc " << detail::format_fixed(100 * sum.mean.acc, 2) << "  bacc "
      << detail::format_fixed(100 * sum.mean.bacc, 2) << "  f1 "
      << detail::format_fixed(100 * sum.mean.macro_f1, 2) << "\n";
  return kExitOk;
}

std::string sweep_csv(const SweepTable& t) {
  std::string s = "lambda,acc_mean,acc_std,bacc_mean,bacc_std,f1_mean,f1_std,seeds\n";
  for (const RunReport& r : t.rows) {
    const MetricSummary m = r.summary();
    detail::append_double(s, r.lambda);
    for (double v : {m.mean.acc, m.std.acc, m.mean.bacc, m.std.bacc, m.mean.macro_f1,
                     m.std.macro_f1}) {
      s += ',';
      detail::append_double(s, v);
    }
    s += ',' + std::to_string(m.count) + '\n';
  }
  return s;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  const fs::path root = resolve_dataset(o);
  const fs::path dest = require_dir(o.out, "--out");
  if (o.lambdas.empty()) throw UsageError("--lambdas is required");
  std::vector<double> lambdas;
  try {
    lambdas = parse_lambda_range(o.lambdas);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  for (double l : lambdas) checked_lambda(l);
  const PipelineConfig config = resolve_config(o);
  const auto seeds = parse_seeds(o);
  const AttributedGraph graph = load_dataset(root);
  const std::string id = dataset_id(root);
  const std::string dhash = dataset_hash(root);

  SweepTable table;
  for (double l : lambdas) {
    RunManifest m = base_manifest(o, config);
    RunReport r = run_pipeline(graph, id, l, config.train.construction_mode, seeds, config);
    const fs::path sub = dest / ("lambda_" + detail::format_double(l));
    write_reports(sub, {r});
    m.dataset_hash = dhash;
    m.scenario_hash = r.scenario_hash;
    m.seeds = seeds;
    m.extra["lambda"] = l;
    finish(m, sub);
    out << "lambda " << detail::format_double(l) << ": f1 "
        << detail::format_fixed(100 * r.summary().mean.macro_f1, 2) << "\n";
    table.rows.push_back(std::move(r));
  }
  RunManifest m = base_manifest(o, config);
  write_reports(dest, table.rows);
  detail::write_file(dest / "sweep.csv", sweep_csv(table));
  detail::write_file(dest / "sweep_plot.svg", sweep_svg(table, id + " ratio sweep"));
  m.dataset_hash = dhash;
  m.seeds = seeds;
  m.extra["lambdas"] = lambdas;
  finish(m, dest);
  return kExitOk;
}

int cmd_ablate(const Options& o, std::ostream& out) {
  const fs::path root = resolve_dataset(o);
  const fs::path dest = require_dir(o.out, "--out");
  const double lambda = checked_lambda(o.lambda);
  if (o.drop.empty()) throw UsageError("--drop is required");
  LossTerm term;
  try {
    term = parse_loss_term(o.drop);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const PipelineConfig config = resolve_config(o);
  const auto seeds = parse_seeds(o);
  const AttributedGraph graph = load_dataset(root);
  const RunReport r = ablation(graph, dataset_id(root), lambda, term, seeds, config);
  write_reports(dest, {r});
  RunManifest m = base_manifest(o, drop_term(config, term));
  m.dataset_hash = dataset_hash(root);
  m.scenario_hash = r.scenario_hash;
  m.seeds = seeds;
  m.extra["drop"] = std::string(to_string(term));
  finish(m, dest);
  out << r.variant << ": acc " << detail::format_fixed(100 * r.summary().mean.acc, 2) << "\n";
  return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out) {
  const fs::path dest = require_dir(o.out, "--out");
  if (o.inputs.empty()) throw UsageError("report needs at least one run directory");
  std::vector<RunReport> reports;
  json inputs = json::array();
  for (const std::string& dir : o.inputs) {
    const fs::path p = fs::path(dir) / "report.json";
    require_file(p);
    json doc;
    try {
      doc = json::parse(detail::read_file(p));
    } catch (const json::parse_error& e) {
      throw Error(p.string() + " is not valid JSON: " + e.what());
    }
    if (doc.is_object()) doc = json::array({doc});
    for (const json& r : doc) reports.push_back(run_report_from_json(r));
    inputs.push_back(sha256_hex(detail::read_file(p)));
  }
  write_reports(dest, reports);
  SweepTable table;
  table.rows = reports;
  std::sort(table.rows.begin(), table.rows.end(),
            [](const RunReport& a, const RunReport& b) { return a.lambda < b.lambda; });
  detail::write_file(dest / "sweep_plot.svg", sweep_svg(table, "aggregated runs"));
  RunManifest m = base_manifest(o, resolve_config(o));
  m.extra["inputs"] = o.inputs;
  m.extra["input_report_hashes"] = inputs;
  finish(m, dest);
  out << "aggregated " << reports.size() << " reports\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Imbalanced node classification with latent-space minority generation", "vigraph"};
  app.require_subcommand(1);
  app.set_version_flag("--version", VIGRAPH_VERSION);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config file (flags override it)");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_flag("--strict-deterministic", o.strict, "Single-threaded kernels and one job");
  };
  auto dataset = [&](CLI::App* sub) {
    sub->add_option("--dataset", o.dataset, "Dataset directory (default: $VIGRAPH_DATA)");
    sub->add_option("--mode", o.mode, "rigorous or legacy");
    sub->add_option("--minority", o.minority, "half, below-average or a class list like 0,2");
  };
  auto seeds = [&](CLI::App* sub) {
    sub->add_option("--seeds", o.seeds, "Seed list: 0,1,2 or 0:9");
    sub->add_option("--jobs", o.jobs, "Parallel seeds")->check(CLI::PositiveNumber);
    sub->add_flag("--no-baseline", o.no_baseline, "Skip the cross-entropy GCN");
  };
  auto seed = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Seed")->each([&](const std::string&) { o.seed_given = true; });
  };

  CLI::App* prepare = app.add_subcommand("prepare", "Construct and audit an imbalance scenario");
  common(prepare);
  dataset(prepare);
  seed(prepare);
  prepare->add_option("--lambda", o.lambda, "Imbalance ratio in (0, 1]");

  CLI::App* trn = app.add_subcommand("train", "Train the VGAE on a prepared scenario");
  common(trn);
  seed(trn);
  trn->add_option("--scenario", o.scenario, "Scenario directory from prepare");

  CLI::App* gen = app.add_subcommand("generate", "Generate minority latents from a trained model");
  common(gen);
  seed(gen);
  gen->add_option("--scenario", o.scenario, "Scenario directory from prepare");
  gen->add_option("--model", o.model, "Directory from train");

  CLI::App* ev = app.add_subcommand("eval", "Score a trained model, or run the full pipeline");
  common(ev);
  dataset(ev);
  seed(ev);
  seeds(ev);
  ev->add_option("--lambda", o.lambda, "Imbalance ratio in (0, 1]");
  ev->add_option("--scenario", o.scenario, "Scenario directory from prepare");
  ev->add_option("--model", o.model, "Directory from train");
  ev->add_option("--generated", o.generated, "Directory from generate");

  CLI::App* sw = app.add_subcommand("sweep", "Run the pipeline over a range of lambdas");
  common(sw);
  dataset(sw);
  seed(sw);
  seeds(sw);
  sw->add_option("--lambdas", o.lambdas, "start:stop:step (inclusive) or a single value");

  CLI::App* ab = app.add_subcommand("ablate", "Run the pipeline with one loss term removed");
  common(ab);
  dataset(ab);
  seed(ab);
  seeds(ab);
  ab->add_option("--lambda", o.lambda, "Imbalance ratio in (0, 1]");
  ab->add_option("--drop", o.drop, "rec, elbo or gcl");

  CLI::App* rep = app.add_subcommand("report", "Aggregate run directories into one table and plot");
  common(rep);
  rep->add_option("runs", o.inputs, "Run directories containing report.json");

  std::vector<std::string> argv_store;
  argv_store.push_back("vigraph");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  // The recorded command line is independent of the output location so that
  // reruns into fresh directories produce identical manifests.
  o.command_line.push_back("vigraph");
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--out" && i + 1 < args.size()) {
      o.command_line.push_back("--out");
      o.command_line.push_back("${out}");
      ++i;
    } else if (args[i].rfind("--out=", 0) == 0) {
      o.command_line.push_back("--out=${out}");
    } else {
      o.command_line.push_back(args[i]);
    }
  }
  if (o.strict) Eigen::setNbThreads(1);

  try {
    for (CLI::App* sub : app.get_subcommands()) {
      const std::string name = sub->get_name();
      if (name == "prepare") return cmd_prepare(o, out);
      if (name == "train") return cmd_train(o, out);
      if (name == "generate") return cmd_generate(o, out);
      if (name == "eval") return cmd_eval(o, out);
      if (name == "sweep") return cmd_sweep(o, out);
      if (name == "ablate") return cmd_ablate(o, out);
      if (name == "report") return cmd_report(o, out);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace vigraph
