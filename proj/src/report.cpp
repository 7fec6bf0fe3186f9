#include "vigraph/report.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

#include "text_util.hpp"
#include "vigraph/errors.hpp"

namespace vigraph {

namespace {

void append_rows(std::string& out, const RunReport& r, bool baseline) {
  for (const SeedRow& row : r.rows) {
    if (baseline && !row.baseline) continue;
    const MetricTriple& m = baseline ? *row.baseline : row.metrics;
    out += r.dataset;
    out += ',';
    out += to_string(r.mode);
    out += ',';
    detail::append_double(out, r.lambda);
    out += ',';
    out += std::to_string(row.seed);
    for (double v : {m.acc, m.bacc, m.macro_f1}) {
      out += ',';
      detail::append_double(out, v);
    }
    out += '\n';
  }
}

std::string pm(double mean, double sd) {
  return detail::format_fixed(100.0 * mean, 1) + " ± " + detail::format_fixed(100.0 * sd, 1);
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

}  // namespace

std::string report_csv(const std::vector<RunReport>& reports) {
  std::string out = "dataset,mode,lambda,seed,acc,bacc,f1\n";
  for (const RunReport& r : reports) append_rows(out, r, false);
  return out;
}

std::string baseline_csv(const std::vector<RunReport>& reports) {
  std::string out = "dataset,mode,lambda,seed,acc,bacc,f1\n";
  for (const RunReport& r : reports) append_rows(out, r, true);
  return out;
}

std::string report_markdown(const std::vector<RunReport>& reports) {
  std::string out =
      "| dataset | mode | lambda | method | seeds | Acc | bAcc | F1 |\n"
      "|---|---|---|---|---|---|---|---|\n";
  for (const RunReport& r : reports) {
    auto line = [&](const std::string& method, const MetricSummary& s) {
      out += "| " + r.dataset + " | " + std::string(to_string(r.mode)) + " | " +
             detail::format_double(r.lambda) + " | " + method + " | " + std::to_string(s.count) +
             " | " + pm(s.mean.acc, s.std.acc) + " | " + pm(s.mean.bacc, s.std.bacc) + " | " +
             pm(s.mean.macro_f1, s.std.macro_f1) + " |\n";
    };
    line("vigraph (" + r.variant + ")", r.summary());
    if (const auto b = r.baseline_summary()) line("gcn-ce", *b);
  }
  return out;
}

std::string sweep_svg(const SweepTable& table, const std::string& title) {
  constexpr double w = 640, h = 400, left = 60, right = 130, top = 40, bottom = 50;
  const double pw = w - left - right;
  const double ph = h - top - bottom;
  double lo = 1.0, hi = 0.0;
  for (const RunReport& r : table.rows) {
    lo = std::min(lo, r.lambda);
    hi = std::max(hi, r.lambda);
  }
  if (table.rows.empty()) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.05;
    hi += 0.05;
  }
  auto px = [&](double l) { return left + (l - lo) / (hi - lo) * pw; };
  auto py = [&](double v) { return top + (1.0 - v) * ph; };
  auto f = [](double v) { return detail::format_fixed(v, 2); };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
       "viewBox=\"0 0 640 400\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  s += "<text x=\"" + f(left + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
       escape_xml(title) + "</text>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = i / 5.0;
    s += "<line x1=\"" + f(left) + "\" y1=\"" + f(py(v)) + "\" x2=\"" + f(left + pw) + "\" y2=\"" +
         f(py(v)) + "\" stroke=\"#ddd\"/>\n";
    s += "<text x=\"" + f(left - 6) + "\" y=\"" + f(py(v) + 4) + "\" text-anchor=\"end\">" +
         std::to_string(i * 20) + "</text>\n";
  }
  for (const RunReport& r : table.rows) {
    s += "<text x=\"" + f(px(r.lambda)) + "\" y=\"" + f(top + ph + 18) +
         "\" text-anchor=\"middle\">" + detail::format_double(r.lambda) + "</text>\n";
  }
  s += "<line x1=\"" + f(left) + "\" y1=\"" + f(top + ph) + "\" x2=\"" + f(left + pw) + "\" y2=\"" +
       f(top + ph) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + f(left) + "\" y1=\"" + f(top) + "\" x2=\"" + f(left) + "\" y2=\"" +
       f(top + ph) + "\" stroke=\"black\"/>\n";
  s += "<text x=\"" + f(left + pw / 2) + "\" y=\"" + f(h - 12) +
       "\" text-anchor=\"middle\">imbalance ratio λ</text>\n";
  s += "<text x=\"16\" y=\"" + f(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       f(top + ph / 2) + ")\">score (%)</text>\n";

  struct Series {
    const char* name;
    const char* color;
    double MetricTriple::*field;
  };
  const Series series[] = {{"Acc", "#1f77b4", &MetricTriple::acc},
                           {"bAcc", "#ff7f0e", &MetricTriple::bacc},
                           {"F1", "#2ca02c", &MetricTriple::macro_f1}};
  int idx = 0;
  for (const Series& ser : series) {
    std::string points;
    std::string dots;
    for (const RunReport& r : table.rows) {
      const double v = r.summary().mean.*ser.field;
      points += f(px(r.lambda)) + "," + f(py(v)) + " ";
      dots += "<circle cx=\"" + f(px(r.lambda)) + "\" cy=\"" + f(py(v)) + "\" r=\"3\" fill=\"" +
              ser.color + "\"/>\n";
    }
    if (!points.empty()) points.pop_back();
    s += "<polyline fill=\"none\" stroke=\"" + std::string(ser.color) +
         "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";
    s += dots;
    const double ly = top + 10 + 20 * idx;
    s += "<line x1=\"" + f(left + pw + 15) + "\" y1=\"" + f(ly) + "\" x2=\"" + f(left + pw + 40) +
         "\" y2=\"" + f(ly) + "\" stroke=\"" + ser.color + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + f(left + pw + 46) + "\" y=\"" + f(ly + 4) + "\">" + ser.name + "</text>\n";
    ++idx;
  }
  s += "</svg>\n";
  return s;
}

namespace {

nlohmann::json metric_json(const MetricTriple& m) {
  return {{"acc", m.acc}, {"bacc", m.bacc}, {"f1", m.macro_f1}};
}

MetricTriple metric_from(const nlohmann::json& j) {
  return {j.at("acc").get<double>(), j.at("bacc").get<double>(), j.at("f1").get<double>()};
}

}  // namespace

nlohmann::json to_json(const RunReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const SeedRow& row : r.rows) {
    nlohmann::json j = {{"seed", row.seed},
                        {"metrics", metric_json(row.metrics)},
                        {"generated", row.generated},
                        {"best_epoch", row.best_epoch},
                        {"epochs_run", row.epochs_run},
                        {"best_val_f1", row.best_val_f1}};
    if (row.baseline) j["baseline"] = metric_json(*row.baseline);
    rows.push_back(std::move(j));
  }
  const MetricSummary s = r.summary();
  nlohmann::json doc = {{"dataset", r.dataset},
                        {"mode", std::string(to_string(r.mode))},
                        {"lambda", r.lambda},
                        {"variant", r.variant},
                        {"scenario_hash", r.scenario_hash},
                        {"config_hash", r.config_hash},
                        {"minority_classes", r.minority_classes},
                        {"mean", metric_json(s.mean)},
                        {"std", metric_json(s.std)},
                        {"rows", rows}};
  if (const auto b = r.baseline_summary()) {
    doc["baseline_mean"] = metric_json(b->mean);
    doc["baseline_std"] = metric_json(b->std);
  }
  return doc;
}

RunReport run_report_from_json(const nlohmann::json& doc) {
  RunReport r;
  try {
    r.dataset = doc.at("dataset").get<std::string>();
    r.mode = parse_construction_mode(doc.at("mode").get<std::string>());
    r.lambda = doc.at("lambda").get<double>();
    r.variant = doc.value("variant", std::string("full"));
    r.scenario_hash = doc.at("scenario_hash").get<std::string>();
    r.config_hash = doc.at("config_hash").get<std::string>();
    r.minority_classes = doc.at("minority_classes").get<std::vector<int>>();
    for (const auto& j : doc.at("rows")) {
      SeedRow row;
      row.seed = j.at("seed").get<std::uint64_t>();
      row.metrics = metric_from(j.at("metrics"));
      row.generated = j.at("generated").get<int>();
      row.best_epoch = j.at("best_epoch").get<int>();
      row.epochs_run = j.at("epochs_run").get<int>();
      row.best_val_f1 = j.at("best_val_f1").is_number() ? j.at("best_val_f1").get<double>() : 0.0;
      if (j.contains("baseline")) row.baseline = metric_from(j.at("baseline"));
      r.rows.push_back(row);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed run report: ") + e.what());
  }
  return r;
}

std::string generated_jsonl(const std::vector<GeneratedNode>& nodes) {
  std::string out;
  for (const GeneratedNode& g : nodes) {
    nlohmann::json j;
    j["class_id"] = g.class_id;
    j["source_node"] = g.source_node;
    j["epsilon_seed"] = g.epsilon_seed;
    j["latent"] = std::vector<double>(g.latent.data(), g.latent.data() + g.latent.size());
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace vigraph
