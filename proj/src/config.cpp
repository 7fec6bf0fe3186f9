#include "vigraph/config.hpp"

#include <set>
#include <string>

#include "text_util.hpp"
#include "vigraph/errors.hpp"
#include "vigraph/hash.hpp"

namespace vigraph {

using nlohmann::json;

json to_json(const PipelineConfig& c) {
  const TrainConfig& t = c.train;
  const LossWeights& w = t.loss_weights;
  return {
      {"train",
       {{"epochs", t.epochs},
        {"learning_rate", t.learning_rate},
        {"weight_decay", t.weight_decay},
        {"seed", t.seed},
        {"patience", t.patience},
        {"eval_interval", t.eval_interval},
        {"construction_mode", std::string(to_string(t.construction_mode))},
        {"hidden_dim", t.hidden_dim},
        {"latent_dim", t.latent_dim},
        {"both_views", t.both_views},
        {"elbo_scale", std::string(to_string(t.elbo_scale))},
        {"allow_any_learning_rate", t.allow_any_learning_rate},
        {"loss_weights", {{"alpha", w.alpha}, {"beta", w.beta}, {"gamma", w.gamma}, {"tau", w.tau}}},
        {"classifier",
         {{"steps", t.classifier.steps},
          {"learning_rate", t.classifier.learning_rate},
          {"seed", t.classifier.seed}}},
        {"generator", {{"sampling", std::string(to_string(t.generator.sampling))}}}}},
      {"baseline",
       {{"hidden", c.baseline.hidden},
        {"dropout", c.baseline.dropout},
        {"learning_rate", c.baseline.learning_rate},
        {"weight_decay", c.baseline.weight_decay},
        {"epochs", c.baseline.epochs},
        {"normalize_features", c.baseline.normalize_features}}},
      {"run_baseline", c.run_baseline},
      {"minority", to_string(c.minority)},
      {"quota_rule", c.quota_rule == QuotaRule::per_class ? "per-class" : "relative-to-largest"},
      {"scenario_seed", c.scenario_seed},
      {"normalize_features", c.normalize_features},
      {"jobs", c.jobs},
  };
}

namespace {

/// Walks one JSON object, consuming known keys and rejecting the rest.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
  }

  /// Rejects keys that were never looked up.
  void done() const {
    for (const auto& item : obj_.items()) {
      if (!seen_.contains(item.key())) throw ConfigError(path_ + "/" + item.key(), "unknown key");
    }
  }

  std::string child(const std::string& key) const { return path_ + "/" + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(child(key), "expected a number");
      out = v->get<double>();
    }
  }

  template <typename Int>
  void integer(const std::string& key, Int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(child(key), "expected an integer");
      if constexpr (std::is_unsigned_v<Int>) {
        if (v->is_number_unsigned() || v->get<long long>() >= 0) {
          out = v->get<Int>();
        } else {
          throw ConfigError(child(key), "expected a non-negative integer");
        }
      } else {
        out = v->get<Int>();
      }
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(child(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  template <typename Parse>
  void text(const std::string& key, Parse&& parse) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(child(key), "expected a string");
      try {
        parse(v->get<std::string>());
      } catch (const InvalidArgument& e) {
        throw ConfigError(child(key), e.what());
      }
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

PipelineConfig apply_config(PipelineConfig c, const json& doc) {
  {
    Reader top(doc, "");
    if (const json* train = top.find("train")) {
      TrainConfig& t = c.train;
      Reader r(*train, "/train");
      r.integer("epochs", t.epochs);
      r.number("learning_rate", t.learning_rate);
      r.number("weight_decay", t.weight_decay);
      r.integer("seed", t.seed);
      r.integer("patience", t.patience);
      r.integer("eval_interval", t.eval_interval);
      r.text("construction_mode",
             [&](const std::string& s) { t.construction_mode = parse_construction_mode(s); });
      r.integer("hidden_dim", t.hidden_dim);
      r.integer("latent_dim", t.latent_dim);
      r.boolean("both_views", t.both_views);
      r.text("elbo_scale", [&](const std::string& s) { t.elbo_scale = parse_elbo_scale(s); });
      r.boolean("allow_any_learning_rate", t.allow_any_learning_rate);
      if (const json* lw = r.find("loss_weights")) {
        Reader q(*lw, "/train/loss_weights");
        q.number("alpha", t.loss_weights.alpha);
        q.number("beta", t.loss_weights.beta);
        q.number("gamma", t.loss_weights.gamma);
        q.number("tau", t.loss_weights.tau);
        q.done();
      }
      if (const json* cl = r.find("classifier")) {
        Reader q(*cl, "/train/classifier");
        q.integer("steps", t.classifier.steps);
        q.number("learning_rate", t.classifier.learning_rate);
        q.integer("seed", t.classifier.seed);
        q.done();
      }
      if (const json* g = r.find("generator")) {
        Reader q(*g, "/train/generator");
        q.text("sampling",
               [&](const std::string& s) { t.generator.sampling = parse_source_sampling(s); });
        q.done();
      }
      r.done();
    }
    if (const json* base = top.find("baseline")) {
      Reader r(*base, "/baseline");
      r.integer("hidden", c.baseline.hidden);
      r.number("dropout", c.baseline.dropout);
      r.number("learning_rate", c.baseline.learning_rate);
      r.number("weight_decay", c.baseline.weight_decay);
      r.integer("epochs", c.baseline.epochs);
      r.boolean("normalize_features", c.baseline.normalize_features);
      r.done();
    }
    top.boolean("run_baseline", c.run_baseline);
    top.text("minority", [&](const std::string& s) { c.minority = parse_minority_policy(s); });
    top.text("quota_rule", [&](const std::string& s) {
      if (s == "per-class") {
        c.quota_rule = QuotaRule::per_class;
      } else if (s == "relative-to-largest") {
        c.quota_rule = QuotaRule::relative_to_largest;
      } else {
        throw InvalidArgument("expected per-class or relative-to-largest");
      }
    });
    top.integer("scenario_seed", c.scenario_seed);
    top.boolean("normalize_features", c.normalize_features);
    top.integer("jobs", c.jobs);
    top.done();
  }

  auto check = [](bool ok, const char* path, const char* what) {
    if (!ok) throw ConfigError(path, what);
  };
  const TrainConfig& t = c.train;
  check(t.epochs >= 0, "/train/epochs", "must be non-negative");
  check(t.learning_rate > 0, "/train/learning_rate", "must be positive");
  check(t.allow_any_learning_rate || (t.learning_rate >= 0.0005 && t.learning_rate <= 0.01),
        "/train/learning_rate", "must lie in [0.0005, 0.01] unless allow_any_learning_rate is set");
  check(t.weight_decay >= 0, "/train/weight_decay", "must be non-negative");
  check(t.patience >= 0, "/train/patience", "must be non-negative");
  check(t.eval_interval >= 1, "/train/eval_interval", "must be at least 1");
  check(t.hidden_dim >= 1, "/train/hidden_dim", "must be positive");
  check(t.latent_dim >= 1, "/train/latent_dim", "must be positive");
  check(t.loss_weights.alpha >= 0, "/train/loss_weights/alpha", "must be non-negative");
  check(t.loss_weights.beta >= 0, "/train/loss_weights/beta", "must be non-negative");
  check(t.loss_weights.gamma >= 0, "/train/loss_weights/gamma", "must be non-negative");
  check(t.loss_weights.tau > 0, "/train/loss_weights/tau", "must be positive");
  check(t.classifier.steps >= 0, "/train/classifier/steps", "must be non-negative");
  check(t.classifier.learning_rate > 0, "/train/classifier/learning_rate", "must be positive");
  check(c.baseline.hidden >= 1, "/baseline/hidden", "must be positive");
  check(c.baseline.dropout >= 0 && c.baseline.dropout < 1, "/baseline/dropout", "must lie in [0, 1)");
  check(c.baseline.epochs >= 0, "/baseline/epochs", "must be non-negative");
  check(c.jobs >= 1, "/jobs", "must be at least 1");
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("not valid JSON: ") + e.what());
  }
  return apply_config(PipelineConfig{}, doc);
}

std::string config_hash(const PipelineConfig& config) {
  json doc = to_json(config);
  doc.erase("jobs");
  doc["train"].erase("seed");
  return sha256_hex(doc.dump());
}

}  // namespace vigraph
