#include "vigraph/trainer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "objective_model.hpp"
#include "text_util.hpp"
#include "vigraph/errors.hpp"
#include "vigraph/rng.hpp"

namespace vigraph {

void TrainConfig::validate() const {
  if (epochs < 0) throw InvalidArgument("epochs must be non-negative");
  if (!std::isfinite(learning_rate) || learning_rate <= 0) {
    throw InvalidArgument("learning_rate must be positive");
  }
  if (!allow_any_learning_rate && (learning_rate < 0.0005 || learning_rate > 0.01)) {
    throw InvalidArgument("learning_rate " + detail::format_double(learning_rate) +
                          " outside [0.0005, 0.01]");
  }
  if (!std::isfinite(weight_decay) || weight_decay < 0) {
    throw InvalidArgument("weight_decay must be non-negative");
  }
  if (patience < 0) throw InvalidArgument("patience must be non-negative");
  if (eval_interval < 1) throw InvalidArgument("eval_interval must be at least 1");
  if (hidden_dim < 1 || latent_dim < 1) throw InvalidArgument("dimensions must be positive");
  if (classifier.steps < 0 || !(classifier.learning_rate > 0)) {
    throw InvalidArgument("classifier steps/learning_rate invalid");
  }
  loss_weights.validate();
}

std::string TrainHistory::to_csv() const {
  std::string out = "epoch,kl,elbo,rec,gcl,total,val_f1\n";
  for (const EpochRecord& r : epochs) {
    out += std::to_string(r.epoch);
    for (double v : {r.terms.kl, r.terms.elbo, r.terms.rec, r.terms.gcl, r.terms.total}) {
      out += ',';
      detail::append_double(out, v);
    }
    out += ',';
    if (!std::isnan(r.val_f1)) detail::append_double(out, r.val_f1);
    out += '\n';
  }
  return out;
}

std::pair<Matrix, Matrix> epoch_noise(std::uint64_t noise_seed, Eigen::Index nodes, int latent) {
  Rng rng(noise_seed);
  Matrix e1 = standard_normal(nodes, latent, rng);
  Matrix e2 = standard_normal(nodes, latent, rng);
  return {std::move(e1), std::move(e2)};
}

namespace {

detail::ObjectiveOptions options_of(const TrainConfig& config) {
  return {config.loss_weights, config.both_views, config.elbo_scale};
}

double validation_f1(const VgaeParameters& params, const AttributedGraph& graph,
                     const LabeledPools& pools, const std::vector<int>& val_nodes,
                     std::uint64_t generation_seed, const TrainConfig& config) {
  const int k = graph.num_classes();
  NodePosterior post = posterior(params, graph);
  auto generated = generate_from_posterior(post, pools, k, generation_seed, config.generator);
  const LabeledPools balanced = assemble_from_embedding(pools, std::move(generated), post.mu);
  const LinearClassifier clf = train_classifier(balanced.synthesized, k, config.classifier);
  const std::vector<int> pred = clf.predict(gather_rows(post.mu, val_nodes));
  std::vector<int> gold;
  gold.reserve(val_nodes.size());
  for (int v : val_nodes) gold.push_back(graph.labels()[static_cast<std::size_t>(v)]);
  return compute_metrics(pred, gold, k).macro_f1;
}

void check_finite(const LossTerms& t, int epoch) {
  if (!std::isfinite(t.kl)) throw TrainingDivergedError(epoch, "kl");
  if (!std::isfinite(t.rec)) throw TrainingDivergedError(epoch, "rec");
  if (!std::isfinite(t.gcl)) throw TrainingDivergedError(epoch, "gcl");
  if (!std::isfinite(t.total)) throw TrainingDivergedError(epoch, "total");
}

class Adam {
 public:
  Adam(const VgaeParameters& shape, double lr, double weight_decay)
      : lr_(lr), weight_decay_(weight_decay) {
    const auto tensors = shape.tensors();
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      m_[i] = Matrix::Zero(tensors[i]->rows(), tensors[i]->cols());
      v_[i] = m_[i];
    }
  }

  void step(VgaeParameters& params, const VgaeParameters& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    auto p = params.tensors();
    const auto g = grad.tensors();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * *g[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * g[i]->cwiseProduct(*g[i]);
      const auto update = (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + kEps);
      p[i]->array() -= lr_ * (update + weight_decay_ * p[i]->array());
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_;
  double weight_decay_;
  int t_ = 0;
  std::array<Matrix, 5> m_, v_;
};

}  // namespace

TrainResult train(const AttributedGraph& graph, const LabeledPools& pools,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (pools.labeled.empty()) throw InvalidArgument("labeled pool is empty");

  Rng master(config.seed);
  TrainResult result;
  result.history.init_seed = master.next_u64();
  const std::uint64_t generation_seed = master.next_u64();
  result.params = init_parameters({graph.feature_dim(), config.hidden_dim, config.latent_dim},
                                  result.history.init_seed);
  if (config.epochs == 0) return result;

  const detail::ObjectiveInputs inputs = detail::ObjectiveInputs::from_graph(graph);
  const detail::ObjectiveOptions options = options_of(config);
  const std::vector<int> val_nodes = graph.nodes_with(SplitTag::val);
  const bool validate_runs = !val_nodes.empty();

  VgaeParameters& params = result.params;
  VgaeParameters best = params;
  double best_f1 = -std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int stale = 0;
  Adam adam(params, config.learning_rate, config.weight_decay);
  VgaeParameters grad;
  kernels::Scratch<double> scratch;

  auto score = [&](int epoch) {
    const double f1 = validation_f1(params, graph, pools, val_nodes, generation_seed, config);
    if (f1 > best_f1) {
      best_f1 = f1;
      best = params;
      best_epoch = epoch;
      stale = 0;
    } else {
      ++stale;
    }
    return f1;
  };

  int epoch = 0;
  for (; epoch < config.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.val_f1 = std::numeric_limits<double>::quiet_NaN();
    if (validate_runs && epoch % config.eval_interval == 0) {
      rec.val_f1 = score(epoch);
      if (config.patience > 0 && stale >= config.patience) {
        result.history.stopped_early = true;
        break;
      }
    }
    rec.noise_seed = master.next_u64();
    const auto [e1, e2] = epoch_noise(rec.noise_seed, graph.node_count(), config.latent_dim);
    rec.terms = detail::evaluate(inputs, params, e1, e2, options, &grad, &scratch);
    check_finite(rec.terms, epoch);
    if (on_epoch) on_epoch(rec, params);
    result.history.epochs.push_back(rec);
    adam.step(params, grad);
  }

  if (validate_runs) {
    if (!result.history.stopped_early) score(epoch);
    params = best;
    result.history.best_epoch = best_epoch;
    result.history.best_val_f1 = best_f1;
  } else {
    result.history.best_epoch = epoch;
    result.history.best_val_f1 = std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

LossTerms evaluate_objective(const AttributedGraph& graph, const VgaeParameters& params,
                             const Matrix& epsilon1, const Matrix& epsilon2,
                             const TrainConfig& config) {
  const auto inputs = detail::ObjectiveInputs::from_graph(graph);
  return detail::evaluate(inputs, params, epsilon1, epsilon2, options_of(config), nullptr);
}

VgaeParameters objective_gradient(const AttributedGraph& graph, const VgaeParameters& params,
                                  const Matrix& epsilon1, const Matrix& epsilon2,
                                  const TrainConfig& config, LossTerms* terms) {
  const auto inputs = detail::ObjectiveInputs::from_graph(graph);
  VgaeParameters grad;
  const LossTerms t =
      detail::evaluate(inputs, params, epsilon1, epsilon2, options_of(config), &grad);
  if (terms != nullptr) *terms = t;
  return grad;
}

GradientReport gradient_check(const AttributedGraph& graph, const VgaeParameters& params,
                              const TrainConfig& config, std::uint64_t noise_seed, double step) {
  params.check_shapes();
  const auto inputs = detail::ObjectiveInputs::from_graph(graph);
  const auto options = options_of(config);
  const auto [e1, e2] = epoch_noise(noise_seed, graph.node_count(), params.dims.latent);

  VgaeParameters analytic;
  kernels::Scratch<double> scratch;
  detail::evaluate(inputs, params, e1, e2, options, &analytic, &scratch);

  GradientReport report;
  report.step = step;
  VgaeParameters probe = params;
  auto probe_tensors = probe.tensors();
  const auto analytic_tensors = analytic.tensors();
  for (std::size_t t = 0; t < probe_tensors.size(); ++t) {
    Matrix& m = *probe_tensors[t];
    Matrix numeric(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double saved = m.data()[i];
      m.data()[i] = saved + step;
      const double up = detail::evaluate(inputs, probe, e1, e2, options, nullptr, &scratch).total;
      m.data()[i] = saved - step;
      const double down = detail::evaluate(inputs, probe, e1, e2, options, nullptr, &scratch).total;
      m.data()[i] = saved;
      numeric.data()[i] = (up - down) / (2.0 * step);
    }
    TensorGradientCheck c;
    c.name = std::string(VgaeParameters::kTensorNames[t]);
    const Matrix& a = *analytic_tensors[t];
    c.analytic_max_abs = a.cwiseAbs().maxCoeff();
    c.numeric_max_abs = numeric.cwiseAbs().maxCoeff();
    const double scale = std::max(c.analytic_max_abs, c.numeric_max_abs);
    c.max_relative_error = scale > 0 ? (a - numeric).cwiseAbs().maxCoeff() / scale : 0.0;
    c.received_signal = c.analytic_max_abs > 0.0;
    report.max_relative_error = std::max(report.max_relative_error, c.max_relative_error);
    report.tensors.push_back(std::move(c));
  }
  return report;
}

}  // namespace vigraph
