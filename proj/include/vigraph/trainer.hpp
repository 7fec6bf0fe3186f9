#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "vigraph/classifier.hpp"
#include "vigraph/generator.hpp"
#include "vigraph/graph.hpp"
#include "vigraph/imbalance.hpp"
#include "vigraph/objectives.hpp"
#include "vigraph/vgae.hpp"

namespace vigraph {

struct TrainConfig {
  int epochs = 500;
  double learning_rate = 0.005;
  double weight_decay = 5e-4;
  LossWeights loss_weights;
  std::uint64_t seed = 0;
  /// Evaluations without improvement before stopping; 0 disables early stopping.
  int patience = 20;
  int eval_interval = 5;
  ConstructionMode construction_mode = ConstructionMode::rigorous;
  int hidden_dim = 128;
  int latent_dim = 64;
  /// Structure loss averaged over both decoded views, else view 2 only.
  bool both_views = true;
  ElboScale elbo_scale = ElboScale::per_entry;
  /// Skip the [0.0005, 0.01] learning-rate check.
  bool allow_any_learning_rate = false;
  ClassifierConfig classifier;
  GeneratorConfig generator;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EpochRecord {
  int epoch = 0;
  LossTerms terms;
  /// Validation macro-F1 of the parameters at the start of this epoch; NaN
  /// when the epoch was not an evaluation point.
  double val_f1 = 0.0;
  /// Seed of the Rng that produced this epoch's ε₁ then ε₂.
  std::uint64_t noise_seed = 0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  /// Epoch whose starting parameters were returned; epochs.size() means the
  /// parameters after the last step.
  int best_epoch = -1;
  double best_val_f1 = 0.0;
  bool stopped_early = false;
  std::uint64_t init_seed = 0;

  /// epoch,kl,elbo,rec,gcl,total,val_f1 (val_f1 empty when not evaluated).
  std::string to_csv() const;
};

struct TrainResult {
  VgaeParameters params;
  TrainHistory history;
};

/// Called after each epoch's loss evaluation with the parameters the terms
/// were computed from (before the update).
using EpochCallback = std::function<void(const EpochRecord&, const VgaeParameters&)>;

/// ε₁ and ε₂ for one epoch, both N×latent, drawn in that order.
std::pair<Matrix, Matrix> epoch_noise(std::uint64_t noise_seed, Eigen::Index nodes, int latent);

/// Full-graph training with AdamW (β = 0.9/0.999, ε = 1e-8).
///
/// Every eval_interval epochs the current parameters are scored by
/// validation macro-F1 of the downstream classifier trained on D_S built from
/// μ; the best parameters are returned. Without validation nodes the final
/// parameters are returned. Throws TrainingDivergedError on a non-finite
/// loss term and InvalidArgument on an empty labeled pool.
TrainResult train(const AttributedGraph& graph, const LabeledPools& pools,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Loss terms of the training objective at `params` with fixed noise.
LossTerms evaluate_objective(const AttributedGraph& graph, const VgaeParameters& params,
                             const Matrix& epsilon1, const Matrix& epsilon2,
                             const TrainConfig& config);

/// Analytic gradients of the total loss, same layout as `params`.
VgaeParameters objective_gradient(const AttributedGraph& graph, const VgaeParameters& params,
                                  const Matrix& epsilon1, const Matrix& epsilon2,
                                  const TrainConfig& config, LossTerms* terms = nullptr);

struct TensorGradientCheck {
  std::string name;
  double max_relative_error = 0.0;
  double analytic_max_abs = 0.0;
  double numeric_max_abs = 0.0;
  bool received_signal = false;
};

struct GradientReport {
  std::vector<TensorGradientCheck> tensors;
  double max_relative_error = 0.0;
  double step = 1e-5;
};

/// Central finite differences on every entry of every tensor with the noise
/// drawn once from `noise_seed` and held fixed. Relative error per tensor is
/// ‖analytic − numeric‖∞ / max(‖analytic‖∞, ‖numeric‖∞), 0 when both vanish.
GradientReport gradient_check(const AttributedGraph& graph, const VgaeParameters& params,
                              const TrainConfig& config, std::uint64_t noise_seed = 0,
                              double step = 1e-5);

}  // namespace vigraph
