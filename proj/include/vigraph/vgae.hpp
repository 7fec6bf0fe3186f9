#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string_view>

#include "vigraph/graph.hpp"
#include "vigraph/rng.hpp"

namespace vigraph {

struct VgaeDims {
  int input = 0;
  int hidden = 128;
  int latent = 64;
  friend bool operator==(const VgaeDims&, const VgaeDims&) = default;
};

/// log σ is clamped to this range before exponentiation.
inline constexpr double kLogSigmaMin = -10.0;
inline constexpr double kLogSigmaMax = 10.0;

/// Weights of the shared GCN encoder, the μ / log σ heads and the one-layer
/// feature decoder. The decoder bias is kept as a 1×hidden row so that every
/// tensor has the same type.
struct VgaeParameters {
  VgaeDims dims;
  std::uint64_t seed = 0;
  Matrix encoder_weight;   // input × hidden
  Matrix mu_weight;        // hidden × latent
  Matrix logsigma_weight;  // hidden × latent
  Matrix decoder_weight;   // latent × hidden
  Matrix decoder_bias;     // 1 × hidden

  static constexpr std::array<std::string_view, 5> kTensorNames = {
      "encoder_weight", "mu_weight", "logsigma_weight", "decoder_weight", "decoder_bias"};

  std::array<Matrix*, 5> tensors() {
    return {&encoder_weight, &mu_weight, &logsigma_weight, &decoder_weight, &decoder_bias};
  }
  std::array<const Matrix*, 5> tensors() const {
    return {&encoder_weight, &mu_weight, &logsigma_weight, &decoder_weight, &decoder_bias};
  }

  bool all_finite() const;
  /// Throws InvalidArgument when a tensor's shape disagrees with `dims`.
  void check_shapes() const;
  friend bool operator==(const VgaeParameters&, const VgaeParameters&);
};

/// Multiplier on 1/√fan_in per tensor, in kTensorNames order. The decoder
/// starts small (and its bias at zero): at full scale every decoded inner
/// product starts near +10, and the structure loss then pushes all decoder
/// units below zero, where no gradient reaches them again.
inline constexpr std::array<double, 5> kInitGain = {1.0, 1.0, 1.0, 0.1, 0.0};

/// Every entry uniform in [-g/√fan_in, g/√fan_in] with g from kInitGain and
/// fan_in the tensor's row count (latent for the bias). Tensors are filled in
/// kTensorNames order.
VgaeParameters init_parameters(VgaeDims dims, std::uint64_t seed);

/// H = ReLU(Â X W_enc).
Matrix encode(const Matrix& features, const NormalizedAdjacency& adjacency,
              const VgaeParameters& params);

struct VariationalHeads {
  Matrix mu;
  Matrix log_sigma;
};

/// μ = Â H W_μ and log σ = clamp(Â H W_σ), both linear.
VariationalHeads variational_heads(const Matrix& hidden, const NormalizedAdjacency& adjacency,
                                   const VgaeParameters& params);

struct EncodingBundle {
  Matrix hidden;
  Matrix mu;
  Matrix log_sigma;
  Matrix z1;
  Matrix z2;
  Matrix epsilon1;
  Matrix epsilon2;
};

/// z = μ + exp(log σ) ⊙ ε.
Matrix reparameterize(const Matrix& mu, const Matrix& log_sigma, const Matrix& epsilon);

/// N×d matrix of independent standard normals, filled row-major.
Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// Two independent draws from the same posterior; the noise is kept in the
/// bundle (hidden is left empty).
EncodingBundle reparameterize_pair(const Matrix& mu, const Matrix& log_sigma, Rng& rng);
EncodingBundle reparameterize_pair(const Matrix& mu, const Matrix& log_sigma, Matrix epsilon1,
                                   Matrix epsilon2);

/// Full forward pass up to the paired latent samples.
EncodingBundle encode_bundle(const Matrix& features, const NormalizedAdjacency& adjacency,
                             const VgaeParameters& params, Rng& rng);

/// X̃ = ReLU(Z W_dec + b).
Matrix decode_features(const Matrix& z, const VgaeParameters& params);

/// Overflow-safe logistic function.
double stable_sigmoid(double x);

/// Â[v][u] = sigmoid(⟨x̃_v, x̃_u⟩).
Matrix reconstruct_adjacency(const Matrix& x_tilde);

/// Binary checkpoint: 8-byte magic, u64 header length, JSON header (dims,
/// seed, tensor table), then each tensor as row-major little-endian f64.
void save_checkpoint(const VgaeParameters& params, const std::filesystem::path& path);
VgaeParameters load_checkpoint(const std::filesystem::path& path);

}  // namespace vigraph
