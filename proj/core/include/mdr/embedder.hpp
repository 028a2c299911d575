#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mdr/numerics/params.hpp"
#include "mdr/pairs.hpp"

namespace mdr {

struct EmbedderConfig {
  std::size_t input_dim = 32;
  std::vector<std::size_t> hidden = {256, 256};
  std::size_t embedding_dim = 64;
};

/// Embedding vectors on a tape plus their class labels.
struct EmbeddingBatch {
  Var embeddings;
  std::vector<Label> labels;

  std::size_t size() const { return labels.size(); }
};

/// Fully connected network: relu on hidden layers, linear output layer.
/// Weights are [in, out] so a batch is computed as X W + b.
class MlpEmbedder {
 public:
  explicit MlpEmbedder(EmbedderConfig config);

  const EmbedderConfig& config() const { return config_; }
  std::size_t layer_count() const { return config_.hidden.size() + 1; }
  static std::string weight_name(std::size_t layer);
  static std::string bias_name(std::size_t layer);

  /// Registers weights (He-uniform, bound sqrt(6 / fan_in)) and zero biases.
  void init(ParamStore& params, std::uint64_t seed) const;

  /// Throws ConfigError when the store's tensors don't match this topology.
  void check_params(const ParamStore& params) const;

  Var embed(const BoundParams& params, Var inputs) const;

  /// Forward pass on a private tape; returns plain values.
  Tensor embed_values(const ParamStore& params, const Tensor& inputs) const;

 private:
  EmbedderConfig config_;
};

/// Row-wise unit normalization. Used by the L2-normalized baseline and for
/// inference-time comparisons, never on the MDR training path.
EmbeddingBatch l2_normalize(const EmbeddingBatch& batch);

}  // namespace mdr
