#include "mdr/embedder.hpp"

#include <cmath>
#include <random>

#include "mdr/error.hpp"
#include "mdr/numerics/ops.hpp"

namespace mdr {

MlpEmbedder::MlpEmbedder(EmbedderConfig config) : config_(std::move(config)) {
  if (config_.input_dim == 0 || config_.embedding_dim == 0) {
    throw ConfigError("embedder: input and embedding widths must be positive");
  }
  for (std::size_t w : config_.hidden) {
    if (w == 0) throw ConfigError("embedder: hidden widths must be positive");
  }
}

std::string MlpEmbedder::weight_name(std::size_t layer) {
  return "embedder.layer" + std::to_string(layer) + ".weight";
}

std::string MlpEmbedder::bias_name(std::size_t layer) {
  return "embedder.layer" + std::to_string(layer) + ".bias";
}

void MlpEmbedder::init(ParamStore& params, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::size_t fan_in = config_.input_dim;
  for (std::size_t layer = 0; layer < layer_count(); ++layer) {
    const std::size_t fan_out =
        layer < config_.hidden.size() ? config_.hidden[layer] : config_.embedding_dim;
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor w(Shape{fan_in, fan_out});
    for (double& x : w.data()) x = dist(rng);
    params.add(weight_name(layer), std::move(w));
    params.add(bias_name(layer), Tensor(Shape{fan_out}));
    fan_in = fan_out;
  }
}

void MlpEmbedder::check_params(const ParamStore& params) const {
  std::size_t fan_in = config_.input_dim;
  for (std::size_t layer = 0; layer < layer_count(); ++layer) {
    const std::size_t fan_out =
        layer < config_.hidden.size() ? config_.hidden[layer] : config_.embedding_dim;
    const Shape want_w{fan_in, fan_out};
    const Shape want_b{fan_out};
    for (const auto& [name, want] :
         {std::pair{weight_name(layer), want_w}, std::pair{bias_name(layer), want_b}}) {
      if (!params.contains(name)) throw ConfigError("embedder: missing parameter " + name);
      if (params.get(name).shape() != want) {
        throw ConfigError("embedder: parameter " + name + " has shape " +
                          shape_string(params.get(name).shape()) + ", expected " +
                          shape_string(want));
      }
    }
    fan_in = fan_out;
  }
}

Var MlpEmbedder::embed(const BoundParams& params, Var inputs) const {
  const Tensor& x = inputs.value();
  if (x.rank() != 2 || x.cols() != config_.input_dim) {
    throw ConfigError("embedder: input shape " + shape_string(x.shape()) +
                      " does not match configured input width " +
                      std::to_string(config_.input_dim));
  }
  Var h = inputs;
  for (std::size_t layer = 0; layer < layer_count(); ++layer) {
    h = ops::add(ops::matmul(h, params[weight_name(layer)]), params[bias_name(layer)]);
    if (layer + 1 < layer_count()) h = ops::relu(h);
  }
  return h;
}

Tensor MlpEmbedder::embed_values(const ParamStore& params, const Tensor& inputs) const {
  Tape tape;
  const BoundParams bound = params.bind(tape);
  return embed(bound, tape.constant(inputs)).value();
}

EmbeddingBatch l2_normalize(const EmbeddingBatch& batch) {
  return EmbeddingBatch{ops::l2_normalize_rows(batch.embeddings), batch.labels};
}

}  // namespace mdr
