#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mdr/data.hpp"
#include "mdr/embedder.hpp"
#include "mdr/losses.hpp"
#include "mdr/numerics/adam.hpp"
#include "mdr/sampling.hpp"

namespace mdr {

enum class DatasetKind { kSynthetic, kFile };

struct DatasetSection {
  DatasetKind kind = DatasetKind::kSynthetic;
  SyntheticSpec synthetic{.seed = 7};
  std::filesystem::path path;
  double train_fraction = 0.5;
  std::uint64_t split_seed = 0;
};

struct EmbedderSection {
  std::vector<std::size_t> hidden = {256, 256};
  std::size_t embedding_dim = 64;
};

struct MdrSection {
  bool enabled = true;
  std::vector<double> levels = {-3.0, 0.0, 3.0};
  double gamma = 0.9;
};

struct OptimizerSection {
  AdamConfig adam;
  std::int64_t steps = 2000;
  std::int64_t eval_interval = 500;
};

struct RunSection {
  std::string name = "experiment";
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::vector<std::size_t> recall_ks = {1, 2, 4, 8};
  /// Also report Recall@K on unit-normalized embeddings.
  bool eval_normalized = false;
};

/// Everything one training run needs. Parsed from INI-style text with
/// sections [dataset] [embedder] [loss] [mdr] [sampler] [optimizer] [run];
/// unknown sections or keys are rejected.
struct ExperimentConfig {
  DatasetSection dataset;
  EmbedderSection embedder;
  LossConfig loss{.lambda = 0.2, .trick = true};
  MdrSection mdr;
  SamplerConfig sampler;
  BatchSpec batch;
  OptimizerSection optimizer;
  RunSection run;

  void validate() const;

  /// Fully resolved text: every key, defaults included. parse(to_ini())
  /// reproduces the config.
  std::string to_ini() const;
  /// 16 hex digits of FNV-1a over to_ini().
  std::string hash() const;

  static ExperimentConfig parse(std::string_view text);
  static ExperimentConfig load(const std::filesystem::path& path);
};

/// Features for the configured dataset, split into disjoint train and test
/// classes.
DatasetSplit materialize_dataset(const ExperimentConfig& config);

EmbedderConfig embedder_config(const ExperimentConfig& config, std::size_t input_dim);

}  // namespace mdr
