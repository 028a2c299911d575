#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mdr/embedder.hpp"
#include "mdr/evaluation.hpp"
#include "mdr/experiment/checkpoint.hpp"
#include "mdr/experiment/config.hpp"
#include "mdr/mdr.hpp"
#include "mdr/numerics/adam.hpp"

namespace mdr {

/// Chooses triplets given the embeddings the DML term will see.
using TripletMiner =
    std::function<TripletSet(const Tensor& dml_embeddings, std::span<const Label> labels)>;

struct ObjectiveSpec {
  LossConfig loss;
  bool mdr_enabled = true;
};

/// The loss graph for one mini-batch.
struct Objective {
  Var embeddings;
  /// What the DML term sees: raw, divided by mu*, or unit-normalized.
  Var dml_embeddings;
  Var dml;
  /// Invalid when MDR is disabled.
  Var mdr;
  Var total;
  PairSet pairs;
  MdrTerms mdr_terms;
  TripletSet triplets;

  LossComponents components() const;
};

/// embed -> [update stats] -> MDR term and DML term -> combined loss.
/// Stats are touched only when MDR or the trick needs them; with
/// update_stats false they must already be initialized.
Objective build_objective(const MlpEmbedder& embedder, const BoundParams& params,
                          Var features, std::span<const Label> labels,
                          const ObjectiveSpec& spec, DistanceStats& stats,
                          bool update_stats, const TripletMiner& mine);

/// One training run at one seed.
class Trainer {
 public:
  Trainer(ExperimentConfig config, std::uint64_t seed, DatasetSplit data);
  /// Restores parameters, optimizer, stats and sampler from a checkpoint.
  Trainer(const Checkpoint& checkpoint, DatasetSplit data);

  /// One optimizer step. Throws NumericalError on a non-finite loss.
  LossComponents step();

  /// Full record at the current step.
  MetricsRecord evaluate() const;
  SplitMetrics evaluate_split(const FeatureDataset& split, std::uint64_t eval_seed,
                              std::span<const std::size_t> ks, bool normalized_pass) const;

  Checkpoint checkpoint() const;

  const ExperimentConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  std::int64_t step_count() const { return step_; }
  const ParamStore& params() const { return params_; }
  const DistanceStats& stats() const { return stats_; }
  const Adam& optimizer() const { return adam_; }
  const MlpEmbedder& embedder() const { return embedder_; }
  const DatasetSplit& data() const { return data_; }

  /// Seeds for the fixed evaluation batches of each split.
  static std::uint64_t eval_seed(std::uint64_t run_seed, int split_id);

 private:
  ExperimentConfig config_;
  std::uint64_t seed_;
  DatasetSplit data_;
  MlpEmbedder embedder_;
  ParamStore params_;
  Adam adam_;
  DistanceStats stats_;
  SamplerState sampler_;
  std::int64_t step_ = 0;
  LossComponents last_loss_;
  bool warned_level_order_ = false;
};

struct SummaryStat {
  double mean = 0.0;
  /// Sample standard deviation (n - 1 denominator); 0 for a single value.
  double stddev = 0.0;
};

SummaryStat aggregate(std::span<const double> values);

struct RunResult {
  std::uint64_t seed = 0;
  MetricsRecord final_record;
  std::filesystem::path metrics_path;
  std::filesystem::path checkpoint_path;
};

struct RunManifest {
  std::string name;
  std::string config_hash;
  std::string config_ini;
  std::string version;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir;
  std::vector<RunResult> runs;
  /// Failed seeds and their error messages.
  std::vector<std::pair<std::uint64_t, std::string>> failures;
  /// Final-step summaries across successful seeds, e.g. "test_recall@1".
  std::map<std::string, SummaryStat> summary;
};

/// Final-step scalar metrics that enter the manifest summary.
std::map<std::string, double> final_scalars(const MetricsRecord& record);

/// Trains a single seed into run_dir (metrics.jsonl, checkpoint.bin).
RunResult train_seed(const ExperimentConfig& config, std::uint64_t seed,
                     const DatasetSplit& data, const std::filesystem::path& run_dir);

/// Trains every configured seed under output_root/<run.name>/ and writes
/// manifest.json. A failing seed is recorded and the others continue.
RunManifest train(const ExperimentConfig& config, const std::filesystem::path& output_root);

nlohmann::json to_json(const RunManifest& manifest);

/// Accepts either an INI config or a manifest.json (its embedded config).
ExperimentConfig load_config_or_manifest(const std::filesystem::path& path);

/// Evaluates a checkpoint on "train", "test" or a features file.
MetricsRecord evaluate_checkpoint(const Checkpoint& checkpoint, const std::string& split,
                                  std::span<const std::size_t> ks, bool normalized_pass);

}  // namespace mdr
