#include "mdr/experiment/trainer.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "mdr/error.hpp"
#include "mdr/experiment/metrics.hpp"
#include "mdr/numerics/ops.hpp"
#include "mdr/version.hpp"

namespace mdr {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

TripletMiner make_miner(const SamplerConfig& config, SamplerState& state) {
  return [&config, &state](const Tensor& embeddings, std::span<const Label> labels) {
    return mine_triplets(embeddings, labels, config, state);
  };
}

ObjectiveSpec objective_spec(const ExperimentConfig& config) {
  return ObjectiveSpec{config.loss, config.mdr.enabled};
}

// The evaluation batch shrinks P when a split has fewer classes.
BatchSpec eval_batch_spec(const ExperimentConfig& config, const FeatureDataset& split) {
  BatchSpec spec = config.batch;
  spec.classes_per_batch = std::min(spec.classes_per_batch, split.classes().size());
  return spec;
}

}  // namespace

LossComponents Objective::components() const {
  LossComponents c;
  c.dml = dml.value().item();
  c.mdr = mdr.valid() ? mdr.value().item() : 0.0;
  c.total = total.value().item();
  return c;
}

Objective build_objective(const MlpEmbedder& embedder, const BoundParams& params,
                          Var features, std::span<const Label> labels,
                          const ObjectiveSpec& spec, DistanceStats& stats,
                          bool update_stats, const TripletMiner& mine) {
  Objective o;
  o.embeddings = embedder.embed(params, features);
  o.pairs = all_pairs(labels);

  const bool needs_stats = spec.mdr_enabled || spec.loss.trick;
  if (needs_stats) {
    o.mdr_terms.distances = pairwise_distances(o.embeddings, o.pairs);
    if (update_stats) stats.update(o.mdr_terms.distances.value().data());
    if (!stats.initialized()) {
      throw UsageError("build_objective: distance stats are not initialized");
    }
  }
  if (spec.mdr_enabled) {
    const Var levels = params[kLevelsParam];
    o.mdr_terms.normalized = normalize_distances(o.mdr_terms.distances, stats);
    o.mdr_terms.assignment =
        assign_levels(o.mdr_terms.normalized.value().data(), levels.value().data());
    o.mdr_terms.loss = mdr_loss(o.mdr_terms.normalized, levels);
    o.mdr = o.mdr_terms.loss;
  }

  if (spec.loss.l2_normalize) {
    o.dml_embeddings = ops::l2_normalize_rows(o.embeddings);
  } else if (spec.loss.trick) {
    o.dml_embeddings = apply_trick(o.embeddings, stats);
  } else {
    o.dml_embeddings = o.embeddings;
  }

  o.triplets = mine(o.dml_embeddings.value(), labels);
  switch (spec.loss.kind) {
    case LossKind::kTriplet:
      o.dml = triplet_loss(o.dml_embeddings, o.triplets, spec.loss.margin);
      break;
    case LossKind::kContrastive:
      o.dml = contrastive_loss(o.dml_embeddings, pairs_from_triplets(o.triplets, labels),
                               spec.loss.margin);
      break;
    case LossKind::kMargin:
      o.dml = margin_loss(o.dml_embeddings, pairs_from_triplets(o.triplets, labels),
                          spec.loss.margin, params[kMarginBetaParam]);
      break;
  }
  o.total = spec.mdr_enabled ? combined_loss(o.dml, o.mdr, spec.loss.lambda) : o.dml;
  return o;
}

std::uint64_t Trainer::eval_seed(std::uint64_t run_seed, int split_id) {
  return derive_seed(run_seed, 100 + static_cast<std::uint64_t>(split_id));
}

Trainer::Trainer(ExperimentConfig config, std::uint64_t seed, DatasetSplit data)
    : config_(std::move(config)),
      seed_(seed),
      data_(std::move(data)),
      embedder_(embedder_config(config_, data_.train.feature_dim())),
      adam_(config_.optimizer.adam),
      stats_(config_.mdr.gamma),
      sampler_(derive_seed(seed, 2)) {
  config_.validate();
  if (data_.test.feature_dim() != data_.train.feature_dim()) {
    throw ConfigError("train features have width " + std::to_string(data_.train.feature_dim()) +
                      " but test features have width " + std::to_string(data_.test.feature_dim()));
  }
  embedder_.init(params_, derive_seed(seed, 1));
  if (config_.mdr.enabled) add_levels(params_, config_.mdr.levels);
  if (config_.loss.kind == LossKind::kMargin) {
    params_.add(kMarginBetaParam, Tensor::vector({config_.loss.margin_beta}),
                /*weight_decay=*/false);
  }
}

namespace {

std::size_t checkpoint_input_dim(const Checkpoint& ck) {
  const std::string name = MlpEmbedder::weight_name(0);
  if (!ck.params.contains(name)) throw ConfigError("checkpoint lacks parameter " + name);
  return ck.params.get(name).rows();
}

}  // namespace

Trainer::Trainer(const Checkpoint& ck, DatasetSplit data)
    : config_(ExperimentConfig::parse(ck.config_ini)),
      seed_(ck.seed),
      data_(std::move(data)),
      embedder_(embedder_config(config_, checkpoint_input_dim(ck))),
      params_(ck.params),
      adam_(config_.optimizer.adam),
      stats_(ck.stats),
      sampler_(0),
      step_(ck.step) {
  for (const FeatureDataset* split : {&data_.train, &data_.test}) {
    if (split->feature_dim() != embedder_.config().input_dim) {
      throw ConfigError("checkpoint expects input width " +
                        std::to_string(embedder_.config().input_dim) +
                        " but the dataset has width " + std::to_string(split->feature_dim()));
    }
  }
  embedder_.check_params(params_);
  adam_.state() = ck.adam;
  std::istringstream rng_state(ck.sampler_rng_state);
  rng_state >> sampler_.rng();
  if (!rng_state) throw ParseError("checkpoint: bad sampler state");
}

LossComponents Trainer::step() {
  const InputBatch batch = sample_batch(data_.train, config_.batch, sampler_);
  Tape tape;
  const BoundParams bound = params_.bind(tape);
  const Objective objective =
      build_objective(embedder_, bound, tape.constant(batch.features), batch.labels,
                      objective_spec(config_), stats_, true,
                      make_miner(config_.sampler, sampler_));
  const LossComponents loss = objective.components();
  if (!std::isfinite(loss.total)) {
    std::ostringstream diag;
    diag << "non-finite loss at step " << step_ << ": dml=" << loss.dml << " mdr=" << loss.mdr
         << " mu*=" << stats_.mean() << " sigma*=" << stats_.stddev();
    if (objective.mdr_terms.distances.valid()) {
      const Moments m = population_moments(objective.mdr_terms.distances.value().data());
      diag << " batch_distance_mean=" << m.mean << " batch_distance_std=" << m.stddev;
    }
    throw NumericalError(diag.str());
  }
  tape.backward(objective.total);
  adam_.step(params_, bound.gradients());
  ++step_;
  last_loss_ = loss;

  if (config_.mdr.enabled && !warned_level_order_ &&
      !levels_sorted(params_.get(kLevelsParam).data())) {
    spdlog::warn("step {}: learned levels are no longer in ascending order", step_);
    warned_level_order_ = true;
  }
  return loss;
}

SplitMetrics Trainer::evaluate_split(const FeatureDataset& split, std::uint64_t eval_seed,
                                     std::span<const std::size_t> ks,
                                     bool normalized_pass) const {
  SplitMetrics m;
  const Tensor embeddings = embedder_.embed_values(params_, split.features);
  m.recall = recall_at_k(embeddings, split.labels, ks);
  if (normalized_pass) {
    Tape tape;
    const Tensor unit = ops::l2_normalize_rows(tape.constant(embeddings)).value();
    m.recall_normalized = recall_at_k(unit, split.labels, ks);
  }
  m.norms = norm_statistics(embeddings);

  if (split.classes().size() < 2) return m;
  SamplerState state(eval_seed);
  const InputBatch batch = sample_batch(split, eval_batch_spec(config_, split), state);
  Tape tape;
  const BoundParams bound = params_.bind(tape);
  DistanceStats stats = stats_;
  const bool needs_stats = config_.mdr.enabled || config_.loss.trick;
  const Objective objective =
      build_objective(embedder_, bound, tape.constant(batch.features), batch.labels,
                      objective_spec(config_), stats, needs_stats && !stats.initialized(),
                      make_miner(config_.sampler, state));
  m.loss = objective.components();
  if (config_.mdr.enabled) {
    m.level_counts = level_histogram(objective.mdr_terms.normalized.value().data(),
                                     objective.pairs, params_.get(kLevelsParam).data());
  }
  return m;
}

MetricsRecord Trainer::evaluate() const {
  MetricsRecord r;
  r.step = step_;
  if (config_.mdr.enabled) r.levels = params_.get(kLevelsParam).values();
  r.mu_star = stats_.mean();
  r.sigma_star = stats_.stddev();
  r.train = evaluate_split(data_.train, eval_seed(seed_, 0), config_.run.recall_ks,
                           config_.run.eval_normalized);
  r.test = evaluate_split(data_.test, eval_seed(seed_, 1), config_.run.recall_ks,
                          config_.run.eval_normalized);
  r.batch_loss = last_loss_;
  return r;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ck;
  ck.config_ini = config_.to_ini();
  ck.seed = seed_;
  ck.step = step_;
  ck.params = params_;
  ck.adam = adam_.state();
  ck.stats = stats_;
  std::ostringstream rng_state;
  rng_state << sampler_.rng();
  ck.sampler_rng_state = rng_state.str();
  return ck;
}

SummaryStat aggregate(std::span<const double> values) {
  SummaryStat s;
  if (values.empty()) return s;
  double total = 0.0;
  for (double v : values) total += v;
  s.mean = total / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return s;
}

std::map<std::string, double> final_scalars(const MetricsRecord& r) {
  std::map<std::string, double> out;
  for (const auto& [k, v] : r.train.recall) out["train_recall@" + std::to_string(k)] = v;
  for (const auto& [k, v] : r.test.recall) out["test_recall@" + std::to_string(k)] = v;
  if (r.test.recall_normalized) {
    for (const auto& [k, v] : *r.test.recall_normalized) {
      out["test_recall_normalized@" + std::to_string(k)] = v;
    }
  }
  if (r.train.recall.contains(1) && r.test.recall.contains(1)) {
    out["gap"] = r.train.recall.at(1) - r.test.recall.at(1);
  }
  out["train_norm_cv"] = r.train.norms.cv;
  out["test_norm_cv"] = r.test.norms.cv;
  out["test_norm_mean"] = r.test.norms.mean;
  out["test_loss_total"] = r.test.loss.total;
  out["mu_star"] = r.mu_star;
  out["sigma_star"] = r.sigma_star;
  return out;
}

RunResult train_seed(const ExperimentConfig& config, std::uint64_t seed,
                     const DatasetSplit& data, const std::filesystem::path& run_dir) {
  std::filesystem::create_directories(run_dir);
  Trainer trainer(config, seed, data);
  RunResult result;
  result.seed = seed;
  result.metrics_path = run_dir / "metrics.jsonl";
  result.checkpoint_path = run_dir / "checkpoint.bin";

  MetricsWriter writer(result.metrics_path);
  result.final_record = trainer.evaluate();
  writer.write(result.final_record);
  const std::int64_t steps = config.optimizer.steps;
  const std::int64_t interval = config.optimizer.eval_interval;
  for (std::int64_t s = 1; s <= steps; ++s) {
    trainer.step();
    if (s % interval == 0 || s == steps) {
      result.final_record = trainer.evaluate();
      writer.write(result.final_record);
      spdlog::info("{} seed {} step {}: test R@1 {:.4f}, train R@1 {:.4f}", config.run.name,
                   seed, s, result.final_record.test.recall.begin()->second,
                   result.final_record.train.recall.begin()->second);
    }
  }
  save_checkpoint(result.checkpoint_path, trainer.checkpoint());
  return result;
}

RunManifest train(const ExperimentConfig& config, const std::filesystem::path& output_root) {
  config.validate();
  RunManifest manifest;
  manifest.name = config.run.name;
  manifest.config_hash = config.hash();
  manifest.config_ini = config.to_ini();
  manifest.version = std::string(version_string());
  manifest.seeds = config.run.seeds;
  manifest.output_dir = output_root / config.run.name;
  std::filesystem::create_directories(manifest.output_dir);

  const DatasetSplit data = materialize_dataset(config);
  for (std::uint64_t seed : config.run.seeds) {
    try {
      manifest.runs.push_back(
          train_seed(config, seed, data, manifest.output_dir / ("seed-" + std::to_string(seed))));
    } catch (const std::exception& e) {
      spdlog::error("{} seed {} failed: {}", config.run.name, seed, e.what());
      manifest.failures.emplace_back(seed, e.what());
    }
  }

  std::map<std::string, std::vector<double>> columns;
  for (const RunResult& run : manifest.runs) {
    for (const auto& [key, value] : final_scalars(run.final_record)) columns[key].push_back(value);
  }
  for (const auto& [key, values] : columns) manifest.summary[key] = aggregate(values);

  std::ofstream out(manifest.output_dir / "manifest.json", std::ios::trunc);
  out << to_json(manifest).dump(2) << '\n';
  return manifest;
}

nlohmann::json to_json(const RunManifest& m) {
  using nlohmann::json;
  json runs = json::array();
  for (const RunResult& r : m.runs) {
    runs.push_back(json{{"seed", r.seed},
                        {"metrics", r.metrics_path.string()},
                        {"checkpoint", r.checkpoint_path.string()},
                        {"final", final_scalars(r.final_record)}});
  }
  json failures = json::array();
  for (const auto& [seed, error] : m.failures) {
    failures.push_back(json{{"seed", seed}, {"error", error}});
  }
  json summary = json::object();
  for (const auto& [key, stat] : m.summary) {
    summary[key] = json{{"mean", stat.mean}, {"std", stat.stddev}};
  }
  return json{{"schema", "mdrlab.manifest.v1"},
              {"name", m.name},
              {"config_hash", m.config_hash},
              {"version", m.version},
              {"config", m.config_ini},
              {"seeds", m.seeds},
              {"output_dir", m.output_dir.string()},
              {"runs", runs},
              {"failures", failures},
              {"summary", summary}};
}

ExperimentConfig load_config_or_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  const std::string content = text.str();
  const auto first = content.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && content[first] == '{') {
    const auto j = nlohmann::json::parse(content);
    if (!j.contains("config")) throw ConfigError(path.string() + ": manifest has no config");
    return ExperimentConfig::parse(j.at("config").get<std::string>());
  }
  return ExperimentConfig::parse(content);
}

MetricsRecord evaluate_checkpoint(const Checkpoint& checkpoint, const std::string& split,
                                  std::span<const std::size_t> ks, bool normalized_pass) {
  const ExperimentConfig config = ExperimentConfig::parse(checkpoint.config_ini);
  DatasetSplit data;
  int split_id = 2;
  if (split == "train" || split == "test") {
    data = materialize_dataset(config);
    split_id = split == "train" ? 0 : 1;
  } else {
    FeatureDataset external = load_features(split);
    external.validate();
    data = DatasetSplit{external, external};
  }
  const Trainer trainer(checkpoint, std::move(data));
  MetricsRecord r;
  r.step = trainer.step_count();
  if (config.mdr.enabled) r.levels = trainer.params().get(kLevelsParam).values();
  r.mu_star = trainer.stats().mean();
  r.sigma_star = trainer.stats().stddev();
  const FeatureDataset& target = split_id == 0 ? trainer.data().train : trainer.data().test;
  SplitMetrics metrics = trainer.evaluate_split(
      target, Trainer::eval_seed(checkpoint.seed, split_id), ks, normalized_pass);
  if (split_id == 0) {
    r.train = std::move(metrics);
  } else {
    r.test = std::move(metrics);
  }
  return r;
}

}  // namespace mdr
