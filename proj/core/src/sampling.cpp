#include "mdr/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "mdr/error.hpp"

namespace mdr {

void BatchSpec::validate() const {
  if (classes_per_batch < 2 || instances_per_class < 2) {
    throw ConfigError("batch spec needs at least 2 classes and 2 instances per class, got P=" +
                      std::to_string(classes_per_batch) +
                      " K=" + std::to_string(instances_per_class));
  }
}

std::string_view to_string(SamplerStrategy strategy) {
  switch (strategy) {
    case SamplerStrategy::kDistanceWeighted:
      return "distance_weighted";
    case SamplerStrategy::kUniformRandom:
      return "uniform_random";
    case SamplerStrategy::kAllValid:
      return "all_valid";
  }
  return "unknown";
}

SamplerStrategy parse_sampler_strategy(std::string_view text) {
  if (text == "distance_weighted") return SamplerStrategy::kDistanceWeighted;
  if (text == "uniform_random") return SamplerStrategy::kUniformRandom;
  if (text == "all_valid") return SamplerStrategy::kAllValid;
  throw ConfigError("unknown sampler strategy '" + std::string(text) +
                    "' (expected distance_weighted, uniform_random or all_valid)");
}

void SamplerConfig::validate() const {
  if (!(cutoff > 0.0 && cutoff < 2.0)) throw ConfigError("sampler.cutoff must lie in (0, 2)");
  if (!(clamp > 0.0)) throw ConfigError("sampler.clamp must be > 0");
}

InputBatch sample_batch(const FeatureDataset& dataset, const BatchSpec& spec,
                        SamplerState& state) {
  spec.validate();
  const auto index = dataset.class_index();
  if (index.size() < spec.classes_per_batch) {
    throw ConfigError("dataset has " + std::to_string(index.size()) +
                      " classes, batch needs " + std::to_string(spec.classes_per_batch));
  }
  std::vector<Label> classes;
  classes.reserve(index.size());
  for (const auto& [label, rows] : index) classes.push_back(label);

  auto& rng = state.rng();
  // Partial Fisher-Yates for the first P classes.
  for (std::size_t i = 0; i < spec.classes_per_batch; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, classes.size() - 1);
    std::swap(classes[i], classes[pick(rng)]);
  }

  InputBatch batch;
  batch.rows.reserve(spec.batch_size());
  for (std::size_t c = 0; c < spec.classes_per_batch; ++c) {
    std::vector<std::size_t> pool = index.at(classes[c]);
    if (pool.size() >= spec.instances_per_class) {
      for (std::size_t i = 0; i < spec.instances_per_class; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
        batch.rows.push_back(pool[i]);
      }
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      for (std::size_t i = 0; i < spec.instances_per_class; ++i) {
        batch.rows.push_back(pool[pick(rng)]);
      }
    }
  }
  const FeatureDataset picked = dataset.subset(batch.rows);
  batch.features = picked.features;
  batch.labels = picked.labels;
  return batch;
}

PairSet all_pairs(std::span<const Label> labels) {
  PairSet pairs;
  const std::size_t n = labels.size();
  pairs.reserve(n * (n > 0 ? n - 1 : 0) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      pairs.push_back(Pair{i, j, labels[i] == labels[j]});
    }
  }
  return pairs;
}

std::vector<double> inverse_density_weights(std::span<const double> distances,
                                            std::size_t dim, const SamplerConfig& config) {
  constexpr double kUpper = 2.0 - 1e-6;
  const double dim_d = static_cast<double>(dim);
  const double log_clamp = std::log(config.clamp);
  std::vector<double> log_w(distances.size());
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < distances.size(); ++i) {
    const double d = std::clamp(distances[i], config.cutoff, kUpper);
    const double log_q = (dim_d - 2.0) * std::log(d) +
                         0.5 * (dim_d - 3.0) * std::log(1.0 - 0.25 * d * d);
    log_w[i] = std::min(-log_q, log_clamp);
    max_log = std::max(max_log, log_w[i]);
  }
  std::vector<double> weights(distances.size());
  for (std::size_t i = 0; i < distances.size(); ++i) {
    weights[i] = std::exp(log_w[i] - max_log);
  }
  return weights;
}

namespace {

Tensor unit_rows(const Tensor& embeddings) {
  Tensor out = embeddings;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double sq = 0.0;
    for (double v : row) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm > 1e-12) {
      for (double& v : row) v /= norm;
    }
  }
  return out;
}

double row_distance(const Tensor& m, std::size_t a, std::size_t b) {
  double sq = 0.0;
  const auto ra = m.row(a);
  const auto rb = m.row(b);
  for (std::size_t k = 0; k < ra.size(); ++k) sq += (ra[k] - rb[k]) * (ra[k] - rb[k]);
  return std::sqrt(sq);
}

template <typename PickNegative>
TripletSet per_anchor_positive(std::span<const Label> labels, SamplerState& state,
                               PickNegative pick) {
  TripletSet triplets;
  const std::size_t n = labels.size();
  std::vector<std::size_t> negatives;
  for (std::size_t a = 0; a < n; ++a) {
    negatives.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (labels[j] != labels[a]) negatives.push_back(j);
    }
    for (std::size_t p = 0; p < n; ++p) {
      if (p == a || labels[p] != labels[a]) continue;
      if (negatives.empty()) {
        state.note_skipped();
        continue;
      }
      triplets.push_back(Triplet{a, p, pick(a, negatives)});
    }
  }
  return triplets;
}

}  // namespace

TripletSet distance_weighted_triplets(const Tensor& embeddings,
                                      std::span<const Label> labels,
                                      const SamplerConfig& config, SamplerState& state) {
  if (embeddings.rows() != labels.size()) {
    throw ConfigError("distance_weighted_triplets: " + std::to_string(embeddings.rows()) +
                      " embeddings but " + std::to_string(labels.size()) + " labels");
  }
  const Tensor unit = unit_rows(embeddings);
  const std::size_t dim = embeddings.cols();
  std::vector<double> dist;
  return per_anchor_positive(labels, state, [&](std::size_t a, const std::vector<std::size_t>& negatives) {
    if (negatives.size() == 1) return negatives.front();
    dist.resize(negatives.size());
    for (std::size_t k = 0; k < negatives.size(); ++k) dist[k] = row_distance(unit, a, negatives[k]);
    const std::vector<double> weights = inverse_density_weights(dist, dim, config);
    std::discrete_distribution<std::size_t> draw(weights.begin(), weights.end());
    return negatives[draw(state.rng())];
  });
}

TripletSet uniform_triplets(std::span<const Label> labels, SamplerState& state) {
  return per_anchor_positive(labels, state, [&](std::size_t, const std::vector<std::size_t>& negatives) {
    std::uniform_int_distribution<std::size_t> draw(0, negatives.size() - 1);
    return negatives[draw(state.rng())];
  });
}

TripletSet all_valid_triplets(std::span<const Label> labels) {
  TripletSet triplets;
  const std::size_t n = labels.size();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t p = 0; p < n; ++p) {
      if (p == a || labels[p] != labels[a]) continue;
      for (std::size_t q = 0; q < n; ++q) {
        if (labels[q] != labels[a]) triplets.push_back(Triplet{a, p, q});
      }
    }
  }
  return triplets;
}

TripletSet mine_triplets(const Tensor& embeddings, std::span<const Label> labels,
                         const SamplerConfig& config, SamplerState& state) {
  switch (config.strategy) {
    case SamplerStrategy::kDistanceWeighted:
      return distance_weighted_triplets(embeddings, labels, config, state);
    case SamplerStrategy::kUniformRandom:
      return uniform_triplets(labels, state);
    case SamplerStrategy::kAllValid:
      return all_valid_triplets(labels);
  }
  throw UsageError("unhandled sampler strategy");
}

PairSet pairs_from_triplets(const TripletSet& triplets, std::span<const Label> labels) {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  PairSet pairs;
  auto push = [&](std::size_t x, std::size_t y) {
    const std::size_t i = std::min(x, y);
    const std::size_t j = std::max(x, y);
    if (seen.insert({i, j}).second) pairs.push_back(Pair{i, j, labels[i] == labels[j]});
  };
  for (const Triplet& t : triplets) {
    push(t.anchor, t.positive);
    push(t.anchor, t.negative);
  }
  return pairs;
}

}  // namespace mdr
