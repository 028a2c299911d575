#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "mdr/data.hpp"
#include "mdr/pairs.hpp"

namespace mdr {

/// P classes x K instances per mini-batch.
struct BatchSpec {
  std::size_t classes_per_batch = 8;
  std::size_t instances_per_class = 4;

  std::size_t batch_size() const { return classes_per_batch * instances_per_class; }
  void validate() const;
};

enum class SamplerStrategy { kDistanceWeighted, kUniformRandom, kAllValid };

std::string_view to_string(SamplerStrategy strategy);
SamplerStrategy parse_sampler_strategy(std::string_view text);

struct SamplerConfig {
  SamplerStrategy strategy = SamplerStrategy::kDistanceWeighted;
  /// Unit-sphere distances are clipped below at this value before weighting.
  double cutoff = 0.5;
  /// Upper bound on the inverse-density weight 1 / q(d).
  double clamp = 1e4;

  void validate() const;
};

class SamplerState {
 public:
  explicit SamplerState(std::uint64_t seed) : rng_(seed) {}

  std::mt19937_64& rng() { return rng_; }
  const std::mt19937_64& rng() const { return rng_; }
  /// Anchors dropped because no valid negative existed.
  std::size_t skipped_anchors() const { return skipped_; }
  void note_skipped() { ++skipped_; }

 private:
  std::mt19937_64 rng_;
  std::size_t skipped_ = 0;
};

struct InputBatch {
  Tensor features;
  std::vector<Label> labels;
  /// Source rows in the dataset.
  std::vector<std::size_t> rows;
};

/// Exactly K rows from each of P distinct classes. Classes with fewer than K
/// instances are sampled with replacement.
InputBatch sample_batch(const FeatureDataset& dataset, const BatchSpec& spec,
                        SamplerState& state);

/// Every unordered pair i < j, flagged positive when labels match.
PairSet all_pairs(std::span<const Label> labels);

/// Relative sampling weights min(clamp, 1 / q(d)) for candidate negatives at
/// unit-sphere distances d, where
///   q(d) ~ d^(dim - 2) * (1 - d^2 / 4)^((dim - 3) / 2)
/// and d is first clipped to [cutoff, 2). Normalized so the largest is 1.
std::vector<double> inverse_density_weights(std::span<const double> distances,
                                            std::size_t dim, const SamplerConfig& config);

/// One negative per ordered anchor-positive pair, drawn by inverse density
/// of distances between unit-normalized copies of the embeddings.
TripletSet distance_weighted_triplets(const Tensor& embeddings,
                                      std::span<const Label> labels,
                                      const SamplerConfig& config, SamplerState& state);

/// One uniformly drawn negative per ordered anchor-positive pair.
TripletSet uniform_triplets(std::span<const Label> labels, SamplerState& state);

/// Every valid (a, p, n).
TripletSet all_valid_triplets(std::span<const Label> labels);

TripletSet mine_triplets(const Tensor& embeddings, std::span<const Label> labels,
                         const SamplerConfig& config, SamplerState& state);

/// The distinct unordered (a, p) and (a, n) pairs used by the triplets.
PairSet pairs_from_triplets(const TripletSet& triplets, std::span<const Label> labels);

}  // namespace mdr
