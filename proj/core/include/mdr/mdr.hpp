#pragma once

#include <span>
#include <string>
#include <vector>

#include "mdr/numerics/params.hpp"
#include "mdr/pairs.hpp"

namespace mdr {

/// Added under the square root of every Euclidean distance.
inline constexpr double kDistanceEpsilon = 1e-12;
/// Lower bound for the running standard deviation.
inline constexpr double kSigmaFloor = 1e-6;

inline const std::string kLevelsParam = "mdr.levels";

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

Moments population_moments(std::span<const double> values);

/// Momentum-averaged mean and std of pairwise distances:
///   mu*_t = gamma * mu*_{t-1} + (1 - gamma) * mu_batch   (sigma* likewise)
/// The first update copies the batch statistics.
class DistanceStats {
 public:
  explicit DistanceStats(double gamma = 0.9);

  /// No-op with a warning when fewer than two distances are given.
  void update(std::span<const double> distances);

  double gamma() const { return gamma_; }
  double mean() const { return mean_; }
  double stddev() const { return stddev_; }
  bool initialized() const { return initialized_; }

  static DistanceStats restore(double gamma, double mean, double stddev,
                               bool initialized);

  friend bool operator==(const DistanceStats&, const DistanceStats&) = default;

 private:
  double gamma_;
  double mean_ = 0.0;
  double stddev_ = 1.0;
  bool initialized_ = false;
};

/// Learnable levels live in the ParamStore under kLevelsParam, excluded
/// from weight decay.
void add_levels(ParamStore& params, std::vector<double> initial);

bool levels_sorted(std::span<const double> levels);

/// ||e_i - e_j||, computed as sqrt(sum of squares + kDistanceEpsilon).
Var pair_distances(Var embeddings, std::span<const std::size_t> first,
                   std::span<const std::size_t> second);
Var pairwise_distances(Var embeddings, const PairSet& pairs);

/// (d - mu*) / sigma*, with mu* and sigma* held constant.
Var normalize_distances(Var distances, const DistanceStats& stats);

/// Index of the level nearest to the normalized distance. Ties go to the
/// lowest index.
std::size_t assign_level(double normalized, std::span<const double> levels);
std::vector<std::size_t> assign_levels(std::span<const double> normalized,
                                       std::span<const double> levels);

/// mean over pairs of |d_norm - s_assigned|. The assignment is recomputed
/// from current values and treated as a constant selection; gradients reach
/// both the distances and the assigned levels.
Var mdr_loss(Var normalized, Var levels);

struct MdrTerms {
  Var distances;
  Var normalized;
  Var loss;
  std::vector<std::size_t> assignment;
};

/// Distances -> normalization -> assignment -> loss, against fixed stats.
/// The caller decides when the stats see the batch.
MdrTerms mdr_regularizer(Var embeddings, const PairSet& pairs, Var levels,
                         const DistanceStats& stats);

}  // namespace mdr
