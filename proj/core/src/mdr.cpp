#include "mdr/mdr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <spdlog/spdlog.h>

#include "mdr/error.hpp"
#include "mdr/numerics/ops.hpp"

namespace mdr {

Moments population_moments(std::span<const double> values) {
  if (values.empty()) return {};
  const double n = static_cast<double>(values.size());
  double total = 0.0;
  for (double v : values) total += v;
  const double mean = total / n;
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / n)};
}

DistanceStats::DistanceStats(double gamma) : gamma_(gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ConfigError("distance stats: momentum must lie in [0, 1), got " +
                      std::to_string(gamma));
  }
}

void DistanceStats::update(std::span<const double> distances) {
  if (distances.size() < 2) {
    spdlog::warn("distance stats: {} distance(s) in batch, statistics left unchanged",
                 distances.size());
    return;
  }
  const Moments batch = population_moments(distances);
  if (!initialized_) {
    mean_ = batch.mean;
    stddev_ = batch.stddev;
    initialized_ = true;
  } else {
    mean_ = gamma_ * mean_ + (1.0 - gamma_) * batch.mean;
    stddev_ = gamma_ * stddev_ + (1.0 - gamma_) * batch.stddev;
  }
  stddev_ = std::max(stddev_, kSigmaFloor);
}

DistanceStats DistanceStats::restore(double gamma, double mean, double stddev,
                                     bool initialized) {
  DistanceStats stats(gamma);
  stats.mean_ = mean;
  stats.stddev_ = stddev;
  stats.initialized_ = initialized;
  return stats;
}

void add_levels(ParamStore& params, std::vector<double> initial) {
  if (initial.empty()) throw ConfigError("mdr: at least one level is required");
  std::sort(initial.begin(), initial.end());
  params.add(kLevelsParam, Tensor::vector(std::move(initial)), /*weight_decay=*/false);
}

bool levels_sorted(std::span<const double> levels) {
  return std::is_sorted(levels.begin(), levels.end());
}

Var pair_distances(Var embeddings, std::span<const std::size_t> first,
                   std::span<const std::size_t> second) {
  if (first.size() != second.size()) {
    throw UsageError("pair_distances: index lists differ in length");
  }
  const Var diff = ops::sub(ops::gather(embeddings, first), ops::gather(embeddings, second));
  return ops::sqrt(ops::row_sum(ops::square(diff)), kDistanceEpsilon);
}

Var pairwise_distances(Var embeddings, const PairSet& pairs) {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
  first.reserve(pairs.size());
  second.reserve(pairs.size());
  for (const Pair& p : pairs) {
    first.push_back(p.i);
    second.push_back(p.j);
  }
  return pair_distances(embeddings, first, second);
}

Var normalize_distances(Var distances, const DistanceStats& stats) {
  if (!stats.initialized()) throw UsageError("normalize_distances: stats not initialized");
  return ops::scale(ops::shift(distances, -stats.mean()), 1.0 / stats.stddev());
}

std::size_t assign_level(double normalized, std::span<const double> levels) {
  if (levels.empty()) throw UsageError("assign_level: empty level set");
  std::size_t best = 0;
  double best_gap = std::abs(normalized - levels[0]);
  for (std::size_t k = 1; k < levels.size(); ++k) {
    const double gap = std::abs(normalized - levels[k]);
    if (gap < best_gap) {
      best = k;
      best_gap = gap;
    }
  }
  return best;
}

std::vector<std::size_t> assign_levels(std::span<const double> normalized,
                                       std::span<const double> levels) {
  std::vector<std::size_t> out(normalized.size());
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    out[i] = assign_level(normalized[i], levels);
  }
  return out;
}

namespace {

// Half the gap between the nearest and second-nearest level: how far the
// distance can move before its assignment flips.
double assignment_margin(double normalized, std::span<const double> levels,
                         std::size_t assigned) {
  const double own = std::abs(normalized - levels[assigned]);
  double runner_up = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (k != assigned) runner_up = std::min(runner_up, std::abs(normalized - levels[k]));
  }
  return (runner_up - own) / 2.0;
}

}  // namespace

Var mdr_loss(Var normalized, Var levels) {
  const Tensor& d = normalized.value();
  const Tensor& s = levels.value();
  if (d.rank() != 1 || s.rank() != 1) {
    throw ConfigError("mdr_loss: expected vectors, got " + shape_string(d.shape()) +
                      " and " + shape_string(s.shape()));
  }
  const std::vector<std::size_t> assignment = assign_levels(d.data(), s.data());
  Tape& tape = normalized.tape();
  if (s.size() > 1) {
    for (std::size_t i = 0; i < d.size(); ++i) {
      tape.note_kink(assignment_margin(d[i], s.data(), assignment[i]));
    }
  }
  const Var targets = ops::gather(levels, assignment);
  return ops::mean(ops::abs(ops::sub(normalized, targets)));
}

MdrTerms mdr_regularizer(Var embeddings, const PairSet& pairs, Var levels,
                         const DistanceStats& stats) {
  if (pairs.empty()) throw ConfigError("mdr: empty pair set");
  MdrTerms terms;
  terms.distances = pairwise_distances(embeddings, pairs);
  terms.normalized = normalize_distances(terms.distances, stats);
  terms.assignment = assign_levels(terms.normalized.value().data(), levels.value().data());
  terms.loss = mdr_loss(terms.normalized, levels);
  return terms;
}

}  // namespace mdr
