#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "mdr/numerics/tensor.hpp"
#include "mdr/pairs.hpp"

namespace mdr {

using RecallMap = std::map<std::size_t, double>;

/// Fraction of queries whose K nearest gallery items (Euclidean, ties by
/// ascending gallery index) include a same-label item. With exclude_self,
/// query i never matches gallery row i; query and gallery must then be the
/// same set. K above the usable gallery size is clamped with a warning; the
/// map keeps the requested K.
RecallMap recall_at_k(const Tensor& queries, std::span<const Label> query_labels,
                      const Tensor& gallery, std::span<const Label> gallery_labels,
                      std::span<const std::size_t> ks, bool exclude_self);

/// Leave-one-out retrieval within a single set.
RecallMap recall_at_k(const Tensor& embeddings, std::span<const Label> labels,
                      std::span<const std::size_t> ks);

struct NormStats {
  double mean = 0.0;
  double stddev = 0.0;  // population
  /// stddev / mean; 0 when mean is 0.
  double cv = 0.0;
};

NormStats norm_statistics(const Tensor& embeddings);

struct LevelCount {
  std::size_t positive = 0;
  std::size_t negative = 0;

  friend bool operator==(const LevelCount&, const LevelCount&) = default;
};

/// Pairs per assigned level, split by polarity.
std::vector<LevelCount> level_histogram(std::span<const double> normalized,
                                        const PairSet& pairs,
                                        std::span<const double> levels);

struct LossComponents {
  double dml = 0.0;
  double mdr = 0.0;
  double total = 0.0;

  friend bool operator==(const LossComponents&, const LossComponents&) = default;
};

struct SplitMetrics {
  RecallMap recall;
  /// Same protocol after unit-normalizing embeddings, when requested.
  std::optional<RecallMap> recall_normalized;
  NormStats norms;
  std::vector<LevelCount> level_counts;
  LossComponents loss;
};

struct MetricsRecord {
  std::int64_t step = 0;
  std::vector<double> levels;
  double mu_star = 0.0;
  double sigma_star = 0.0;
  SplitMetrics train;
  SplitMetrics test;
  /// Loss on the mini-batch of the step that produced this record.
  LossComponents batch_loss;
};

struct GapSeries {
  std::vector<std::int64_t> steps;
  /// train Recall@1 - test Recall@1
  std::vector<double> gaps;
};

GapSeries generalization_gap(std::span<const MetricsRecord> records);

bool operator==(const NormStats& a, const NormStats& b);
bool operator==(const SplitMetrics& a, const SplitMetrics& b);
bool operator==(const MetricsRecord& a, const MetricsRecord& b);

}  // namespace mdr
