#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "mdr/numerics/tensor.hpp"
#include "mdr/pairs.hpp"

namespace mdr {

/// N x F feature matrix with one integer label per row.
struct FeatureDataset {
  Tensor features;
  std::vector<Label> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_dim() const { return features.cols(); }

  /// Sorted distinct labels.
  std::vector<Label> classes() const;
  /// Label -> row indices in ascending order.
  std::map<Label, std::vector<std::size_t>> class_index() const;

  FeatureDataset subset(std::span<const std::size_t> rows) const;

  /// Throws ConfigError on shape mismatch or non-finite features.
  void validate() const;

  friend bool operator==(const FeatureDataset&, const FeatureDataset&) = default;
};

struct SyntheticSpec {
  std::size_t classes = 60;
  std::size_t per_class = 60;
  std::size_t feature_dim = 32;
  double cluster_std = 1.0;
  /// Minimum distance between any two class centers.
  double separation = 4.0;
  std::uint64_t seed = 0;
};

/// Isotropic Gaussian clusters around centers drawn uniformly from the unit
/// ball and rescaled so the closest two centers sit `separation` apart.
/// Labels are 0..classes-1.
FeatureDataset generate_synthetic(const SyntheticSpec& spec);

struct SplitSpec {
  /// Used when no explicit class lists are given.
  double train_fraction = 0.5;
  std::vector<Label> train_classes;
  std::vector<Label> test_classes;
  std::uint64_t seed = 0;
};

struct DatasetSplit {
  FeatureDataset train;
  FeatureDataset test;
};

/// Class-level partition: no label appears in both halves.
DatasetSplit split_disjoint(const FeatureDataset& dataset, const SplitSpec& spec);

/// Delimited text: header "label,f1,...,fF" then one row per instance.
FeatureDataset load_features(const std::filesystem::path& path);
void save_features(const std::filesystem::path& path, const FeatureDataset& dataset);

}  // namespace mdr
