#pragma once

// Brute-force reference implementations used only by tests. They are written
// against raw vectors so they share no code with the library.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "mdr/pairs.hpp"

namespace mdr::oracle {

using Matrix = std::vector<std::vector<double>>;

// Recall@K by fully sorting every query's gallery by (squared distance, index).
std::map<std::size_t, double> recall_full_sort(const Matrix& queries,
                                               std::span<const Label> query_labels,
                                               const Matrix& gallery,
                                               std::span<const Label> gallery_labels,
                                               std::span<const std::size_t> ks,
                                               bool exclude_self);

// Index of the nearest level; ties go to the lowest index. Full scan.
std::size_t nearest_level(double value, std::span<const double> levels);

struct ScalarEma {
  double gamma;
  double mu = 0.0;
  double sigma = 0.0;
  bool started = false;
  void push(std::span<const double> batch);
};

double euclid(std::span<const double> a, std::span<const double> b);

}  // namespace mdr::oracle
