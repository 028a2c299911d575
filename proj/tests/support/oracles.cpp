#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace mdr::oracle {

std::map<std::size_t, double> recall_full_sort(const Matrix& queries,
                                               std::span<const Label> query_labels,
                                               const Matrix& gallery,
                                               std::span<const Label> gallery_labels,
                                               std::span<const std::size_t> ks,
                                               bool exclude_self) {
  std::map<std::size_t, double> hits;
  for (auto k : ks) hits[k] = 0.0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t g = 0; g < gallery.size(); ++g) {
      if (exclude_self && g == q) continue;
      double s = 0.0;
      for (std::size_t c = 0; c < queries[q].size(); ++c) {
        double d = queries[q][c] - gallery[g][c];
        s += d * d;
      }
      ranked.emplace_back(s, g);
    }
    std::sort(ranked.begin(), ranked.end());
    for (auto& [k, count] : hits) {
      std::size_t kk = std::min(k, ranked.size());
      bool hit = false;
      for (std::size_t r = 0; r < kk; ++r)
        if (gallery_labels[ranked[r].second] == query_labels[q]) hit = true;
      if (hit) count += 1.0;
    }
  }
  for (auto& [k, v] : hits) v /= static_cast<double>(queries.size());
  return hits;
}

std::size_t nearest_level(double value, std::span<const double> levels) {
  std::vector<std::pair<double, std::size_t>> gaps;
  for (std::size_t i = 0; i < levels.size(); ++i)
    gaps.emplace_back(std::fabs(value - levels[i]), i);
  return std::min_element(gaps.begin(), gaps.end())->second;
}

void ScalarEma::push(std::span<const double> batch) {
  double n = static_cast<double>(batch.size());
  double m = 0.0;
  for (double x : batch) m += x;
  m /= n;
  double v = 0.0;
  for (double x : batch) v += (x - m) * (x - m);
  double s = std::sqrt(v / n);
  if (!started) {
    mu = m;
    sigma = s;
    started = true;
  } else {
    mu = gamma * mu + (1.0 - gamma) * m;
    sigma = gamma * sigma + (1.0 - gamma) * s;
  }
}

double euclid(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace mdr::oracle
