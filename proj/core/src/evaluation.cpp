#include "mdr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "mdr/error.hpp"
#include "mdr/mdr.hpp"

namespace mdr {

RecallMap recall_at_k(const Tensor& queries, std::span<const Label> query_labels,
                      const Tensor& gallery, std::span<const Label> gallery_labels,
                      std::span<const std::size_t> ks, bool exclude_self) {
  if (gallery.rows() == 0 || gallery_labels.empty()) {
    throw ConfigError("recall_at_k: empty gallery");
  }
  if (queries.rows() != query_labels.size() || gallery.rows() != gallery_labels.size()) {
    throw ConfigError("recall_at_k: embedding rows and label counts differ");
  }
  if (queries.cols() != gallery.cols()) {
    throw ConfigError("recall_at_k: query dim " + std::to_string(queries.cols()) +
                      " != gallery dim " + std::to_string(gallery.cols()));
  }
  if (exclude_self && queries.rows() != gallery.rows()) {
    throw ConfigError("recall_at_k: self exclusion needs query set == gallery set");
  }
  const std::size_t usable = gallery.rows() - (exclude_self ? 1 : 0);
  if (usable == 0) throw ConfigError("recall_at_k: gallery has no candidates besides self");

  std::size_t k_max = 0;
  for (std::size_t k : ks) {
    if (k == 0) throw ConfigError("recall_at_k: K must be >= 1");
    if (k > usable) {
      spdlog::warn("recall_at_k: K={} exceeds {} usable gallery items, clamping", k, usable);
    }
    k_max = std::max(k_max, std::min(k, usable));
  }

  const std::size_t dim = gallery.cols();
  const std::size_t n_q = queries.rows();
  // first_hit[q] = rank of the nearest same-label item, or usable if none.
  std::vector<std::size_t> first_hit(n_q, usable);
  std::vector<double> dist(gallery.rows());
  std::vector<std::size_t> order;
  for (std::size_t q = 0; q < n_q; ++q) {
    const auto qrow = queries.row(q);
    order.clear();
    for (std::size_t g = 0; g < gallery.rows(); ++g) {
      if (exclude_self && g == q) continue;
      const auto grow = gallery.row(g);
      double sq = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double diff = qrow[k] - grow[k];
        sq += diff * diff;
      }
      dist[g] = sq;
      order.push_back(g);
    }
    auto closer = [&](std::size_t a, std::size_t b) {
      return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k_max),
                      order.end(), closer);
    for (std::size_t r = 0; r < k_max; ++r) {
      if (gallery_labels[order[r]] == query_labels[q]) {
        first_hit[q] = r;
        break;
      }
    }
  }

  RecallMap out;
  for (std::size_t k : ks) {
    const std::size_t effective = std::min(k, usable);
    std::size_t hits = 0;
    for (std::size_t r : first_hit) hits += r < effective ? 1 : 0;
    out[k] = n_q == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(n_q);
  }
  return out;
}

RecallMap recall_at_k(const Tensor& embeddings, std::span<const Label> labels,
                      std::span<const std::size_t> ks) {
  return recall_at_k(embeddings, labels, embeddings, labels, ks, true);
}

NormStats norm_statistics(const Tensor& embeddings) {
  if (embeddings.rows() == 0) throw ConfigError("norm_statistics: no embeddings");
  std::vector<double> norms(embeddings.rows());
  for (std::size_t r = 0; r < embeddings.rows(); ++r) {
    double sq = 0.0;
    for (double v : embeddings.row(r)) sq += v * v;
    norms[r] = std::sqrt(sq);
  }
  const Moments m = population_moments(norms);
  return {m.mean, m.stddev, m.mean > 0.0 ? m.stddev / m.mean : 0.0};
}

std::vector<LevelCount> level_histogram(std::span<const double> normalized,
                                        const PairSet& pairs,
                                        std::span<const double> levels) {
  if (normalized.size() != pairs.size()) {
    throw ConfigError("level_histogram: " + std::to_string(normalized.size()) +
                      " distances for " + std::to_string(pairs.size()) + " pairs");
  }
  std::vector<LevelCount> counts(levels.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    LevelCount& c = counts[assign_level(normalized[i], levels)];
    if (pairs[i].positive) {
      ++c.positive;
    } else {
      ++c.negative;
    }
  }
  return counts;
}

GapSeries generalization_gap(std::span<const MetricsRecord> records) {
  GapSeries series;
  for (const MetricsRecord& r : records) {
    const auto train = r.train.recall.find(1);
    const auto test = r.test.recall.find(1);
    if (train == r.train.recall.end() || test == r.test.recall.end()) {
      throw ConfigError("generalization_gap: record at step " + std::to_string(r.step) +
                        " lacks Recall@1");
    }
    series.steps.push_back(r.step);
    series.gaps.push_back(train->second - test->second);
  }
  return series;
}

bool operator==(const NormStats& a, const NormStats& b) {
  return a.mean == b.mean && a.stddev == b.stddev && a.cv == b.cv;
}

bool operator==(const SplitMetrics& a, const SplitMetrics& b) {
  return a.recall == b.recall && a.recall_normalized == b.recall_normalized &&
         a.norms == b.norms && a.level_counts == b.level_counts && a.loss == b.loss;
}

bool operator==(const MetricsRecord& a, const MetricsRecord& b) {
  return a.step == b.step && a.levels == b.levels && a.mu_star == b.mu_star &&
         a.sigma_star == b.sigma_star && a.train == b.train && a.test == b.test &&
         a.batch_loss == b.batch_loss;
}

}  // namespace mdr
