#include "mdr/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "mdr/error.hpp"

namespace mdr {

std::vector<Label> FeatureDataset::classes() const {
  std::set<Label> unique(labels.begin(), labels.end());
  return {unique.begin(), unique.end()};
}

std::map<Label, std::vector<std::size_t>> FeatureDataset::class_index() const {
  std::map<Label, std::vector<std::size_t>> index;
  for (std::size_t i = 0; i < labels.size(); ++i) index[labels[i]].push_back(i);
  return index;
}

FeatureDataset FeatureDataset::subset(std::span<const std::size_t> rows) const {
  const std::size_t f = feature_dim();
  FeatureDataset out;
  out.features = Tensor(Shape{rows.size(), f});
  out.labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = features.row(rows[r]);
    std::copy(src.begin(), src.end(), out.features.row(r).begin());
    out.labels.push_back(labels[rows[r]]);
  }
  return out;
}

void FeatureDataset::validate() const {
  if (features.rank() != 2) {
    throw ConfigError("dataset features must be a matrix, got " +
                      shape_string(features.shape()));
  }
  if (features.rows() != labels.size()) {
    throw ConfigError("dataset has " + std::to_string(features.rows()) + " rows but " +
                      std::to_string(labels.size()) + " labels");
  }
  if (!features.all_finite()) throw ConfigError("dataset contains non-finite features");
}

FeatureDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.classes == 0 || spec.per_class == 0 || spec.feature_dim == 0) {
    throw ConfigError("synthetic dataset: classes, per_class and feature_dim must be >= 1");
  }
  if (spec.cluster_std < 0.0) throw ConfigError("synthetic dataset: cluster_std must be >= 0");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const std::size_t f = spec.feature_dim;

  Tensor centers(Shape{spec.classes, f});
  for (std::size_t c = 0; c < spec.classes; ++c) {
    auto row = centers.row(c);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& x : row) {
        x = normal(rng);
        norm += x * x;
      }
      norm = std::sqrt(norm);
    } while (norm == 0.0);
    const double radius = std::pow(uniform(rng), 1.0 / static_cast<double>(f));
    for (double& x : row) x *= radius / norm;
  }
  if (spec.classes > 1) {
    double closest = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < spec.classes; ++a) {
      for (std::size_t b = a + 1; b < spec.classes; ++b) {
        double sq = 0.0;
        for (std::size_t k = 0; k < f; ++k) {
          const double diff = centers(a, k) - centers(b, k);
          sq += diff * diff;
        }
        closest = std::min(closest, std::sqrt(sq));
      }
    }
    if (closest > 0.0) {
      const double factor = spec.separation / closest;
      for (double& x : centers.data()) x *= factor;
    }
  }

  FeatureDataset out;
  out.features = Tensor(Shape{spec.classes * spec.per_class, f});
  out.labels.reserve(spec.classes * spec.per_class);
  std::size_t row = 0;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    for (std::size_t i = 0; i < spec.per_class; ++i, ++row) {
      for (std::size_t k = 0; k < f; ++k) {
        out.features(row, k) = centers(c, k) + spec.cluster_std * normal(rng);
      }
      out.labels.push_back(static_cast<Label>(c));
    }
  }
  return out;
}

DatasetSplit split_disjoint(const FeatureDataset& dataset, const SplitSpec& spec) {
  const std::vector<Label> classes = dataset.classes();
  if (classes.size() < 2) {
    throw ConfigError("split_disjoint needs at least 2 classes, dataset has " +
                      std::to_string(classes.size()));
  }
  std::set<Label> train;
  std::set<Label> test;
  if (!spec.train_classes.empty() || !spec.test_classes.empty()) {
    train.insert(spec.train_classes.begin(), spec.train_classes.end());
    test.insert(spec.test_classes.begin(), spec.test_classes.end());
    for (Label l : train) {
      if (test.contains(l)) {
        throw ConfigError("class " + std::to_string(l) + " listed in both train and test");
      }
    }
    if (test.empty()) {
      for (Label l : classes) {
        if (!train.contains(l)) test.insert(l);
      }
    }
  } else {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
      throw ConfigError("split train_fraction must lie in (0, 1)");
    }
    std::vector<Label> shuffled = classes;
    std::mt19937_64 rng(spec.seed);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    auto n_train = static_cast<std::size_t>(
        std::llround(spec.train_fraction * static_cast<double>(classes.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, classes.size() - 1);
    train.insert(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_train));
    test.insert(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train), shuffled.end());
  }
  if (train.empty() || test.empty()) throw ConfigError("split leaves an empty side");

  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (train.contains(dataset.labels[i])) {
      train_rows.push_back(i);
    } else if (test.contains(dataset.labels[i])) {
      test_rows.push_back(i);
    }
  }
  return {dataset.subset(train_rows), dataset.subset(test_rows)};
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view field = line.substr(start, comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
      field.remove_suffix(1);
    }
    fields.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line_no, const std::string& path) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": '" + std::string(field) +
                     "' is not a number");
  }
  return value;
}

}  // namespace

FeatureDataset load_features(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file " + path.string());
  const std::string name = path.string();

  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto header = split_fields(line);
    if (header.empty() || header[0] != "label" || header.size() < 2) {
      throw ParseError(name + ":" + std::to_string(line_no) +
                       ": header must be 'label,f1,...,fF'");
    }
    width = header.size() - 1;
    break;
  }
  if (width == 0) throw ParseError(name + ": missing header");

  std::vector<double> values;
  std::vector<Label> labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line);
    if (fields.size() != width + 1) {
      throw ParseError(name + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(width + 1) + " fields, got " +
                       std::to_string(fields.size()));
    }
    labels.push_back(parse_number<Label>(fields[0], line_no, name));
    for (std::size_t k = 1; k < fields.size(); ++k) {
      const double v = parse_number<double>(fields[k], line_no, name);
      if (!std::isfinite(v)) {
        throw ParseError(name + ":" + std::to_string(line_no) + ": non-finite value");
      }
      values.push_back(v);
    }
  }
  FeatureDataset out;
  out.features = Tensor(Shape{labels.size(), width}, std::move(values));
  out.labels = std::move(labels);
  return out;
}

void save_features(const std::filesystem::path& path, const FeatureDataset& dataset) {
  dataset.validate();
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write dataset file " + path.string());
  out << "label";
  for (std::size_t k = 0; k < dataset.feature_dim(); ++k) out << ",f" << (k + 1);
  out << '\n';
  char buf[64];
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    out << dataset.labels[r];
    for (double v : dataset.features.row(r)) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), v);
      out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

}  // namespace mdr
