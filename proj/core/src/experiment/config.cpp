#include "mdr/experiment/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mdr/error.hpp"

namespace mdr {
namespace {

namespace pt = boost::property_tree;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ",";
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

class SectionReader {
 public:
  SectionReader(const pt::ptree& root, std::string section,
                std::set<std::string> allowed)
      : section_(std::move(section)), allowed_(std::move(allowed)) {
    if (auto child = root.get_child_optional(section_)) {
      tree_ = *child;
      for (const auto& [key, value] : tree_) {
        if (!allowed_.contains(key)) {
          throw ConfigError("config: unknown key '" + key + "' in [" + section_ + "]");
        }
      }
    }
  }

  template <typename T>
  void read(const std::string& key, T& out) const {
    auto raw = tree_.get_optional<std::string>(key);
    if (!raw) return;
    out = convert<T>(key, trim(*raw));
  }

  template <typename T>
  void read_list(const std::string& key, std::vector<T>& out) const {
    auto raw = tree_.get_optional<std::string>(key);
    if (!raw) return;
    out.clear();
    std::stringstream ss(*raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const std::string t = trim(item);
      if (t.empty()) continue;
      out.push_back(convert<T>(key, t));
    }
  }

 private:
  template <typename T>
  T convert(const std::string& key, const std::string& text) const {
    auto fail = [&]() -> ConfigError {
      return ConfigError("config: [" + section_ + "] " + key + " = '" + text +
                         "' is not a valid value");
    };
    if constexpr (std::is_same_v<T, bool>) {
      if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
      if (text == "false" || text == "0" || text == "no" || text == "off") return false;
      throw fail();
    } else if constexpr (std::is_same_v<T, std::string>) {
      return text;
    } else if constexpr (std::is_same_v<T, std::filesystem::path>) {
      return std::filesystem::path(text);
    } else {
      T value{};
      const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
      if (ec != std::errc() || ptr != text.data() + text.size()) throw fail();
      return value;
    }
  }

  std::string section_;
  std::set<std::string> allowed_;
  pt::ptree tree_;
};

}  // namespace

void ExperimentConfig::validate() const {
  if (dataset.kind == DatasetKind::kFile && dataset.path.empty()) {
    throw ConfigError("config: [dataset] kind = file needs a path");
  }
  if (dataset.kind == DatasetKind::kSynthetic) {
    if (dataset.synthetic.classes < 2 || dataset.synthetic.per_class < 1 ||
        dataset.synthetic.feature_dim < 1) {
      throw ConfigError("config: synthetic dataset needs >= 2 classes, >= 1 instance, >= 1 feature");
    }
    if (dataset.synthetic.cluster_std < 0.0) throw ConfigError("config: cluster_std must be >= 0");
    if (!(dataset.synthetic.separation > 0.0)) throw ConfigError("config: separation must be > 0");
  }
  if (!(dataset.train_fraction > 0.0 && dataset.train_fraction < 1.0)) {
    throw ConfigError("config: train_fraction must lie in (0, 1)");
  }
  if (embedder.embedding_dim == 0) throw ConfigError("config: embedder dim must be >= 1");
  for (std::size_t w : embedder.hidden) {
    if (w == 0) throw ConfigError("config: hidden widths must be >= 1");
  }
  loss.validate();
  if (!mdr.enabled && loss.lambda > 0.0) {
    throw ConfigError("config: loss.lambda > 0 requires mdr.enabled = true");
  }
  if (mdr.levels.empty()) throw ConfigError("config: mdr.levels must not be empty");
  if (!(mdr.gamma >= 0.0 && mdr.gamma < 1.0)) throw ConfigError("config: mdr.gamma must lie in [0, 1)");
  sampler.validate();
  batch.validate();
  Adam probe(optimizer.adam);  // validates the optimizer section
  (void)probe;
  if (optimizer.steps < 0) throw ConfigError("config: optimizer.steps must be >= 0");
  if (optimizer.eval_interval < 1) throw ConfigError("config: optimizer.eval_interval must be >= 1");
  if (run.seeds.empty()) throw ConfigError("config: run.seeds must list at least one seed");
  if (run.recall_ks.empty()) throw ConfigError("config: run.recall_ks must not be empty");
  for (std::size_t k : run.recall_ks) {
    if (k == 0) throw ConfigError("config: recall K must be >= 1");
  }
  if (run.name.empty() || run.name.find('/') != std::string::npos) {
    throw ConfigError("config: run.name must be a non-empty plain name");
  }
}

std::string ExperimentConfig::to_ini() const {
  std::ostringstream out;
  out << "[dataset]\n"
      << "kind = " << (dataset.kind == DatasetKind::kSynthetic ? "synthetic" : "file") << "\n"
      << "path = " << dataset.path.string() << "\n"
      << "classes = " << dataset.synthetic.classes << "\n"
      << "per_class = " << dataset.synthetic.per_class << "\n"
      << "features = " << dataset.synthetic.feature_dim << "\n"
      << "cluster_std = " << format_double(dataset.synthetic.cluster_std) << "\n"
      << "separation = " << format_double(dataset.synthetic.separation) << "\n"
      << "seed = " << dataset.synthetic.seed << "\n"
      << "train_fraction = " << format_double(dataset.train_fraction) << "\n"
      << "split_seed = " << dataset.split_seed << "\n"
      << "\n[embedder]\n"
      << "hidden = " << join(embedder.hidden) << "\n"
      << "dim = " << embedder.embedding_dim << "\n"
      << "\n[loss]\n"
      << "kind = " << to_string(loss.kind) << "\n"
      << "margin = " << format_double(loss.margin) << "\n"
      << "lambda = " << format_double(loss.lambda) << "\n"
      << "trick = " << (loss.trick ? "true" : "false") << "\n"
      << "l2_normalize = " << (loss.l2_normalize ? "true" : "false") << "\n"
      << "margin_beta = " << format_double(loss.margin_beta) << "\n"
      << "\n[mdr]\n"
      << "enabled = " << (mdr.enabled ? "true" : "false") << "\n"
      << "levels = " << join(mdr.levels) << "\n"
      << "gamma = " << format_double(mdr.gamma) << "\n"
      << "\n[sampler]\n"
      << "strategy = " << to_string(sampler.strategy) << "\n"
      << "classes_per_batch = " << batch.classes_per_batch << "\n"
      << "instances_per_class = " << batch.instances_per_class << "\n"
      << "cutoff = " << format_double(sampler.cutoff) << "\n"
      << "clamp = " << format_double(sampler.clamp) << "\n"
      << "\n[optimizer]\n"
      << "learning_rate = " << format_double(optimizer.adam.learning_rate) << "\n"
      << "beta1 = " << format_double(optimizer.adam.beta1) << "\n"
      << "beta2 = " << format_double(optimizer.adam.beta2) << "\n"
      << "epsilon = " << format_double(optimizer.adam.epsilon) << "\n"
      << "weight_decay = " << format_double(optimizer.adam.weight_decay) << "\n"
      << "steps = " << optimizer.steps << "\n"
      << "eval_interval = " << optimizer.eval_interval << "\n"
      << "\n[run]\n"
      << "name = " << run.name << "\n"
      << "seeds = " << join(run.seeds) << "\n"
      << "recall_ks = " << join(run.recall_ks) << "\n"
      << "eval_normalized = " << (run.eval_normalized ? "true" : "false") << "\n";
  return out.str();
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_ini()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
  pt::ptree root;
  try {
    std::istringstream in{std::string(text)};
    pt::ini_parser::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError("config: line " + std::to_string(e.line()) + ": " + e.message());
  }
  static const std::set<std::string> kSections = {"dataset",  "embedder",  "loss", "mdr",
                                                  "sampler",  "optimizer", "run"};
  for (const auto& [key, child] : root) {
    if (!kSections.contains(key)) {
      throw ConfigError("config: unknown section or top-level key '" + key + "'");
    }
  }

  ExperimentConfig c;
  {
    SectionReader r(root, "dataset",
                    {"kind", "path", "classes", "per_class", "features", "cluster_std",
                     "separation", "seed", "train_fraction", "split_seed"});
    std::string kind = "synthetic";
    r.read("kind", kind);
    if (kind == "synthetic") {
      c.dataset.kind = DatasetKind::kSynthetic;
    } else if (kind == "file") {
      c.dataset.kind = DatasetKind::kFile;
    } else {
      throw ConfigError("config: [dataset] kind must be synthetic or file, got '" + kind + "'");
    }
    r.read("path", c.dataset.path);
    r.read("classes", c.dataset.synthetic.classes);
    r.read("per_class", c.dataset.synthetic.per_class);
    r.read("features", c.dataset.synthetic.feature_dim);
    r.read("cluster_std", c.dataset.synthetic.cluster_std);
    r.read("separation", c.dataset.synthetic.separation);
    r.read("seed", c.dataset.synthetic.seed);
    r.read("train_fraction", c.dataset.train_fraction);
    r.read("split_seed", c.dataset.split_seed);
  }
  {
    SectionReader r(root, "embedder", {"hidden", "dim"});
    r.read_list("hidden", c.embedder.hidden);
    r.read("dim", c.embedder.embedding_dim);
  }
  {
    SectionReader r(root, "loss",
                    {"kind", "margin", "lambda", "trick", "l2_normalize", "margin_beta"});
    std::string kind(to_string(c.loss.kind));
    r.read("kind", kind);
    c.loss.kind = parse_loss_kind(kind);
    r.read("margin", c.loss.margin);
    r.read("lambda", c.loss.lambda);
    r.read("trick", c.loss.trick);
    r.read("l2_normalize", c.loss.l2_normalize);
    r.read("margin_beta", c.loss.margin_beta);
  }
  {
    SectionReader r(root, "mdr", {"enabled", "levels", "gamma"});
    r.read("enabled", c.mdr.enabled);
    r.read_list("levels", c.mdr.levels);
    r.read("gamma", c.mdr.gamma);
  }
  {
    SectionReader r(root, "sampler",
                    {"strategy", "classes_per_batch", "instances_per_class", "cutoff", "clamp"});
    std::string strategy(to_string(c.sampler.strategy));
    r.read("strategy", strategy);
    c.sampler.strategy = parse_sampler_strategy(strategy);
    r.read("classes_per_batch", c.batch.classes_per_batch);
    r.read("instances_per_class", c.batch.instances_per_class);
    r.read("cutoff", c.sampler.cutoff);
    r.read("clamp", c.sampler.clamp);
  }
  {
    SectionReader r(root, "optimizer",
                    {"learning_rate", "beta1", "beta2", "epsilon", "weight_decay", "steps",
                     "eval_interval"});
    r.read("learning_rate", c.optimizer.adam.learning_rate);
    r.read("beta1", c.optimizer.adam.beta1);
    r.read("beta2", c.optimizer.adam.beta2);
    r.read("epsilon", c.optimizer.adam.epsilon);
    r.read("weight_decay", c.optimizer.adam.weight_decay);
    r.read("steps", c.optimizer.steps);
    r.read("eval_interval", c.optimizer.eval_interval);
  }
  {
    SectionReader r(root, "run", {"name", "seeds", "recall_ks", "eval_normalized"});
    r.read("name", c.run.name);
    r.read_list("seeds", c.run.seeds);
    r.read_list("recall_ks", c.run.recall_ks);
    r.read("eval_normalized", c.run.eval_normalized);
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str());
}

DatasetSplit materialize_dataset(const ExperimentConfig& config) {
  FeatureDataset full = config.dataset.kind == DatasetKind::kSynthetic
                            ? generate_synthetic(config.dataset.synthetic)
                            : load_features(config.dataset.path);
  full.validate();
  SplitSpec split;
  split.train_fraction = config.dataset.train_fraction;
  split.seed = config.dataset.split_seed;
  return split_disjoint(full, split);
}

EmbedderConfig embedder_config(const ExperimentConfig& config, std::size_t input_dim) {
  return EmbedderConfig{input_dim, config.embedder.hidden, config.embedder.embedding_dim};
}

}  // namespace mdr
