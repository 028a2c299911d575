// mdr_lab: train, evaluate, inspect and compare MDR experiments.
//
//   mdr_lab train <config.ini | manifest.json>
//   mdr_lab evaluate <checkpoint> <train | test | features.csv>
//   mdr_lab matrix <config-dir>
//   mdr_lab inspect <checkpoint>
//
// Outputs go under $MDRLAB_OUTPUT_ROOT (default ./runs).

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "mdr/error.hpp"
#include "mdr/evaluation.hpp"
#include "mdr/experiment/checkpoint.hpp"
#include "mdr/experiment/config.hpp"
#include "mdr/experiment/matrix.hpp"
#include "mdr/experiment/metrics.hpp"
#include "mdr/experiment/trainer.hpp"
#include "mdr/version.hpp"

namespace {

std::filesystem::path output_root() {
  if (const char* env = std::getenv("MDRLAB_OUTPUT_ROOT"); env != nullptr && *env != '\0') {
    return env;
  }
  return "runs";
}

int cmd_train(const std::string& config_path) {
  const mdr::ExperimentConfig config = mdr::load_config_or_manifest(config_path);
  const mdr::RunManifest manifest = mdr::train(config, output_root());
  std::cout << "run " << manifest.name << " (config " << manifest.config_hash << ")\n"
            << "manifest: " << (manifest.output_dir / "manifest.json").string() << "\n";
  for (const auto& [key, stat] : manifest.summary) {
    std::cout << "  " << key << ": " << stat.mean << " +- " << stat.stddev << "\n";
  }
  for (const auto& [seed, error] : manifest.failures) {
    std::cout << "  seed " << seed << " FAILED: " << error << "\n";
  }
  return manifest.failures.empty() ? 0 : 2;
}

int cmd_evaluate(const std::string& checkpoint_path, const std::string& split,
                 std::vector<std::size_t> ks, bool normalized) {
  const mdr::Checkpoint ck = mdr::load_checkpoint(checkpoint_path);
  if (ks.empty()) ks = mdr::ExperimentConfig::parse(ck.config_ini).run.recall_ks;
  const mdr::MetricsRecord record = mdr::evaluate_checkpoint(ck, split, ks, normalized);
  const mdr::SplitMetrics& m = split == "train" ? record.train : record.test;
  nlohmann::json out{{"schema", mdr::kMetricsSchema},
                     {"step", record.step},
                     {"split", split},
                     {"levels", record.levels},
                     {"mu_star", record.mu_star},
                     {"sigma_star", record.sigma_star},
                     {"metrics", mdr::to_json(m)}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_matrix(const std::string& dir) {
  const mdr::MatrixReport report = mdr::run_matrix_dir(dir, output_root());
  std::cout << report.to_text();
  const bool any_failed = std::any_of(report.rows.begin(), report.rows.end(),
                                      [](const mdr::MatrixRow& r) { return r.runs_failed > 0 || !r.complete(); });
  return any_failed ? 2 : 0;
}

int cmd_inspect(const std::string& checkpoint_path) {
  const mdr::Checkpoint ck = mdr::load_checkpoint(checkpoint_path);
  const mdr::ExperimentConfig config = mdr::ExperimentConfig::parse(ck.config_ini);
  std::cout << "checkpoint: " << checkpoint_path << "\n"
            << "run: " << config.run.name << " seed " << ck.seed << " step " << ck.step
            << " (config " << config.hash() << ")\n";
  if (ck.params.contains(mdr::kLevelsParam)) {
    std::cout << "levels:";
    for (double v : ck.params.get(mdr::kLevelsParam).data()) std::cout << " " << v;
    std::cout << "\n";
  } else {
    std::cout << "levels: (mdr disabled)\n";
  }
  if (ck.params.contains(mdr::kMarginBetaParam)) {
    std::cout << "margin beta: " << ck.params.get(mdr::kMarginBetaParam)[0] << "\n";
  }
  std::cout << "mu*: " << ck.stats.mean() << "  sigma*: " << ck.stats.stddev()
            << "  gamma: " << ck.stats.gamma()
            << (ck.stats.initialized() ? "" : "  (uninitialized)") << "\n";

  const mdr::DatasetSplit data = mdr::materialize_dataset(config);
  const mdr::Trainer trainer(ck, data);
  for (const auto& [name, split] : {std::pair{"train", &data.train}, std::pair{"test", &data.test}}) {
    const mdr::Tensor e = trainer.embedder().embed_values(trainer.params(), split->features);
    const mdr::NormStats s = mdr::norm_statistics(e);
    std::cout << name << " embedding norms: mean " << s.mean << "  std " << s.stddev
              << "  cv " << s.cv << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-level distance regularization lab"};
  app.set_version_flag("--version", std::string(mdr::version_string()));
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  std::string config_path;
  auto* train = app.add_subcommand("train", "Train every seed of a config");
  train->add_option("config", config_path, "INI config or manifest.json")->required();

  std::string checkpoint_path;
  std::string split;
  std::vector<std::size_t> ks;
  bool normalized = false;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint on a split");
  evaluate->add_option("checkpoint", checkpoint_path)->required();
  evaluate->add_option("split", split, "train, test, or a features file")->required();
  evaluate->add_option("--ks", ks, "Recall@K cutoffs (default: from the run config)")->delimiter(',');
  evaluate->add_flag("--normalized", normalized, "Also report Recall@K on unit-normalized embeddings");

  std::string config_dir;
  auto* matrix = app.add_subcommand("matrix", "Run every config in a directory and compare");
  matrix->add_option("config-dir", config_dir)->required();

  auto* inspect = app.add_subcommand("inspect", "Print levels, running stats and norm stats");
  inspect->add_option("checkpoint", checkpoint_path)->required();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*train) return cmd_train(config_path);
    if (*evaluate) return cmd_evaluate(checkpoint_path, split, ks, normalized);
    if (*matrix) return cmd_matrix(config_dir);
    if (*inspect) return cmd_inspect(checkpoint_path);
  } catch (const mdr::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
