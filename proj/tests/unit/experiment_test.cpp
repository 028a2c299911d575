#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "mdr/error.hpp"
#include "mdr/experiment/checkpoint.hpp"
#include "mdr/experiment/config.hpp"
#include "mdr/experiment/matrix.hpp"
#include "mdr/experiment/metrics.hpp"
#include "mdr/experiment/trainer.hpp"

namespace mdr {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mdrlab_experiment_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig tiny(std::string name) {
  ExperimentConfig c;
  c.dataset.synthetic = {.classes = 8, .per_class = 12, .feature_dim = 6, .cluster_std = 1.0,
                         .separation = 3.0, .seed = 2};
  c.embedder.hidden = {16};
  c.embedder.embedding_dim = 4;
  c.batch = {.classes_per_batch = 3, .instances_per_class = 3};
  c.optimizer.steps = 20;
  c.optimizer.eval_interval = 7;
  c.run.name = std::move(name);
  c.run.seeds = {0, 1};
  c.run.recall_ks = {1, 2};
  return c;
}

TEST(Trainer, SameSeedSameParameters) {
  const ExperimentConfig c = tiny("det");
  const DatasetSplit data = materialize_dataset(c);
  Trainer a(c, 5, data), b(c, 5, data);
  for (int i = 0; i < 15; ++i) {
    EXPECT_EQ(a.step(), b.step());
  }
  EXPECT_EQ(a.params(), b.params());
  Trainer other(c, 6, data);
  other.step();
  EXPECT_FALSE(other.params() == a.params());
}

TEST(Trainer, LevelsAndBetaExcludedFromDecay) {
  ExperimentConfig c = tiny("decay");
  c.loss.kind = LossKind::kMargin;
  const Trainer t(c, 0, materialize_dataset(c));
  EXPECT_FALSE(t.params().parameter(kLevelsParam).weight_decay);
  EXPECT_FALSE(t.params().parameter(kMarginBetaParam).weight_decay);
  EXPECT_EQ(t.params().get(kMarginBetaParam)[0], 1.2);
}

TEST(Trainer, LossComponentsAddUp) {
  const ExperimentConfig c = tiny("components");
  Trainer t(c, 0, materialize_dataset(c));
  for (int i = 0; i < 5; ++i) {
    const LossComponents l = t.step();
    EXPECT_NEAR(l.total, l.dml + c.loss.lambda * l.mdr, 1e-12);
  }
}

TEST(Trainer, NonFiniteLossAbortsWithDiagnostics) {
  ExperimentConfig c = tiny("nan");
  c.sampler.strategy = SamplerStrategy::kUniformRandom;
  DatasetSplit data = materialize_dataset(c);
  for (double& v : data.train.features.data()) v *= 1e300;
  Trainer t(c, 0, data);
  try {
    t.step();
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("non-finite"), std::string::npos) << msg;
    EXPECT_NE(msg.find("mu*"), std::string::npos) << msg;
  }
}

TEST(Trainer, MismatchedSplitWidthsRejected) {
  const ExperimentConfig c = tiny("width");
  DatasetSplit data = materialize_dataset(c);
  data.test.features = Tensor({data.test.size(), 3});
  EXPECT_THROW(Trainer(c, 0, data), ConfigError);
}

TEST(Checkpoint, BitExactRoundTrip) {
  const ExperimentConfig c = tiny("ckpt");
  Trainer t(c, 3, materialize_dataset(c));
  for (int i = 0; i < 9; ++i) t.step();
  const fs::path dir = scratch("ckpt");
  const Checkpoint ck = t.checkpoint();
  save_checkpoint(dir / "a.bin", ck);
  const Checkpoint back = load_checkpoint(dir / "a.bin");
  EXPECT_EQ(back, ck);
  save_checkpoint(dir / "b.bin", back);
  EXPECT_EQ(slurp(dir / "a.bin"), slurp(dir / "b.bin"));
}

TEST(Checkpoint, ResumeContinuesIdentically) {
  const ExperimentConfig c = tiny("resume");
  const DatasetSplit data = materialize_dataset(c);
  Trainer straight(c, 4, data);
  for (int i = 0; i < 6; ++i) straight.step();
  const fs::path dir = scratch("resume");
  save_checkpoint(dir / "mid.bin", straight.checkpoint());
  Trainer resumed(load_checkpoint(dir / "mid.bin"), data);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(straight.step(), resumed.step());
  EXPECT_EQ(straight.params(), resumed.params());
  EXPECT_EQ(straight.stats(), resumed.stats());
}

TEST(Checkpoint, CorruptFileRejected) {
  const fs::path dir = scratch("corrupt");
  std::ofstream(dir / "bad.bin") << "not a checkpoint";
  EXPECT_THROW(load_checkpoint(dir / "bad.bin"), ParseError);
  EXPECT_THROW(load_checkpoint(dir / "missing.bin"), ParseError);

  const ExperimentConfig c = tiny("trunc");
  Trainer t(c, 0, materialize_dataset(c));
  save_checkpoint(dir / "full.bin", t.checkpoint());
  const std::string bytes = slurp(dir / "full.bin");
  std::ofstream(dir / "short.bin", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  EXPECT_THROW(load_checkpoint(dir / "short.bin"), ParseError);
}

TEST(Metrics, JsonRoundTrip) {
  const ExperimentConfig c = tiny("json");
  Trainer t(c, 0, materialize_dataset(c));
  t.step();
  const MetricsRecord r = t.evaluate();
  EXPECT_EQ(metrics_record_from_json(to_json(r)), r);
  EXPECT_EQ(to_json(r).at("schema"), kMetricsSchema);
}

TEST(Train, RecordsAtIntervalsAndFinalStep) {
  const fs::path root = scratch("intervals");
  const RunManifest m = train(tiny("intervals"), root);
  ASSERT_EQ(m.runs.size(), 2u);
  const auto records = read_metrics(m.runs[0].metrics_path);
  std::vector<std::int64_t> steps;
  for (const auto& r : records) steps.push_back(r.step);
  EXPECT_EQ(steps, (std::vector<std::int64_t>{0, 7, 14, 20}));
  EXPECT_EQ(generalization_gap(records).gaps.size(), records.size());
  for (const auto& r : records) {
    EXPECT_LE(r.test.recall.at(1), r.test.recall.at(2));
    std::size_t total = 0;
    for (const LevelCount& lc : r.test.level_counts) total += lc.positive + lc.negative;
    EXPECT_GT(total, 0u);
  }
}

TEST(Train, ZeroStepsGivesInitialRecordOnly) {
  ExperimentConfig c = tiny("zero");
  c.optimizer.steps = 0;
  c.run.seeds = {0};
  const RunManifest m = train(c, scratch("zero"));
  const auto records = read_metrics(m.runs.at(0).metrics_path);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].step, 0);
}

TEST(Train, SameSeedIdenticalMetricsFiles) {
  const ExperimentConfig c = tiny("bitwise");
  const RunManifest a = train(c, scratch("bitwise_a"));
  const RunManifest b = train(c, scratch("bitwise_b"));
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    EXPECT_EQ(slurp(a.runs[i].metrics_path), slurp(b.runs[i].metrics_path));
  }
}

TEST(Train, ManifestRerunReproducesMetrics) {
  const fs::path root = scratch("rerun");
  const RunManifest first = train(tiny("rerun"), root / "first");
  const ExperimentConfig again =
      load_config_or_manifest(first.output_dir / "manifest.json");
  EXPECT_EQ(again.hash(), first.config_hash);
  const RunManifest second = train(again, root / "second");
  EXPECT_EQ(slurp(first.runs[1].metrics_path), slurp(second.runs[1].metrics_path));
}

TEST(Train, ManifestSummaryIsMeanAndSampleStd) {
  ExperimentConfig c = tiny("summary");
  c.run.seeds = {0, 1, 2};
  const RunManifest m = train(c, scratch("summary"));
  const auto j = nlohmann::json::parse(slurp(m.output_dir / "manifest.json"));
  ASSERT_EQ(j.at("runs").size(), 3u);
  for (const auto& [key, stat] : j.at("summary").items()) {
    std::vector<double> v;
    for (const auto& run : j.at("runs")) v.push_back(run.at("final").at(key).get<double>());
    const double mean = (v[0] + v[1] + v[2]) / 3.0;
    double sq = 0.0;
    for (double x : v) sq += (x - mean) * (x - mean);
    EXPECT_EQ(stat.at("mean").get<double>(), mean) << key;
    EXPECT_EQ(stat.at("std").get<double>(), std::sqrt(sq / 2.0)) << key;
  }
  EXPECT_EQ(j.at("config_hash"), c.hash());
  EXPECT_FALSE(j.at("version").get<std::string>().empty());
}

TEST(Evaluate, CheckpointEqualsFinalLoggedRecord) {
  ExperimentConfig c = tiny("evaluate");
  c.run.eval_normalized = true;
  c.run.seeds = {1};
  const RunManifest m = train(c, scratch("evaluate"));
  const MetricsRecord final_record = read_metrics(m.runs[0].metrics_path).back();
  const Checkpoint ck = load_checkpoint(m.runs[0].checkpoint_path);
  const MetricsRecord test = evaluate_checkpoint(ck, "test", c.run.recall_ks, true);
  const MetricsRecord train = evaluate_checkpoint(ck, "train", c.run.recall_ks, true);
  EXPECT_EQ(test.test, final_record.test);
  EXPECT_EQ(train.train, final_record.train);
  EXPECT_EQ(test.levels, final_record.levels);
  EXPECT_EQ(test.mu_star, final_record.mu_star);
  ASSERT_TRUE(test.test.recall_normalized.has_value());
  EXPECT_EQ(test.test.recall_normalized->size(), test.test.recall.size());
}

TEST(Evaluate, ExternalFileWidthMismatchNamesWidths) {
  const ExperimentConfig c = tiny("extern");
  const fs::path dir = scratch("extern");
  Trainer t(c, 0, materialize_dataset(c));
  save_checkpoint(dir / "ck.bin", t.checkpoint());
  std::ofstream(dir / "narrow.csv") << "label,f1,f2\n0,1,2\n0,1,3\n1,4,4\n1,5,5\n";
  const std::vector<std::size_t> ks = {1};
  try {
    evaluate_checkpoint(load_checkpoint(dir / "ck.bin"), (dir / "narrow.csv").string(), ks, false);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('6'), std::string::npos) << msg;
    EXPECT_NE(msg.find('2'), std::string::npos) << msg;
  }
}

TEST(Train, MemorizingModelHasPositiveGap) {
  ExperimentConfig c = tiny("memorize");
  c.dataset.synthetic = {.classes = 16, .per_class = 10, .feature_dim = 16, .cluster_std = 1.5,
                         .separation = 2.0, .seed = 4};
  c.embedder.hidden = {64, 64};
  c.embedder.embedding_dim = 16;
  c.batch = {.classes_per_batch = 4, .instances_per_class = 4};
  c.optimizer.steps = 400;
  c.optimizer.eval_interval = 400;
  c.optimizer.adam.learning_rate = 3e-3;
  c.run.seeds = {0};
  c.mdr.enabled = false;
  c.loss.lambda = 0.0;
  c.loss.trick = false;
  const RunManifest m = train(c, scratch("memorize"));
  EXPECT_GT(m.summary.at("gap").mean, 0.0);
  EXPECT_GT(m.summary.at("train_recall@1").mean, 0.9);
}

TEST(Matrix, CountsRunsAndContinuesPastFailures) {
  ExperimentConfig on = tiny("mdr_on");
  ExperimentConfig off = tiny("mdr_off");
  off.mdr.enabled = false;
  off.loss.lambda = 0.0;
  off.loss.trick = false;
  ExperimentConfig broken = tiny("broken");
  broken.dataset.kind = DatasetKind::kFile;
  broken.dataset.path = "/nonexistent/features.csv";
  const fs::path root = scratch("matrix");
  const MatrixReport report =
      run_matrix({{"mdr_on", on}, {"mdr_off", off}, {"broken", broken}}, root);
  ASSERT_EQ(report.rows.size(), 3u);
  EXPECT_EQ(report.rows[0].runs_ok, 2u);
  EXPECT_EQ(report.rows[1].runs_ok, 2u);
  EXPECT_TRUE(report.rows[0].complete());
  EXPECT_FALSE(report.rows[2].complete());
  EXPECT_FALSE(report.rows[2].errors.empty());
  const std::string csv = report.to_csv();
  EXPECT_NE(csv.find("mdr_on"), std::string::npos);
  EXPECT_NE(report.to_text().find("mdr_off"), std::string::npos);
}

TEST(Matrix, DirectoryWithBadFile) {
  const fs::path dir = scratch("matrix_dir_configs");
  std::ofstream(dir / "a.ini") << tiny("a").to_ini();
  std::ofstream(dir / "z.ini") << "[loss]\nkind = nope\n";
  const fs::path root = scratch("matrix_dir_runs");
  const MatrixReport report = run_matrix_dir(dir, root);
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_TRUE(report.rows[0].complete());
  EXPECT_FALSE(report.rows[1].complete());
  EXPECT_TRUE(fs::exists(root / dir.filename() / "report.csv"));
  EXPECT_TRUE(fs::exists(root / dir.filename() / "report.txt"));
}

}  // namespace
}  // namespace mdr
