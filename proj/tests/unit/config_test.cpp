#include <filesystem>

#include <gtest/gtest.h>

#include "mdr/error.hpp"
#include "mdr/experiment/config.hpp"

namespace mdr {
namespace {

namespace fs = std::filesystem;

TEST(Config, DefaultsAreValidAndMatchDefaultRegime) {
  const ExperimentConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.dataset.synthetic.classes, 60u);
  EXPECT_EQ(c.dataset.synthetic.per_class, 60u);
  EXPECT_EQ(c.dataset.synthetic.feature_dim, 32u);
  EXPECT_EQ(c.embedder.embedding_dim, 64u);
  EXPECT_EQ(c.batch.batch_size(), 32u);
  EXPECT_EQ(c.optimizer.steps, 2000);
  EXPECT_EQ(c.mdr.gamma, 0.9);
  EXPECT_EQ(c.mdr.levels, (std::vector<double>{-3, 0, 3}));
  EXPECT_EQ(c.loss.margin, 0.2);
  EXPECT_EQ(c.optimizer.adam.weight_decay, 1e-5);
  EXPECT_EQ(c.run.seeds.size(), 5u);
}

TEST(Config, ShippedDefaultFileEqualsBuiltInDefaults) {
  ExperimentConfig file = ExperimentConfig::load(fs::path(MDRLAB_CONFIG_DIR) / "triplet_mdr.ini");
  ExperimentConfig defaults;
  defaults.run.name = file.run.name;
  EXPECT_EQ(file.to_ini(), defaults.to_ini());
}

TEST(Config, EveryShippedConfigParses) {
  std::size_t count = 0;
  for (const auto& entry : fs::recursive_directory_iterator(MDRLAB_CONFIG_DIR)) {
    if (entry.path().extension() != ".ini") continue;
    EXPECT_NO_THROW(ExperimentConfig::load(entry.path())) << entry.path();
    ++count;
  }
  EXPECT_GE(count, 10u);
}

TEST(Config, IniRoundTrip) {
  ExperimentConfig c;
  c.loss.kind = LossKind::kMargin;
  c.loss.lambda = 0.6;
  c.mdr.levels = {-1.5, 0.25, 2};
  c.run.seeds = {3, 9};
  c.optimizer.adam.learning_rate = 5e-5;
  c.dataset.synthetic.cluster_std = 0.1 + 0.2;  // not exactly representable in short form
  const ExperimentConfig back = ExperimentConfig::parse(c.to_ini());
  EXPECT_EQ(back.to_ini(), c.to_ini());
  EXPECT_EQ(back.hash(), c.hash());
  EXPECT_EQ(back.dataset.synthetic.cluster_std, c.dataset.synthetic.cluster_std);
}

TEST(Config, HashChangesWithContent) {
  ExperimentConfig a, b;
  b.loss.lambda = 0.1;
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
}

TEST(Config, UnknownKeyRejected) {
  EXPECT_THROW(ExperimentConfig::parse("[loss]\nlamda = 0.2\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("[network]\ndim = 4\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("stray = 1\n"), ConfigError);
}

TEST(Config, BadValuesRejected) {
  EXPECT_THROW(ExperimentConfig::parse("[loss]\nlambda = abc\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("[loss]\nkind = arcface\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("[mdr]\ngamma = 1\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("[loss]\ntrick = maybe\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("[sampler]\nclasses_per_batch = 1\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("[dataset]\nkind = file\n"), ConfigError);
}

TEST(Config, EmptySeedListRejected) {
  EXPECT_THROW(ExperimentConfig::parse("[run]\nseeds =\n"), ConfigError);
}

TEST(Config, LambdaNeedsMdr) {
  EXPECT_THROW(ExperimentConfig::parse("[mdr]\nenabled = false\n"), ConfigError);
  EXPECT_NO_THROW(ExperimentConfig::parse("[mdr]\nenabled = false\n[loss]\nlambda = 0\ntrick = false\n"));
}

TEST(Config, MalformedIniIsParseError) {
  EXPECT_THROW(ExperimentConfig::parse("[loss\nlambda = 1\n"), ParseError);
}

TEST(Config, MissingFile) {
  EXPECT_THROW(ExperimentConfig::load("/nonexistent/config.ini"), ConfigError);
}

TEST(Config, MaterializeDefaultRegime) {
  const DatasetSplit s = materialize_dataset(ExperimentConfig{});
  EXPECT_EQ(s.train.classes().size(), 30u);
  EXPECT_EQ(s.test.classes().size(), 30u);
  EXPECT_EQ(s.train.size(), 1800u);
  EXPECT_EQ(s.train.feature_dim(), 32u);
}

}  // namespace
}  // namespace mdr
