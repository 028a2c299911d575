#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mdr/error.hpp"
#include "mdr/numerics/adam.hpp"

namespace mdr {
namespace {

TEST(Adam, ZeroGradientZeroDecayLeavesParameter) {
  ParamStore params;
  params.add("w", Tensor::vector({1.0, -2.0}));
  Adam adam({.weight_decay = 0.0});
  adam.step(params, {{"w", Tensor::vector({0.0, 0.0})}});
  EXPECT_EQ(params.get("w"), Tensor::vector({1.0, -2.0}));
}

TEST(Adam, SignStepWithZeroBetas) {
  ParamStore params;
  params.add("w", Tensor::scalar(0.7));
  Adam adam({.learning_rate = 0.1, .beta1 = 0.0, .beta2 = 0.0, .weight_decay = 0.0});
  adam.step(params, {{"w", Tensor::scalar(1.0)}});
  EXPECT_NEAR(params.get("w").item(), 0.7 - 0.1, 1e-8);
}

TEST(Adam, WeightDecayShrinksParameterWithoutGradient) {
  ParamStore params;
  params.add("w", Tensor::scalar(1.0));
  Adam adam({.weight_decay = 1e-5});
  adam.step(params, {{"w", Tensor::scalar(0.0)}});
  EXPECT_LT(params.get("w").item(), 1.0);
}

TEST(Adam, ExcludedParameterIsNotDecayed) {
  ParamStore params;
  params.add("levels", Tensor::vector({-3.0, 0.0, 3.0}), /*weight_decay=*/false);
  Adam adam({.weight_decay = 0.5});
  adam.step(params, {{"levels", Tensor::vector({0.0, 0.0, 0.0})}});
  EXPECT_EQ(params.get("levels"), Tensor::vector({-3.0, 0.0, 3.0}));
}

TEST(Adam, MissingGradientTreatedAsZero) {
  ParamStore params;
  params.add("w", Tensor::scalar(2.0));
  params.add("u", Tensor::scalar(2.0));
  Adam adam({.weight_decay = 0.0});
  adam.step(params, {{"u", Tensor::scalar(1.0)}});
  adam.step(params, {{"u", Tensor::scalar(1.0)}});
  EXPECT_EQ(params.get("w").item(), 2.0);
  EXPECT_LT(params.get("u").item(), 2.0);
}

TEST(Adam, StepCounterAndMomentShapes) {
  ParamStore params;
  params.add("w", Tensor({2, 3}, 1.0));
  Adam adam;
  for (int i = 1; i <= 3; ++i) {
    adam.step(params, {{"w", Tensor({2, 3}, 0.5)}});
    EXPECT_EQ(adam.state().step, i);
  }
  EXPECT_EQ(adam.state().first_moment.at("w").shape(), (Shape{2, 3}));
  EXPECT_EQ(adam.state().second_moment.at("w").shape(), (Shape{2, 3}));
}

TEST(Adam, GradientShapeMismatchRejected) {
  ParamStore params;
  params.add("w", Tensor({2}));
  Adam adam;
  EXPECT_THROW(adam.step(params, {{"w", Tensor({3})}}), ConfigError);
}

TEST(Adam, MatchesScalarReference) {
  const double lr = 0.01, b1 = 0.8, b2 = 0.95, eps = 1e-8, wd = 0.01;
  ParamStore params;
  params.add("w", Tensor::scalar(0.3));
  Adam adam({.learning_rate = lr, .beta1 = b1, .beta2 = b2, .epsilon = eps, .weight_decay = wd});

  double w = 0.3, m = 0.0, v = 0.0;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 1; t <= 50; ++t) {
    const double g = n(rng);
    adam.step(params, {{"w", Tensor::scalar(g)}});
    const double geff = g + wd * w;
    m = b1 * m + (1 - b1) * geff;
    v = b2 * v + (1 - b2) * geff * geff;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    w -= lr * mh / (std::sqrt(vh) + eps);
    EXPECT_NEAR(params.get("w").item(), w, 1e-14) << "step " << t;
  }
}

TEST(Adam, InvalidConfigRejected) {
  EXPECT_THROW(Adam({.learning_rate = 0.0}), ConfigError);
  EXPECT_THROW(Adam({.beta1 = 1.0}), ConfigError);
  EXPECT_THROW(Adam({.weight_decay = -1.0}), ConfigError);
}

}  // namespace
}  // namespace mdr
