#include <cmath>

#include <gtest/gtest.h>

#include "mdr/error.hpp"
#include "mdr/numerics/ops.hpp"
#include "mdr/numerics/tape.hpp"
#include "mdr/numerics/tensor.hpp"

namespace mdr {
namespace {

using ops::operator+;
using ops::operator-;
using ops::operator*;

TEST(Tensor, DataLengthMustMatchShape) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5, 0.0)), ConfigError);
  Tensor t({2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
}

TEST(Tensor, ItemNeedsSingleElement) {
  EXPECT_DOUBLE_EQ(Tensor::scalar(4.5).item(), 4.5);
  EXPECT_THROW(Tensor::vector({1, 2}).item(), UsageError);
}

TEST(Tensor, AllFinite) {
  Tensor t = Tensor::vector({1.0, 2.0});
  EXPECT_TRUE(t.all_finite());
  t[1] = std::nan("");
  EXPECT_FALSE(t.all_finite());
}

TEST(Ops, MatmulIdentity) {
  Tape tape;
  Var a = tape.constant(Tensor::matrix({{1, 2}, {3, 4}}));
  Var eye = tape.constant(Tensor::matrix({{1, 0}, {0, 1}}));
  EXPECT_EQ(ops::matmul(a, eye).value(), Tensor::matrix({{1, 2}, {3, 4}}));
}

TEST(Ops, MatmulByHand) {
  Tape tape;
  Var a = tape.constant(Tensor::matrix({{1, 2, 3}}));
  Var b = tape.constant(Tensor::matrix({{1, 0}, {0, 1}, {2, -1}}));
  EXPECT_EQ(ops::matmul(a, b).value(), Tensor::matrix({{7, -1}}));
}

TEST(Ops, HingeOfNegativeIsZero) {
  Tape tape;
  EXPECT_EQ(ops::hinge(tape.constant(Tensor::scalar(-0.2))).value().item(), 0.0);
  EXPECT_EQ(ops::hinge(tape.constant(Tensor::scalar(0.3))).value().item(), 0.3);
}

TEST(Ops, MeanOfOneTwoThree) {
  Tape tape;
  EXPECT_DOUBLE_EQ(ops::mean(tape.constant(Tensor::vector({1, 2, 3}))).value().item(), 2.0);
}

TEST(Ops, ElementwisePrimitives) {
  Tape tape;
  Var a = tape.constant(Tensor::vector({-1.5, 0.0, 4.0}));
  Var b = tape.constant(Tensor::vector({2.0, 3.0, 0.5}));
  EXPECT_EQ((a + b).value(), Tensor::vector({0.5, 3.0, 4.5}));
  EXPECT_EQ((a - b).value(), Tensor::vector({-3.5, -3.0, 3.5}));
  EXPECT_EQ((a * b).value(), Tensor::vector({-3.0, 0.0, 2.0}));
  EXPECT_EQ(ops::relu(a).value(), Tensor::vector({0.0, 0.0, 4.0}));
  EXPECT_EQ(ops::abs(a).value(), Tensor::vector({1.5, 0.0, 4.0}));
  EXPECT_EQ(ops::square(a).value(), Tensor::vector({2.25, 0.0, 16.0}));
  EXPECT_EQ(ops::sqrt(b).value(), Tensor::vector({std::sqrt(2.0), std::sqrt(3.0), std::sqrt(0.5)}));
  EXPECT_EQ(ops::sum(a).value().item(), 2.5);
  EXPECT_EQ(ops::scale(a, 2.0).value(), Tensor::vector({-3.0, 0.0, 8.0}));
  EXPECT_EQ(ops::shift(a, 1.0).value(), Tensor::vector({-0.5, 1.0, 5.0}));
}

TEST(Ops, BroadcastSubtractRowVector) {
  Tape tape;
  Var m = tape.constant(Tensor::matrix({{1, 2}, {3, 4}}));
  Var v = tape.constant(Tensor::vector({1, 1}));
  EXPECT_EQ((m - v).value(), Tensor::matrix({{0, 1}, {2, 3}}));
}

TEST(Ops, RowSumAndGather) {
  Tape tape;
  Var m = tape.constant(Tensor::matrix({{1, 2}, {3, 4}, {5, 6}}));
  EXPECT_EQ(ops::row_sum(m).value(), Tensor::vector({3, 7, 11}));
  const std::vector<std::size_t> idx = {2, 0, 2};
  EXPECT_EQ(ops::gather(m, idx).value(), Tensor::matrix({{5, 6}, {1, 2}, {5, 6}}));
}

TEST(Ops, ShapeMismatchNamesBothShapes) {
  Tape tape;
  Var a = tape.constant(Tensor({2, 3}));
  Var b = tape.constant(Tensor({4, 2}));
  try {
    ops::matmul(a, b);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2, 3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[4, 2]"), std::string::npos) << msg;
  }
  EXPECT_THROW(ops::add(a, b), ConfigError);
  EXPECT_THROW(ops::mul(a, tape.constant(Tensor({3}))), ConfigError);
}

TEST(Ops, L2NormalizeRows) {
  Tape tape;
  Var m = tape.constant(Tensor::matrix({{3, 4}, {0, 0}, {1, 0}}));
  const Tensor out = ops::l2_normalize_rows(m).value();
  EXPECT_NEAR(out(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(out(0, 1), 0.8, 1e-15);
  EXPECT_NEAR(std::hypot(out(1, 0), out(1, 1)), 1.0, 1e-9);
  EXPECT_EQ(out(2, 0), 1.0);
  EXPECT_EQ(out(2, 1), 0.0);
}

}  // namespace
}  // namespace mdr
