#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "op_cases.hpp"
#include "tempgen/error.hpp"
#include "tempgen/tensor.hpp"

using namespace tempgen;
using check::gradcheck;
using check::gradcheck_second_order;
using check::Inputs;
using check::Op;
using check::OpCase;
using check::random_tensor;
using check::signed_tensor;

namespace {

class OpGradient : public ::testing::TestWithParam<OpCase> {};

TEST_P(OpGradient, MatchesCentralDifferencesOnThreeShapes) {
  const OpCase& c = GetParam();
  for (int v = 0; v < 3; ++v) {
    std::mt19937_64 rng(100 + v);
    Inputs xs = c.inputs(rng, v);
    // Integer-valued helper scalars (e.g. stride) are not differentiated.
    Inputs diff;
    const Op op = check::differentiable_part(c, xs, diff);
    const auto f = check::probe(op, diff, rng);
    EXPECT_LT(gradcheck(f, diff), 1e-4) << c.name << " variant " << v;
  }
}

TEST_P(OpGradient, SecondOrderMatchesCentralDifferences) {
  const OpCase& c = GetParam();
  for (int v = 0; v < 3; ++v) {
    std::mt19937_64 rng(200 + v);
    Inputs xs = c.inputs(rng, v);
    Inputs diff;
    const Op op = check::differentiable_part(c, xs, diff);
    for (auto& t : diff) t.set_requires_grad(true);
    const auto f = check::probe(op, diff, rng);
    EXPECT_LT(gradcheck_second_order(f, diff, rng), 1e-4) << c.name << " variant " << v;
  }
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::ValuesIn(check::op_cases()),
                         [](const auto& info) { return info.param.name; });

TEST(TensorForward, ShapesFollowConvolutionArithmetic) {
  EXPECT_EQ(conv_transpose1d(Tensor::zeros({2, 1, 100}), Tensor::zeros({1, 10, 3})).shape(), (Shape{2, 10, 102}));
  EXPECT_EQ(conv2d(Tensor::zeros({2, 1, 28, 28}), Tensor::zeros({2, 1, 5, 5})).shape(), (Shape{2, 2, 24, 24}));
  EXPECT_EQ(conv1d(Tensor::zeros({2, 112, 112}), Tensor::zeros({28, 112, 1}), 4).shape(), (Shape{2, 28, 28}));
}

TEST(TensorForward, ActivationValues) {
  EXPECT_EQ(relu(Tensor::scalar(-1.0)).item(), 0.0);
  EXPECT_DOUBLE_EQ(leaky_relu(Tensor::scalar(-1.0), 0.2).item(), -0.2);
  EXPECT_EQ(leaky_relu(Tensor::scalar(3.0), 0.2).item(), 3.0);
}

TEST(TensorForward, KinkTakesPositiveSlope) {
  Tensor x = Tensor::scalar(0.0);
  x.set_requires_grad(true);
  EXPECT_EQ(grad(leaky_relu(x, 0.2), {x})[0].item(), 1.0);
  EXPECT_EQ(grad(relu(x), {x})[0].item(), 1.0);
}

TEST(TensorForward, ShapeMismatchNamesOpAndShapes) {
  try {
    add(Tensor::zeros({2, 3}), Tensor::zeros({3, 2}));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("add"), std::string::npos);
    EXPECT_NE(msg.find("(2, 3)"), std::string::npos);
    EXPECT_NE(msg.find("(3, 2)"), std::string::npos);
  }
  EXPECT_THROW(conv2d(Tensor::zeros({1, 2, 4, 4}), Tensor::zeros({1, 3, 3, 3})), ShapeError);
  EXPECT_THROW(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), ShapeError);
}

TEST(TensorBackward, LinearCaseGivesInputBroadcast) {
  std::mt19937_64 rng(1);
  Tensor w = random_tensor({3, 4}, rng);
  w.set_requires_grad(true);
  const Tensor x = Tensor::from({4, 1}, {1.0, -2.0, 0.5, 3.0});
  sum(matmul(w, x)).backward();
  const auto g = w.grad().data();
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(g[i * 4 + j], x[j]);
  }
}

TEST(TensorBackward, SecondCallThrows) {
  Tensor w = Tensor::from({2}, {1.0, 2.0});
  w.set_requires_grad(true);
  const Tensor loss = sum(square(w));
  loss.backward();
  EXPECT_THROW(loss.backward(), Error);
}

TEST(TensorBackward, DisconnectedInputGetsZeroGradient) {
  Tensor a = Tensor::from({2}, {1.0, 2.0});
  Tensor b = Tensor::from({3}, {1.0, 2.0, 3.0});
  a.set_requires_grad(true);
  b.set_requires_grad(true);
  const auto g = grad(sum(square(a)), {a, b});
  for (double v : g[1].data()) EXPECT_EQ(v, 0.0);
  sum(square(a)).backward();
  EXPECT_FALSE(b.grad().defined());
}

TEST(TensorBackward, UntrackedInputIsAnError) {
  const Tensor a = Tensor::from({2}, {1.0, 2.0});
  EXPECT_THROW(grad(sum(a), {a}), Error);
}

TEST(TensorBackward, AccumulatesAcrossCalls) {
  Tensor w = Tensor::from({2}, {1.0, 2.0});
  w.set_requires_grad(true);
  sum(scale(w, 3.0)).backward();
  sum(scale(w, 3.0)).backward();
  EXPECT_EQ(w.grad()[0], 6.0);
  w.zero_grad();
  EXPECT_FALSE(w.grad().defined());
}

TEST(InputGradient, LinearCriticGradientIsWeight) {
  std::mt19937_64 rng(3);
  const Tensor w = random_tensor({1, 6}, rng);
  Tensor x = random_tensor({1, 6}, rng);
  x.set_requires_grad(true);
  const auto g = grad(sum(matmul(x, w, false, true)), {x})[0];
  for (std::size_t i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(g[i], w[i]);
}

TEST(InputGradient, TanhCriticMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  const Tensor w = random_tensor({1, 6}, rng);
  const Tensor x = random_tensor({1, 6}, rng);
  const check::ScalarFn d = [w](const Inputs& in) { return sum(tempgen::tanh(matmul(in[0], w, false, true))); };
  EXPECT_LT(gradcheck(d, {x}), 1e-4);
}

TEST(InputGradient, PenaltyGradientOfLinearCriticMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  const Tensor w = random_tensor({1, 5}, rng);
  const Tensor x = random_tensor({3, 5}, rng);
  const check::ScalarFn gp = [x](const Inputs& in) {
    Tensor xh = x.detach();
    xh.set_requires_grad(true);
    const Tensor g = grad(sum(matmul(xh, in[0], false, true)), {xh}, true)[0];
    return mean(square(add_scalar(row_norm(g), -1.0)));
  };
  EXPECT_LT(gradcheck(gp, {w}), 1e-4);
  // Closed form: the penalty is (||w|| - 1)^2 and its gradient 2 (||w|| - 1) w / ||w||.
  Tensor wt = w.detach();
  wt.set_requires_grad(true);
  const Tensor gw = grad(gp({wt}), {wt})[0];
  double norm = 0.0;
  for (double v : w.data()) norm += v * v;
  norm = std::sqrt(norm);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(gw[i], 2.0 * (norm - 1.0) * w[i] / norm, 1e-12);
}

TEST(InputGradient, DoubleBackwardThroughTwoLayerCritic) {
  std::mt19937_64 rng(6);
  const Tensor x = random_tensor({2, 1, 5, 5}, rng);
  const Tensor c1 = random_tensor({3, 1, 3, 3}, rng);
  const Tensor b1 = random_tensor({3}, rng);
  const Tensor w2 = random_tensor({1, 27}, rng);
  const Tensor b2 = random_tensor({1}, rng);
  const check::ScalarFn penalty = [x](const Inputs& p) {
    Tensor xh = x.detach();
    xh.set_requires_grad(true);
    const Tensor h = leaky_relu(add_channel(conv2d(xh, p[0]), p[1]), 0.2);
    const Tensor score = dense(flatten(h), p[2], p[3]);
    const Tensor g = grad(sum(score), {xh}, true)[0];
    return sum(row_norm(g));
  };
  EXPECT_LT(gradcheck(penalty, {c1, b1, w2, b2}), 1e-4);
}

TEST(RowNorm, ZeroRowHasZeroSubgradient) {
  Tensor x = Tensor::zeros({2, 3});
  x.mutable_data()[3] = 2.0;
  x.set_requires_grad(true);
  const Tensor g = grad(sum(row_norm(x)), {x})[0];
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(g[i], 0.0);
  EXPECT_EQ(g[3], 1.0);
}

TEST(BatchNorm, TrainModeNormalisesEachChannel) {
  std::mt19937_64 rng(8);
  const Tensor x = random_tensor({16, 3, 4, 4}, rng, 2.0, 7.0);
  BatchNormState st{Tensor::zeros({3}), Tensor::full({3}, 1.0)};
  const Tensor y = batch_norm(x, Tensor::full({3}, 1.0), Tensor::zeros({3}), st, true);
  for (std::size_t c = 0; c < 3; ++c) {
    double m = 0.0, ss = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < 16; ++i) {
      for (std::size_t k = 0; k < 16; ++k, ++n) m += y[(i * 3 + c) * 16 + k];
    }
    m /= static_cast<double>(n);
    for (std::size_t i = 0; i < 16; ++i) {
      for (std::size_t k = 0; k < 16; ++k) ss += std::pow(y[(i * 3 + c) * 16 + k] - m, 2);
    }
    EXPECT_LT(std::abs(m), 1e-5);
    EXPECT_NEAR(ss / static_cast<double>(n), 1.0, 1e-4);
  }
}

TEST(BatchNorm, RunningStatisticsUseMomentumAndUnbiasedVariance) {
  const Tensor x = Tensor::from({4, 1}, {1.0, 2.0, 3.0, 6.0});
  BatchNormState st{Tensor::zeros({1}), Tensor::full({1}, 1.0)};
  batch_norm(x, Tensor::full({1}, 1.0), Tensor::zeros({1}), st, true);
  // batch mean 3, unbiased variance 14/3
  EXPECT_NEAR(st.running_mean[0], 0.1 * 3.0, 1e-15);
  EXPECT_NEAR(st.running_var[0], 0.9 + 0.1 * 14.0 / 3.0, 1e-15);
  const Tensor y = batch_norm(x, Tensor::full({1}, 1.0), Tensor::zeros({1}), st, false);
  EXPECT_NEAR(y[0], (1.0 - st.running_mean[0]) / std::sqrt(st.running_var[0] + 1e-5), 1e-12);
}

TEST(GradMode, NoGradGuardDisablesHistory) {
  Tensor w = Tensor::from({2}, {1.0, 2.0});
  w.set_requires_grad(true);
  NoGradGuard guard;
  EXPECT_FALSE(square(w).requires_grad());
}

TEST(Determinism, IdenticalInputsGiveIdenticalBits) {
  std::mt19937_64 a(9), b(9);
  const Tensor x1 = random_tensor({2, 3, 6, 6}, a), w1 = random_tensor({4, 3, 3, 3}, a);
  const Tensor x2 = random_tensor({2, 3, 6, 6}, b), w2 = random_tensor({4, 3, 3, 3}, b);
  const Tensor y1 = conv2d(x1, w1), y2 = conv2d(x2, w2);
  ASSERT_EQ(y1.numel(), y2.numel());
  for (std::size_t i = 0; i < y1.numel(); ++i) EXPECT_EQ(y1[i], y2[i]);
}

}  // namespace
