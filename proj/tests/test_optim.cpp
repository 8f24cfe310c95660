#include "pcinr/optim.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace pcinr;

namespace {

/// Textbook Adam with decoupled weight decay on one scalar.
struct ScalarAdam {
  double m = 0, v = 0, theta;
  int t = 0;
  double step(double g, double lr, double wd) {
    theta -= lr * wd * theta;
    ++t;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
    theta -= lr * mh / (std::sqrt(vh) + 1e-8);
    return theta;
  }
};

}  // namespace

TEST(Optim, ScheduleDropsEveryQuarter) {
  LearningRateSchedule s;
  s.initial = 1e-3;
  s.totalSteps = 100;
  EXPECT_DOUBLE_EQ(s.rate(0), 1e-3);
  EXPECT_DOUBLE_EQ(s.rate(24), 1e-3);
  EXPECT_DOUBLE_EQ(s.rate(25), 1e-4);
  EXPECT_NEAR(s.rate(50), 1e-5, 1e-20);
  EXPECT_NEAR(s.rate(99), 1e-6, 1e-20);
  EXPECT_NEAR(s.rate(1000), 1e-6, 1e-20);
}

TEST(Optim, MatchesScalarReference) {
  AdamConfig c;
  c.schedule.initial = 0.01;
  c.schedule.totalSteps = 40;
  VectorX<double> theta(2);
  theta << 0.7, -1.3;
  OptimizerState<double> state = OptimizerState<double>::start(c, 2);
  ScalarAdam r0{.theta = 0.7}, r1{.theta = -1.3};
  for (int k = 0; k < 40; ++k) {
    VectorX<double> g(2);
    g << std::sin(k * 0.3), 0.2 * k - 3;
    const double lr = c.schedule.rate(k);
    r0.step(g[0], lr, c.weightDecay);
    r1.step(g[1], lr, c.weightDecay);
    adam_step(theta, g, state);
  }
  EXPECT_NEAR(theta[0], r0.theta, 1e-12);
  EXPECT_NEAR(theta[1], r1.theta, 1e-12);
  EXPECT_EQ(state.step, 40);
}

TEST(Optim, FirstStepFromZeroState) {
  AdamConfig c;
  c.weightDecay = 0;
  c.schedule.initial = 1e-3;
  VectorX<double> theta = VectorX<double>::Zero(1);
  VectorX<double> g = VectorX<double>::Constant(1, 2.5);
  OptimizerState<double> s = OptimizerState<double>::start(c, 1);
  adam_step(theta, g, s);
  // Bias correction makes the first step -lr * g / (|g| + eps).
  EXPECT_NEAR(theta[0], -1e-3 * 2.5 / (2.5 + 1e-8), 1e-15);
}

TEST(Optim, L1Subgradient) {
  VectorX<float> p(4);
  p << -2.f, 0.f, 3.f, 1.f;
  VectorX<float> expected(4);
  expected << -1.f, 0.f, 1.f, 1.f;
  EXPECT_EQ(l1_subgradient<float>(p), expected);
  VectorX<float> ref(4);
  ref << -2.f, 1.f, 3.5f, 0.f;
  expected << 0.f, -1.f, -1.f, 1.f;
  EXPECT_EQ(l1_subgradient<float>(p, ref), expected);
}
