#include "fixtures.hpp"
#include "pcinr/network.hpp"
#include "pcinr/trainer.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace pcinr;
using pcinr::testing::tiny_arch;

namespace {

Eigen::Index expected_count(const NetworkArch& a) {
  const Eigen::Index e = a.encoded_width(), w = a.interBlockWidth, h = a.intraBlockWidth;
  Eigen::Index n = e * w + w;
  for (int b = 0; b < a.residualBlocks; ++b) {
    n += w * h + h + h * w + w;
    if (a.layerNormEnabled) n += 2 * h + 2 * w;
  }
  return n + w * a.outputDim + a.outputDim;
}

MatrixX<double> random_inputs(const NetworkArch& arch, int n, std::uint64_t seed) {
  CounterRng rng(seed, 9);
  Eigen::MatrixXd coords(arch.inputDim, n);
  for (Eigen::Index i = 0; i < coords.size(); ++i) coords.data()[i] = 2 * rng.uniform() - 1;
  return positional_encode_batch<double>(coords, encoding_levels(arch));
}

/// Central differences of sum(weights .* outputs) against backward().
double max_relative_error(const NetworkArch& arch, std::uint64_t seed, int samples) {
  CounterRng rng(seed, 1);
  NetworkParams<double> p = initialize_network(arch, rng).cast<double>();
  // Perturb norm gains/shifts away from 1/0 so their gradients are generic.
  for (Eigen::Index i = 0; i < p.values.size(); ++i) p.values[i] += 0.05 * (rng.uniform() - 0.5);
  const MatrixX<double> x = random_inputs(arch, 7, seed);
  MatrixX<double> w(arch.outputDim, x.cols());
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform() - 0.5;

  ForwardTape<double> tape;
  forward(p, x, tape);
  const VectorX<double> grad = backward(p, tape, w);
  auto objective = [&](const NetworkParams<double>& q) { return (forward(q, x).array() * w.array()).sum(); };

  double worst = 0;
  const double h = 1e-6;
  for (int s = 0; s < samples; ++s) {
    const auto i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(p.values.size())));
    NetworkParams<double> plus = p, minus = p;
    plus.values[i] += h;
    minus.values[i] -= h;
    const double numeric = (objective(plus) - objective(minus)) / (2 * h);
    const double scale = std::max({std::abs(numeric), std::abs(grad[i]), 1e-4});
    worst = std::max(worst, std::abs(numeric - grad[i]) / scale);
  }
  return worst;
}

}  // namespace

TEST(Network, ParameterCountMatchesLayerShapes) {
  for (bool norm : {true, false})
    for (int blocks : {0, 1, 3}) {
      NetworkArch a = tiny_arch(Activation::Relu, 3, blocks);
      a.layerNormEnabled = norm;
      EXPECT_EQ(parameter_count(a), expected_count(a));
    }
  EXPECT_EQ(parameter_count(NetworkArch::occupancy()), expected_count(NetworkArch::occupancy()));
  NetworkArch fourD = NetworkArch::occupancy();
  fourD.inputDim = 4;
  fourD.posencLevelsTemporal = 4;
  EXPECT_EQ(fourD.encoded_width(), 3 * 25 + 9);
}

TEST(Network, PositionalEncodingValues) {
  Eigen::VectorXd c(2);
  c << 0.25, -1.0;
  const std::vector<int> levels = {2, 1};
  const Eigen::VectorXd e = positional_encode(c, levels);
  ASSERT_EQ(e.size(), 5 + 3);
  const double pi = std::numbers::pi;
  EXPECT_DOUBLE_EQ(e[0], 0.25);
  EXPECT_DOUBLE_EQ(e[1], std::sin(pi * 0.25));
  EXPECT_DOUBLE_EQ(e[2], std::cos(pi * 0.25));
  EXPECT_DOUBLE_EQ(e[3], std::sin(2 * pi * 0.25));
  EXPECT_DOUBLE_EQ(e[4], std::cos(2 * pi * 0.25));
  EXPECT_DOUBLE_EQ(e[5], -1.0);
  EXPECT_DOUBLE_EQ(e[6], std::sin(-pi));
  EXPECT_DOUBLE_EQ(e[7], std::cos(-pi));
  Eigen::VectorXd bad(1);
  bad << 1.5;
  const std::vector<int> one = {1};
  EXPECT_THROW(positional_encode(bad, one), Error);
}

TEST(Network, CoordinateNormalization) {
  EXPECT_DOUBLE_EQ(normalize_coordinate(0, 10), -1.0);
  EXPECT_DOUBLE_EQ(normalize_coordinate(1023, 10), 1.0);
  EXPECT_DOUBLE_EQ(normalize_time(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(normalize_time(3, 4), 1.0);
}

TEST(Network, GradientMatchesFiniteDifferences) {
  for (Activation act : {Activation::Relu, Activation::Sine})
    for (bool norm : {true, false}) {
      NetworkArch a = tiny_arch(act, act == Activation::Sine ? 3 : 1, 2, 2);
      a.interBlockWidth = 8;
      a.intraBlockWidth = 6;
      a.layerNormEnabled = norm;
      EXPECT_LT(max_relative_error(a, 11, 120), 1e-4)
          << (act == Activation::Sine ? "sine" : "relu") << (norm ? " with" : " without") << " layer norm";
    }
}

TEST(Network, LogitBackwardAgreesWithOutputBackward) {
  const NetworkArch a = tiny_arch(Activation::Relu, 3, 1);
  CounterRng rng(4, 0);
  const NetworkParams<double> p = initialize_network(a, rng).cast<double>();
  const MatrixX<double> x = random_inputs(a, 5, 2);
  ForwardTape<double> tape;
  const MatrixX<double> y = forward(p, x, tape);
  const MatrixX<double> g = MatrixX<double>::Ones(3, 5);
  const MatrixX<double> logitGrad = (y.array() * (1 - y.array())).matrix();
  EXPECT_LT((backward(p, tape, g) - backward_from_logits(p, tape, logitGrad)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Network, BatchGradientIsSumOfSampleGradients) {
  const NetworkArch a = tiny_arch(Activation::Sine, 3, 1);
  CounterRng rng(8, 0);
  const NetworkParams<double> p = initialize_network(a, rng).cast<double>();
  const MatrixX<double> x = random_inputs(a, 6, 3);
  const MatrixX<double> g = MatrixX<double>::Constant(3, 6, 0.5);
  ForwardTape<double> tape;
  forward(p, x, tape);
  const VectorX<double> whole = backward(p, tape, g);
  VectorX<double> sum = VectorX<double>::Zero(whole.size());
  for (int i = 0; i < 6; ++i) {
    ForwardTape<double> t1;
    forward(p, MatrixX<double>(x.col(i)), t1);
    sum += backward(p, t1, MatrixX<double>(g.col(i)));
  }
  EXPECT_LT((whole - sum).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Network, PredictIsBatchInvariant) {
  // Every column equals its own single-column prediction bit for bit.
  const NetworkArch a = tiny_arch(Activation::Relu, 1, 2);
  CounterRng rng(2, 0);
  const NetworkParams<float> p = initialize_network(a, rng);
  const MatrixX<float> x = random_inputs(a, 2500, 4).cast<float>();
  const MatrixX<float> all = predict(p, x);
  ASSERT_EQ(all.cols(), 2500);
  for (Eigen::Index i : {0, 1, 1023, 1024, 2047, 2499}) {
    const MatrixX<float> one = predict(p, MatrixX<float>(x.col(i)));
    EXPECT_EQ(one(0, 0), all(0, i)) << "column " << i;
  }
  EXPECT_GT(all.minCoeff(), 0.0f);
  EXPECT_LT(all.maxCoeff(), 1.0f);
}

TEST(Network, FlattenRoundTripAndInitDeterminism) {
  const NetworkArch a = tiny_arch(Activation::Sine, 3, 2);
  CounterRng r1(5, 1), r2(5, 1), r3(6, 1);
  const NetworkParams<float> p = initialize_network(a, r1);
  EXPECT_EQ(p.values, initialize_network(a, r2).values);
  EXPECT_NE(p.values, initialize_network(a, r3).values);
  EXPECT_EQ(unflatten(a, flatten(p)).values, p.values);
  EXPECT_THROW(unflatten(a, VectorX<float>(p.values.size() + 1)), Error);
}

TEST(Network, ArchitectureValidation) {
  NetworkArch a = NetworkArch::occupancy();
  a.interBlockWidth = 0;
  EXPECT_THROW(a.validate(), Error);
  a = NetworkArch::occupancy();
  a.inputDim = 5;
  EXPECT_THROW(a.validate(), Error);
}
