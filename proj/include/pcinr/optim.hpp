#pragma once

#include "pcinr/network.hpp"
#include "pcinr/types.hpp"

#include <cstdint>
#include <optional>

namespace pcinr {

/// Piecewise-constant rate: initial * decay^k during the k-th of `phases`
/// equal slices of the run.
struct LearningRateSchedule {
  double initial = 1e-3;
  double decay = 0.1;
  std::int64_t totalSteps = 1;
  int phases = 4;

  double rate(std::int64_t step) const;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weightDecay = 1e-4;
  LearningRateSchedule schedule;
};

template <typename Scalar>
struct OptimizerState {
  AdamConfig config;
  std::int64_t step = 0;
  VectorX<Scalar> firstMoment;
  VectorX<Scalar> secondMoment;

  static OptimizerState start(const AdamConfig& config, Eigen::Index size) {
    return {config, 0, VectorX<Scalar>::Zero(size), VectorX<Scalar>::Zero(size)};
  }
};

/// One Adam update with decoupled weight decay: theta -= lr*wd*theta, then
/// the bias-corrected Adam delta. Learning rate keyed on the pre-update step.
template <typename Scalar>
void adam_step(VectorX<Scalar>& params, const VectorX<Scalar>& grads, OptimizerState<Scalar>& state);

/// sign(theta - reference), zero at equality. Scale by lambda/|X| at the call
/// site; the reference is treated as a constant.
template <typename Scalar>
VectorX<Scalar> l1_subgradient(const VectorX<Scalar>& params,
                               const std::optional<VectorX<Scalar>>& reference = std::nullopt);

}  // namespace pcinr
