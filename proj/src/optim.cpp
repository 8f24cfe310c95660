#include "pcinr/optim.hpp"

#include "pcinr/error.hpp"

#include <algorithm>
#include <cmath>

namespace pcinr {

double LearningRateSchedule::rate(std::int64_t step) const {
  const std::int64_t total = std::max<std::int64_t>(totalSteps, 1);
  const std::int64_t phase =
      std::min<std::int64_t>(step * phases / total, static_cast<std::int64_t>(phases) - 1);
  return initial * std::pow(decay, static_cast<double>(std::max<std::int64_t>(phase, 0)));
}

template <typename Scalar>
void adam_step(VectorX<Scalar>& params, const VectorX<Scalar>& grads, OptimizerState<Scalar>& state) {
  if (grads.size() != params.size() || state.firstMoment.size() != params.size() ||
      state.secondMoment.size() != params.size())
    throw Error(ErrorKind::ShapeMismatch, "optimizer state does not match parameters");
  const AdamConfig& c = state.config;
  const double lr = c.schedule.rate(state.step);
  ++state.step;
  const double t = static_cast<double>(state.step);
  const auto b1 = static_cast<Scalar>(c.beta1);
  const auto b2 = static_cast<Scalar>(c.beta2);
  state.firstMoment = b1 * state.firstMoment + (Scalar(1) - b1) * grads;
  state.secondMoment = b2 * state.secondMoment + (Scalar(1) - b2) * grads.cwiseAbs2();
  const auto corr1 = static_cast<Scalar>(1.0 - std::pow(c.beta1, t));
  const auto corr2 = static_cast<Scalar>(1.0 - std::pow(c.beta2, t));
  params *= static_cast<Scalar>(1.0 - lr * c.weightDecay);
  params.array() -= static_cast<Scalar>(lr) * (state.firstMoment.array() / corr1) /
                    ((state.secondMoment.array() / corr2).sqrt() + static_cast<Scalar>(c.epsilon));
}

template <typename Scalar>
VectorX<Scalar> l1_subgradient(const VectorX<Scalar>& params,
                               const std::optional<VectorX<Scalar>>& reference) {
  if (!reference) return params.array().sign().matrix();
  if (reference->size() != params.size())
    throw Error(ErrorKind::ShapeMismatch, "L1 reference does not match parameters");
  return (params - *reference).array().sign().matrix();
}

template void adam_step(VectorX<float>&, const VectorX<float>&, OptimizerState<float>&);
template void adam_step(VectorX<double>&, const VectorX<double>&, OptimizerState<double>&);
template VectorX<float> l1_subgradient(const VectorX<float>&, const std::optional<VectorX<float>>&);
template VectorX<double> l1_subgradient(const VectorX<double>&, const std::optional<VectorX<double>>&);

}  // namespace pcinr
