#include "pcinr/trainer.hpp"

#include "pcinr/bezier.hpp"
#include "pcinr/error.hpp"
#include "pcinr/geometry.hpp"

#include <cmath>

namespace pcinr {

MatrixX<float> encode_inputs(const NetworkArch& arch, std::span<const Voxel> voxels, int resolutionBits,
                             std::span<const double> times) {
  const auto n = static_cast<Eigen::Index>(voxels.size());
  Eigen::MatrixXd coords(arch.inputDim, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Voxel& v = voxels[static_cast<std::size_t>(i)];
    for (int a = 0; a < 3; ++a) coords(a, i) = normalize_coordinate(v[a], resolutionBits);
  }
  if (arch.inputDim == 4) {
    if (!times.empty() && times.size() != voxels.size())
      throw Error(ErrorKind::ShapeMismatch, "one time value per voxel required");
    for (Eigen::Index i = 0; i < n; ++i) coords(3, i) = times.empty() ? 0.0 : times[static_cast<std::size_t>(i)];
  }
  const auto levels = encoding_levels(arch);
  return positional_encode_batch<float>(coords, levels);
}

MatrixX<float> encode_inputs_at(const NetworkArch& arch, std::span<const Voxel> voxels, int resolutionBits,
                                double time) {
  if (arch.inputDim != 4) return encode_inputs(arch, voxels, resolutionBits);
  const std::vector<double> times(voxels.size(), time);
  return encode_inputs(arch, voxels, resolutionBits, times);
}

double batch_loss(const LossSpec& loss, const ForwardTape<float>& tape, const Batch& batch,
                  MatrixX<float>& logitGradient) {
  const Eigen::Index n = tape.logits.cols();
  logitGradient.resize(tape.logits.rows(), n);
  double total = 0.0;
  if (loss.kind == LossKind::Focal) {
    if (batch.labels.size() != n || tape.logits.rows() != 1)
      throw Error(ErrorKind::ShapeMismatch, "focal loss needs one label per column and a scalar output");
    for (Eigen::Index i = 0; i < n; ++i) {
      const double z = tape.logits(0, i);
      const int y = batch.labels[i];
      total += focal_loss(sigmoid(z), y, loss.alpha, loss.gamma);
      logitGradient(0, i) = static_cast<float>(focal_logit_gradient(z, y, loss.alpha, loss.gamma) / n);
    }
  } else {
    if (batch.targets.rows() != tape.outputs.rows() || batch.targets.cols() != n)
      throw Error(ErrorKind::ShapeMismatch, "squared-error targets do not match the outputs");
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index c = 0; c < tape.outputs.rows(); ++c) {
        const double out = tape.outputs(c, i);
        const double diff = out - static_cast<double>(batch.targets(c, i));
        total += diff * diff;
        logitGradient(c, i) = static_cast<float>(2.0 * diff * out * (1.0 - out) / n);
      }
    }
  }
  return total / static_cast<double>(n);
}

TrainOutput train_network(std::vector<NetworkParams<float>> start, const TrainOptions& options,
                          const LossSpec& loss, const Regularizer& regularizer, std::int64_t frames,
                          const BatchSource& source) {
  if (start.empty()) throw Error(ErrorKind::InvalidArgument, "nothing to train");
  if (options.steps < 0 || options.batchSize < 1)
    throw Error(ErrorKind::InvalidArgument, "training needs steps >= 0 and batch size >= 1");
  const std::size_t controls = start.size();
  const bool curve = controls > 1;
  if (curve) bernstein_weights(static_cast<int>(controls) - 1, 0, frames);  // validates degree and frames
  const Eigen::Index size = start.front().values.size();
  for (const auto& s : start)
    if (s.values.size() != size || !(s.arch == start.front().arch))
      throw Error(ErrorKind::ShapeMismatch, "control networks differ in shape");
  if (regularizer.anchor && regularizer.anchor->size() != size)
    throw Error(ErrorKind::ShapeMismatch, "regularizer anchor does not match the network");

  AdamConfig adam = options.adam;
  adam.schedule.totalSteps = std::max<std::int64_t>(1, options.steps);
  std::vector<OptimizerState<float>> states;
  for (std::size_t i = 0; i < controls; ++i) states.push_back(OptimizerState<float>::start(adam, size));

  TrainOutput out;
  out.nets = std::move(start);
  CounterRng batchRng(options.seed, streams::kBatch);
  CounterRng frameRng(options.seed, streams::kFrame);
  Batch batch;
  ForwardTape<float> tape;
  MatrixX<float> logitGradient;
  NetworkParams<float> sampled{out.nets.front().arch, {}};
  std::vector<VectorX<float>> controlValues(controls);

  for (std::int64_t step = 0; step < options.steps; ++step) {
    std::int64_t frame = 0;
    std::vector<double> weights{1.0};
    if (curve) {
      frame = static_cast<std::int64_t>(frameRng.below(static_cast<std::uint64_t>(frames)));
      weights = bernstein_weights(static_cast<int>(controls) - 1, frame, frames);
      for (std::size_t i = 0; i < controls; ++i) controlValues[i] = out.nets[i].values;
      sampled.values = bezier_combine(controlValues, weights);
    }
    const NetworkParams<float>& net = curve ? sampled : out.nets.front();

    source(frame, options.batchSize, batchRng, batch);
    forward(net, batch.inputs, tape);
    double value = batch_loss(loss, tape, batch, logitGradient);
    const VectorX<float> grad = backward_from_logits(net, tape, logitGradient);

    for (std::size_t i = 0; i < controls; ++i) {
      VectorX<float>& theta = out.nets[i].values;
      VectorX<float> g = curve ? VectorX<float>(static_cast<float>(weights[i]) * grad) : grad;
      if (regularizer.weight > 0) {
        g += static_cast<float>(regularizer.weight) * l1_subgradient(theta, regularizer.anchor);
        const double l1 = regularizer.anchor ? (theta - *regularizer.anchor).cast<double>().lpNorm<1>()
                                             : theta.cast<double>().lpNorm<1>();
        value += regularizer.weight * l1;
      }
      adam_step(theta, g, states[i]);
    }

    const bool last = step + 1 == options.steps;
    if (last || (options.logEvery > 0 && (step + 1) % options.logEvery == 0)) {
      out.lossCurve.push_back({step + 1, value});
      if (options.progress) options.progress(step + 1, value);
    }
  }
  return out;
}

}  // namespace pcinr
