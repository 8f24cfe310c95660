#pragma once

#include "pcinr/network.hpp"
#include "pcinr/optim.hpp"
#include "pcinr/rng.hpp"
#include "pcinr/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace pcinr {

/// Maps a grid coordinate to [-1, 1].
inline double normalize_coordinate(std::int32_t x, int resolutionBits) {
  const double extent = static_cast<double>((std::int64_t{1} << resolutionBits) - 1);
  return 2.0 * static_cast<double>(x) / extent - 1.0;
}

/// Frame index to [-1, 1]; a single frame maps to 0.
inline double normalize_time(std::int64_t t, std::int64_t frames) {
  if (frames <= 1) return 0.0;
  return 2.0 * static_cast<double>(t) / static_cast<double>(frames - 1) - 1.0;
}

/// Positionally encoded network inputs for a list of voxels. `times` (one
/// per voxel, already normalized) is read only by 4D networks.
MatrixX<float> encode_inputs(const NetworkArch& arch, std::span<const Voxel> voxels, int resolutionBits,
                             std::span<const double> times = {});

/// Same, with one shared time value.
MatrixX<float> encode_inputs_at(const NetworkArch& arch, std::span<const Voxel> voxels, int resolutionBits,
                                double time);

struct TrainOptions {
  std::int64_t steps = 1000;
  int batchSize = 4096;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  AdamConfig adam;  // schedule.totalSteps is taken from `steps`
  std::int64_t logEvery = 0;  // 0: only the final loss is recorded
  std::function<void(std::int64_t step, double loss)> progress;
};

enum class LossKind { Focal, SquaredError };

struct LossSpec {
  LossKind kind = LossKind::Focal;
  double alpha = 0.5;  // focal class weight for occupied voxels
  double gamma = 2.0;
};

/// One training batch: encoded inputs plus either binary labels (focal) or
/// per-column targets in [0, 1] (squared error).
struct Batch {
  MatrixX<float> inputs;
  Eigen::VectorXi labels;
  MatrixX<float> targets;
};

/// Fills a batch of `size` samples. `frame` is the curve frame drawn for the
/// step (always 0 outside curve training).
using BatchSource = std::function<void(std::int64_t frame, int size, CounterRng& rng, Batch& batch)>;

/// L1 term weight * ||theta - anchor||_1 (anchor zero when absent), applied
/// to every trained parameter vector.
struct Regularizer {
  double weight = 0.0;
  std::optional<VectorX<float>> anchor;
};

struct LossSample {
  std::int64_t step;
  double loss;  // batch distortion plus regularizer
};

struct TrainOutput {
  std::vector<NetworkParams<float>> nets;
  std::vector<LossSample> lossCurve;
};

/// Adam training loop. A single start network trains directly; two or more
/// are control points of a curve over `frames` frames, and each step first
/// draws a frame uniformly, then trains the Bernstein combination for it.
TrainOutput train_network(std::vector<NetworkParams<float>> start, const TrainOptions& options,
                          const LossSpec& loss, const Regularizer& regularizer, std::int64_t frames,
                          const BatchSource& source);

/// Batch distortion and its gradient w.r.t. the network logits. Focal loss
/// reads `labels` and squared error reads `targets`; both average over the
/// batch (squared error sums channels first).
double batch_loss(const LossSpec& loss, const ForwardTape<float>& tape, const Batch& batch,
                  MatrixX<float>& logitGradient);

/// RNG stream identifiers, so independent draws never share a sequence.
namespace streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kBatch = 2;
inline constexpr std::uint64_t kFrame = 3;
inline constexpr std::uint64_t kGeometry = 0x100;
inline constexpr std::uint64_t kAttributes = 0x200;
}  // namespace streams

}  // namespace pcinr
