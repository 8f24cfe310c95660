#pragma once

#include "pcinr/kdtree.hpp"
#include "pcinr/network.hpp"
#include "pcinr/partition.hpp"
#include "pcinr/pointcloud.hpp"
#include "pcinr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace pcinr {

/// Mixture weights that make the occupied share of training samples equal
/// beta while drawing empties from all of V: betaStar U(X) + alphaStar U(V).
struct SamplingPlan {
  double beta = 0.5;
  double zeta = 0.0;  // |X| / |V|
  double betaStar = 0.5;
  double alphaStar = 0.5;
};

/// Throws SamplingInfeasible when beta < zeta and InvalidArgument unless
/// 0 < beta < 1.
SamplingPlan make_sampling_plan(std::uint64_t occupied, std::uint64_t candidates, double beta);
SamplingPlan make_sampling_plan(const VoxelizedCloud& cloud, const CubeSet& cubeSet, double beta);

struct TrainingSample {
  Voxel voxel;
  int label;              // 1 iff the voxel is occupied
  std::size_t frame = 0;  // for multi-frame sampling
};

TrainingSample sample_training_voxel(const SamplingPlan& plan, const VoxelizedCloud& cloud,
                                     const CubeSet& cubeSet, CounterRng& rng);

/// Draws over one or more frames. draw() samples the union of all frames
/// (one plan over the summed counts); draw_in_frame() uses that frame's plan.
class GeometrySampler {
 public:
  GeometrySampler(std::span<const VoxelizedCloud> frames, std::span<const CubeSet> cubeSets, double beta);

  const SamplingPlan& plan() const { return unionPlan_; }
  const SamplingPlan& frame_plan(std::size_t frame) const { return framePlans_.at(frame); }
  std::size_t frame_count() const { return frames_.size(); }

  TrainingSample draw(CounterRng& rng) const;
  TrainingSample draw_in_frame(std::size_t frame, CounterRng& rng) const;

 private:
  std::span<const VoxelizedCloud> frames_;
  std::span<const CubeSet> cubeSets_;
  SamplingPlan unionPlan_;
  std::vector<SamplingPlan> framePlans_;
  std::vector<std::uint64_t> pointOffsets_;  // prefix sums of |X^(t)|
  std::vector<std::uint64_t> cubeOffsets_;   // prefix sums of |W^(t)|
};

inline double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

inline constexpr double kProbabilityClamp = 1e-7;

/// -alpha~ (1 - p~)^gamma log p~, with p clamped to [1e-7, 1 - 1e-7].
/// alpha~ = alpha for occupied voxels and 1 - alpha for empty ones.
double focal_loss(double p, int label, double alpha, double gamma);

/// d focal_loss / d z for p = sigmoid(z), evaluated without clamping in a
/// form that stays finite for any logit.
double focal_logit_gradient(double z, int label, double alpha, double gamma);

struct GeomTrainConfig {
  TrainOptions train;
  double beta = 0.5;  // focal alpha is 1 - beta
  double gamma = 2.0;
  double stepSize = 1.0 / 1024;
  int thresholdSteps = 30;
};

/// Trains the occupancy network. With a reference, the L1 term is anchored
/// to it and (unless freshInit) training starts from it.
TrainOutput train_geometry(const VoxelizedCloud& cloud, const CubeSet& cubeSet, const NetworkArch& arch,
                           const GeomTrainConfig& config,
                           const std::optional<NetworkParams<float>>& reference = std::nullopt,
                           bool freshInit = false);

/// Jointly trains `controlPoints` control networks over the frames.
TrainOutput train_geometry_curve(std::span<const VoxelizedCloud> frames, std::span<const CubeSet> cubeSets,
                                 const NetworkArch& arch, const GeomTrainConfig& config, int controlPoints);

/// One spatio-temporal network over all frames (arch.inputDim must be 4,
/// or 3 for a single frame).
TrainOutput train_geometry_4d(std::span<const VoxelizedCloud> frames, std::span<const CubeSet> cubeSets,
                              const NetworkArch& arch, const GeomTrainConfig& config);

/// Occupancy probability per voxel of V, in iterate_candidates order. `time`
/// is the normalized frame time for 4D networks.
std::vector<float> occupancy_probabilities(const NetworkParams<float>& params, const CubeSet& cubeSet,
                                           double time = 0.0);

/// {x in V : p(x) > tau}.
VoxelizedCloud reconstruct_from_probabilities(const CubeSet& cubeSet, std::span<const float> probabilities,
                                              double tau);
VoxelizedCloud reconstruct_geometry(const NetworkParams<float>& params, const CubeSet& cubeSet, double tau,
                                    double time = 0.0);

/// D1 PSNR of the thresholded reconstruction as a function of tau.
/// Evaluations share cached distances, so the object is not thread-safe.
class ThresholdObjective {
 public:
  ThresholdObjective(const CubeSet& cubeSet, std::span<const float> probabilities,
                     const VoxelizedCloud& original);

  /// dB; -infinity for an empty reconstruction, +infinity for an exact one.
  double operator()(double tau) const;

  /// Sorted unique probabilities, ascending.
  std::vector<float> unique_probabilities() const;

  /// Number of voxels with p > tau.
  std::size_t selected_count(double tau) const;

 private:
  const CubeSet& cubeSet_;
  const VoxelizedCloud& original_;
  KdTree originalTree_;
  std::vector<std::uint64_t> order_;  // V positions by descending probability
  std::vector<float> sorted_;        // probabilities in that order
  mutable std::vector<std::int64_t> distance_;  // to the original, by rank
};

/// Golden-section maximization on [0, 1]. A -infinity value is treated as
/// "too far right". Returns the midpoint of the final interval; throws
/// EmptyReconstruction if every probe returned -infinity.
double golden_section_maximize(const std::function<double(double)>& objective, int steps);

inline std::uint16_t threshold_floor_code(double tau) {
  const double k = std::floor(tau * 65536.0);
  return static_cast<std::uint16_t>(std::clamp(k, 1.0, 65535.0));
}

/// Picks the better of the two 16-bit codes bracketing tau (ties go to the
/// lower code). Throws EmptyReconstruction if both reconstruct nothing.
std::uint16_t select_threshold_code(const ThresholdObjective& objective, double tau);

struct ThresholdResult {
  double tau = 0.5;           // search result before quantization
  std::uint16_t code = 32768;  // transmitted threshold, code / 65536
  double psnr = 0.0;          // D1 at the transmitted threshold
};

ThresholdResult fine_tune_threshold(const CubeSet& cubeSet, std::span<const float> probabilities,
                                    const VoxelizedCloud& original, int steps);
ThresholdResult fine_tune_threshold(const NetworkParams<float>& params, const CubeSet& cubeSet,
                                    const VoxelizedCloud& original, int steps, double time = 0.0);

}  // namespace pcinr
