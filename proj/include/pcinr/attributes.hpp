#pragma once

#include "pcinr/network.hpp"
#include "pcinr/pointcloud.hpp"
#include "pcinr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace pcinr {

/// Expected color, in [0, 1]^3, for every voxel of a reconstructed geometry.
struct ColorTarget {
  VoxelizedCloud geometry;
  std::vector<Eigen::Vector3f> colors;  // aligned with geometry.points()
};

/// Color of each reconstructed voxel's nearest original point (ties to the
/// lexicographically smallest original coordinate).
ColorTarget build_color_targets(const VoxelizedCloud& reconstructed, const VoxelizedCloud& original);

struct AttrTrainConfig {
  TrainOptions train;
  double stepSize = 1.0 / 4096;
};

/// Trains the color network on batches drawn uniformly from the targets.
/// The L1 weight is lambda / originalPoints (the original cloud's size, not
/// the reconstruction's).
TrainOutput train_attributes(const ColorTarget& targets, const NetworkArch& arch, const AttrTrainConfig& config,
                             std::uint64_t originalPoints,
                             const std::optional<NetworkParams<float>>& reference = std::nullopt,
                             bool freshInit = false);

TrainOutput train_attributes_curve(std::span<const ColorTarget> frames, const NetworkArch& arch,
                                   const AttrTrainConfig& config, std::uint64_t originalPoints, int controlPoints);

/// One spatio-temporal color network; batches are uniform over the union of
/// all frames' voxels.
TrainOutput train_attributes_4d(std::span<const ColorTarget> frames, const NetworkArch& arch,
                                const AttrTrainConfig& config, std::uint64_t originalPoints);

/// round-half-up(255 c), clamped to [0, 255].
inline std::uint8_t color_to_byte(float c) {
  const double v = std::floor(255.0 * static_cast<double>(c) + 0.5);
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

std::vector<Rgb> predict_colors(const NetworkParams<float>& params, std::span<const Voxel> voxels,
                                int resolutionBits, double time = 0.0);

/// The reconstruction with network-predicted colors attached.
VoxelizedCloud reconstruct_attributes(const NetworkParams<float>& params, const VoxelizedCloud& reconstructed,
                                      double time = 0.0);

}  // namespace pcinr
