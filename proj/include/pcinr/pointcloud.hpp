#pragma once

#include "pcinr/types.hpp"

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace pcinr {

/// A point cloud as read from disk, in arbitrary units.
struct RawCloud {
  std::vector<Eigen::Vector3d> positions;
  std::optional<std::vector<Rgb>> colors;

  std::size_t size() const { return positions.size(); }
};

/// Integer-coordinate point set on a 2^N grid. Points are kept sorted
/// lexicographically and unique; colors (when present) are aligned with them.
class VoxelizedCloud {
 public:
  VoxelizedCloud() = default;

  /// Sorts and validates. Throws on duplicates or out-of-range coordinates.
  VoxelizedCloud(int resolutionBits, std::vector<Voxel> points,
                 std::optional<std::vector<Rgb>> colors = std::nullopt);

  int resolution_bits() const { return resolutionBits_; }
  std::int32_t grid_size() const { return std::int32_t{1} << resolutionBits_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  bool has_colors() const { return colors_.has_value(); }

  const std::vector<Voxel>& points() const { return points_; }
  const std::vector<Rgb>& colors() const;

  /// Index of `v` in points(), if present.
  std::optional<std::size_t> find(const Voxel& v) const;

  VoxelizedCloud without_colors() const;
  VoxelizedCloud with_colors(std::vector<Rgb> colors) const;

  friend bool operator==(const VoxelizedCloud& a, const VoxelizedCloud& b);

 private:
  int resolutionBits_ = 1;
  std::vector<Voxel> points_;
  std::optional<std::vector<Rgb>> colors_;
};

/// world = offset + voxel * scale, per axis.
struct VoxelTransform {
  Eigen::Vector3d scale = Eigen::Vector3d::Ones();
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();

  static VoxelTransform identity() { return {}; }
  Eigen::Vector3d to_world(const Voxel& v) const {
    return offset + v.cast<double>().cwiseProduct(scale);
  }
  friend bool operator==(const VoxelTransform& a, const VoxelTransform& b) {
    return a.scale == b.scale && a.offset == b.offset;
  }
};

struct VoxelizeResult {
  VoxelizedCloud cloud;
  VoxelTransform transform;
};

/// Quantize onto a 2^N grid. Inputs that are already integral and inside
/// [0, 2^N) pass through unchanged with an identity transform; anything else
/// is min-max normalized by the longest bounding-box axis. Duplicate voxels
/// merge, colors averaged per channel with round-half-up.
VoxelizeResult voxelize(const RawCloud& cloud, int resolutionBits);

/// Inverse mapping back to world coordinates (colors carried over).
RawCloud devoxelize(const VoxelizedCloud& cloud, const VoxelTransform& transform);

}  // namespace pcinr
