#pragma once

#include "pcinr/kdtree.hpp"
#include "pcinr/pointcloud.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pcinr {

/// PSNR in dB, or the distinguished "infinite" value for zero error.
class Psnr {
 public:
  static Psnr infinite() { return Psnr(true, 0.0); }
  static Psnr finite(double db) { return Psnr(false, db); }
  /// 10 log10(peakSquared / error); zero error is infinite.
  static Psnr from_error(double peakSquared, double error);

  bool is_infinite() const { return infinite_; }
  /// Throws when infinite.
  double db() const;
  /// "inf" or fixed-point dB with 4 decimals.
  std::string str() const;

  friend bool operator==(const Psnr&, const Psnr&) = default;

 private:
  Psnr(bool infinite, double db) : infinite_(infinite), db_(db) {}
  bool infinite_;
  double db_;
};

/// Mean over test points of the squared distance to the nearest reference
/// point. Both sets must be nonempty.
double p2point_error(std::span<const Voxel> test, const KdTree& reference);
double p2point_error(const VoxelizedCloud& test, const VoxelizedCloud& reference);

/// 3 (2^N - 1)^2.
double geometry_peak_squared(int resolutionBits);

/// Symmetric D1: peak over max(e(test, ref), e(ref, test)).
Psnr d1_psnr(const VoxelizedCloud& test, const VoxelizedCloud& reference);

inline constexpr std::size_t kNormalNeighbors = 9;

/// Unoriented unit normals by PCA over the k nearest neighbors (the point
/// itself included). Neighborhoods whose covariance has rank <= 1 get no
/// normal. Requires at least k + 1 points.
std::vector<std::optional<Eigen::Vector3d>> estimate_normals(const KdTree& points,
                                                             std::size_t k = kNormalNeighbors);

struct PlaneError {
  double error = 0;               // mean squared projected distance
  std::size_t fallbackPoints = 0;  // points scored point-to-point instead
};

/// Point-to-plane error of test relative to reference, using the normal at
/// each test point's nearest reference point.
PlaneError p2plane_error(std::span<const Voxel> test, const KdTree& reference,
                         const std::vector<std::optional<Eigen::Vector3d>>& normals);

struct D2Result {
  Psnr psnr = Psnr::infinite();
  double error = 0;  // symmetric max
  std::size_t fallbackPoints = 0;  // over both directions
};

D2Result d2_psnr(const VoxelizedCloud& test, const VoxelizedCloud& reference);

/// BT.709 full-range YCbCr, unclamped.
Eigen::Vector3d rgb_to_ycbcr(const Rgb& c);

struct ColorPsnr {
  Psnr y = Psnr::infinite();
  Psnr u = Psnr::infinite();
  Psnr v = Psnr::infinite();
  Psnr yuv = Psnr::infinite();  // (6 Y + U + V) / 8 on MSE
  Eigen::Vector3d mse = Eigen::Vector3d::Zero();  // symmetric max per channel
};

/// Each point is compared against the color of its nearest neighbor in the
/// other cloud; per-channel MSE takes the worse direction.
ColorPsnr yuv_psnr(const VoxelizedCloud& test, const VoxelizedCloud& reference);

/// bits / points. Throws for zero points.
double bits_per_point(std::uint64_t streamBytes, std::uint64_t originalPoints);

}  // namespace pcinr
