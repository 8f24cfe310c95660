#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <functional>
#include <tuple>

namespace pcinr {

using Voxel = Eigen::Matrix<std::int32_t, 3, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline bool voxel_less(const Voxel& a, const Voxel& b) {
  return std::tie(a.x(), a.y(), a.z()) < std::tie(b.x(), b.y(), b.z());
}

struct VoxelLess {
  bool operator()(const Voxel& a, const Voxel& b) const { return voxel_less(a, b); }
};

// 21 bits per axis; enough for any resolution this codec accepts.
inline std::uint64_t voxel_key(const Voxel& v) {
  return static_cast<std::uint64_t>(static_cast<std::uint32_t>(v.x())) |
         (static_cast<std::uint64_t>(static_cast<std::uint32_t>(v.y())) << 21) |
         (static_cast<std::uint64_t>(static_cast<std::uint32_t>(v.z())) << 42);
}

inline constexpr int kMaxResolutionBits = 20;

inline std::int64_t squared_distance(const Voxel& a, const Voxel& b) {
  const std::int64_t dx = std::int64_t{a.x()} - b.x();
  const std::int64_t dy = std::int64_t{a.y()} - b.y();
  const std::int64_t dz = std::int64_t{a.z()} - b.z();
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace pcinr
