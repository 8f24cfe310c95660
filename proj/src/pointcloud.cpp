#include "pcinr/pointcloud.hpp"

#include "pcinr/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace pcinr {

VoxelizedCloud::VoxelizedCloud(int resolutionBits, std::vector<Voxel> points,
                               std::optional<std::vector<Rgb>> colors)
    : resolutionBits_(resolutionBits) {
  if (resolutionBits < 1 || resolutionBits > kMaxResolutionBits)
    throw Error(ErrorKind::InvalidArgument,
                "resolution bits must be in [1, " + std::to_string(kMaxResolutionBits) + "]");
  if (colors && colors->size() != points.size())
    throw Error(ErrorKind::ShapeMismatch, "color count differs from point count");

  const std::int32_t limit = std::int32_t{1} << resolutionBits;
  for (const Voxel& v : points) {
    if ((v.array() < 0).any() || (v.array() >= limit).any())
      throw Error(ErrorKind::InvalidArgument, "voxel coordinate outside [0, 2^N)");
  }

  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (!std::is_sorted(points.begin(), points.end(), VoxelLess{})) {
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return voxel_less(points[a], points[b]); });
  }
  points_.reserve(points.size());
  for (std::size_t i : order) points_.push_back(points[i]);
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (points_[i] == points_[i - 1])
      throw Error(ErrorKind::InvalidArgument, "duplicate voxel coordinate");
  }
  if (colors) {
    std::vector<Rgb> sorted;
    sorted.reserve(order.size());
    for (std::size_t i : order) sorted.push_back((*colors)[i]);
    colors_ = std::move(sorted);
  }
}

const std::vector<Rgb>& VoxelizedCloud::colors() const {
  if (!colors_) throw Error(ErrorKind::InvalidArgument, "cloud has no colors");
  return *colors_;
}

std::optional<std::size_t> VoxelizedCloud::find(const Voxel& v) const {
  auto it = std::lower_bound(points_.begin(), points_.end(), v, VoxelLess{});
  if (it == points_.end() || *it != v) return std::nullopt;
  return static_cast<std::size_t>(it - points_.begin());
}

VoxelizedCloud VoxelizedCloud::without_colors() const {
  VoxelizedCloud out = *this;
  out.colors_.reset();
  return out;
}

VoxelizedCloud VoxelizedCloud::with_colors(std::vector<Rgb> colors) const {
  if (colors.size() != points_.size())
    throw Error(ErrorKind::ShapeMismatch, "color count differs from point count");
  VoxelizedCloud out = *this;
  out.colors_ = std::move(colors);
  return out;
}

bool operator==(const VoxelizedCloud& a, const VoxelizedCloud& b) {
  return a.resolutionBits_ == b.resolutionBits_ && a.points_ == b.points_ &&
         a.colors_ == b.colors_;
}

namespace {

bool voxel_aligned(const RawCloud& cloud, int resolutionBits) {
  const double limit = std::ldexp(1.0, resolutionBits);
  for (const auto& p : cloud.positions) {
    for (int k = 0; k < 3; ++k) {
      if (p[k] != std::floor(p[k]) || p[k] < 0 || p[k] >= limit) return false;
    }
  }
  return true;
}

}  // namespace

VoxelizeResult voxelize(const RawCloud& cloud, int resolutionBits) {
  if (resolutionBits < 1 || resolutionBits > kMaxResolutionBits)
    throw Error(ErrorKind::InvalidArgument, "resolution bits out of range");
  if (cloud.positions.empty()) throw Error(ErrorKind::InvalidArgument, "empty point cloud");
  if (cloud.colors && cloud.colors->size() != cloud.positions.size())
    throw Error(ErrorKind::ShapeMismatch, "color count differs from point count");

  VoxelTransform transform;
  if (!voxel_aligned(cloud, resolutionBits)) {
    Eigen::Vector3d lo = cloud.positions.front();
    Eigen::Vector3d hi = lo;
    for (const auto& p : cloud.positions) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const double extent = (hi - lo).maxCoeff();
    if (!(extent > 0))
      throw Error(ErrorKind::DegenerateInput, "all points coincide; bounding box is empty");
    const double cells = std::ldexp(1.0, resolutionBits) - 1.0;
    transform.offset = lo;
    transform.scale = Eigen::Vector3d::Constant(extent / cells);
  }

  struct Accum {
    std::uint64_t r = 0, g = 0, b = 0, n = 0;
  };
  std::map<Voxel, Accum, VoxelLess> merged;
  const std::int32_t top = (std::int32_t{1} << resolutionBits) - 1;
  for (std::size_t i = 0; i < cloud.positions.size(); ++i) {
    const Eigen::Vector3d q =
        (cloud.positions[i] - transform.offset).cwiseQuotient(transform.scale);
    Voxel v;
    for (int k = 0; k < 3; ++k) {
      const double r = std::floor(q[k] + 0.5);
      v[k] = static_cast<std::int32_t>(std::clamp(r, 0.0, static_cast<double>(top)));
    }
    Accum& a = merged[v];
    if (cloud.colors) {
      const Rgb& c = (*cloud.colors)[i];
      a.r += c.r;
      a.g += c.g;
      a.b += c.b;
    }
    ++a.n;
  }

  std::vector<Voxel> points;
  std::vector<Rgb> colors;
  points.reserve(merged.size());
  if (cloud.colors) colors.reserve(merged.size());
  // Round-half-up mean: floor(sum / n + 1/2) in integers.
  auto mean = [](std::uint64_t sum, std::uint64_t n) {
    return static_cast<std::uint8_t>((2 * sum + n) / (2 * n));
  };
  for (const auto& [v, a] : merged) {
    points.push_back(v);
    if (cloud.colors) colors.push_back({mean(a.r, a.n), mean(a.g, a.n), mean(a.b, a.n)});
  }

  std::optional<std::vector<Rgb>> maybeColors;
  if (cloud.colors) maybeColors = std::move(colors);
  return {VoxelizedCloud(resolutionBits, std::move(points), std::move(maybeColors)), transform};
}

RawCloud devoxelize(const VoxelizedCloud& cloud, const VoxelTransform& transform) {
  RawCloud out;
  out.positions.reserve(cloud.size());
  for (const Voxel& v : cloud.points()) out.positions.push_back(transform.to_world(v));
  if (cloud.has_colors()) out.colors = cloud.colors();
  return out;
}

}  // namespace pcinr
