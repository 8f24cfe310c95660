#include "pcinr/metrics.hpp"

#include "pcinr/error.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>

namespace pcinr {

Psnr Psnr::from_error(double peakSquared, double error) {
  if (error < 0) throw Error(ErrorKind::InvalidArgument, "negative error");
  if (error == 0) return infinite();
  return finite(10.0 * std::log10(peakSquared / error));
}

double Psnr::db() const {
  if (infinite_) throw Error(ErrorKind::InvalidArgument, "PSNR is infinite");
  return db_;
}

std::string Psnr::str() const {
  if (infinite_) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", db_);
  return buf;
}

namespace {

void require_nonempty(std::size_t a, std::size_t b) {
  if (a == 0 || b == 0) throw Error(ErrorKind::InvalidArgument, "metric on empty point set");
}

std::vector<std::size_t> nearest_indices(std::span<const Voxel> queries, const KdTree& tree) {
  std::vector<std::size_t> out(queries.size());
  parallel_for(queries.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) out[i] = tree.nearest(queries[i]).index;
  });
  return out;
}

}  // namespace

double p2point_error(std::span<const Voxel> test, const KdTree& reference) {
  require_nonempty(test.size(), reference.size());
  std::vector<std::int64_t> d(test.size());
  parallel_for(test.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) d[i] = reference.nearest(test[i]).distance;
  });
  // Integer sum is exact and order independent.
  std::int64_t sum = 0;
  for (auto v : d) sum += v;
  return static_cast<double>(sum) / static_cast<double>(test.size());
}

double p2point_error(const VoxelizedCloud& test, const VoxelizedCloud& reference) {
  require_nonempty(test.size(), reference.size());
  return p2point_error(test.points(), KdTree(reference.points()));
}

double geometry_peak_squared(int resolutionBits) {
  const double peak = std::ldexp(1.0, resolutionBits) - 1.0;
  return 3.0 * peak * peak;
}

Psnr d1_psnr(const VoxelizedCloud& test, const VoxelizedCloud& reference) {
  require_nonempty(test.size(), reference.size());
  const KdTree testTree(test.points());
  const KdTree refTree(reference.points());
  const double e = std::max(p2point_error(test.points(), refTree),
                            p2point_error(reference.points(), testTree));
  return Psnr::from_error(geometry_peak_squared(reference.resolution_bits()), e);
}

std::vector<std::optional<Eigen::Vector3d>> estimate_normals(const KdTree& points, std::size_t k) {
  if (points.size() < k + 1)
    throw Error(ErrorKind::InvalidArgument,
                "normal estimation needs at least " + std::to_string(k + 1) + " points");
  std::vector<std::optional<Eigen::Vector3d>> normals(points.size());
  parallel_for(points.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const auto nbrs = points.nearest_k(points.point(i), k);
      Eigen::Vector3d mean = Eigen::Vector3d::Zero();
      for (const auto& n : nbrs) mean += points.point(n.index).cast<double>();
      mean /= static_cast<double>(nbrs.size());
      Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
      for (const auto& n : nbrs) {
        const Eigen::Vector3d d = points.point(n.index).cast<double>() - mean;
        cov += d * d.transpose();
      }
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
      const Eigen::Vector3d ev = solver.eigenvalues();  // ascending
      const double tol = 1e-9 * std::max(1.0, ev[2]);
      if (ev[1] <= tol) continue;  // collinear or coincident: no plane
      normals[i] = solver.eigenvectors().col(0).normalized();
    }
  });
  return normals;
}

PlaneError p2plane_error(std::span<const Voxel> test, const KdTree& reference,
                         const std::vector<std::optional<Eigen::Vector3d>>& normals) {
  require_nonempty(test.size(), reference.size());
  const auto nn = nearest_indices(test, reference);
  PlaneError out;
  double sum = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Eigen::Vector3d d = (test[i] - reference.point(nn[i])).cast<double>();
    if (const auto& n = normals[nn[i]]) {
      const double proj = d.dot(*n);
      sum += proj * proj;
    } else {
      sum += d.squaredNorm();
      ++out.fallbackPoints;
    }
  }
  out.error = sum / static_cast<double>(test.size());
  return out;
}

D2Result d2_psnr(const VoxelizedCloud& test, const VoxelizedCloud& reference) {
  require_nonempty(test.size(), reference.size());
  const KdTree testTree(test.points());
  const KdTree refTree(reference.points());
  const auto forward = p2plane_error(test.points(), refTree, estimate_normals(refTree));
  const auto backward = p2plane_error(reference.points(), testTree, estimate_normals(testTree));
  D2Result out;
  out.error = std::max(forward.error, backward.error);
  out.fallbackPoints = forward.fallbackPoints + backward.fallbackPoints;
  // Rounding in the projection can leave ~1e-30 residue for exact in-plane offsets.
  const double e = out.error < 1e-12 ? 0.0 : out.error;
  out.psnr = Psnr::from_error(geometry_peak_squared(reference.resolution_bits()), e);
  return out;
}

Eigen::Vector3d rgb_to_ycbcr(const Rgb& c) {
  const double r = c.r, g = c.g, b = c.b;
  const double y = 0.2126 * r + 0.7152 * g + 0.0722 * b;
  return {y, (b - y) / 1.8556 + 128.0, (r - y) / 1.5748 + 128.0};
}

namespace {

Eigen::Vector3d color_mse(const VoxelizedCloud& test, const VoxelizedCloud& reference,
                          const KdTree& referenceTree) {
  const auto nn = nearest_indices(test.points(), referenceTree);
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Eigen::Vector3d d = rgb_to_ycbcr(test.colors()[i]) - rgb_to_ycbcr(reference.colors()[nn[i]]);
    sum += d.cwiseAbs2();
  }
  return sum / static_cast<double>(test.size());
}

}  // namespace

ColorPsnr yuv_psnr(const VoxelizedCloud& test, const VoxelizedCloud& reference) {
  require_nonempty(test.size(), reference.size());
  if (!test.has_colors() || !reference.has_colors())
    throw Error(ErrorKind::InvalidArgument, "color metric requires colors on both clouds");
  const KdTree testTree(test.points());
  const KdTree refTree(reference.points());
  ColorPsnr out;
  out.mse = color_mse(test, reference, refTree).cwiseMax(color_mse(reference, test, testTree));
  constexpr double peak = 255.0 * 255.0;
  out.y = Psnr::from_error(peak, out.mse[0]);
  out.u = Psnr::from_error(peak, out.mse[1]);
  out.v = Psnr::from_error(peak, out.mse[2]);
  out.yuv = Psnr::from_error(peak, (6.0 * out.mse[0] + out.mse[1] + out.mse[2]) / 8.0);
  return out;
}

double bits_per_point(std::uint64_t streamBytes, std::uint64_t originalPoints) {
  if (originalPoints == 0) throw Error(ErrorKind::InvalidArgument, "bits per point with zero points");
  return static_cast<double>(streamBytes) * 8.0 / static_cast<double>(originalPoints);
}

}  // namespace pcinr
