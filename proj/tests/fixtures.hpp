#pragma once

#include "pcinr/dynamic.hpp"
#include "pcinr/error.hpp"
#include "pcinr/pointcloud.hpp"
#include "pcinr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace pcinr::testing {

/// Voxels whose centers lie within [inner, outer) of the grid center.
inline VoxelizedCloud sphere_shell(int resolutionBits, double inner, double outer, bool colored = false) {
  const int n = 1 << resolutionBits;
  const double c = (n - 1) / 2.0;
  std::vector<Voxel> pts;
  std::vector<Rgb> colors;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      for (int z = 0; z < n; ++z) {
        const double d = std::sqrt((x - c) * (x - c) + (y - c) * (y - c) + (z - c) * (z - c));
        if (d >= inner && d < outer) {
          pts.emplace_back(x, y, z);
          // Two tones split on x.
          colors.push_back(x < n / 2 ? Rgb{200, 60, 40} : Rgb{30, 90, 220});
        }
      }
  if (!colored) return VoxelizedCloud(resolutionBits, std::move(pts));
  return VoxelizedCloud(resolutionBits, std::move(pts), std::move(colors));
}

/// `count` distinct uniform voxels (fewer if the grid is too small).
inline VoxelizedCloud random_cloud(int resolutionBits, std::size_t count, std::uint64_t seed, bool colored = false) {
  CounterRng rng(seed, 77);
  const std::uint64_t n = std::uint64_t{1} << resolutionBits;
  std::set<Voxel, VoxelLess> pts;
  std::size_t attempts = 0;
  while (pts.size() < count && attempts++ < count * 20) {
    pts.insert(Voxel(static_cast<int>(rng.below(n)), static_cast<int>(rng.below(n)), static_cast<int>(rng.below(n))));
  }
  std::vector<Voxel> v(pts.begin(), pts.end());
  if (!colored) return VoxelizedCloud(resolutionBits, std::move(v));
  std::vector<Rgb> colors;
  for (std::size_t i = 0; i < v.size(); ++i)
    colors.push_back({static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256)),
                      static_cast<std::uint8_t>(rng.below(256))});
  return VoxelizedCloud(resolutionBits, std::move(v), std::move(colors));
}

/// Surface voxels of a standing figure built from capsules (head, neck,
/// torso, two-segment arms and legs), laid out for a 128^3 grid and scaled
/// to 2^resolutionBits. About 12K points at N = 7.
inline VoxelizedCloud mannequin(int resolutionBits) {
  struct Capsule {
    Eigen::Vector3d a, b;
    double r;
  };
  const std::vector<Capsule> parts = {
      {{64, 64, 112}, {64, 64, 112}, 10},  {{64, 64, 96}, {64, 64, 104}, 5},   {{64, 64, 60}, {64, 64, 88}, 16},
      {{46, 64, 90}, {30, 64, 64}, 5.5},   {{82, 64, 90}, {98, 64, 64}, 5.5},  {{30, 64, 64}, {24, 64, 40}, 4.5},
      {{98, 64, 64}, {104, 64, 40}, 4.5},  {{56, 64, 52}, {54, 64, 28}, 8},    {{72, 64, 52}, {74, 64, 28}, 8},
      {{54, 64, 28}, {54, 64, 4}, 6.5},    {{74, 64, 28}, {74, 64, 4}, 6.5},
  };
  const int n = 1 << resolutionBits;
  const double s = 128.0 / n;
  auto inside = [&](int x, int y, int z) {
    if (x < 0 || y < 0 || z < 0 || x >= n || y >= n || z >= n) return false;
    const Eigen::Vector3d p = Eigen::Vector3d(x, y, z) * s;
    for (const auto& c : parts) {
      const Eigen::Vector3d ab = c.b - c.a;
      const double len2 = ab.squaredNorm();
      const double t = len2 > 0 ? std::clamp((p - c.a).dot(ab) / len2, 0.0, 1.0) : 0.0;
      if ((p - (c.a + t * ab)).norm() <= c.r) return true;
    }
    return false;
  };
  std::vector<Voxel> pts;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      for (int z = 0; z < n; ++z) {
        if (!inside(x, y, z)) continue;
        const bool interior = inside(x - 1, y, z) && inside(x + 1, y, z) && inside(x, y - 1, z) &&
                              inside(x, y + 1, z) && inside(x, y, z - 1) && inside(x, y, z + 1);
        if (!interior) pts.emplace_back(x, y, z);
      }
  return VoxelizedCloud(resolutionBits, std::move(pts));
}

inline RawCloud to_raw(const VoxelizedCloud& cloud) {
  RawCloud raw;
  for (const auto& p : cloud.points()) raw.positions.push_back(p.cast<double>());
  if (cloud.has_colors()) raw.colors = cloud.colors();
  return raw;
}

inline NetworkArch tiny_arch(Activation core, int outputDim, int blocks = 1, int levels = 4) {
  NetworkArch a;
  a.posencLevelsSpatial = levels;
  a.residualBlocks = blocks;
  a.interBlockWidth = 32;
  a.intraBlockWidth = 16;
  a.outputDim = outputDim;
  a.coreActivation = core;
  a.sineFrequency = 4.0;
  return a;
}

/// A codec small enough for unit tests: tiny networks, few steps.
inline CodecConfig tiny_codec(CodingMode mode, std::int64_t geometrySteps = 300, std::int64_t colorSteps = 200) {
  CodecConfig c;
  c.mode = mode;
  c.cubeBits = 2;
  c.geometryArch = tiny_arch(Activation::Relu, 1);
  c.colorArch = tiny_arch(Activation::Sine, 3);
  c.geometry.train.steps = geometrySteps;
  c.geometry.train.batchSize = 128;
  c.geometry.train.lambda = 0.0;
  c.geometry.train.adam.schedule.initial = 1e-2;
  c.attributes.train.steps = colorSteps;
  c.attributes.train.batchSize = 128;
  c.attributes.train.adam.schedule.initial = 1e-2;
  c.controlPoints = 2;
  c.temporalLevels = 2;
  return c;
}

/// A fresh, empty directory under the system temp path.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("pcinr_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace pcinr::testing
