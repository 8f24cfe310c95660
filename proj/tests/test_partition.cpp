#include "fixtures.hpp"
#include "pcinr/partition.hpp"

#include <gtest/gtest.h>

#include <map>

using namespace pcinr;
using pcinr::testing::random_cloud;

TEST(Partition, CubeSetOfKnownCloud) {
  const VoxelizedCloud c(4, {Voxel(0, 0, 0), Voxel(3, 3, 3), Voxel(15, 0, 4), Voxel(12, 1, 7)});
  const CubeSet w = build_cube_set(c, 2);  // 4 cubes per axis, edge 4
  const std::vector<Voxel> expected = {Voxel(0, 0, 0), Voxel(3, 0, 1)};
  EXPECT_EQ(w.cubes(), expected);
  EXPECT_EQ(candidate_count(w), 2u * 64u);
  EXPECT_TRUE(contains(w, Voxel(13, 2, 5)));
  EXPECT_FALSE(contains(w, Voxel(4, 0, 0)));
}

TEST(Partition, ExtremeCubeBits) {
  const VoxelizedCloud c = random_cloud(5, 40, 1);
  EXPECT_EQ(build_cube_set(c, 0).size(), 1u);  // a single cube: V is the whole grid
  EXPECT_EQ(candidate_count(build_cube_set(c, 0)), 32768u);
  EXPECT_EQ(build_cube_set(c, 5).size(), c.size());  // unit cubes: V = X
  EXPECT_THROW(build_cube_set(c, 6), Error);
}

TEST(Partition, IterationMatchesBruteForce) {
  // Oracle: scan the whole grid, keep voxels in occupied cubes, order by
  // (cube, local coordinate).
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const VoxelizedCloud c = random_cloud(5, 20, seed);
    const CubeSet w = build_cube_set(c, 3);
    std::map<std::pair<std::tuple<int, int, int>, std::tuple<int, int, int>>, Voxel> oracle;
    for (int x = 0; x < 32; ++x)
      for (int y = 0; y < 32; ++y)
        for (int z = 0; z < 32; ++z) {
          const Voxel v(x, y, z);
          if (!w.contains_cube(w.cube_of(v))) continue;
          oracle[{{x >> 2, y >> 2, z >> 2}, {x & 3, y & 3, z & 3}}] = v;
        }
    std::vector<Voxel> got(iterate_candidates(w).begin(), iterate_candidates(w).end());
    ASSERT_EQ(got.size(), oracle.size());
    std::size_t i = 0;
    for (const auto& [key, v] : oracle) {
      EXPECT_EQ(got[i], v);
      EXPECT_EQ(iterate_candidates(w).at(i), v);
      ++i;
    }
  }
}

TEST(Partition, OccupiedVoxelsAreCandidates) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const VoxelizedCloud c = random_cloud(6, 100, seed);
    const CubeSet w = build_cube_set(c, static_cast<int>(seed % 7));
    for (const auto& p : c.points()) EXPECT_TRUE(contains(w, p));
    const OccupancyIndex index(c);
    std::size_t occupied = 0;
    for (const Voxel& v : iterate_candidates(w)) occupied += index.occupied(v);
    EXPECT_EQ(occupied, c.size());
  }
}

TEST(Partition, SampleCandidateIsUniform) {
  // Chi-square against the uniform distribution over V (|V| = 2 * 8 = 16).
  const VoxelizedCloud c(3, {Voxel(0, 0, 0), Voxel(7, 7, 7)});
  const CubeSet w = build_cube_set(c, 2);
  ASSERT_EQ(candidate_count(w), 16u);
  std::map<Voxel, int, VoxelLess> counts;
  CounterRng rng(5, 0);
  const int draws = 160000;
  for (int i = 0; i < draws; ++i) {
    const Voxel v = sample_candidate(w, rng);
    ASSERT_TRUE(contains(w, v));
    ++counts[v];
  }
  ASSERT_EQ(counts.size(), 16u);
  const double expected = draws / 16.0;
  double chi2 = 0;
  for (const auto& [v, n] : counts) chi2 += (n - expected) * (n - expected) / expected;
  EXPECT_LT(chi2, 37.7);  // 15 degrees of freedom, p = 0.001
}
