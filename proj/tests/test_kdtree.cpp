#include "fixtures.hpp"
#include "pcinr/kdtree.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>

using namespace pcinr;
using pcinr::testing::random_cloud;

namespace {

/// Exhaustive scan with the same (distance, coordinate) ordering.
std::vector<std::pair<std::int64_t, Voxel>> brute_k(const std::vector<Voxel>& pts, const Voxel& q, std::size_t k) {
  std::vector<std::pair<std::int64_t, Voxel>> all;
  for (const auto& p : pts) all.emplace_back(squared_distance(p, q), p);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : voxel_less(a.second, b.second);
  });
  all.resize(std::min(k, all.size()));
  return all;
}

}  // namespace

TEST(KdTree, NearestMatchesBruteForce) {
  CounterRng rng(1, 0);
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    // Small grids produce many ties, which the tie-break must resolve.
    const int bits = seed % 2 ? 4 : 8;
    const VoxelizedCloud c = random_cloud(bits, 50 + 200 * seed, seed);
    const KdTree tree(c.points(), 1 + seed % 5);
    for (int i = 0; i < 300; ++i) {
      const Voxel q(static_cast<int>(rng.below(1u << bits)), static_cast<int>(rng.below(1u << bits)),
                    static_cast<int>(rng.below(1u << bits)));
      const auto expected = brute_k(c.points(), q, 1)[0];
      const KdTree::Neighbor got = tree.nearest(q);
      EXPECT_EQ(got.distance, expected.first);
      EXPECT_EQ(tree.point(got.index), expected.second);
    }
  }
}

TEST(KdTree, KNearestMatchesBruteForce) {
  CounterRng rng(2, 0);
  const VoxelizedCloud c = random_cloud(5, 400, 3);
  const KdTree tree(c.points());
  for (int i = 0; i < 200; ++i) {
    const Voxel q(static_cast<int>(rng.below(32)), static_cast<int>(rng.below(32)), static_cast<int>(rng.below(32)));
    for (std::size_t k : {1u, 9u, 30u}) {
      const auto expected = brute_k(c.points(), q, k);
      const auto got = tree.nearest_k(q, k);
      ASSERT_EQ(got.size(), expected.size());
      for (std::size_t j = 0; j < k; ++j) {
        EXPECT_EQ(got[j].distance, expected[j].first);
        EXPECT_EQ(tree.point(got[j].index), expected[j].second);
      }
    }
  }
  EXPECT_EQ(tree.nearest_k(Voxel(0, 0, 0), 1000).size(), c.size());
}

TEST(KdTree, SinglePointAndIndexMapping) {
  const std::vector<Voxel> pts = {Voxel(5, 5, 5)};
  const KdTree tree(pts);
  EXPECT_EQ(tree.nearest(Voxel(0, 0, 0)).distance, 75);
  EXPECT_EQ(tree.nearest(Voxel(0, 0, 0)).index, 0u);
}

TEST(KdTree, ParallelForVisitsEachIndexOnce) {
  for (std::size_t n : {0u, 1u, 7u, 10000u}) {
    std::vector<std::atomic<int>> hits(n);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) ++hits[i];
    });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
}
