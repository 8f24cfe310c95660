#pragma once

#include "pcinr/types.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace pcinr {

/// Exact nearest-neighbor search over integer voxels. Median split on the
/// widest axis, 16-point leaves. Among equidistant points the
/// lexicographically smallest coordinate wins, so results are unique.
class KdTree {
 public:
  struct Neighbor {
    std::size_t index;       // into the points passed to the constructor
    std::int64_t distance;   // squared Euclidean
  };

  explicit KdTree(std::span<const Voxel> points, std::size_t leafSize = 16);

  std::size_t size() const { return points_.size(); }
  const Voxel& point(std::size_t index) const { return points_[index]; }

  /// Requires a nonempty tree.
  Neighbor nearest(const Voxel& query) const;

  /// Up to k neighbors ordered by (distance, coordinate).
  std::vector<Neighbor> nearest_k(const Voxel& query, std::size_t k) const;

 private:
  struct Node {
    std::uint32_t begin, end;  // range in order_
    std::int32_t left = -1, right = -1;
    std::int32_t split = 0;
    std::uint8_t axis = 0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  template <typename Visit>
  void search(std::int32_t node, const Voxel& query, Visit& visit) const;

  std::vector<Voxel> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::size_t leafSize_;
};

/// Runs body(i) for i in [0, n) across worker threads; each index is
/// handled exactly once and results must be written to disjoint slots.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace pcinr
