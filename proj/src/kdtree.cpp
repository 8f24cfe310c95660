#include "pcinr/kdtree.hpp"

#include "pcinr/error.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <thread>

namespace pcinr {

KdTree::KdTree(std::span<const Voxel> points, std::size_t leafSize)
    : points_(points.begin(), points.end()), leafSize_(std::max<std::size_t>(leafSize, 1)) {
  if (points_.size() > std::numeric_limits<std::uint32_t>::max())
    throw Error(ErrorKind::InvalidArgument, "too many points for k-d tree");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / leafSize_ + 1);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end});
  if (end - begin <= leafSize_) return id;

  Voxel lo = points_[order_[begin]];
  Voxel hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  Eigen::Index axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all coincide; keep as leaf

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
  const std::int32_t split = points_[order_[mid]][axis];
  // Points left of mid are <= split, right of mid are >= split.
  nodes_[static_cast<std::size_t>(id)].axis = static_cast<std::uint8_t>(axis);
  nodes_[static_cast<std::size_t>(id)].split = split;
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

template <typename Visit>
void KdTree::search(std::int32_t nodeId, const Voxel& query, Visit& visit) const {
  const Node& node = nodes_[static_cast<std::size_t>(nodeId)];
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) visit.offer(order_[i]);
    return;
  }
  const std::int64_t diff = std::int64_t{query[node.axis]} - node.split;
  const std::int32_t nearSide = diff < 0 ? node.left : node.right;
  const std::int32_t farSide = diff < 0 ? node.right : node.left;
  search(nearSide, query, visit);
  // Equality must still descend: an equidistant point may win the tie-break.
  if (diff * diff <= visit.bound()) search(farSide, query, visit);
}

namespace {

bool better(std::int64_t d, const Voxel& p, std::int64_t bestD, const Voxel& bestP) {
  return d < bestD || (d == bestD && voxel_less(p, bestP));
}

}  // namespace

KdTree::Neighbor KdTree::nearest(const Voxel& query) const {
  if (points_.empty()) throw Error(ErrorKind::InvalidArgument, "nearest-neighbor query on empty set");
  struct Visit {
    const KdTree& tree;
    const Voxel& q;
    std::size_t best = std::numeric_limits<std::size_t>::max();
    std::int64_t bestD = std::numeric_limits<std::int64_t>::max();
    void offer(std::size_t i) {
      const std::int64_t d = squared_distance(tree.points_[i], q);
      if (best == std::numeric_limits<std::size_t>::max() ||
          better(d, tree.points_[i], bestD, tree.points_[best])) {
        best = i;
        bestD = d;
      }
    }
    std::int64_t bound() const { return bestD; }
  } visit{*this, query};
  search(0, query, visit);
  return {visit.best, visit.bestD};
}

std::vector<KdTree::Neighbor> KdTree::nearest_k(const Voxel& query, std::size_t k) const {
  std::vector<Neighbor> out;
  if (points_.empty() || k == 0) return out;
  struct Visit {
    const KdTree& tree;
    const Voxel& q;
    std::size_t k;
    std::vector<Neighbor>& heap;  // kept sorted, small k
    bool before(const Neighbor& a, const Neighbor& b) const {
      return better(a.distance, tree.points_[a.index], b.distance, tree.points_[b.index]);
    }
    void offer(std::size_t i) {
      const Neighbor n{i, squared_distance(tree.points_[i], q)};
      if (heap.size() == k && !before(n, heap.back())) return;
      auto pos = std::upper_bound(heap.begin(), heap.end(), n,
                                  [&](const Neighbor& a, const Neighbor& b) { return before(a, b); });
      heap.insert(pos, n);
      if (heap.size() > k) heap.pop_back();
    }
    std::int64_t bound() const {
      return heap.size() < k ? std::numeric_limits<std::int64_t>::max() : heap.back().distance;
    }
  } visit{*this, query, k, out};
  search(0, query, visit);
  return out;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(hw, (n + 4095) / 4096);
  if (workers <= 1) {
    if (n) body(0, n);
    return;
  }
  std::vector<std::thread> threads;
  const std::size_t per = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * per;
    const std::size_t hi = std::min(n, lo + per);
    if (lo >= hi) break;
    threads.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& t : threads) t.join();
}

}  // namespace pcinr
