#pragma once

#include "pcinr/pointcloud.hpp"
#include "pcinr/rng.hpp"
#include "pcinr/types.hpp"

#include <cstdint>
#include <iterator>
#include <unordered_set>
#include <vector>

namespace pcinr {

struct GridParams {
  int resolutionBits = 10;  // N
  int cubeBits = 5;         // M

  GridParams() = default;
  GridParams(int resolutionBits, int cubeBits);

  int local_bits() const { return resolutionBits - cubeBits; }
  std::int32_t cube_edge() const { return std::int32_t{1} << local_bits(); }
  std::uint64_t voxels_per_cube() const { return std::uint64_t{1} << (3 * local_bits()); }

  friend bool operator==(const GridParams&, const GridParams&) = default;
};

/// Sorted, duplicate-free set of non-empty cube coordinates, with a hashed
/// index for O(1) membership.
class CubeSet {
 public:
  CubeSet() = default;
  CubeSet(GridParams grid, std::vector<Voxel> cubes);

  const GridParams& grid() const { return grid_; }
  const std::vector<Voxel>& cubes() const { return cubes_; }
  std::size_t size() const { return cubes_.size(); }
  bool empty() const { return cubes_.empty(); }

  Voxel cube_of(const Voxel& voxel) const {
    return Voxel(voxel.x() >> grid_.local_bits(), voxel.y() >> grid_.local_bits(),
                 voxel.z() >> grid_.local_bits());
  }
  bool contains_cube(const Voxel& cube) const { return index_.count(voxel_key(cube)) != 0; }

  friend bool operator==(const CubeSet& a, const CubeSet& b) {
    return a.grid_ == b.grid_ && a.cubes_ == b.cubes_;
  }

 private:
  GridParams grid_;
  std::vector<Voxel> cubes_;
  std::unordered_set<std::uint64_t> index_;
};

CubeSet build_cube_set(const VoxelizedCloud& cloud, int cubeBits);

/// |V| = 2^(3(N-M)) |W|.
std::uint64_t candidate_count(const CubeSet& cubeSet);

bool contains(const CubeSet& cubeSet, const Voxel& voxel);

/// Uniform draw from V: a cube uniformly from W, then a local offset.
Voxel sample_candidate(const CubeSet& cubeSet, CounterRng& rng);

/// Forward range over V in cube-major, then local lexicographic (x, y, z)
/// order. Holds only a cursor; nothing is materialized.
class CandidateRange {
 public:
  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Voxel;
    using difference_type = std::ptrdiff_t;
    using pointer = const Voxel*;
    using reference = const Voxel&;

    iterator() = default;
    iterator(const CubeSet* set, std::uint64_t position);

    reference operator*() const { return current_; }
    pointer operator->() const { return &current_; }
    iterator& operator++();
    iterator operator++(int) {
      iterator copy = *this;
      ++*this;
      return copy;
    }
    friend bool operator==(const iterator& a, const iterator& b) {
      return a.position_ == b.position_;
    }

   private:
    void refresh();

    const CubeSet* set_ = nullptr;
    std::uint64_t position_ = 0;
    Voxel current_ = Voxel::Zero();
  };

  explicit CandidateRange(const CubeSet& cubeSet) : set_(&cubeSet) {}
  iterator begin() const { return {set_, 0}; }
  iterator end() const { return {set_, candidate_count(*set_)}; }
  std::uint64_t size() const { return candidate_count(*set_); }

  /// The voxel at a given position of the traversal.
  Voxel at(std::uint64_t position) const;

 private:
  const CubeSet* set_;
};

inline CandidateRange iterate_candidates(const CubeSet& cubeSet) { return CandidateRange(cubeSet); }

/// Hash set of occupied voxels for O(1) occupancy labels.
class OccupancyIndex {
 public:
  explicit OccupancyIndex(const VoxelizedCloud& cloud);
  bool occupied(const Voxel& v) const { return keys_.count(voxel_key(v)) != 0; }

 private:
  std::unordered_set<std::uint64_t> keys_;
};

}  // namespace pcinr
