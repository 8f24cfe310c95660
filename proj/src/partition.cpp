#include "pcinr/partition.hpp"

#include "pcinr/error.hpp"

#include <algorithm>

namespace pcinr {

GridParams::GridParams(int resolutionBits, int cubeBits)
    : resolutionBits(resolutionBits), cubeBits(cubeBits) {
  if (resolutionBits < 1 || resolutionBits > kMaxResolutionBits)
    throw Error(ErrorKind::InvalidArgument, "resolution bits out of range");
  if (cubeBits < 0 || cubeBits > resolutionBits)
    throw Error(ErrorKind::InvalidArgument,
                "cube bits M must satisfy 0 <= M <= N (got M=" + std::to_string(cubeBits) +
                    ", N=" + std::to_string(resolutionBits) + ")");
}

CubeSet::CubeSet(GridParams grid, std::vector<Voxel> cubes) : grid_(grid), cubes_(std::move(cubes)) {
  std::sort(cubes_.begin(), cubes_.end(), VoxelLess{});
  cubes_.erase(std::unique(cubes_.begin(), cubes_.end()), cubes_.end());
  const std::int32_t limit = std::int32_t{1} << grid_.cubeBits;
  index_.reserve(cubes_.size());
  for (const Voxel& c : cubes_) {
    if ((c.array() < 0).any() || (c.array() >= limit).any())
      throw Error(ErrorKind::InvalidArgument, "cube coordinate outside [0, 2^M)");
    index_.insert(voxel_key(c));
  }
}

CubeSet build_cube_set(const VoxelizedCloud& cloud, int cubeBits) {
  const GridParams grid(cloud.resolution_bits(), cubeBits);
  std::vector<Voxel> cubes;
  cubes.reserve(cloud.size());
  const int shift = grid.local_bits();
  for (const Voxel& v : cloud.points())
    cubes.emplace_back(v.x() >> shift, v.y() >> shift, v.z() >> shift);
  return CubeSet(grid, std::move(cubes));
}

std::uint64_t candidate_count(const CubeSet& cubeSet) {
  return cubeSet.grid().voxels_per_cube() * cubeSet.size();
}

bool contains(const CubeSet& cubeSet, const Voxel& voxel) {
  return cubeSet.contains_cube(cubeSet.cube_of(voxel));
}

Voxel sample_candidate(const CubeSet& cubeSet, CounterRng& rng) {
  const Voxel& cube = cubeSet.cubes()[rng.below(cubeSet.size())];
  const std::uint64_t edge = static_cast<std::uint64_t>(cubeSet.grid().cube_edge());
  const auto lx = static_cast<std::int32_t>(rng.below(edge));
  const auto ly = static_cast<std::int32_t>(rng.below(edge));
  const auto lz = static_cast<std::int32_t>(rng.below(edge));
  return Voxel(lx, ly, lz) + cube * cubeSet.grid().cube_edge();
}

Voxel CandidateRange::at(std::uint64_t position) const {
  const int lb = set_->grid().local_bits();
  const std::uint64_t perCube = set_->grid().voxels_per_cube();
  const Voxel& cube = set_->cubes()[position / perCube];
  const std::uint64_t local = position % perCube;
  const std::uint64_t mask = (std::uint64_t{1} << lb) - 1;
  // Local lexicographic order: z varies fastest.
  const auto lz = static_cast<std::int32_t>(local & mask);
  const auto ly = static_cast<std::int32_t>((local >> lb) & mask);
  const auto lx = static_cast<std::int32_t>(local >> (2 * lb));
  return Voxel(lx, ly, lz) + cube * set_->grid().cube_edge();
}

CandidateRange::iterator::iterator(const CubeSet* set, std::uint64_t position)
    : set_(set), position_(position) {
  refresh();
}

void CandidateRange::iterator::refresh() {
  if (set_ && position_ < candidate_count(*set_)) current_ = CandidateRange(*set_).at(position_);
}

CandidateRange::iterator& CandidateRange::iterator::operator++() {
  ++position_;
  refresh();
  return *this;
}

OccupancyIndex::OccupancyIndex(const VoxelizedCloud& cloud) {
  keys_.reserve(cloud.size() * 2);
  for (const Voxel& v : cloud.points()) keys_.insert(voxel_key(v));
}

}  // namespace pcinr
