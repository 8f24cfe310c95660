#pragma once

#include "pcinr/pointcloud.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace pcinr {

/// Reads ASCII or binary_little_endian PLY. Only the vertex element is
/// consumed: x, y, z (any numeric scalar type) and optional red, green, blue
/// (uchar). Other vertex properties are skipped. Errors carry the offending
/// header line or payload byte offset.
RawCloud parse_ply(std::span<const std::byte> bytes);

/// Binary little-endian PLY with float x,y,z and, when colors are present,
/// uchar red,green,blue.
std::vector<std::byte> write_ply(const VoxelizedCloud& cloud);
std::vector<std::byte> write_ply(const RawCloud& cloud);

RawCloud read_ply_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);
std::vector<std::byte> read_file(const std::filesystem::path& path);

}  // namespace pcinr
