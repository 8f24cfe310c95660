#pragma once

#include "pcinr/partition.hpp"
#include "pcinr/quantize.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pcinr {

/// Adaptive probability that the next bit is 0, in 1/4096 units.
struct BitModel {
  std::uint16_t p0 = 2048;
};

/// Binary range coder: 32-bit range, carry propagation through a cached
/// byte, byte-aligned output.
class RangeEncoder {
 public:
  void encode(BitModel& model, int bit);
  /// Equiprobable bits, most significant first.
  void encode_bypass(std::uint32_t value, int bits);
  /// Appends a check byte and flushes. The encoder is spent afterwards.
  std::vector<std::uint8_t> finish();

 private:
  void shift_low();
  void normalize();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cacheSize_ = 1;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  /// Throws CoderExhausted if the payload is shorter than the preamble.
  explicit RangeDecoder(std::span<const std::uint8_t> bytes);
  int decode(BitModel& model);
  std::uint32_t decode_bypass(int bits);
  /// Reads and verifies the check byte written by RangeEncoder::finish.
  void finish();

 private:
  std::uint8_t next_byte();
  void normalize();

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint32_t code_ = 0;
};

/// Lossless coding of signed quantization indices: zero flag, sign, and an
/// order-0 Exp-Golomb code of |v| - 1, all bins context-modeled.
std::vector<std::uint8_t> encode_indices(std::span<const std::int32_t> indices);
std::vector<std::uint8_t> encode_indices(const IndexVector& indices);

/// Throws CoderExhausted on a short payload and CoderDesync when the check
/// byte does not match.
IndexVector decode_indices(std::span<const std::uint8_t> bytes, std::size_t count);

/// Largest cube resolution the occupancy bitmap supports (2^24 cells).
inline constexpr int kMaxCubeMapBits = 8;

/// Occupancy bitmap over the 2^(3M) cube grid in Morton order, each bit
/// modeled on the already-coded -x and -y neighbors.
std::vector<std::uint8_t> encode_cube_map(const CubeSet& cubeSet);
CubeSet decode_cube_map(std::span<const std::uint8_t> bytes, const GridParams& grid);

/// Interleaves x, y, z bits (x most significant within each triple).
std::uint64_t morton_encode(const Voxel& v, int bits);
Voxel morton_decode(std::uint64_t code, int bits);

}  // namespace pcinr
