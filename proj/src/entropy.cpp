#include "pcinr/entropy.hpp"

#include "pcinr/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <limits>
#include <string>

namespace pcinr {

namespace {

constexpr int kProbBits = 12;
constexpr std::uint32_t kProbOne = 1u << kProbBits;
constexpr int kAdaptShift = 5;
constexpr std::uint32_t kTop = 1u << 24;
constexpr std::uint8_t kCheckByte = 0xA5;

}  // namespace

void RangeEncoder::shift_low() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t pending = cache_;
    do {
      out_.push_back(static_cast<std::uint8_t>(pending + carry));
      pending = 0xFF;
    } while (--cacheSize_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  }
  ++cacheSize_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

void RangeEncoder::normalize() {
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::encode(BitModel& model, int bit) {
  const std::uint32_t bound = (range_ >> kProbBits) * model.p0;
  if (bit == 0) {
    range_ = bound;
    model.p0 = static_cast<std::uint16_t>(model.p0 + ((kProbOne - model.p0) >> kAdaptShift));
  } else {
    low_ += bound;
    range_ -= bound;
    model.p0 = static_cast<std::uint16_t>(model.p0 - (model.p0 >> kAdaptShift));
  }
  normalize();
}

void RangeEncoder::encode_bypass(std::uint32_t value, int bits) {
  for (int i = bits - 1; i >= 0; --i) {
    range_ >>= 1;
    if ((value >> i) & 1u) low_ += range_;
    normalize();
  }
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  encode_bypass(kCheckByte, 8);
  for (int i = 0; i < 5; ++i) shift_low();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
  for (int i = 0; i < 5; ++i) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  if (pos_ >= bytes_.size()) throw Error(ErrorKind::CoderExhausted, "entropy-coded payload ended early");
  return bytes_[pos_++];
}

void RangeDecoder::normalize() {
  while (range_ < kTop) {
    range_ <<= 8;
    code_ = (code_ << 8) | next_byte();
  }
}

int RangeDecoder::decode(BitModel& model) {
  const std::uint32_t bound = (range_ >> kProbBits) * model.p0;
  int bit;
  if (code_ < bound) {
    range_ = bound;
    model.p0 = static_cast<std::uint16_t>(model.p0 + ((kProbOne - model.p0) >> kAdaptShift));
    bit = 0;
  } else {
    code_ -= bound;
    range_ -= bound;
    model.p0 = static_cast<std::uint16_t>(model.p0 - (model.p0 >> kAdaptShift));
    bit = 1;
  }
  normalize();
  return bit;
}

std::uint32_t RangeDecoder::decode_bypass(int bits) {
  std::uint32_t value = 0;
  for (int i = 0; i < bits; ++i) {
    range_ >>= 1;
    std::uint32_t bit = 0;
    if (code_ >= range_) {
      code_ -= range_;
      bit = 1;
    }
    value = (value << 1) | bit;
    normalize();
  }
  return value;
}

void RangeDecoder::finish() {
  if (decode_bypass(8) != kCheckByte)
    throw Error(ErrorKind::CoderDesync, "entropy decoder lost synchronization (check byte mismatch)");
  if (pos_ != bytes_.size())
    throw Error(ErrorKind::CoderDesync, "trailing bytes after entropy-coded payload");
}

namespace {

constexpr int kBinBuckets = 17;  // bin indices 0..15, then 16+ share one

struct IndexModels {
  std::array<BitModel, 2> zero;  // conditioned on whether the previous index was zero
  BitModel sign;
  std::array<BitModel, kBinBuckets> prefix;
  std::array<BitModel, kBinBuckets> suffix;
};

int bucket(int i) { return std::min(i, kBinBuckets - 1); }

}  // namespace

std::vector<std::uint8_t> encode_indices(std::span<const std::int32_t> indices) {
  RangeEncoder enc;
  IndexModels m;
  int previousNonzero = 0;
  for (const std::int32_t v : indices) {
    const int nonzero = v != 0;
    enc.encode(m.zero[previousNonzero], nonzero);
    previousNonzero = nonzero;
    if (!nonzero) continue;
    enc.encode(m.sign, v < 0);
    // |v| fits in 32 bits even for INT32_MIN.
    const std::uint64_t magnitude = v < 0 ? std::uint64_t{0} - static_cast<std::uint64_t>(std::int64_t{v})
                                          : static_cast<std::uint64_t>(v);
    // Exp-Golomb order 0 of magnitude - 1, i.e. of `magnitude` with k leading ones.
    const int k = std::bit_width(magnitude) - 1;
    for (int i = 0; i < k; ++i) enc.encode(m.prefix[bucket(i)], 1);
    enc.encode(m.prefix[bucket(k)], 0);
    for (int i = k - 1; i >= 0; --i) enc.encode(m.suffix[bucket(i)], static_cast<int>((magnitude >> i) & 1u));
  }
  return enc.finish();
}

std::vector<std::uint8_t> encode_indices(const IndexVector& indices) {
  return encode_indices(std::span<const std::int32_t>(indices.data(), static_cast<std::size_t>(indices.size())));
}

IndexVector decode_indices(std::span<const std::uint8_t> bytes, std::size_t count) {
  RangeDecoder dec(bytes);
  IndexModels m;
  IndexVector out(static_cast<Eigen::Index>(count));
  int previousNonzero = 0;
  for (std::size_t n = 0; n < count; ++n) {
    const int nonzero = dec.decode(m.zero[previousNonzero]);
    previousNonzero = nonzero;
    if (!nonzero) {
      out[static_cast<Eigen::Index>(n)] = 0;
      continue;
    }
    const int negative = dec.decode(m.sign);
    int k = 0;
    while (dec.decode(m.prefix[bucket(k)])) {
      if (++k > 31) throw Error(ErrorKind::CoderDesync, "index magnitude prefix too long");
    }
    std::uint64_t magnitude = 1;
    for (int i = k - 1; i >= 0; --i) magnitude = (magnitude << 1) | static_cast<std::uint64_t>(dec.decode(m.suffix[bucket(i)]));
    const std::int64_t value = negative ? -static_cast<std::int64_t>(magnitude) : static_cast<std::int64_t>(magnitude);
    if (value > std::numeric_limits<std::int32_t>::max() || value < std::numeric_limits<std::int32_t>::min())
      throw Error(ErrorKind::CoderDesync, "decoded index out of 32-bit range");
    out[static_cast<Eigen::Index>(n)] = static_cast<std::int32_t>(value);
  }
  dec.finish();
  return out;
}

std::uint64_t morton_encode(const Voxel& v, int bits) {
  std::uint64_t code = 0;
  for (int i = bits - 1; i >= 0; --i) {
    code = (code << 3) | (static_cast<std::uint64_t>((v.x() >> i) & 1) << 2) |
           (static_cast<std::uint64_t>((v.y() >> i) & 1) << 1) | static_cast<std::uint64_t>((v.z() >> i) & 1);
  }
  return code;
}

Voxel morton_decode(std::uint64_t code, int bits) {
  Voxel v = Voxel::Zero();
  for (int i = 0; i < bits; ++i) {
    v.z() |= static_cast<std::int32_t>((code >> (3 * i)) & 1u) << i;
    v.y() |= static_cast<std::int32_t>((code >> (3 * i + 1)) & 1u) << i;
    v.x() |= static_cast<std::int32_t>((code >> (3 * i + 2)) & 1u) << i;
  }
  return v;
}

namespace {

void check_cube_bits(int bits) {
  if (bits > kMaxCubeMapBits)
    throw Error(ErrorKind::InvalidArgument,
                "cube map supports at most " + std::to_string(kMaxCubeMapBits) + " cube bits");
}

// Context from the -x and -y neighbors, which precede the cell in Morton
// order because the code is monotone along each axis.
int cube_context(const std::vector<std::uint8_t>& bitmap, const Voxel& c, int bits) {
  int ctx = 0;
  if (c.x() > 0) ctx |= bitmap[morton_encode(Voxel(c.x() - 1, c.y(), c.z()), bits)];
  if (c.y() > 0) ctx |= bitmap[morton_encode(Voxel(c.x(), c.y() - 1, c.z()), bits)] << 1;
  return ctx;
}

}  // namespace

std::vector<std::uint8_t> encode_cube_map(const CubeSet& cubeSet) {
  const int bits = cubeSet.grid().cubeBits;
  check_cube_bits(bits);
  const std::uint64_t cells = std::uint64_t{1} << (3 * bits);
  std::vector<std::uint8_t> bitmap(cells, 0);
  for (const Voxel& c : cubeSet.cubes()) bitmap[morton_encode(c, bits)] = 1;
  RangeEncoder enc;
  std::array<BitModel, 4> models;
  for (std::uint64_t code = 0; code < cells; ++code) {
    const Voxel c = morton_decode(code, bits);
    enc.encode(models[static_cast<std::size_t>(cube_context(bitmap, c, bits))], bitmap[code]);
  }
  return enc.finish();
}

CubeSet decode_cube_map(std::span<const std::uint8_t> bytes, const GridParams& grid) {
  const int bits = grid.cubeBits;
  check_cube_bits(bits);
  const std::uint64_t cells = std::uint64_t{1} << (3 * bits);
  std::vector<std::uint8_t> bitmap(cells, 0);
  RangeDecoder dec(bytes);
  std::array<BitModel, 4> models;
  std::vector<Voxel> cubes;
  for (std::uint64_t code = 0; code < cells; ++code) {
    const Voxel c = morton_decode(code, bits);
    bitmap[code] = static_cast<std::uint8_t>(dec.decode(models[static_cast<std::size_t>(cube_context(bitmap, c, bits))]));
    if (bitmap[code]) cubes.push_back(c);
  }
  dec.finish();
  return CubeSet(grid, std::move(cubes));
}

}  // namespace pcinr
