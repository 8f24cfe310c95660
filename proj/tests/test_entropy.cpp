#include "fixtures.hpp"
#include "pcinr/entropy.hpp"
#include "pcinr/error.hpp"

#include <gtest/gtest.h>

#include <limits>

using namespace pcinr;

namespace {

/// Index vectors shaped like quantized networks: mostly small, some zero
/// runs, occasional large magnitudes.
IndexVector random_indices(CounterRng& rng, std::size_t n) {
  IndexVector v(static_cast<Eigen::Index>(n));
  const int style = static_cast<int>(rng.below(4));
  for (auto& x : v) {
    const double u = rng.uniform();
    switch (style) {
      case 0: x = static_cast<std::int32_t>(rng.below(7)) - 3; break;
      case 1: x = u < 0.8 ? 0 : static_cast<std::int32_t>(rng.below(2001)) - 1000; break;
      case 2: x = static_cast<std::int32_t>(rng()); break;
      default: x = static_cast<std::int32_t>(std::round(std::log(u + 1e-300) * (rng.uniform() < 0.5 ? 20 : -20)));
    }
  }
  return v;
}

ErrorKind decode_failure(std::span<const std::uint8_t> bytes, std::size_t count) {
  try {
    decode_indices(bytes, count);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(Entropy, IndexRoundTripProperty) {
  CounterRng rng(1, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    const IndexVector v = random_indices(rng, rng.below(600));
    const auto bytes = encode_indices(v);
    EXPECT_EQ(decode_indices(bytes, static_cast<std::size_t>(v.size())), v) << "trial " << trial;
  }
}

TEST(Entropy, ExtremeValues) {
  IndexVector v(6);
  v << std::numeric_limits<std::int32_t>::max(), std::numeric_limits<std::int32_t>::min(), 0, 1, -1,
      std::numeric_limits<std::int32_t>::min() + 1;
  EXPECT_EQ(decode_indices(encode_indices(v), 6), v);
  EXPECT_EQ(decode_indices(encode_indices(IndexVector()), 0).size(), 0);
}

TEST(Entropy, SparseVectorsCompress) {
  IndexVector zeros = IndexVector::Zero(20000);
  EXPECT_LT(encode_indices(zeros).size(), 40u);
  CounterRng rng(2, 0);
  IndexVector mostlyZero = IndexVector::Zero(20000), dense(20000);
  for (Eigen::Index i = 0; i < dense.size(); ++i) {
    dense[i] = static_cast<std::int32_t>(rng.below(41)) - 20;
    if (i % 10 == 0) mostlyZero[i] = dense[i];
  }
  EXPECT_LT(encode_indices(mostlyZero).size(), encode_indices(dense).size());
}

TEST(Entropy, TruncationAndCorruptionAreDetected) {
  CounterRng rng(3, 0);
  IndexVector v(500);
  for (auto& x : v) x = static_cast<std::int32_t>(rng.below(201)) - 100;
  const auto bytes = encode_indices(v);
  for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
    const ErrorKind k = decode_failure(std::span(bytes).first(cut), 500);
    EXPECT_TRUE(k == ErrorKind::CoderExhausted || k == ErrorKind::CoderDesync) << "cut " << cut;
  }
  auto longer = bytes;
  longer.push_back(0);
  EXPECT_EQ(decode_failure(longer, 500), ErrorKind::CoderDesync);
  // Wrong count: the decoder reads into the check byte region.
  const ErrorKind k = decode_failure(bytes, 520);
  EXPECT_TRUE(k == ErrorKind::CoderExhausted || k == ErrorKind::CoderDesync);
  int detected = 0;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    auto flipped = bytes;
    flipped[i] ^= 0x40;
    try {
      detected += decode_indices(flipped, 500) != v;
    } catch (const Error&) {
      ++detected;
    }
  }
  // The last flushed bytes only pad the final interval and may go unnoticed.
  EXPECT_GE(detected, static_cast<int>(bytes.size()) - 4);
}

TEST(Entropy, RawCoderWithBypassBits) {
  CounterRng rng(4, 0);
  std::vector<int> bits;
  std::vector<std::uint32_t> words;
  RangeEncoder enc;
  BitModel m[3];
  for (int i = 0; i < 5000; ++i) {
    const int b = rng.uniform() < 0.9 ? 0 : 1;
    bits.push_back(b);
    enc.encode(m[i % 3], b);
    if (i % 97 == 0) {
      words.push_back(static_cast<std::uint32_t>(rng.below(1u << 20)));
      enc.encode_bypass(words.back(), 20);
    }
  }
  const auto bytes = enc.finish();
  EXPECT_LT(bytes.size(), 5000u / 8);  // skewed bits compress
  RangeDecoder dec(bytes);
  BitModel d[3];
  std::size_t w = 0;
  for (int i = 0; i < 5000; ++i) {
    ASSERT_EQ(dec.decode(d[i % 3]), bits[static_cast<std::size_t>(i)]);
    if (i % 97 == 0) ASSERT_EQ(dec.decode_bypass(20), words[w++]);
  }
  EXPECT_NO_THROW(dec.finish());
}

TEST(Entropy, MortonRoundTrip) {
  CounterRng rng(5, 0);
  for (int i = 0; i < 2000; ++i) {
    const int bits = 1 + static_cast<int>(rng.below(8));
    const Voxel v(static_cast<int>(rng.below(1u << bits)), static_cast<int>(rng.below(1u << bits)),
                  static_cast<int>(rng.below(1u << bits)));
    EXPECT_EQ(morton_decode(morton_encode(v, bits), bits), v);
  }
  EXPECT_EQ(morton_encode(Voxel(1, 0, 0), 1), 4u);
  EXPECT_EQ(morton_encode(Voxel(0, 0, 1), 1), 1u);
  EXPECT_EQ(morton_encode(Voxel(0, 0, 1), 2), 1u);
  EXPECT_EQ(morton_encode(Voxel(0, 0, 2), 2), 8u);
}

TEST(Entropy, CubeMapRoundTripProperty) {
  CounterRng rng(6, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = static_cast<int>(rng.below(6));
    const int n = m + 1 + static_cast<int>(rng.below(3));
    const VoxelizedCloud c = pcinr::testing::random_cloud(n, 1 + rng.below(200), static_cast<std::uint64_t>(trial));
    const CubeSet w = build_cube_set(c, m);
    const auto bytes = encode_cube_map(w);
    EXPECT_EQ(decode_cube_map(bytes, w.grid()), w) << "trial " << trial;
  }
}

TEST(Entropy, CubeMapLimit) {
  const VoxelizedCloud c = pcinr::testing::random_cloud(10, 10, 1);
  EXPECT_NO_THROW(encode_cube_map(build_cube_set(c, kMaxCubeMapBits)));
  EXPECT_THROW(encode_cube_map(build_cube_set(c, kMaxCubeMapBits + 1)), Error);
}
