#include "fixtures.hpp"
#include "pcinr/codec.hpp"
#include "pcinr/container.hpp"

#include <gtest/gtest.h>

using namespace pcinr;

namespace {

ContainerParts sample_parts(CounterRng& rng) {
  ContainerParts p;
  p.header.mode = static_cast<CodingMode>(rng.below(5));
  p.header.resolutionBits = 1 + static_cast<int>(rng.below(20));
  p.header.cubeBits = static_cast<int>(rng.below(static_cast<std::uint64_t>(p.header.resolutionBits) + 1));
  p.header.frameCount = 1 + static_cast<std::uint32_t>(rng.below(100));
  p.header.controlPoints = static_cast<int>(rng.below(10));
  p.header.hasAttributes = rng.below(2) == 1;
  p.header.geometryArch = pcinr::testing::tiny_arch(Activation::Relu, 1, static_cast<int>(rng.below(4)));
  p.header.colorArch = NetworkArch::color();
  p.header.colorArch.inputDim = 4;
  p.header.colorArch.posencLevelsTemporal = 3;
  p.header.colorArch.layerNormEnabled = false;
  p.header.geometryStep = rng.uniform() + 1e-3;
  const std::size_t n = rng.below(12);
  for (std::size_t i = 0; i < n; ++i) {
    Section s{static_cast<SectionKind>(1 + rng.below(8)), static_cast<std::uint16_t>(rng.below(65536)),
              static_cast<std::uint8_t>(rng.below(256)), {}};
    s.payload.resize(rng.below(300));
    for (auto& b : s.payload) b = static_cast<std::uint8_t>(rng());
    p.sections.push_back(std::move(s));
  }
  return p;
}

ErrorKind failure(std::span<const std::uint8_t> bytes) {
  try {
    disassemble(bytes);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(Container, RoundTripProperty) {
  CounterRng rng(1, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const ContainerParts p = sample_parts(rng);
    const auto bytes = assemble(p);
    EXPECT_EQ(bytes.size(), assembled_size(p));
    EXPECT_EQ(disassemble(bytes), p);
  }
}

TEST(Container, FixedLayout) {
  ContainerParts p;
  p.header.mode = CodingMode::Residual;
  p.header.resolutionBits = 10;
  p.header.cubeBits = 5;
  p.header.frameCount = 32;
  p.header.hasAttributes = true;
  p.sections.push_back({SectionKind::CubeMap, 3, 0, {0xAB, 0xCD}});
  const auto b = assemble(p);
  EXPECT_EQ(kHeaderBytes, 74u);
  ASSERT_EQ(b.size(), 74u + 8u + 2u);
  const std::vector<std::uint8_t> head = {'P', 'I', 'N', 'R', 1, 0, 2, 10, 5, 1, 32, 0, 0, 0};
  EXPECT_TRUE(std::equal(head.begin(), head.end(), b.begin()));
  // Section count just before the table, then kind, frame, index, length.
  const std::vector<std::uint8_t> table = {1, 0, 0, 0, 2, 3, 0, 0, 2, 0, 0, 0, 0xAB, 0xCD};
  EXPECT_TRUE(std::equal(table.begin(), table.end(), b.begin() + 70));
  EXPECT_EQ(container_overhead_bytes(p), 82u);
}

TEST(Container, Errors) {
  CounterRng rng(2, 0);
  ContainerParts p = sample_parts(rng);
  p.sections.push_back({SectionKind::GeomParams, 0, 0, {1, 2, 3}});
  const auto good = assemble(p);

  auto bad = good;
  bad[0] = 'X';
  EXPECT_EQ(failure(bad), ErrorKind::StreamBadMagic);
  bad = good;
  bad[4] = 2;
  EXPECT_EQ(failure(bad), ErrorKind::StreamVersion);
  bad = good;
  bad[6] = 9;
  EXPECT_EQ(failure(bad), ErrorKind::StreamMalformed);
  bad = good;
  bad.push_back(0);
  EXPECT_EQ(failure(bad), ErrorKind::StreamMalformed);
  bad = good;
  bad[74] = 0x7F;  // first section kind
  EXPECT_EQ(failure(bad), ErrorKind::StreamMalformed);
  for (std::size_t cut = 0; cut < good.size(); ++cut) {
    const ErrorKind k = failure(std::span(good).first(cut));
    EXPECT_TRUE(k == ErrorKind::StreamOverrun || (cut < 4 && k == ErrorKind::StreamBadMagic)) << "cut " << cut;
  }
}

TEST(Container, FieldOverflowIsRejected) {
  ContainerParts p;
  p.sections.push_back({SectionKind::FrameInfo, 0, 0, {}});
  p.header.geometryArch.interBlockWidth = 70000;
  EXPECT_THROW(assemble(p), Error);
}

TEST(Container, FrameInfoRoundTrip) {
  FrameInfo f;
  f.threshold = 12345;
  f.transform.scale = Eigen::Vector3d(0.5, 0.25, 1e-9);
  f.transform.offset = Eigen::Vector3d(-3, 7.125, 1e300);
  const auto bytes = encode_frame_info(f);
  EXPECT_EQ(bytes.size(), kFrameInfoBytes);
  EXPECT_EQ(decode_frame_info(bytes), f);
  EXPECT_DOUBLE_EQ(f.tau(), 12345 / 65536.0);
  EXPECT_THROW(decode_frame_info(std::span(bytes).first(49)), Error);
}

TEST(Container, ModeNames) {
  for (CodingMode m : {CodingMode::Static, CodingMode::Intra, CodingMode::Residual, CodingMode::Curve,
                       CodingMode::FourD})
    EXPECT_EQ(parse_coding_mode(to_string(m)), m);
  EXPECT_EQ(parse_coding_mode("fourd"), CodingMode::FourD);
  EXPECT_THROW(parse_coding_mode("video"), Error);
}

TEST(Container, SharesSumToWhole) {
  CounterRng rng(3, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const ContainerParts p = sample_parts(rng);
    const StreamSummary s = summarize(p);
    EXPECT_EQ(s.containerBytes + s.cubeMapBytes + s.thresholdBytes + s.transformBytes + s.geometryBytes +
                  s.attributeBytes,
              s.totalBytes);
    const std::string dump = describe_stream(p);
    EXPECT_NE(dump.find("magic: PINR"), std::string::npos);
    EXPECT_NE(dump.find("version: 1"), std::string::npos);
    EXPECT_NE(dump.find("side information (W + tau)"), std::string::npos);
  }
}
