#pragma once

#include "pcinr/network.hpp"
#include "pcinr/pointcloud.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pcinr {

inline constexpr std::array<std::uint8_t, 4> kStreamMagic = {'P', 'I', 'N', 'R'};
inline constexpr std::uint16_t kStreamVersion = 1;

enum class CodingMode : std::uint8_t { Static = 0, Intra = 1, Residual = 2, Curve = 3, FourD = 4 };

const char* to_string(CodingMode mode);
/// Accepts "static", "intra", "residual", "curve", "4d"/"fourd".
CodingMode parse_coding_mode(const std::string& name);

enum class SectionKind : std::uint8_t {
  FrameInfo = 1,     // threshold and voxel transform of one frame
  CubeMap = 2,       // non-empty cube bitmap of one frame
  GeomParams = 3,    // entropy-coded occupancy network indices
  GeomResidual = 4,  // index deltas against the previous frame
  GeomControl = 5,   // one control-point network (index = control point)
  AttrParams = 6,
  AttrResidual = 7,
  AttrControl = 8,
};

const char* to_string(SectionKind kind);

struct StreamHeader {
  CodingMode mode = CodingMode::Static;
  int resolutionBits = 10;
  int cubeBits = 5;
  std::uint32_t frameCount = 1;
  int controlPoints = 0;
  bool hasAttributes = false;
  NetworkArch geometryArch = NetworkArch::occupancy();
  NetworkArch colorArch = NetworkArch::color();
  double geometryStep = 1.0 / 1024;
  double colorStep = 1.0 / 4096;
  friend bool operator==(const StreamHeader&, const StreamHeader&) = default;
};

struct Section {
  SectionKind kind;
  std::uint16_t frame = 0;
  std::uint8_t index = 0;
  std::vector<std::uint8_t> payload;
  friend bool operator==(const Section&, const Section&) = default;
};

struct ContainerParts {
  StreamHeader header;
  std::vector<Section> sections;
  friend bool operator==(const ContainerParts&, const ContainerParts&) = default;
};

/// Bytes before the section table: magic, version, header fields, count.
inline constexpr std::size_t kHeaderBytes = 4 + 2 + 10 + 2 * 19 + 16 + 4;
/// kind u8, frame u16, index u8, length u32.
inline constexpr std::size_t kSectionEntryBytes = 8;

/// Serializes little-endian with fixed field widths. Throws InvalidArgument
/// for values that do not fit their fields.
std::vector<std::uint8_t> assemble(const ContainerParts& parts);

/// Throws StreamBadMagic, StreamVersion, StreamOverrun or StreamMalformed.
ContainerParts disassemble(std::span<const std::uint8_t> bytes);

/// kHeaderBytes + table; the assembled size is this plus all payloads.
std::size_t container_overhead_bytes(const ContainerParts& parts);
std::size_t assembled_size(const ContainerParts& parts);

/// Per-frame side information.
struct FrameInfo {
  std::uint16_t threshold = 32768;  // tau = threshold / 65536
  VoxelTransform transform;
  double tau() const { return threshold / 65536.0; }
  friend bool operator==(const FrameInfo&, const FrameInfo&) = default;
};

inline constexpr std::size_t kFrameInfoBytes = 2 + 6 * 8;

std::vector<std::uint8_t> encode_frame_info(const FrameInfo& info);
FrameInfo decode_frame_info(std::span<const std::uint8_t> bytes);

/// Little-endian primitive writer/reader shared by the container code.
class ByteWriter {
 public:
  void u8(std::uint64_t v);
  void u16(std::uint64_t v);
  void u32(std::uint64_t v);
  void f64(double v);
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  void put(std::uint64_t v, int width, std::uint64_t limit);
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  double f64();
  std::span<const std::uint8_t> take(std::size_t n);
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::uint64_t get(int width);
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace pcinr
