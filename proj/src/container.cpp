#include "pcinr/container.hpp"

#include "pcinr/error.hpp"

#include <algorithm>
#include <bit>
#include <cctype>

namespace pcinr {

const char* to_string(CodingMode mode) {
  switch (mode) {
    case CodingMode::Static: return "static";
    case CodingMode::Intra: return "intra";
    case CodingMode::Residual: return "residual";
    case CodingMode::Curve: return "curve";
    case CodingMode::FourD: return "4d";
  }
  return "unknown";
}

CodingMode parse_coding_mode(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "static") return CodingMode::Static;
  if (s == "intra") return CodingMode::Intra;
  if (s == "residual") return CodingMode::Residual;
  if (s == "curve") return CodingMode::Curve;
  if (s == "4d" || s == "fourd") return CodingMode::FourD;
  throw Error(ErrorKind::InvalidArgument, "unknown coding mode '" + name + "'");
}

const char* to_string(SectionKind kind) {
  switch (kind) {
    case SectionKind::FrameInfo: return "frame-info";
    case SectionKind::CubeMap: return "cube-map";
    case SectionKind::GeomParams: return "geometry-params";
    case SectionKind::GeomResidual: return "geometry-residual";
    case SectionKind::GeomControl: return "geometry-control";
    case SectionKind::AttrParams: return "attribute-params";
    case SectionKind::AttrResidual: return "attribute-residual";
    case SectionKind::AttrControl: return "attribute-control";
  }
  return "unknown";
}

void ByteWriter::put(std::uint64_t v, int width, std::uint64_t limit) {
  if (v > limit) throw Error(ErrorKind::InvalidArgument, "value does not fit its stream field");
  for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u8(std::uint64_t v) { put(v, 1, 0xFF); }
void ByteWriter::u16(std::uint64_t v) { put(v, 2, 0xFFFF); }
void ByteWriter::u32(std::uint64_t v) { put(v, 4, 0xFFFFFFFFu); }
void ByteWriter::f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8, ~std::uint64_t{0}); }

std::uint64_t ByteReader::get(int width) {
  if (remaining() < static_cast<std::size_t>(width))
    throw Error(ErrorKind::StreamOverrun, "stream ends inside a field at byte " + std::to_string(pos_));
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) v |= std::uint64_t{bytes_[pos_ + static_cast<std::size_t>(i)]} << (8 * i);
  pos_ += static_cast<std::size_t>(width);
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(get(8)); }

std::span<const std::uint8_t> ByteReader::take(std::size_t n) {
  if (remaining() < n)
    throw Error(ErrorKind::StreamOverrun, "section of " + std::to_string(n) + " bytes overruns the stream (" +
                                              std::to_string(remaining()) + " left)");
  auto out = bytes_.subspan(pos_, n);
  pos_ += n;
  return out;
}

namespace {

void write_arch(ByteWriter& w, const NetworkArch& a) {
  a.validate();
  w.u8(static_cast<std::uint64_t>(a.inputDim));
  w.u8(static_cast<std::uint64_t>(a.posencLevelsSpatial));
  w.u8(static_cast<std::uint64_t>(a.posencLevelsTemporal));
  w.u8(static_cast<std::uint64_t>(a.residualBlocks));
  w.u16(static_cast<std::uint64_t>(a.interBlockWidth));
  w.u16(static_cast<std::uint64_t>(a.intraBlockWidth));
  w.u8(static_cast<std::uint64_t>(a.outputDim));
  w.u8(static_cast<std::uint64_t>(a.coreActivation));
  w.u8(a.layerNormEnabled ? 1 : 0);
  w.f64(a.sineFrequency);
}

NetworkArch read_arch(ByteReader& r) {
  NetworkArch a;
  a.inputDim = r.u8();
  a.posencLevelsSpatial = r.u8();
  a.posencLevelsTemporal = r.u8();
  a.residualBlocks = r.u8();
  a.interBlockWidth = r.u16();
  a.intraBlockWidth = r.u16();
  a.outputDim = r.u8();
  const auto act = r.u8();
  const auto norm = r.u8();
  a.sineFrequency = r.f64();
  if (act > 1 || norm > 1) throw Error(ErrorKind::StreamMalformed, "invalid network descriptor flags");
  a.coreActivation = static_cast<Activation>(act);
  a.layerNormEnabled = norm != 0;
  try {
    a.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::StreamMalformed, std::string("invalid network descriptor: ") + e.what());
  }
  return a;
}

}  // namespace

std::size_t container_overhead_bytes(const ContainerParts& parts) {
  return kHeaderBytes + kSectionEntryBytes * parts.sections.size();
}

std::size_t assembled_size(const ContainerParts& parts) {
  std::size_t n = container_overhead_bytes(parts);
  for (const auto& s : parts.sections) n += s.payload.size();
  return n;
}

std::vector<std::uint8_t> assemble(const ContainerParts& parts) {
  const StreamHeader& h = parts.header;
  ByteWriter w;
  w.bytes(kStreamMagic);
  w.u16(kStreamVersion);
  w.u8(static_cast<std::uint64_t>(h.mode));
  w.u8(static_cast<std::uint64_t>(h.resolutionBits));
  w.u8(static_cast<std::uint64_t>(h.cubeBits));
  w.u8(h.hasAttributes ? 1 : 0);
  w.u32(h.frameCount);
  w.u8(static_cast<std::uint64_t>(h.controlPoints));
  w.u8(0);  // reserved
  write_arch(w, h.geometryArch);
  write_arch(w, h.colorArch);
  w.f64(h.geometryStep);
  w.f64(h.colorStep);
  w.u32(parts.sections.size());
  for (const auto& s : parts.sections) {
    w.u8(static_cast<std::uint64_t>(s.kind));
    w.u16(s.frame);
    w.u8(s.index);
    w.u32(s.payload.size());
  }
  for (const auto& s : parts.sections) w.bytes(s.payload);
  return std::move(w.data());
}

ContainerParts disassemble(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (bytes.size() < kStreamMagic.size() || !std::equal(kStreamMagic.begin(), kStreamMagic.end(), bytes.begin()))
    throw Error(ErrorKind::StreamBadMagic, "not a compressed point cloud stream (bad magic)");
  r.take(kStreamMagic.size());
  const auto version = r.u16();
  if (version != kStreamVersion)
    throw Error(ErrorKind::StreamVersion, "unsupported stream version " + std::to_string(version) +
                                              " (this build reads version " + std::to_string(kStreamVersion) + ")");
  ContainerParts parts;
  StreamHeader& h = parts.header;
  const auto mode = r.u8();
  if (mode > static_cast<std::uint8_t>(CodingMode::FourD))
    throw Error(ErrorKind::StreamMalformed, "unknown coding mode " + std::to_string(mode));
  h.mode = static_cast<CodingMode>(mode);
  h.resolutionBits = r.u8();
  h.cubeBits = r.u8();
  const auto flags = r.u8();
  if (flags > 1) throw Error(ErrorKind::StreamMalformed, "unknown header flags");
  h.hasAttributes = flags & 1;
  h.frameCount = r.u32();
  h.controlPoints = r.u8();
  r.u8();
  if (h.resolutionBits < 1 || h.resolutionBits > kMaxResolutionBits || h.cubeBits > h.resolutionBits)
    throw Error(ErrorKind::StreamMalformed, "invalid grid resolution in header");
  if (h.frameCount == 0) throw Error(ErrorKind::StreamMalformed, "stream declares zero frames");
  h.geometryArch = read_arch(r);
  h.colorArch = read_arch(r);
  h.geometryStep = r.f64();
  h.colorStep = r.f64();
  if (!(h.geometryStep > 0) || !(h.colorStep > 0))
    throw Error(ErrorKind::StreamMalformed, "non-positive quantization step in header");
  const auto count = r.u32();
  if (static_cast<std::uint64_t>(count) * kSectionEntryBytes > r.remaining())
    throw Error(ErrorKind::StreamOverrun, "section table overruns the stream");
  std::vector<std::uint32_t> lengths;
  parts.sections.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Section s;
    const auto kind = r.u8();
    if (kind < 1 || kind > static_cast<std::uint8_t>(SectionKind::AttrControl))
      throw Error(ErrorKind::StreamMalformed, "unknown section kind " + std::to_string(kind));
    s.kind = static_cast<SectionKind>(kind);
    s.frame = r.u16();
    s.index = r.u8();
    lengths.push_back(r.u32());
    parts.sections.push_back(std::move(s));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto payload = r.take(lengths[i]);
    parts.sections[i].payload.assign(payload.begin(), payload.end());
  }
  if (r.remaining() != 0)
    throw Error(ErrorKind::StreamMalformed, std::to_string(r.remaining()) + " trailing bytes after last section");
  return parts;
}

std::vector<std::uint8_t> encode_frame_info(const FrameInfo& info) {
  ByteWriter w;
  w.u16(info.threshold);
  for (int i = 0; i < 3; ++i) w.f64(info.transform.scale[i]);
  for (int i = 0; i < 3; ++i) w.f64(info.transform.offset[i]);
  return std::move(w.data());
}

FrameInfo decode_frame_info(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kFrameInfoBytes)
    throw Error(ErrorKind::StreamMalformed, "frame info section has " + std::to_string(bytes.size()) + " bytes");
  ByteReader r(bytes);
  FrameInfo info;
  info.threshold = r.u16();
  for (int i = 0; i < 3; ++i) info.transform.scale[i] = r.f64();
  for (int i = 0; i < 3; ++i) info.transform.offset[i] = r.f64();
  return info;
}

}  // namespace pcinr
