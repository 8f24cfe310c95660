#include "pcinr/codec.hpp"

#include <cstdio>
#include <sstream>

namespace pcinr {

StreamSummary summarize(const ContainerParts& parts) {
  StreamSummary s;
  s.totalBytes = assembled_size(parts);
  s.containerBytes = container_overhead_bytes(parts);
  for (const auto& sec : parts.sections) {
    const std::uint64_t n = sec.payload.size();
    switch (sec.kind) {
      case SectionKind::FrameInfo:
        // 2-byte threshold, the rest is the transform.
        s.thresholdBytes += std::min<std::uint64_t>(n, 2);
        s.transformBytes += n - std::min<std::uint64_t>(n, 2);
        break;
      case SectionKind::CubeMap: s.cubeMapBytes += n; break;
      case SectionKind::GeomParams:
      case SectionKind::GeomResidual:
      case SectionKind::GeomControl: s.geometryBytes += n; break;
      case SectionKind::AttrParams:
      case SectionKind::AttrResidual:
      case SectionKind::AttrControl: s.attributeBytes += n; break;
    }
  }
  return s;
}

namespace {

std::string line(const char* label, std::uint64_t bytes, const StreamSummary& s) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "  %-28s %12llu bits  %7.3f%%\n", label,
                static_cast<unsigned long long>(bytes * 8), s.share(bytes));
  return buf;
}

std::string arch_text(const NetworkArch& a) {
  std::ostringstream o;
  o << "input " << a.inputDim << "D, levels " << a.posencLevelsSpatial << "/" << a.posencLevelsTemporal << ", "
    << a.residualBlocks << " blocks, widths " << a.interBlockWidth << "/" << a.intraBlockWidth << ", output "
    << a.outputDim << ", core " << (a.coreActivation == Activation::Sine ? "sine" : "relu");
  if (a.coreActivation == Activation::Sine) o << " (omega " << a.sineFrequency << ")";
  o << ", layer norm " << (a.layerNormEnabled ? "on" : "off") << ", " << parameter_count(a) << " parameters";
  return o.str();
}

}  // namespace

std::string describe_shares(const StreamSummary& s) {
  std::string out;
  out += line("container header + table", s.containerBytes, s);
  out += line("cube map (W)", s.cubeMapBytes, s);
  out += line("threshold (tau)", s.thresholdBytes, s);
  out += line("voxel transform", s.transformBytes, s);
  out += line("geometry parameters", s.geometryBytes, s);
  out += line("attribute parameters", s.attributeBytes, s);
  out += line("side information (W + tau)", s.side_information_bytes(), s);
  out += line("total", s.totalBytes, s);
  return out;
}

std::string describe_stream(const ContainerParts& parts) {
  const StreamHeader& h = parts.header;
  const StreamSummary s = summarize(parts);
  std::ostringstream o;
  o << "magic: " << std::string(kStreamMagic.begin(), kStreamMagic.end()) << "\n";
  o << "version: " << kStreamVersion << "\n";
  o << "mode: " << to_string(h.mode) << "\n";
  o << "resolution bits (N): " << h.resolutionBits << "\n";
  o << "cube bits (M): " << h.cubeBits << "\n";
  o << "frames (T): " << h.frameCount << "\n";
  o << "control points (P): " << h.controlPoints << "\n";
  o << "attributes: " << (h.hasAttributes ? "yes" : "no") << "\n";
  o << "geometry network: " << arch_text(h.geometryArch) << "\n";
  o << "color network: " << arch_text(h.colorArch) << "\n";
  o << "geometry step: " << h.geometryStep << "\n";
  o << "color step: " << h.colorStep << "\n";
  o << "total: " << s.totalBytes << " bytes (" << s.totalBytes * 8 << " bits)\n";
  o << "sections: " << parts.sections.size() << "\n";
  for (const auto& sec : parts.sections) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "  %-20s frame %5u index %3u %12llu bits  %7.3f%%\n", to_string(sec.kind),
                  static_cast<unsigned>(sec.frame), static_cast<unsigned>(sec.index),
                  static_cast<unsigned long long>(sec.payload.size() * 8), s.share(sec.payload.size()));
    o << buf;
  }
  o << "shares:\n" << describe_shares(s);
  return o.str();
}

}  // namespace pcinr
