#include "pcinr/dynamic.hpp"

#include "pcinr/entropy.hpp"
#include "pcinr/error.hpp"

#include <cstdio>
#include <limits>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

namespace pcinr {

namespace {

std::mutex logMutex;

void note(const CodecConfig& config, const std::string& message) {
  if (!config.log) return;
  const std::lock_guard lock(logMutex);
  config.log(message);
}

std::string format(const char* fmt, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

std::uint64_t attribute_seed(std::uint64_t seed) { return mix64(seed ^ streams::kAttributes); }

/// a + b with a range check, for residual index accumulation.
IndexVector add_indices(const IndexVector& a, const IndexVector& b, ErrorKind onOverflow) {
  if (a.size() != b.size()) throw Error(ErrorKind::ShapeMismatch, "index vectors differ in length");
  IndexVector out(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const std::int64_t s = std::int64_t{a[i]} + b[i];
    if (s > std::numeric_limits<std::int32_t>::max() || s < std::numeric_limits<std::int32_t>::min())
      throw Error(onOverflow, "accumulated parameter index overflows 32 bits");
    out[i] = static_cast<std::int32_t>(s);
  }
  return out;
}

NetworkParams<float> from_indices(const NetworkArch& arch, const IndexVector& indices, double step) {
  return dequantize(QuantizedParams{arch, step, indices});
}

Section make_section(SectionKind kind, std::size_t frame, std::size_t index, std::vector<std::uint8_t> payload) {
  return {kind, static_cast<std::uint16_t>(frame), static_cast<std::uint8_t>(index), std::move(payload)};
}

/// Encoder-side state shared by all modes.
struct GroupEncoder {
  std::span<const VoxelizedCloud> frames;
  const CodecConfig& config;
  std::size_t count;
  int resolutionBits;
  bool colors;
  std::vector<CubeSet> cubeSets;
  std::vector<Section> geometrySections, attributeSections;
  EncodedGroup out;

  GeomTrainConfig geometry_config(std::uint64_t seed) const {
    GeomTrainConfig g = config.geometry;
    g.train.seed = seed;
    return g;
  }
  AttrTrainConfig attribute_config(std::uint64_t seed) const {
    AttrTrainConfig a = config.attributes;
    a.train.seed = attribute_seed(seed);
    return a;
  }

  void finish_geometry(std::size_t t, const NetworkParams<float>& decoded, double time) {
    const auto probabilities = occupancy_probabilities(decoded, cubeSets[t], time);
    const ThresholdResult th =
        fine_tune_threshold(cubeSets[t], probabilities, frames[t], config.geometry.thresholdSteps);
    out.thresholds[t] = th;
    out.reconstruction[t] = reconstruct_from_probabilities(cubeSets[t], probabilities, th.code / 65536.0);
    note(config, format("frame %zu: tau %.6f (code %u), D1 %.4f dB, %zu of %zu points", t, th.tau,
                        static_cast<unsigned>(th.code), th.psnr, out.reconstruction[t].size(), frames[t].size()));
  }

  void finish_attributes(std::size_t t, const NetworkParams<float>& decoded, double time) {
    out.reconstruction[t] = reconstruct_attributes(decoded, out.reconstruction[t], time);
  }

  void log_loss(const char* what, std::size_t t, const TrainOutput& trained) {
    if (!trained.lossCurve.empty())
      note(config, format("frame %zu: %s loss %.6g after %lld steps", t, what, trained.lossCurve.back().loss,
                          static_cast<long long>(trained.lossCurve.back().step)));
  }
};

/// Frame t of an intra or residual group. Residual frames after the first
/// read the previous frame's decoded networks, so those run in order; intra
/// frames only touch their own slots and may run concurrently.
void encode_frame(GroupEncoder& g, std::size_t t, bool residual) {
  const CodecConfig& c = g.config;
  const std::uint64_t seed = c.seed + t;
  const bool delta = residual && t > 0;
  std::optional<NetworkParams<float>> prevGeom, prevAttr;
  if (delta) prevGeom = from_indices(c.geometryArch, g.out.geometryIndices[t - 1], c.geometry.stepSize);

  TrainOutput geom = train_geometry(g.frames[t], g.cubeSets[t], c.geometryArch, g.geometry_config(seed), prevGeom,
                                    c.freshResidualInit);
  g.log_loss("geometry", t, geom);
  IndexVector indices;
  if (delta) {
    const IndexVector d = quantize_values(geom.nets[0].values - prevGeom->values, c.geometry.stepSize);
    indices = add_indices(g.out.geometryIndices[t - 1], d, ErrorKind::InvalidArgument);
    g.geometrySections[t] = make_section(SectionKind::GeomResidual, t, 0, encode_indices(d));
  } else {
    indices = quantize_values(geom.nets[0].values, c.geometry.stepSize);
    g.geometrySections[t] = make_section(SectionKind::GeomParams, t, 0, encode_indices(indices));
  }
  const NetworkParams<float> decoded = from_indices(c.geometryArch, indices, c.geometry.stepSize);
  g.out.geometryIndices[t] = std::move(indices);
  g.finish_geometry(t, decoded, 0.0);
  if (t + 1 == g.count) g.out.geometryLoss = geom.lossCurve;

  if (!g.colors) return;
  if (delta) prevAttr = from_indices(c.colorArch, g.out.attributeIndices[t - 1], c.attributes.stepSize);
  const ColorTarget targets = build_color_targets(g.out.reconstruction[t], g.frames[t]);
  TrainOutput attr = train_attributes(targets, c.colorArch, g.attribute_config(seed), g.frames[t].size(), prevAttr,
                                      c.freshResidualInit);
  g.log_loss("attribute", t, attr);
  IndexVector aIndices;
  if (delta) {
    const IndexVector d = quantize_values(attr.nets[0].values - prevAttr->values, c.attributes.stepSize);
    aIndices = add_indices(g.out.attributeIndices[t - 1], d, ErrorKind::InvalidArgument);
    g.attributeSections[t] = make_section(SectionKind::AttrResidual, t, 0, encode_indices(d));
  } else {
    aIndices = quantize_values(attr.nets[0].values, c.attributes.stepSize);
    g.attributeSections[t] = make_section(SectionKind::AttrParams, t, 0, encode_indices(aIndices));
  }
  const NetworkParams<float> aDecoded = from_indices(c.colorArch, aIndices, c.attributes.stepSize);
  g.out.attributeIndices[t] = std::move(aIndices);
  g.finish_attributes(t, aDecoded, 0.0);
  if (t + 1 == g.count) g.out.attributeLoss = attr.lossCurve;
}

void encode_per_frame(GroupEncoder& g, bool residual) {
  g.geometrySections.resize(g.count);
  g.out.geometryIndices.resize(g.count);
  if (g.colors) {
    g.attributeSections.resize(g.count);
    g.out.attributeIndices.resize(g.count);
  }
  const std::size_t workers = residual ? 1 : std::clamp<std::size_t>(g.config.workers, 1, g.count);
  if (workers == 1) {
    for (std::size_t t = 0; t < g.count; ++t) encode_frame(g, t, residual);
    return;
  }
  std::vector<std::exception_ptr> failures(workers);
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t t = w; t < g.count; t += workers) encode_frame(g, t, false);
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
}

void encode_curve(GroupEncoder& g) {
  const CodecConfig& c = g.config;
  const auto frames = static_cast<std::int64_t>(g.count);
  const TrainOutput geom =
      train_geometry_curve(g.frames, g.cubeSets, c.geometryArch, g.geometry_config(c.seed), c.controlPoints);
  g.log_loss("geometry", 0, geom);
  g.out.geometryLoss = geom.lossCurve;
  std::vector<NetworkParams<float>> controls;
  for (std::size_t i = 0; i < geom.nets.size(); ++i) {
    IndexVector indices = quantize_values(geom.nets[i].values, c.geometry.stepSize);
    g.geometrySections.push_back(make_section(SectionKind::GeomControl, 0, i, encode_indices(indices)));
    controls.push_back(from_indices(c.geometryArch, indices, c.geometry.stepSize));
    g.out.geometryIndices.push_back(std::move(indices));
  }
  for (std::size_t t = 0; t < g.count; ++t)
    g.finish_geometry(t, bezier_sample(controls, static_cast<std::int64_t>(t), frames), 0.0);

  if (!g.colors) return;
  std::vector<ColorTarget> targets;
  std::uint64_t points = 0;
  for (std::size_t t = 0; t < g.count; ++t) {
    targets.push_back(build_color_targets(g.out.reconstruction[t], g.frames[t]));
    points += g.frames[t].size();
  }
  const TrainOutput attr =
      train_attributes_curve(targets, c.colorArch, g.attribute_config(c.seed), points, c.controlPoints);
  g.log_loss("attribute", 0, attr);
  g.out.attributeLoss = attr.lossCurve;
  std::vector<NetworkParams<float>> attrControls;
  for (std::size_t i = 0; i < attr.nets.size(); ++i) {
    IndexVector indices = quantize_values(attr.nets[i].values, c.attributes.stepSize);
    g.attributeSections.push_back(make_section(SectionKind::AttrControl, 0, i, encode_indices(indices)));
    attrControls.push_back(from_indices(c.colorArch, indices, c.attributes.stepSize));
    g.out.attributeIndices.push_back(std::move(indices));
  }
  for (std::size_t t = 0; t < g.count; ++t)
    g.finish_attributes(t, bezier_sample(attrControls, static_cast<std::int64_t>(t), frames), 0.0);
}

void encode_4d(GroupEncoder& g, const NetworkArch& geometryArch, const NetworkArch& colorArch) {
  const CodecConfig& c = g.config;
  const auto frames = static_cast<std::int64_t>(g.count);
  const TrainOutput geom = train_geometry_4d(g.frames, g.cubeSets, geometryArch, g.geometry_config(c.seed));
  g.log_loss("geometry", 0, geom);
  g.out.geometryLoss = geom.lossCurve;
  IndexVector indices = quantize_values(geom.nets[0].values, c.geometry.stepSize);
  g.geometrySections.push_back(make_section(SectionKind::GeomParams, 0, 0, encode_indices(indices)));
  const NetworkParams<float> decoded = from_indices(geometryArch, indices, c.geometry.stepSize);
  g.out.geometryIndices.push_back(std::move(indices));
  for (std::size_t t = 0; t < g.count; ++t)
    g.finish_geometry(t, decoded, normalize_time(static_cast<std::int64_t>(t), frames));

  if (!g.colors) return;
  std::vector<ColorTarget> targets;
  std::uint64_t points = 0;
  for (std::size_t t = 0; t < g.count; ++t) {
    targets.push_back(build_color_targets(g.out.reconstruction[t], g.frames[t]));
    points += g.frames[t].size();
  }
  const TrainOutput attr = train_attributes_4d(targets, colorArch, g.attribute_config(c.seed), points);
  g.log_loss("attribute", 0, attr);
  g.out.attributeLoss = attr.lossCurve;
  IndexVector aIndices = quantize_values(attr.nets[0].values, c.attributes.stepSize);
  g.attributeSections.push_back(make_section(SectionKind::AttrParams, 0, 0, encode_indices(aIndices)));
  const NetworkParams<float> aDecoded = from_indices(colorArch, aIndices, c.attributes.stepSize);
  g.out.attributeIndices.push_back(std::move(aIndices));
  for (std::size_t t = 0; t < g.count; ++t)
    g.finish_attributes(t, aDecoded, normalize_time(static_cast<std::int64_t>(t), frames));
}

/// Spatio-temporal variant of an architecture; a single frame keeps the
/// 3D network so it codes exactly like a static cloud.
NetworkArch temporal_arch(NetworkArch arch, std::size_t frames, int temporalLevels) {
  if (frames > 1) {
    arch.inputDim = 4;
    arch.posencLevelsTemporal = temporalLevels;
  } else {
    arch.inputDim = 3;
    arch.posencLevelsTemporal = 0;
  }
  return arch;
}

}  // namespace

EncodedGroup encode_group(std::span<const VoxelizedCloud> frames, std::span<const VoxelTransform> transforms,
                          const CodecConfig& config) {
  if (frames.empty()) throw Error(ErrorKind::InvalidArgument, "no frames to encode");
  if (frames.size() > 0xFFFF) throw Error(ErrorKind::InvalidArgument, "at most 65535 frames per group");
  if (!transforms.empty() && transforms.size() != frames.size())
    throw Error(ErrorKind::InvalidArgument, "one transform per frame required");
  const int bits = frames.front().resolution_bits();
  const bool allColored = std::all_of(frames.begin(), frames.end(), [](const auto& f) { return f.has_colors(); });
  for (const auto& f : frames) {
    if (f.resolution_bits() != bits) throw Error(ErrorKind::InvalidArgument, "frames must share one resolution");
    if (f.empty()) throw Error(ErrorKind::InvalidArgument, "cannot encode an empty frame");
  }
  if (config.cubeBits < 0 || config.cubeBits > bits)
    throw Error(ErrorKind::InvalidArgument, "cube bits M must lie in [0, N]");
  if (config.cubeBits > kMaxCubeMapBits)
    throw Error(ErrorKind::InvalidArgument, "cube bits M above " + std::to_string(kMaxCubeMapBits) + " unsupported");
  if (config.mode == CodingMode::Static && frames.size() != 1)
    throw Error(ErrorKind::InvalidArgument, "static mode codes exactly one frame");
  if (config.mode == CodingMode::Curve) {
    if (frames.size() < 2) throw Error(ErrorKind::InvalidArgument, "curve mode needs at least two frames");
    if (config.controlPoints < 2 || static_cast<std::size_t>(config.controlPoints) > frames.size() ||
        config.controlPoints - 1 > kMaxBezierDegree)
      throw Error(ErrorKind::InvalidArgument, "curve mode needs 2 <= P <= min(T, 9) control points");
  }

  GroupEncoder g{frames, config, frames.size(), bits, allColored && config.codeAttributes, {}, {}, {}, {}};
  g.out.reconstruction.resize(frames.size());
  g.out.thresholds.resize(frames.size());
  for (const auto& f : frames) g.cubeSets.push_back(build_cube_set(f, config.cubeBits));

  StreamHeader header;
  header.mode = config.mode;
  header.resolutionBits = bits;
  header.cubeBits = config.cubeBits;
  header.frameCount = static_cast<std::uint32_t>(frames.size());
  header.controlPoints = config.mode == CodingMode::Curve ? config.controlPoints : 0;
  header.hasAttributes = g.colors;
  header.geometryArch = config.geometryArch;
  header.colorArch = config.colorArch;
  header.geometryStep = config.geometry.stepSize;
  header.colorStep = config.attributes.stepSize;

  switch (config.mode) {
    case CodingMode::Static:
    case CodingMode::Intra: encode_per_frame(g, false); break;
    case CodingMode::Residual: encode_per_frame(g, true); break;
    case CodingMode::Curve: encode_curve(g); break;
    case CodingMode::FourD:
      header.geometryArch = temporal_arch(config.geometryArch, frames.size(), config.temporalLevels);
      header.colorArch = temporal_arch(config.colorArch, frames.size(), config.temporalLevels);
      encode_4d(g, header.geometryArch, header.colorArch);
      break;
  }

  ContainerParts& parts = g.out.parts;
  parts.header = header;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    FrameInfo info;
    info.threshold = g.out.thresholds[t].code;
    info.transform = transforms.empty() ? VoxelTransform::identity() : transforms[t];
    parts.sections.push_back(make_section(SectionKind::FrameInfo, t, 0, encode_frame_info(info)));
    parts.sections.push_back(make_section(SectionKind::CubeMap, t, 0, encode_cube_map(g.cubeSets[t])));
  }
  for (auto& s : g.geometrySections) parts.sections.push_back(std::move(s));
  for (auto& s : g.attributeSections) parts.sections.push_back(std::move(s));
  g.out.stream = assemble(parts);
  return std::move(g.out);
}

namespace {

class SectionIndex {
 public:
  explicit SectionIndex(const ContainerParts& parts) {
    for (const auto& s : parts.sections)
      if (!map_.emplace(std::tuple{s.kind, s.frame, s.index}, &s.payload).second)
        throw Error(ErrorKind::StreamMalformed, std::string("duplicate ") + to_string(s.kind) + " section");
  }
  const std::vector<std::uint8_t>& get(SectionKind kind, std::size_t frame, std::size_t index = 0) const {
    auto it = map_.find({kind, static_cast<std::uint16_t>(frame), static_cast<std::uint8_t>(index)});
    if (it == map_.end())
      throw Error(ErrorKind::StreamMalformed, std::string("missing ") + to_string(kind) + " section for frame " +
                                                  std::to_string(frame));
    return *it->second;
  }

 private:
  std::map<std::tuple<SectionKind, std::uint16_t, std::uint8_t>, const std::vector<std::uint8_t>*> map_;
};

/// Per-frame network parameters for one network kind.
std::vector<NetworkParams<float>> decode_networks(const SectionIndex& sections, const StreamHeader& h,
                                                  bool attributes, std::vector<IndexVector>& indicesOut) {
  const NetworkArch& arch = attributes ? h.colorArch : h.geometryArch;
  const double step = attributes ? h.colorStep : h.geometryStep;
  const SectionKind full = attributes ? SectionKind::AttrParams : SectionKind::GeomParams;
  const SectionKind residual = attributes ? SectionKind::AttrResidual : SectionKind::GeomResidual;
  const SectionKind control = attributes ? SectionKind::AttrControl : SectionKind::GeomControl;
  const auto count = static_cast<std::size_t>(parameter_count(arch));
  const std::size_t frames = h.frameCount;
  std::vector<NetworkParams<float>> nets;

  switch (h.mode) {
    case CodingMode::Static:
    case CodingMode::Intra:
      for (std::size_t t = 0; t < frames; ++t) {
        indicesOut.push_back(decode_indices(sections.get(full, t), count));
        nets.push_back(from_indices(arch, indicesOut.back(), step));
      }
      break;
    case CodingMode::Residual:
      for (std::size_t t = 0; t < frames; ++t) {
        if (t == 0) {
          indicesOut.push_back(decode_indices(sections.get(full, 0), count));
        } else {
          const IndexVector d = decode_indices(sections.get(residual, t), count);
          indicesOut.push_back(add_indices(indicesOut.back(), d, ErrorKind::StreamMalformed));
        }
        nets.push_back(from_indices(arch, indicesOut.back(), step));
      }
      break;
    case CodingMode::Curve: {
      std::vector<NetworkParams<float>> controls;
      for (int i = 0; i < h.controlPoints; ++i) {
        indicesOut.push_back(decode_indices(sections.get(control, 0, static_cast<std::size_t>(i)), count));
        controls.push_back(from_indices(arch, indicesOut.back(), step));
      }
      for (std::size_t t = 0; t < frames; ++t)
        nets.push_back(bezier_sample(controls, static_cast<std::int64_t>(t), static_cast<std::int64_t>(frames)));
      break;
    }
    case CodingMode::FourD:
      indicesOut.push_back(decode_indices(sections.get(full, 0), count));
      nets.assign(frames, from_indices(arch, indicesOut.back(), step));
      break;
  }
  return nets;
}

}  // namespace

DecodedGroup decode_group(std::span<const std::uint8_t> stream) {
  DecodedGroup out;
  const ContainerParts parts = disassemble(stream);
  const StreamHeader& h = parts.header;
  out.header = h;
  const std::size_t frames = h.frameCount;
  if (h.mode == CodingMode::Static && frames != 1)
    throw Error(ErrorKind::StreamMalformed, "static stream with more than one frame");
  if (h.mode == CodingMode::Curve &&
      (h.controlPoints < 2 || h.controlPoints - 1 > kMaxBezierDegree || frames < 2))
    throw Error(ErrorKind::StreamMalformed, "invalid curve configuration in header");
  if (h.mode == CodingMode::FourD && frames > 1 && h.geometryArch.inputDim != 4)
    throw Error(ErrorKind::StreamMalformed, "multi-frame 4D stream without a 4D network");
  if (h.cubeBits > kMaxCubeMapBits) throw Error(ErrorKind::StreamMalformed, "unsupported cube bits in header");

  const SectionIndex sections(parts);
  const GridParams grid(h.resolutionBits, h.cubeBits);
  std::vector<CubeSet> cubeSets;
  for (std::size_t t = 0; t < frames; ++t) {
    out.frameInfo.push_back(decode_frame_info(sections.get(SectionKind::FrameInfo, t)));
    out.transforms.push_back(out.frameInfo.back().transform);
    cubeSets.push_back(decode_cube_map(sections.get(SectionKind::CubeMap, t), grid));
  }

  const auto geometry = decode_networks(sections, h, false, out.geometryIndices);
  std::vector<NetworkParams<float>> colors;
  if (h.hasAttributes) colors = decode_networks(sections, h, true, out.attributeIndices);

  for (std::size_t t = 0; t < frames; ++t) {
    const double time = normalize_time(static_cast<std::int64_t>(t), static_cast<std::int64_t>(frames));
    VoxelizedCloud cloud = reconstruct_geometry(geometry[t], cubeSets[t], out.frameInfo[t].tau(), time);
    if (h.hasAttributes) cloud = reconstruct_attributes(colors[t], cloud, time);
    out.frames.push_back(std::move(cloud));
  }
  return out;
}

}  // namespace pcinr
