#pragma once

#include "pcinr/attributes.hpp"
#include "pcinr/bezier.hpp"
#include "pcinr/container.hpp"
#include "pcinr/geometry.hpp"
#include "pcinr/quantize.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace pcinr {

/// Everything the encoder needs besides the frames. Per-frame training
/// seeds are seed + t (intra, residual); curve and 4D use seed for the group.
struct CodecConfig {
  CodingMode mode = CodingMode::Static;
  int cubeBits = 5;
  NetworkArch geometryArch = NetworkArch::occupancy();
  NetworkArch colorArch = NetworkArch::color();
  GeomTrainConfig geometry;
  AttrTrainConfig attributes;
  int controlPoints = 3;   // curve mode
  int temporalLevels = 4;  // 4D mode
  bool freshResidualInit = false;
  bool codeAttributes = true;  // ignored when the frames carry no colors
  std::uint64_t seed = 0;
  std::size_t workers = 1;  // concurrent frames in intra mode
  /// Called from worker threads one message at a time.
  std::function<void(const std::string&)> log;
};

/// Encoder output plus what the decoder is expected to reproduce.
struct EncodedGroup {
  std::vector<std::uint8_t> stream;
  ContainerParts parts;
  std::vector<VoxelizedCloud> reconstruction;  // per frame, colored when coded
  std::vector<ThresholdResult> thresholds;
  /// Coded index vectors: one per frame (intra; residual after
  /// accumulation), one per control point (curve), or one (static, 4D).
  std::vector<IndexVector> geometryIndices;
  std::vector<IndexVector> attributeIndices;
  std::vector<LossSample> geometryLoss;  // last trained geometry network
  std::vector<LossSample> attributeLoss;
};

struct DecodedGroup {
  StreamHeader header;
  std::vector<VoxelizedCloud> frames;
  std::vector<VoxelTransform> transforms;
  std::vector<FrameInfo> frameInfo;
  std::vector<IndexVector> geometryIndices;
  std::vector<IndexVector> attributeIndices;
};

/// Encodes a group of frames sharing one resolution. Transforms (one per
/// frame, or empty for identity) are stored for de-voxelization only.
/// Throws EmptyReconstruction when the occupancy network learns nothing.
EncodedGroup encode_group(std::span<const VoxelizedCloud> frames, std::span<const VoxelTransform> transforms,
                          const CodecConfig& config);

/// Needs nothing but the stream.
DecodedGroup decode_group(std::span<const std::uint8_t> stream);

}  // namespace pcinr
