#pragma once

#include "pcinr/metrics.hpp"
#include "pcinr/pointcloud.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pcinr {

struct FrameMetrics {
  std::size_t originalPoints = 0;
  std::size_t reconstructedPoints = 0;
  Psnr d1 = Psnr::infinite();
  std::optional<Psnr> d2;  // absent when either cloud is too small for normals
  std::size_t d2FallbackPoints = 0;
  std::optional<Psnr> y;
  std::optional<Psnr> yuv;
  std::optional<double> bpp;
};

/// One record per frame plus the aggregate: PSNRs averaged over frames in dB
/// (infinite if any frame is), bpp = all stream bits / all original points.
struct MetricsReport {
  std::vector<FrameMetrics> frames;
  FrameMetrics aggregate;
};

/// Original and reconstructed frames pair up by position. Color metrics are
/// computed when both sides carry colors; bpp when the stream size is given.
MetricsReport evaluate(std::span<const VoxelizedCloud> originals, std::span<const VoxelizedCloud> reconstructed,
                       std::optional<std::uint64_t> streamBytes = std::nullopt);

/// Plain-text key=value records under [frame i] / [aggregate] headings.
std::string format_report(const MetricsReport& report);

/// Header row plus one row per frame and a final "all" row.
std::string format_report_csv(const MetricsReport& report);

}  // namespace pcinr
