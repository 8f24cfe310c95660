#include "pcinr/report.hpp"

#include "pcinr/error.hpp"

#include <charconv>
#include <sstream>

namespace pcinr {

namespace {

std::optional<Psnr> mean_psnr(const std::vector<FrameMetrics>& frames, std::optional<Psnr> FrameMetrics::*field) {
  double sum = 0;
  bool infinite = false;
  for (const auto& f : frames) {
    const auto& v = f.*field;
    if (!v) return std::nullopt;
    if (v->is_infinite()) infinite = true;
    else sum += v->db();
  }
  if (frames.empty()) return std::nullopt;
  return infinite ? Psnr::infinite() : Psnr::finite(sum / static_cast<double>(frames.size()));
}

// Shortest text that parses back to the same double.
std::string exact_number(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string optional_text(const std::optional<Psnr>& p) { return p ? p->str() : "na"; }

}  // namespace

MetricsReport evaluate(std::span<const VoxelizedCloud> originals, std::span<const VoxelizedCloud> reconstructed,
                       std::optional<std::uint64_t> streamBytes) {
  if (originals.size() != reconstructed.size())
    throw Error(ErrorKind::InvalidArgument, "frame count mismatch: " + std::to_string(originals.size()) +
                                                " originals vs " + std::to_string(reconstructed.size()) +
                                                " reconstructions");
  if (originals.empty()) throw Error(ErrorKind::InvalidArgument, "nothing to evaluate");
  MetricsReport report;
  std::uint64_t totalPoints = 0;
  for (std::size_t t = 0; t < originals.size(); ++t) {
    const VoxelizedCloud& a = originals[t];
    const VoxelizedCloud& b = reconstructed[t];
    FrameMetrics m;
    m.originalPoints = a.size();
    m.reconstructedPoints = b.size();
    m.d1 = d1_psnr(b, a);
    if (a.size() > kNormalNeighbors && b.size() > kNormalNeighbors) {
      const D2Result d2 = d2_psnr(b, a);
      m.d2 = d2.psnr;
      m.d2FallbackPoints = d2.fallbackPoints;
    }
    if (a.has_colors() && b.has_colors()) {
      const ColorPsnr c = yuv_psnr(b, a);
      m.y = c.y;
      m.yuv = c.yuv;
    }
    totalPoints += a.size();
    report.frames.push_back(m);
  }
  FrameMetrics& agg = report.aggregate;
  double d1Sum = 0;
  bool d1Infinite = false;
  for (const auto& f : report.frames) {
    agg.originalPoints += f.originalPoints;
    agg.reconstructedPoints += f.reconstructedPoints;
    agg.d2FallbackPoints += f.d2FallbackPoints;
    if (f.d1.is_infinite()) d1Infinite = true;
    else d1Sum += f.d1.db();
  }
  agg.d1 = d1Infinite ? Psnr::infinite() : Psnr::finite(d1Sum / static_cast<double>(report.frames.size()));
  agg.d2 = mean_psnr(report.frames, &FrameMetrics::d2);
  agg.y = mean_psnr(report.frames, &FrameMetrics::y);
  agg.yuv = mean_psnr(report.frames, &FrameMetrics::yuv);
  if (streamBytes) {
    // Frames of a group share their networks, so bits are only attributable
    // to the group; every record carries the group rate.
    agg.bpp = bits_per_point(*streamBytes, totalPoints);
    for (auto& f : report.frames) f.bpp = agg.bpp;
  }
  return report;
}

std::string format_report(const MetricsReport& report) {
  std::ostringstream o;
  auto record = [&](const FrameMetrics& m) {
    o << "original_points=" << m.originalPoints << "\n";
    o << "reconstructed_points=" << m.reconstructedPoints << "\n";
    o << "d1_psnr=" << m.d1.str() << "\n";
    o << "d2_psnr=" << optional_text(m.d2) << "\n";
    o << "d2_fallback_points=" << m.d2FallbackPoints << "\n";
    o << "y_psnr=" << optional_text(m.y) << "\n";
    o << "yuv_psnr=" << optional_text(m.yuv) << "\n";
    o << "bpp=" << (m.bpp ? exact_number(*m.bpp) : "na") << "\n";
  };
  for (std::size_t t = 0; t < report.frames.size(); ++t) {
    o << "[frame " << t << "]\n";
    record(report.frames[t]);
    o << "\n";
  }
  o << "[aggregate]\n";
  o << "frames=" << report.frames.size() << "\n";
  record(report.aggregate);
  return o.str();
}

std::string format_report_csv(const MetricsReport& report) {
  std::ostringstream o;
  o << "frame,original_points,reconstructed_points,d1_psnr,d2_psnr,d2_fallback_points,y_psnr,yuv_psnr,bpp\n";
  auto row = [&](const std::string& label, const FrameMetrics& m) {
    o << label << "," << m.originalPoints << "," << m.reconstructedPoints << "," << m.d1.str() << ","
      << optional_text(m.d2) << "," << m.d2FallbackPoints << "," << optional_text(m.y) << ","
      << optional_text(m.yuv) << "," << (m.bpp ? exact_number(*m.bpp) : "na") << "\n";
  };
  for (std::size_t t = 0; t < report.frames.size(); ++t) row(std::to_string(t), report.frames[t]);
  row("all", report.aggregate);
  return o.str();
}

}  // namespace pcinr
