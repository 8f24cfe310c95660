#pragma once

#include "pcinr/container.hpp"
#include "pcinr/dynamic.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pcinr {

/// Byte accounting of an assembled stream by what the bytes carry.
struct StreamSummary {
  std::uint64_t totalBytes = 0;
  std::uint64_t containerBytes = 0;  // fixed header and section table
  std::uint64_t cubeMapBytes = 0;    // W, all frames
  std::uint64_t thresholdBytes = 0;  // tau, 2 bytes per frame
  std::uint64_t transformBytes = 0;  // de-voxelization scale/offset
  std::uint64_t geometryBytes = 0;   // occupancy network payloads
  std::uint64_t attributeBytes = 0;  // color network payloads

  double share(std::uint64_t bytes) const {
    return totalBytes ? 100.0 * static_cast<double>(bytes) / static_cast<double>(totalBytes) : 0.0;
  }
  std::uint64_t side_information_bytes() const { return cubeMapBytes + thresholdBytes; }
};

StreamSummary summarize(const ContainerParts& parts);

/// Multi-line human-readable dump: magic, version, every header field, each
/// section with its size in bits and share, and the grouped totals.
std::string describe_stream(const ContainerParts& parts);

/// Grouped totals only, for the encoder log.
std::string describe_shares(const StreamSummary& summary);

}  // namespace pcinr
