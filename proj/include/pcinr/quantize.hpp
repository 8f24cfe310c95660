#pragma once

#include "pcinr/network.hpp"

#include <Eigen/Core>

#include <cstdint>

namespace pcinr {

using IndexVector = Eigen::Matrix<std::int32_t, Eigen::Dynamic, 1>;

/// Uniformly quantized network: parameter = index * stepSize.
struct QuantizedParams {
  NetworkArch arch;
  double stepSize = 1.0 / 1024;
  IndexVector indices;

  friend bool operator==(const QuantizedParams& a, const QuantizedParams& b) {
    return a.arch == b.arch && a.stepSize == b.stepSize && a.indices == b.indices;
  }
};

/// index = round-half-away-from-zero(theta / step).
QuantizedParams quantize(const NetworkParams<float>& params, double stepSize);
IndexVector quantize_values(const VectorX<float>& values, double stepSize);

NetworkParams<float> dequantize(const QuantizedParams& q);
VectorX<float> dequantize_values(const IndexVector& indices, double stepSize);

}  // namespace pcinr
