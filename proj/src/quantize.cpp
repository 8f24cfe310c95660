#include "pcinr/quantize.hpp"

#include "pcinr/error.hpp"

#include <cmath>
#include <limits>

namespace pcinr {

IndexVector quantize_values(const VectorX<float>& values, double stepSize) {
  if (!(stepSize > 0)) throw Error(ErrorKind::InvalidArgument, "quantization step must be positive");
  IndexVector out(values.size());
  constexpr double lo = std::numeric_limits<std::int32_t>::min();
  constexpr double hi = std::numeric_limits<std::int32_t>::max();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double q = std::round(static_cast<double>(values[i]) / stepSize);
    if (!(q >= lo && q <= hi))
      throw Error(ErrorKind::InvalidArgument, "parameter magnitude overflows 32-bit quantization index");
    out[i] = static_cast<std::int32_t>(q);
  }
  return out;
}

VectorX<float> dequantize_values(const IndexVector& indices, double stepSize) {
  return (indices.cast<double>() * stepSize).cast<float>();
}

QuantizedParams quantize(const NetworkParams<float>& params, double stepSize) {
  return {params.arch, stepSize, quantize_values(params.values, stepSize)};
}

NetworkParams<float> dequantize(const QuantizedParams& q) {
  if (q.indices.size() != parameter_count(q.arch))
    throw Error(ErrorKind::ShapeMismatch, "index count does not match architecture");
  return {q.arch, dequantize_values(q.indices, q.stepSize)};
}

}  // namespace pcinr
