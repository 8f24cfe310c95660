#include "pcinr/bezier.hpp"

#include "pcinr/error.hpp"

#include <cmath>

namespace pcinr {

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::uint64_t c = 1;
  for (int i = 1; i <= k; ++i) c = c * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return c;
}

std::vector<double> bernstein_weights(int degree, std::int64_t t, std::int64_t frames) {
  if (frames < 2) throw Error(ErrorKind::InvalidArgument, "curve mode needs at least two frames");
  if (t < 0 || t >= frames) throw Error(ErrorKind::InvalidArgument, "frame index outside the group");
  if (degree < 0 || degree > kMaxBezierDegree)
    throw Error(ErrorKind::InvalidArgument, "curve degree must be between 0 and " + std::to_string(kMaxBezierDegree));
  const double u = static_cast<double>(t) / static_cast<double>(frames - 1);
  std::vector<double> w(static_cast<std::size_t>(degree) + 1);
  for (int i = 0; i <= degree; ++i)
    w[static_cast<std::size_t>(i)] =
        static_cast<double>(binomial(degree, i)) * std::pow(u, i) * std::pow(1.0 - u, degree - i);
  return w;
}

VectorX<float> bezier_combine(std::span<const VectorX<float>> controls, std::span<const double> weights) {
  if (controls.empty() || controls.size() != weights.size())
    throw Error(ErrorKind::ShapeMismatch, "control point and weight counts differ");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(controls.front().size());
  for (std::size_t i = 0; i < controls.size(); ++i) {
    if (controls[i].size() != acc.size()) throw Error(ErrorKind::ShapeMismatch, "control points differ in size");
    acc += weights[i] * controls[i].cast<double>();
  }
  return acc.cast<float>();
}

NetworkParams<float> bezier_sample(std::span<const NetworkParams<float>> controls, std::int64_t t,
                                   std::int64_t frames) {
  if (controls.size() < 2) throw Error(ErrorKind::InvalidArgument, "a curve needs at least two control points");
  const auto w = bernstein_weights(static_cast<int>(controls.size()) - 1, t, frames);
  std::vector<VectorX<float>> values;
  values.reserve(controls.size());
  for (const auto& c : controls) {
    if (!(c.arch == controls.front().arch)) throw Error(ErrorKind::ShapeMismatch, "control points differ in architecture");
    values.push_back(c.values);
  }
  return {controls.front().arch, bezier_combine(values, w)};
}

}  // namespace pcinr
