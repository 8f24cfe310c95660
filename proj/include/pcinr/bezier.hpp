#pragma once

#include "pcinr/network.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace pcinr {

/// Highest curve degree; keeps every binomial coefficient exact in 64 bits.
inline constexpr int kMaxBezierDegree = 8;

std::uint64_t binomial(int n, int k);

/// Bernstein weights C(n,i) u^i (1-u)^(n-i) at u = t / (T - 1), i = 0..n.
/// Requires T >= 2, 0 <= t < T, 0 <= n <= kMaxBezierDegree.
std::vector<double> bernstein_weights(int degree, std::int64_t t, std::int64_t frames);

/// Elementwise weighted combination of the control networks at frame t,
/// accumulated in double and rounded once to float.
NetworkParams<float> bezier_sample(std::span<const NetworkParams<float>> controls, std::int64_t t,
                                   std::int64_t frames);

/// Same combination over raw parameter vectors.
VectorX<float> bezier_combine(std::span<const VectorX<float>> controls, std::span<const double> weights);

}  // namespace pcinr
