#pragma once

#include <cstddef>
#include <functional>
#include <random>

namespace test_util {

// Midpoint-rule quadrature over uniform panels; the independent oracle for
// the closed-form distribution moments.
inline double midpoint_integral(const std::function<double(double)>& fn, double a,
                                double b, std::size_t panels) {
  const double h = (b - a) / static_cast<double>(panels);
  double acc = 0.0;
  for (std::size_t i = 0; i < panels; ++i)
    acc += fn(a + (static_cast<double>(i) + 0.5) * h);
  return acc * h;
}

inline std::mt19937_64 rng(std::uint64_t seed = 20240617ull) {
  return std::mt19937_64(seed);
}

}  // namespace test_util
