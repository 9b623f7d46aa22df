#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "flowcurv/field.hpp"

namespace flowcurv::test {

inline double rel_err(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline Vec3 random_point(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  const double x = u(rng), y = u(rng), z = u(rng);
  return {x, y, z};
}

}  // namespace flowcurv::test
