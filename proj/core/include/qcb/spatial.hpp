#pragma once

// Scalar weights g(x) on the closed domain: constants, coordinates, and
// cosine caps localized near chosen points.

#include <functional>
#include <string>

#include "qcb/linalg.hpp"

namespace qcb {

struct SpatialFunction {
  std::string name;
  std::function<double(const Point&)> f;
  std::string spec_json;

  double operator()(const Point& x) const { return f(x); }
};

SpatialFunction constant_weight(double c);
SpatialFunction coordinate_weight(int i);
/// 1/2 (1 + cos(pi d / r)) for d = |x - center| < r, zero beyond.
SpatialFunction bump_weight(const Point& center, double radius);
/// 1 for d <= r1, cosine decay to 0 at d = r2.
SpatialFunction plateau_weight(const Point& center, double r1, double r2);

double plateau(double d, double r1, double r2);

}  // namespace qcb
