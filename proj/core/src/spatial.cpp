#include "qcb/spatial.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "qcb/errors.hpp"

namespace qcb {

namespace {
std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
std::string point(const Point& p) { return "[" + num(p[0]) + "," + num(p[1]) + "," + num(p[2]) + "]"; }
double dist(const Point& a, const Point& b) {
  const Point d = sub(a, b);
  return std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
}
}  // namespace

double plateau(double d, double r1, double r2) {
  if (d <= r1) return 1.0;
  if (d >= r2) return 0.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * (d - r1) / (r2 - r1)));
}

SpatialFunction constant_weight(double c) {
  return {"const", [c](const Point&) { return c; }, "{\"kind\":\"const\",\"value\":" + num(c) + "}"};
}

SpatialFunction coordinate_weight(int i) {
  require(i >= 0 && i < kMaxDim, "coordinate weight: index out of range");
  return {"x" + std::to_string(i + 1), [i](const Point& x) { return x[i]; },
          "{\"kind\":\"coord\",\"index\":" + std::to_string(i) + "}"};
}

SpatialFunction bump_weight(const Point& center, double radius) {
  require(radius > 0.0, "bump weight: radius must be positive");
  return {"bump", [center, radius](const Point& x) { return plateau(dist(x, center), 0.0, radius); },
          "{\"kind\":\"bump\",\"center\":" + point(center) + ",\"radius\":" + num(radius) + "}"};
}

SpatialFunction plateau_weight(const Point& center, double r1, double r2) {
  require(0.0 <= r1 && r1 < r2, "plateau weight: need 0 <= r1 < r2");
  return {"plateau", [center, r1, r2](const Point& x) { return plateau(dist(x, center), r1, r2); },
          "{\"kind\":\"plateau\",\"center\":" + point(center) + ",\"r1\":" + num(r1) + ",\"r2\":" + num(r2) + "}"};
}

}  // namespace qcb
