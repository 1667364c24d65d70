#include "qcb/ladder.hpp"

#include <algorithm>
#include <cmath>

#include "qcb/errors.hpp"

namespace qcb {

LadderLimit extrapolate(std::span<const double> values) {
  LadderLimit out;
  const std::size_t n = values.size();
  if (n == 0) return out;
  out.value = values[n - 1];
  if (n == 1) return out;
  const double scale = std::max(1.0, std::abs(values[n - 1]));
  const double roundoff = 1e-13 * scale;
  const double d2 = values[n - 1] - values[n - 2];
  out.error = std::abs(d2);
  if (n == 2) return out;
  const double d1 = values[n - 2] - values[n - 3];
  if (std::abs(d2) > std::abs(d1) + roundoff) out.cauchy = false;
  if (std::abs(d2) <= roundoff || std::abs(d1) <= roundoff) return out;
  const double ratio = d2 / d1;
  if (std::abs(ratio) < 0.95 && std::abs(d2 - d1) > roundoff) {
    out.value = values[n - 1] - d2 * d2 / (d2 - d1);
    out.aitken = true;
  }
  return out;
}

std::vector<int> geometric_ladder(int k_max, int k_min) {
  require(k_min >= 1 && k_max >= k_min, "k ladder: need 1 <= k_min <= k_max");
  std::vector<int> ks;
  for (int k = k_min; k <= k_max; k *= 2) ks.push_back(k);
  require(ks.back() == k_max, "k ladder: k_max must be k_min times a power of two");
  return ks;
}

}  // namespace qcb
