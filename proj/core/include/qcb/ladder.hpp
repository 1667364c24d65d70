#pragma once

#include <span>
#include <vector>

namespace qcb {

/// Limit read off a sequence of values sampled on a k-ladder.
struct LadderLimit {
  double value = 0.0;
  double error = 0.0;     ///< last increment |x_N - x_{N-1}|
  bool cauchy = true;     ///< false when the increments fail to shrink
  bool aitken = false;    ///< true when the Aitken step was applied
};

/// Aitken delta-squared on the last three values when the tail looks
/// geometric, last value otherwise.
LadderLimit extrapolate(std::span<const double> values);

/// Geometric ladder {1, 2, 4, ..., k_max}; k_max must be a power of two.
std::vector<int> geometric_ladder(int k_max, int k_min = 1);

}  // namespace qcb
