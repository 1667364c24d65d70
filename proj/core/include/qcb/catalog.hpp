#pragma once

// JSON front door for integrands, weights and matrices.

#include <nlohmann/json.hpp>

#include "qcb/integrands.hpp"
#include "qcb/spatial.hpp"

namespace qcb {

using json = nlohmann::json;

/// Accepts a nested row array, a flat array of length m*n, "zero" or "identity".
Matrix matrix_from_json(const json& j, int m, int n);
/// Nested rows; shape inferred.
Matrix matrix_from_json(const json& j);
json matrix_to_json(const Matrix& a);

Point point_from_json(const json& j, int n);
/// Parses "0,1" or "[0,1]" style strings.
Point point_from_string(const std::string& s, int* dim = nullptr);
json point_to_json(const Point& p, int n);

/// Builds an integrand from {"tag": ..., params...} or a bare tag string.
/// Dimensions missing from the entry default to (m, n).
Integrand make_integrand(const json& entry, int m = 2, int n = 2);

SpatialFunction make_weight(const json& entry);

}  // namespace qcb
