#include "qcb/catalog.hpp"

#include <sstream>

#include "qcb/errors.hpp"

namespace qcb {

Matrix matrix_from_json(const json& j, int m, int n) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "zero") return Matrix(m, n);
    if (s == "identity") {
      require(m == n, "identity needs a square shape");
      return Matrix::identity(n);
    }
    return matrix_from_json(json::parse(s), m, n);
  }
  require(j.is_array(), "matrix must be an array");
  if (!j.empty() && j[0].is_array()) {
    const Matrix a = matrix_from_json(j);
    require(a.rows == m && a.cols == n, "matrix has shape " + std::to_string(a.rows) + "x" +
                                            std::to_string(a.cols) + ", expected " + std::to_string(m) +
                                            "x" + std::to_string(n));
    return a;
  }
  return Matrix::from_flat(m, n, j.get<std::vector<double>>());
}

Matrix matrix_from_json(const json& j) {
  require(j.is_array() && !j.empty() && j[0].is_array(), "matrix must be a nested row array");
  const int m = static_cast<int>(j.size());
  const int n = static_cast<int>(j[0].size());
  Matrix a(m, n);
  for (int i = 0; i < m; ++i) {
    require(static_cast<int>(j[i].size()) == n, "matrix rows must have equal length");
    for (int c = 0; c < n; ++c) a(i, c) = j[i][c].get<double>();
  }
  return a;
}

json matrix_to_json(const Matrix& a) {
  json rows = json::array();
  for (int i = 0; i < a.rows; ++i) {
    json r = json::array();
    for (int c = 0; c < a.cols; ++c) r.push_back(a(i, c));
    rows.push_back(r);
  }
  return rows;
}

Point point_from_json(const json& j, int n) {
  if (j.is_string()) {
    int dim = 0;
    const Point p = point_from_string(j.get<std::string>(), &dim);
    require(dim == n, "point has dimension " + std::to_string(dim) + ", expected " + std::to_string(n));
    return p;
  }
  require(j.is_array() && static_cast<int>(j.size()) == n, "point must be an array of length " + std::to_string(n));
  Point p{};
  for (int i = 0; i < n; ++i) p[i] = j[i].get<double>();
  return p;
}

Point point_from_string(const std::string& s, int* dim) {
  std::string t;
  for (char c : s)
    if (c != '[' && c != ']' && c != ' ') t += c;
  std::stringstream ss(t);
  std::string item;
  Point p{};
  int k = 0;
  while (std::getline(ss, item, ',')) {
    require(k < kMaxDim, "point has more than 3 coordinates: " + s);
    try {
      p[k++] = std::stod(item);
    } catch (const std::exception&) {
      throw ValidationError("bad coordinate '" + item + "' in " + s);
    }
  }
  require(k >= 1, "empty point: " + s);
  if (dim) *dim = k;
  return p;
}

json point_to_json(const Point& p, int n) {
  json a = json::array();
  for (int i = 0; i < n; ++i) a.push_back(p[i]);
  return a;
}

Integrand make_integrand(const json& entry, int m, int n) {
  if (entry.is_string()) {
    const auto s = entry.get<std::string>();
    if (!s.empty() && s.front() == '{') return make_integrand(json::parse(s), m, n);
    return make_integrand(json{{"tag", s}}, m, n);
  }
  require(entry.is_object(), "integrand entry must be an object or a tag string");
  if (entry.contains("scale")) {
    require(entry.contains("of"), "scaled integrand needs 'of'");
    return make_integrand(entry.at("of"), m, n).scaled(entry.at("scale").get<double>());
  }
  if (entry.contains("recession_of")) return make_integrand(entry.at("recession_of"), m, n).recession_integrand();
  require(entry.contains("tag"), "integrand entry needs a 'tag'");
  const auto tag = entry.at("tag").get<std::string>();
  m = entry.value("m", m);
  n = entry.value("n", n);
  const double p = entry.value("p", 2.0);

  if (tag == "affine") {
    const Matrix L = entry.contains("L") ? matrix_from_json(entry.at("L"), m, n) : Matrix::identity(n);
    return affine(L, entry.value("c", 0.0), p);
  }
  if (tag == "power-norm")
    return power_norm(m, n, p, entry.value("coef", 1.0), entry.value("shift", 0.0));
  if (tag == "mass") return power_norm(m, n, p, 1.0, 1.0);
  if (tag == "double-well") {
    Matrix A(m, n), B(m, n);
    if (entry.contains("A") || entry.contains("B")) {
      A = matrix_from_json(entry.at("A"), m, n);
      B = matrix_from_json(entry.at("B"), m, n);
    } else {
      A(0, 0) = -1.0;
      B(0, 0) = 1.0;
    }
    return double_well(A, B);
  }
  if (tag == "quartic-well") return quartic_well(m, n);
  if (tag == "determinant" || tag == "det") return determinant(entry.value("n", n));
  if (tag == "det2") return determinant(2);
  if (tag == "det3") return determinant(3);
  if (tag == "cofactor-contraction") {
    const Point a = entry.contains("a") ? point_from_json(entry.at("a"), 3) : Point{1, 0, 0};
    const Point rho = entry.contains("rho") ? point_from_json(entry.at("rho"), 3) : Point{0, 0, 1};
    return cofactor_contraction(a, rho);
  }
  if (tag == "custom") throw ValidationError("custom integrands can only be constructed in code");
  throw ValidationError("unknown integrand tag: " + tag);
}

SpatialFunction make_weight(const json& entry) {
  if (entry.is_number()) return constant_weight(entry.get<double>());
  require(entry.is_object() && entry.contains("kind"), "weight entry needs a 'kind'");
  const auto kind = entry.at("kind").get<std::string>();
  auto center = [&] {
    const auto& c = entry.at("center");
    Point p{};
    for (std::size_t i = 0; i < c.size() && i < 3; ++i) p[i] = c[i].get<double>();
    return p;
  };
  if (kind == "const") return constant_weight(entry.value("value", 1.0));
  if (kind == "coord") return coordinate_weight(entry.at("index").get<int>());
  if (kind == "bump") return bump_weight(center(), entry.value("radius", 0.2));
  if (kind == "plateau") return plateau_weight(center(), entry.at("r1").get<double>(), entry.at("r2").get<double>());
  throw ValidationError("unknown weight kind: " + kind);
}

}  // namespace qcb
