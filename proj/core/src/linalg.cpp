#include "qcb/linalg.hpp"

#include <algorithm>

namespace qcb {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: shape mismatch");
  Matrix c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < b.cols; ++j) {
      double s = 0.0;
      for (int k = 0; k < a.cols; ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

Matrix outer(const Point& a, int m, const Point& b, int n) {
  Matrix c(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) c(i, j) = a[i] * b[j];
  return c;
}

double det(const Matrix& a) {
  if (a.rows != a.cols) throw std::invalid_argument("det: matrix is not square");
  switch (a.rows) {
    case 1:
      return a(0, 0);
    case 2:
      return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    default:
      return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
             a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
             a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
  }
}

Matrix cofactor(const Matrix& a) {
  if (a.rows != a.cols) throw std::invalid_argument("cofactor: matrix is not square");
  const int n = a.rows;
  Matrix c(n, n);
  if (n == 1) {
    c(0, 0) = 1.0;
    return c;
  }
  if (n == 2) {
    c(0, 0) = a(1, 1);
    c(0, 1) = -a(1, 0);
    c(1, 0) = -a(0, 1);
    c(1, 1) = a(0, 0);
    return c;
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int r0 = (i + 1) % 3, r1 = (i + 2) % 3;
      const int c0 = (j + 1) % 3, c1 = (j + 2) % 3;
      // cyclic index choice already carries the (-1)^{i+j} sign
      c(i, j) = a(r0, c0) * a(r1, c1) - a(r0, c1) * a(r1, c0);
    }
  return c;
}

Matrix inverse(const Matrix& a) {
  const double d = det(a);
  double scale = std::max(1e-300, std::pow(norm(a), a.rows));
  if (std::abs(d) <= 1e-14 * scale) throw std::domain_error("inverse: singular matrix");
  Matrix inv = transpose(cofactor(a));
  inv *= 1.0 / d;
  return inv;
}

int rank(const Matrix& a, double rel_tol) {
  // Gaussian elimination with full pivoting; pivots are compared with the
  // largest entry of the input.
  Matrix w = a;
  double amax = 0.0;
  for (int k = 0; k < a.size(); ++k) amax = std::max(amax, std::abs(a[k]));
  if (amax == 0.0) return 0;
  int r = 0;
  std::array<bool, kMaxDim> row_used{}, col_used{};
  for (int step = 0; step < std::min(a.rows, a.cols); ++step) {
    int pi = -1, pj = -1;
    double best = 0.0;
    for (int i = 0; i < a.rows; ++i)
      for (int j = 0; j < a.cols; ++j)
        if (!row_used[i] && !col_used[j] && std::abs(w(i, j)) > best) {
          best = std::abs(w(i, j));
          pi = i;
          pj = j;
        }
    if (pi < 0 || best <= rel_tol * amax) break;
    row_used[pi] = col_used[pj] = true;
    ++r;
    for (int i = 0; i < a.rows; ++i) {
      if (row_used[i]) continue;
      const double f = w(i, pj) / w(pi, pj);
      for (int j = 0; j < a.cols; ++j) w(i, j) -= f * w(pi, j);
    }
  }
  return r;
}

std::array<Point, kMaxDim> frame_with_last(const Point& rho, int n) {
  std::array<Point, kMaxDim> f{};
  f[n - 1] = rho;
  if (n == 1) return f;
  // Gram-Schmidt on the coordinate axes, skipping the one most aligned with rho.
  int skip = 0;
  for (int i = 1; i < n; ++i)
    if (std::abs(rho[i]) > std::abs(rho[skip])) skip = i;
  int col = 0;
  for (int axis = 0; axis < n && col < n - 1; ++axis) {
    if (axis == skip) continue;
    Point e{};
    e[axis] = 1.0;
    Point v = sub(e, scale(rho, dot(e, rho, n)));
    for (int j = 0; j < col; ++j) v = sub(v, scale(f[j], dot(v, f[j], n)));
    const double len = norm(v, n);
    f[col++] = scale(v, 1.0 / len);
  }
  return f;
}

}  // namespace qcb
