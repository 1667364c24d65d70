#pragma once

// Small dense matrices (at most 3x3) stored row-major in a flat array,
// plus the handful of vector helpers the mesh code needs.

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace qcb {

inline constexpr int kMaxDim = 3;

using Point = std::array<double, kMaxDim>;

/// An m x n real matrix with m, n <= 3. Entries are stored row-major in the
/// first m*n slots of `data`; the Frobenius norm is the only norm used.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::array<double, kMaxDim * kMaxDim> data{};

  Matrix() = default;
  Matrix(int m, int n) : rows(m), cols(n) {
    if (m < 1 || n < 1 || m > kMaxDim || n > kMaxDim)
      throw std::invalid_argument("Matrix: dimensions must lie in [1,3]");
  }
  Matrix(int m, int n, std::initializer_list<double> row_major) : Matrix(m, n) {
    if (static_cast<int>(row_major.size()) != m * n)
      throw std::invalid_argument("Matrix: wrong number of entries");
    int i = 0;
    for (double v : row_major) data[i++] = v;
  }

  static Matrix zero(int m, int n) { return Matrix(m, n); }
  static Matrix identity(int n) {
    Matrix I(n, n);
    for (int i = 0; i < n; ++i) I(i, i) = 1.0;
    return I;
  }
  static Matrix from_flat(int m, int n, const std::vector<double>& flat) {
    Matrix A(m, n);
    if (static_cast<int>(flat.size()) != m * n)
      throw std::invalid_argument("Matrix: flat array has wrong length");
    for (int i = 0; i < m * n; ++i) A.data[i] = flat[i];
    return A;
  }

  int size() const { return rows * cols; }
  double& operator()(int i, int j) { return data[i * cols + j]; }
  double operator()(int i, int j) const { return data[i * cols + j]; }
  double& operator[](int k) { return data[k]; }
  double operator[](int k) const { return data[k]; }

  std::vector<double> flat() const { return {data.begin(), data.begin() + size()}; }

  Matrix& operator+=(const Matrix& o) {
    for (int k = 0; k < size(); ++k) data[k] += o.data[k];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    for (int k = 0; k < size(); ++k) data[k] -= o.data[k];
    return *this;
  }
  Matrix& operator*=(double a) {
    for (int k = 0; k < size(); ++k) data[k] *= a;
    return *this;
  }
  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }
  Matrix operator-() const { return -1.0 * *this; }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

inline double dot(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (int k = 0; k < a.size(); ++k) s += a.data[k] * b.data[k];
  return s;
}
inline double norm2(const Matrix& a) { return dot(a, a); }
inline double norm(const Matrix& a) { return std::sqrt(norm2(a)); }

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
/// (a ⊗ b)_{ij} = a_i b_j.
Matrix outer(const Point& a, int m, const Point& b, int n);
double det(const Matrix& a);
/// Cofactor matrix: (Cof s)_{ij} = (-1)^{i+j} det of s with row i, column j removed.
Matrix cofactor(const Matrix& a);
/// Inverse of a square matrix; throws on (numerically) singular input.
Matrix inverse(const Matrix& a);
/// Numerical rank by fully pivoted elimination (tolerance relative to max entry).
int rank(const Matrix& a, double rel_tol = 1e-10);

inline double dot(const Point& a, const Point& b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}
inline double norm(const Point& a, int n) { return std::sqrt(dot(a, a, n)); }
inline Point sub(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Point add(const Point& a, const Point& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Point scale(const Point& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }

/// Orthonormal basis of R^n whose last column is the unit vector `rho`.
/// Columns are returned as points; frame[n-1] == rho.
std::array<Point, kMaxDim> frame_with_last(const Point& rho, int n);

}  // namespace qcb
