#pragma once

// Energy densities v : R^{m x n} -> R with p-growth, their recession
// functions, and the sphere-compactification split used by the measure
// estimators.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qcb/linalg.hpp"

namespace qcb {

enum class Family { Affine, PowerNorm, DoubleWell, Determinant, CofactorContraction, Custom };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

/// Immutable energy density. Copies share the underlying callables, which
/// must be reentrant; evaluation is safe from any number of threads.
class Integrand {
 public:
  using Eval = std::function<double(const Matrix&)>;
  using Grad = std::function<Matrix(const Matrix&)>;

  struct Parts {
    int m = 1;
    int n = 1;
    double p = 2.0;
    double growth_const = 1.0;  ///< C with |v(s)| <= C (1 + |s|^p)
    Family family = Family::Custom;
    std::string name;           ///< catalog name, e.g. "quartic-well"
    Eval eval;
    Grad grad;                  ///< optional analytic derivative dv/ds
    Eval recession;             ///< optional positively p-homogeneous v_inf
    Grad recession_grad;        ///< optional derivative of v_inf
    bool homogeneous = false;   ///< eval is itself positively p-homogeneous
    std::string spec_json;      ///< catalog entry that rebuilds this integrand
  };

  explicit Integrand(Parts parts);

  int m() const { return parts_->m; }
  int n() const { return parts_->n; }
  double p() const { return parts_->p; }
  double growth_const() const { return parts_->growth_const; }
  Family family() const { return parts_->family; }
  const std::string& name() const { return parts_->name; }
  const std::string& spec_json() const { return parts_->spec_json; }
  bool homogeneous() const { return parts_->homogeneous; }
  bool has_analytic_gradient() const { return static_cast<bool>(parts_->grad); }
  bool has_recession() const { return static_cast<bool>(parts_->recession); }

  Matrix zero() const { return Matrix(m(), n()); }

  double operator()(const Matrix& s) const { return parts_->eval(s); }

  /// Analytic gradient when available, otherwise central differences with
  /// step 1e-6 (1 + |s|).
  Matrix gradient(const Matrix& s) const;

  double recession(const Matrix& s) const;

  /// v_inf as an integrand of its own (positively p-homogeneous).
  Integrand recession_integrand() const;

  /// Same integrand with every value multiplied by `factor` (e.g. -v).
  Integrand scaled(double factor) const;

 private:
  std::shared_ptr<const Parts> parts_;
};

// Built-in families ----------------------------------------------------------

/// v(s) = L : s + c.  The recession (relative to p > 1) is identically zero.
Integrand affine(const Matrix& L, double c = 0.0, double p = 2.0);
/// v(s) = shift + coef |s|^p.  shift = 1, coef = 1 gives v_0 == 1.
Integrand power_norm(int m, int n, double p, double coef = 1.0, double shift = 0.0);
/// v(s) = min(|s - A|^2, |s - B|^2) with B - A of rank one.
Integrand double_well(const Matrix& A, const Matrix& B);
/// v(s) = (|s|^2 - 1)^2, p = 4.
Integrand quartic_well(int m, int n);
/// v(s) = det s on n x n matrices, p = n.
Integrand determinant(int n);
/// v(s) = a . [Cof s] rho = Cof s : (a (x) rho) on 3 x 3 matrices, p = 2.
Integrand cofactor_contraction(const Point& a, const Point& rho);

// Recession and sphere split -------------------------------------------------

struct RecessionEstimate {
  double value = 0.0;
  double error = 0.0;       ///< |v(R_N s)/R_N^p - v(R_{N-1} s)/R_{N-1}^p|
  bool diverged = false;    ///< failed the Cauchy test at tolerance 1e-4
  std::vector<double> samples;
};

inline const std::vector<double> kDefaultRecessionRadii{1e2, 1e3, 1e4};

/// Richardson-extrapolated v(R s)/R^p over the radii, |s| = 1.
RecessionEstimate recession_estimate(const Integrand& v, const Matrix& direction,
                                     std::span<const double> radii = kDefaultRecessionRadii);

/// v_0 = v / (1 + |s|^p) = c + v00(s) + v01(s/|s|) |s|^p / (1 + |s|^p), with c = 0.
struct SphereDecomposition {
  double c = 0.0;
  double p = 2.0;
  std::function<double(const Matrix&)> v00;
  std::function<double(const Matrix&)> v01;  ///< argument is a unit matrix

  /// c + v00(s) + v01(s/|s|) |s|^p/(1+|s|^p)  (v00(0) at s = 0).
  double reconstruct(const Matrix& s) const;
  /// v_S(s) = (c + v01)(s/|s|).
  double sphere_value(const Matrix& s) const;
};

/// Splits v; rejects integrands whose recession estimate diverges in any
/// sampled direction.
SphereDecomposition sphere_split(const Integrand& v, int direction_samples = 64,
                                 std::uint64_t seed = 0);

/// max |v0(s) - reconstruct(s)| over the grid, v0 = v/(1+|s|^p).
double reconstruction_residual(const Integrand& v, const SphereDecomposition& d,
                               std::span<const Matrix> grid);

/// Lower bound on the constant alpha in
/// |v(s1) - v(s2)| <= alpha (1 + |s1|^{p-1} + |s2|^{p-1}) |s1 - s2|.
double p_lipschitz_constant(const Integrand& v, int sample_count, std::uint64_t seed);

/// Random unit matrices (plus the coordinate directions first).
std::vector<Matrix> unit_sphere_sample(int m, int n, int count, std::uint64_t seed);

/// max |v| over a unit-sphere sample; the scale behind classification tolerances.
double sphere_sup(const Integrand& v, int count = 256);

/// Checks v(lambda s) = lambda^p v(s) on random samples, lambda in {0, .5, 2, 10}.
bool is_positively_homogeneous(const Integrand& v, double rel_tol = 1e-10, int samples = 32);

// Space-dependent cofactor contraction ---------------------------------------

using VectorField = std::function<Point(const Point&)>;

/// h(x, s) = Cof s : (a(x) (x) rho(x)) on 3 x 3 matrices.
struct CofactorContraction {
  VectorField a;
  VectorField rho;

  double operator()(const Point& x, const Matrix& s) const;
  /// The integrand s -> h(x, s) with x frozen.
  Integrand frozen(const Point& x) const;
};

}  // namespace qcb
