#include "qcb/integrands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "qcb/errors.hpp"
#include "qcb/random.hpp"

namespace qcb {

namespace {

std::string fmt_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_array(const double* v, int k) {
  std::string s = "[";
  for (int i = 0; i < k; ++i) s += (i ? "," : "") + fmt_num(v[i]);
  return s + "]";
}

std::string fmt_matrix(const Matrix& a) {
  std::string s = "[";
  for (int i = 0; i < a.rows; ++i) s += (i ? "," : "") + fmt_array(&a.data[i * a.cols], a.cols);
  return s + "]";
}

double pow_norm(const Matrix& s, double p) { return std::pow(norm(s), p); }

int levi_civita(int i, int j, int k) {
  if (i == j || j == k || i == k) return 0;
  return ((j - i + 3) % 3 == 1) ? 1 : -1;
}

// d/ds [Cof s : M] for 3x3 s.
Matrix cofactor_contraction_grad(const Matrix& s, const Matrix& M) {
  Matrix g(3, 3);
  for (int k = 0; k < 3; ++k)
    for (int m = 0; m < 3; ++m) {
      double acc = 0.0;
      for (int i = 0; i < 3; ++i)
        for (int l = 0; l < 3; ++l) {
          const int e1 = levi_civita(i, k, l);
          if (!e1) continue;
          for (int j = 0; j < 3; ++j)
            for (int nn = 0; nn < 3; ++nn) {
              const int e2 = levi_civita(j, m, nn);
              if (e2) acc += M(i, j) * e1 * e2 * s(l, nn);
            }
        }
      g(k, m) = acc;
    }
  return g;
}

Matrix random_matrix(RandomStream& rng, int m, int n) {
  Matrix a(m, n);
  for (int k = 0; k < m * n; ++k) a[k] = rng.normal();
  return a;
}

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::Affine: return "affine";
    case Family::PowerNorm: return "power-norm";
    case Family::DoubleWell: return "double-well";
    case Family::Determinant: return "determinant";
    case Family::CofactorContraction: return "cofactor-contraction";
    case Family::Custom: return "custom";
  }
  return "custom";
}

Family family_from_string(const std::string& s) {
  for (Family f : {Family::Affine, Family::PowerNorm, Family::DoubleWell, Family::Determinant,
                   Family::CofactorContraction, Family::Custom})
    if (to_string(f) == s) return f;
  throw ValidationError("unknown integrand family: " + s);
}

Integrand::Integrand(Parts parts) {
  require(parts.m >= 1 && parts.m <= kMaxDim && parts.n >= 1 && parts.n <= kMaxDim,
          "integrand: dimensions must lie in [1,3]");
  require(parts.p > 1.0, "integrand: growth exponent p must exceed 1");
  require(parts.growth_const > 0.0, "integrand: growth constant must be positive");
  require(static_cast<bool>(parts.eval), "integrand: eval is required");
  if (parts.homogeneous && !parts.recession) {
    parts.recession = parts.eval;
    parts.recession_grad = parts.grad;
  }
  if (parts.name.empty()) parts.name = to_string(parts.family);
  parts_ = std::make_shared<const Parts>(std::move(parts));
}

Matrix Integrand::gradient(const Matrix& s) const {
  if (parts_->grad) return parts_->grad(s);
  const double h = 1e-6 * (1.0 + norm(s));
  Matrix g(s.rows, s.cols);
  Matrix t = s;
  for (int k = 0; k < s.size(); ++k) {
    t[k] = s[k] + h;
    const double fp = parts_->eval(t);
    t[k] = s[k] - h;
    const double fm = parts_->eval(t);
    t[k] = s[k];
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

double Integrand::recession(const Matrix& s) const {
  require(has_recession(), "integrand '" + name() + "' has no analytic recession");
  return parts_->recession(s);
}

Integrand Integrand::recession_integrand() const {
  require(has_recession(), "integrand '" + name() + "' has no analytic recession");
  if (homogeneous()) return *this;
  Parts r;
  r.m = m();
  r.n = n();
  r.p = p();
  r.growth_const = growth_const();
  r.family = family();
  r.name = name() + "-recession";
  r.eval = parts_->recession;
  r.grad = parts_->recession_grad;
  r.homogeneous = true;
  r.spec_json = "{\"recession_of\":" + (spec_json().empty() ? std::string("null") : spec_json()) + "}";
  return Integrand(std::move(r));
}

Integrand Integrand::scaled(double factor) const {
  Parts r = *parts_;
  auto base = parts_;
  r.eval = [base, factor](const Matrix& s) { return factor * base->eval(s); };
  if (base->grad) r.grad = [base, factor](const Matrix& s) { return factor * base->grad(s); };
  if (base->recession)
    r.recession = [base, factor](const Matrix& s) { return factor * base->recession(s); };
  if (base->recession_grad)
    r.recession_grad = [base, factor](const Matrix& s) { return factor * base->recession_grad(s); };
  r.growth_const = std::max(1e-300, std::abs(factor) * base->growth_const);
  if (factor != 1.0) {
    r.name = fmt_num(factor) + "*" + base->name;
    r.spec_json = "{\"scale\":" + fmt_num(factor) + ",\"of\":" +
                  (base->spec_json.empty() ? std::string("null") : base->spec_json) + "}";
  }
  return Integrand(std::move(r));
}

Integrand affine(const Matrix& L, double c, double p) {
  Integrand::Parts P;
  P.m = L.rows;
  P.n = L.cols;
  P.p = p;
  P.growth_const = std::max(1e-12, norm(L) + std::abs(c));
  P.family = Family::Affine;
  P.eval = [L, c](const Matrix& s) { return dot(L, s) + c; };
  P.grad = [L](const Matrix&) { return L; };
  const int m = L.rows, n = L.cols;
  P.recession = [](const Matrix&) { return 0.0; };
  P.recession_grad = [m, n](const Matrix&) { return Matrix(m, n); };
  P.spec_json = "{\"tag\":\"affine\",\"L\":" + fmt_matrix(L) + ",\"c\":" + fmt_num(c) +
                ",\"p\":" + fmt_num(p) + "}";
  return Integrand(std::move(P));
}

Integrand power_norm(int m, int n, double p, double coef, double shift) {
  Integrand::Parts P;
  P.m = m;
  P.n = n;
  P.p = p;
  P.growth_const = std::max({std::abs(coef), std::abs(shift), 1e-12});
  P.family = Family::PowerNorm;
  P.eval = [p, coef, shift](const Matrix& s) { return shift + coef * pow_norm(s, p); };
  auto grad = [p, coef](const Matrix& s) {
    const double r = norm(s);
    if (r == 0.0) return Matrix(s.rows, s.cols);
    return (coef * p * std::pow(r, p - 2.0)) * s;
  };
  P.grad = grad;
  if (shift == 0.0) {
    P.homogeneous = true;
  } else {
    P.recession = [p, coef](const Matrix& s) { return coef * pow_norm(s, p); };
    P.recession_grad = grad;
  }
  P.name = shift == 0.0 ? "power-norm" : "power-norm-shifted";
  P.spec_json = "{\"tag\":\"power-norm\",\"m\":" + std::to_string(m) + ",\"n\":" + std::to_string(n) +
                ",\"p\":" + fmt_num(p) + ",\"coef\":" + fmt_num(coef) + ",\"shift\":" + fmt_num(shift) + "}";
  return Integrand(std::move(P));
}

Integrand double_well(const Matrix& A, const Matrix& B) {
  require(A.same_shape(B), "double-well: A and B must have the same shape");
  require(rank(B - A) == 1, "double-well: B - A must have rank one");
  Integrand::Parts P;
  P.m = A.rows;
  P.n = A.cols;
  P.p = 2.0;
  P.growth_const = std::max(2.0, 2.0 * std::max(norm2(A), norm2(B)));
  P.family = Family::DoubleWell;
  P.eval = [A, B](const Matrix& s) { return std::min(norm2(s - A), norm2(s - B)); };
  P.grad = [A, B](const Matrix& s) {
    const Matrix da = s - A, db = s - B;
    return norm2(da) <= norm2(db) ? 2.0 * da : 2.0 * db;
  };
  P.recession = [](const Matrix& s) { return norm2(s); };
  P.recession_grad = [](const Matrix& s) { return 2.0 * s; };
  P.spec_json = "{\"tag\":\"double-well\",\"A\":" + fmt_matrix(A) + ",\"B\":" + fmt_matrix(B) + "}";
  return Integrand(std::move(P));
}

Integrand quartic_well(int m, int n) {
  Integrand::Parts P;
  P.m = m;
  P.n = n;
  P.p = 4.0;
  P.growth_const = 1.0;
  P.family = Family::Custom;
  P.name = "quartic-well";
  P.eval = [](const Matrix& s) {
    const double t = norm2(s) - 1.0;
    return t * t;
  };
  P.grad = [](const Matrix& s) { return (4.0 * (norm2(s) - 1.0)) * s; };
  P.recession = [](const Matrix& s) { return norm2(s) * norm2(s); };
  P.recession_grad = [](const Matrix& s) { return (4.0 * norm2(s)) * s; };
  P.spec_json = "{\"tag\":\"quartic-well\",\"m\":" + std::to_string(m) + ",\"n\":" + std::to_string(n) + "}";
  return Integrand(std::move(P));
}

Integrand determinant(int n) {
  require(n >= 1 && n <= kMaxDim, "determinant: n must lie in [1,3]");
  require(n >= 2, "determinant: n = 1 has growth exponent 1; need n >= 2");
  Integrand::Parts P;
  P.m = n;
  P.n = n;
  P.p = n;
  // |det s| <= |s|^n / n^{n/2}
  P.growth_const = 1.0 / std::pow(static_cast<double>(n), n / 2.0);
  P.family = Family::Determinant;
  P.eval = [](const Matrix& s) { return det(s); };
  P.grad = [](const Matrix& s) { return cofactor(s); };
  P.homogeneous = true;
  P.name = "det" + std::to_string(n);
  P.spec_json = "{\"tag\":\"determinant\",\"n\":" + std::to_string(n) + "}";
  return Integrand(std::move(P));
}

Integrand cofactor_contraction(const Point& a, const Point& rho) {
  const Matrix M = outer(a, 3, rho, 3);
  Integrand::Parts P;
  P.m = 3;
  P.n = 3;
  P.p = 2.0;
  // |Cof s| <= |s|^2 / sqrt(3)
  P.growth_const = std::max(1e-12, norm(a, 3) * norm(rho, 3));
  P.family = Family::CofactorContraction;
  P.eval = [M](const Matrix& s) { return dot(cofactor(s), M); };
  P.grad = [M](const Matrix& s) { return cofactor_contraction_grad(s, M); };
  P.homogeneous = true;
  P.spec_json = "{\"tag\":\"cofactor-contraction\",\"a\":" + fmt_array(a.data(), 3) +
                ",\"rho\":" + fmt_array(rho.data(), 3) + "}";
  return Integrand(std::move(P));
}

RecessionEstimate recession_estimate(const Integrand& v, const Matrix& direction,
                                     std::span<const double> radii) {
  require(radii.size() >= 2, "recession_estimate: need at least two radii");
  for (std::size_t i = 1; i < radii.size(); ++i)
    require(radii[i] > radii[i - 1], "recession_estimate: radii must be strictly increasing");
  require(radii.front() > 0.0, "recession_estimate: radii must be positive");
  require(radii.back() >= 1e3, "recession_estimate: last radius must be >= 1e3");
  require(direction.rows == v.m() && direction.cols == v.n(), "recession_estimate: shape mismatch");
  require(std::abs(norm(direction) - 1.0) <= 1e-9, "recession_estimate: direction must be a unit matrix");

  RecessionEstimate out;
  for (double R : radii) out.samples.push_back(v(R * direction) / std::pow(R, v.p()));
  const std::size_t N = out.samples.size();
  const double fN = out.samples[N - 1], fM = out.samples[N - 2];
  const double r = radii[N - 1] / radii[N - 2];
  out.value = fN + (fN - fM) / (r - 1.0);
  out.error = std::abs(fN - fM);
  out.diverged = std::abs(fN - fM) > 1e-4 * std::max(1.0, std::abs(fN));
  return out;
}

double SphereDecomposition::reconstruct(const Matrix& s) const {
  const double r = norm(s);
  if (r == 0.0) return v00(s);
  const double rp = std::pow(r, p);
  return c + v00(s) + v01((1.0 / r) * s) * rp / (1.0 + rp);
}

double SphereDecomposition::sphere_value(const Matrix& s) const {
  const double r = norm(s);
  require(r > 0.0, "sphere_value: undefined at s = 0");
  return c + v01((1.0 / r) * s);
}

SphereDecomposition sphere_split(const Integrand& v, int direction_samples, std::uint64_t seed) {
  SphereDecomposition d;
  d.c = 0.0;
  d.p = v.p();
  if (v.has_recession()) {
    d.v01 = [v](const Matrix& theta) { return v.recession(theta); };
  } else {
    for (const Matrix& theta : unit_sphere_sample(v.m(), v.n(), direction_samples, seed)) {
      const auto est = recession_estimate(v, theta);
      if (est.diverged)
        throw ValidationError("sphere_split: recession estimate diverges for integrand '" + v.name() + "'");
    }
    d.v01 = [v](const Matrix& theta) { return recession_estimate(v, theta).value; };
  }
  const double p = v.p();
  auto v01 = d.v01;
  d.v00 = [v, v01, p](const Matrix& s) {
    const double r = norm(s);
    const double rp = std::pow(r, p);
    const double v0 = v(s) / (1.0 + rp);
    if (r == 0.0) return v0;
    return v0 - v01((1.0 / r) * s) * rp / (1.0 + rp);
  };
  return d;
}

double reconstruction_residual(const Integrand& v, const SphereDecomposition& d,
                               std::span<const Matrix> grid) {
  double worst = 0.0;
  for (const Matrix& s : grid) {
    const double v0 = v(s) / (1.0 + std::pow(norm(s), v.p()));
    worst = std::max(worst, std::abs(v0 - d.reconstruct(s)));
  }
  return worst;
}

std::vector<Matrix> unit_sphere_sample(int m, int n, int count, std::uint64_t seed) {
  std::vector<Matrix> out;
  for (int k = 0; k < m * n && static_cast<int>(out.size()) < count; ++k) {
    Matrix e(m, n);
    e[k] = 1.0;
    out.push_back(e);
  }
  RandomStream rng(seed, 0x5e11);
  while (static_cast<int>(out.size()) < count) {
    Matrix a = random_matrix(rng, m, n);
    const double r = norm(a);
    if (r < 1e-12) continue;
    out.push_back((1.0 / r) * a);
  }
  return out;
}

double sphere_sup(const Integrand& v, int count) {
  double sup = 0.0;
  for (const Matrix& theta : unit_sphere_sample(v.m(), v.n(), count, 0))
    sup = std::max(sup, std::abs(v(theta)));
  return sup;
}

double p_lipschitz_constant(const Integrand& v, int sample_count, std::uint64_t seed) {
  RandomStream rng(seed, 0x11b5);
  const int m = v.m(), n = v.n();
  const double p = v.p();
  auto draw = [&](double radius) {
    Matrix a = random_matrix(rng, m, n);
    const double r = norm(a);
    return r > 0.0 ? (radius / r) * a : a;
  };
  double best = 0.0;
  for (int i = 0; i < sample_count; ++i) {
    const Matrix s1 = draw(rng.uniform(0.0, 10.0));
    Matrix s2;
    const double delta = 1e-3 * (1.0 + norm(s1)) * rng.uniform(0.5, 1.0);
    if (i % 3 == 0) {
      s2 = s1 + draw(delta);
    } else if (i % 3 == 1) {
      const Matrix g = v.gradient(s1);
      const double gn = norm(g);
      s2 = gn > 0.0 ? s1 + (delta / gn) * g : s1 + draw(delta);
    } else {
      s2 = draw(rng.uniform(0.0, 10.0));
    }
    const double dist = norm(s1 - s2);
    if (dist <= 0.0) continue;
    const double denom = (1.0 + std::pow(norm(s1), p - 1.0) + std::pow(norm(s2), p - 1.0)) * dist;
    best = std::max(best, std::abs(v(s1) - v(s2)) / denom);
  }
  return best;
}

bool is_positively_homogeneous(const Integrand& v, double rel_tol, int samples) {
  RandomStream rng(0, 0x40e0);
  const double lambdas[] = {0.0, 0.5, 2.0, 10.0};
  for (int i = 0; i < samples; ++i) {
    Matrix s = random_matrix(rng, v.m(), v.n());
    s *= rng.uniform(0.1, 10.0) / std::max(1e-12, norm(s));
    const double base = v(s);
    const double scale = std::max(std::abs(base), v.growth_const() * std::pow(norm(s), v.p()));
    for (double l : lambdas) {
      const double lp = std::pow(l, v.p());
      if (std::abs(v(l * s) - lp * base) > rel_tol * std::max(lp * scale, 1e-300)) return false;
    }
  }
  return true;
}

double CofactorContraction::operator()(const Point& x, const Matrix& s) const {
  require(s.rows == 3 && s.cols == 3, "cofactor contraction: s must be 3x3");
  return dot(cofactor(s), outer(a(x), 3, rho(x), 3));
}

Integrand CofactorContraction::frozen(const Point& x) const { return cofactor_contraction(a(x), rho(x)); }

}  // namespace qcb
