#include <gtest/gtest.h>

#include <cmath>

#include "qcb/catalog.hpp"
#include "qcb/errors.hpp"
#include "qcb/integrands.hpp"
#include "qcb/random.hpp"

using namespace qcb;

namespace {

Matrix random_matrix(RandomStream& r, int m, int n, double radius) {
  Matrix a(m, n);
  for (int k = 0; k < m * n; ++k) a[k] = r.normal();
  return (radius / norm(a)) * a;
}

Integrand sin_perturbed_square() {
  Integrand::Parts P;
  P.m = 2;
  P.n = 2;
  P.p = 2;
  P.growth_const = 2;
  P.eval = [](const Matrix& s) { return norm2(s) + std::sin(norm(s)); };
  return Integrand(P);
}

Integrand log_growth() {
  Integrand::Parts P;
  P.m = 1;
  P.n = 2;
  P.p = 2;
  P.growth_const = 10;
  P.eval = [](const Matrix& s) { return norm2(s) * std::log(2.0 + norm(s)); };
  return Integrand(P);
}

std::vector<Integrand> homogeneous_builtins() {
  return {power_norm(2, 2, 2.0), power_norm(3, 2, 3.0, 0.5), determinant(2), determinant(3),
          cofactor_contraction({1, 0, 0}, {0, 0, 1}), cofactor_contraction({0.3, -1, 2}, {0.6, 0, 0.8})};
}

}  // namespace

TEST(Recession, SquareNormIsOne) {
  RandomStream rng(1, 1);
  for (int t = 0; t < 5; ++t) {
    const auto est = recession_estimate(power_norm(2, 3, 2.0), random_matrix(rng, 2, 3, 1.0));
    EXPECT_NEAR(est.value, 1.0, 1e-12);
    EXPECT_FALSE(est.diverged);
  }
}

TEST(Recession, DeterminantAtScaledIdentity) {
  const auto est = recession_estimate(determinant(2), (1.0 / std::sqrt(2.0)) * Matrix::identity(2));
  EXPECT_NEAR(est.value, 0.5, 1e-12);
}

TEST(Recession, SinPerturbationAgainstLargeRadiusOracle) {
  const Integrand v = sin_perturbed_square();
  RandomStream rng(5, 2);
  const Matrix e = random_matrix(rng, 2, 2, 1.0);
  const double R = 1e6;
  const double oracle = v(R * e) / (R * R);
  const auto est = recession_estimate(v, e);
  EXPECT_NEAR(est.value, oracle, 1e-3);
  EXPECT_NEAR(est.value, 1.0, 1e-3);
}

TEST(Recession, AgreesWithAnalyticWithinReportedError) {
  RandomStream rng(9, 9);
  for (const Integrand& v : {double_well(Matrix(2, 2, {1, 0, 0, 0}), Matrix(2, 2, {-1, 0, 0, 0})),
                             quartic_well(2, 2), power_norm(2, 2, 2.0, 1.0, 1.0)}) {
    const Matrix e = random_matrix(rng, 2, 2, 1.0);
    const auto est = recession_estimate(v, e);
    EXPECT_LE(std::abs(est.value - v.recession(e)), est.error + 1e-12) << v.name();
  }
}

TEST(Recession, DivergenceFlagAndPreconditions) {
  const Integrand v = log_growth();
  const Matrix e(1, 2, {1, 0});
  EXPECT_TRUE(recession_estimate(v, e).diverged);
  const std::vector<double> short_radii{10, 100};
  EXPECT_THROW(recession_estimate(v, e, short_radii), ValidationError);
  const std::vector<double> unsorted{1e3, 1e2, 1e4};
  EXPECT_THROW(recession_estimate(v, e, unsorted), ValidationError);
  EXPECT_THROW(recession_estimate(v, Matrix(1, 2, {2, 0})), ValidationError);
}

TEST(SphereSplit, ReconstructionOnGrid) {
  RandomStream rng(11, 3);
  std::vector<Matrix> grid;
  for (double r : {0.0, 0.1, 0.5, 1.0, 3.0, 10.0, 100.0})
    for (int t = 0; t < 8; ++t) grid.push_back(r == 0.0 ? Matrix(2, 2) : random_matrix(rng, 2, 2, r));
  for (const Integrand& v : {power_norm(2, 2, 2.0), power_norm(2, 2, 3.0), determinant(2),
                             affine(Matrix::identity(2)), sin_perturbed_square(), quartic_well(2, 2)}) {
    const auto d = sphere_split(v);
    EXPECT_EQ(d.c, 0.0);
    EXPECT_LT(reconstruction_residual(v, d, grid), 1e-6) << v.name();
  }
}

TEST(SphereSplit, KnownComponents) {
  RandomStream rng(4, 4);
  const auto pn = sphere_split(power_norm(2, 2, 2.0));
  const auto af = sphere_split(affine(Matrix::identity(2)));
  const auto dt = sphere_split(determinant(2));
  for (int t = 0; t < 20; ++t) {
    const Matrix th = random_matrix(rng, 2, 2, 1.0);
    const Matrix s = random_matrix(rng, 2, 2, rng.uniform(0.1, 20.0));
    EXPECT_NEAR(pn.v01(th), 1.0, 1e-14);
    EXPECT_EQ(af.v01(th), 0.0);
    EXPECT_NEAR(af.v00(s), (s(0, 0) + s(1, 1)) / (1 + norm2(s)), 1e-14);
    EXPECT_NEAR(dt.v01(th), det(th), 1e-14);
    EXPECT_NEAR(dt.v00(s), 0.0, 1e-14);
    EXPECT_NEAR(dt.sphere_value(s) * norm2(s), det(s), 1e-12 * norm2(s));
  }
}

TEST(SphereSplit, RejectsDivergentRecession) { EXPECT_THROW(sphere_split(log_growth()), ValidationError); }

TEST(PLipschitz, SquareNormBound) {
  for (std::uint64_t seed : {1, 2, 3}) EXPECT_LE(p_lipschitz_constant(power_norm(2, 2, 2.0), 20000, seed), 1.0 + 1e-9);
}

TEST(PLipschitz, AffineBoundedByLinearForm) {
  const Matrix L(2, 2, {1, -2, 0.5, 3});
  EXPECT_LE(p_lipschitz_constant(affine(L, 4.0), 5000, 7), norm(L) + 1e-12);
}

TEST(PLipschitz, DeterminantStableAndMatchesDenseGrid) {
  // Dense grid over pairs (s, s + eps d) with s on spheres of radius <= 10 and
  // d sweeping the unit sphere of 2x2 matrices.
  const Integrand v = determinant(2);
  double oracle = 0.0;
  const int na = 12;
  for (double r : {2.5, 5.0, 7.5, 10.0})
    for (int a = 0; a < na; ++a)
      for (int b = 0; b < na; ++b)
        for (int c = 0; c < 2 * na; ++c) {
          const double t1 = M_PI * (a + 0.5) / na, t2 = M_PI * (b + 0.5) / na, t3 = M_PI * c / na;
          const Matrix th(2, 2, {std::cos(t1), std::sin(t1) * std::cos(t2), std::sin(t1) * std::sin(t2) * std::cos(t3),
                                 std::sin(t1) * std::sin(t2) * std::sin(t3)});
          const Matrix s = r * th;
          for (int a2 = 0; a2 < na; ++a2)
            for (int b2 = 0; b2 < 4; ++b2) {
              const double u1 = M_PI * (a2 + 0.5) / na, u2 = 2 * M_PI * b2 / 4;
              const Matrix d(2, 2, {std::cos(u1), std::sin(u1) * std::cos(u2), std::sin(u1) * std::sin(u2), 0.0});
              const Matrix s2 = s + 1e-4 * d;
              const double q = std::abs(v(s) - v(s2)) / ((1 + norm(s) + norm(s2)) * norm(s - s2));
              oracle = std::max(oracle, q);
            }
        }
  std::vector<double> est;
  for (std::uint64_t seed : {1, 2, 3, 4}) est.push_back(p_lipschitz_constant(v, 20000, seed));
  for (double e : est) {
    EXPECT_NEAR(e, est[0], 0.1 * est[0]);
    EXPECT_NEAR(e, oracle, 0.1 * oracle);
  }
  EXPECT_TRUE(std::isfinite(est[0]));
}

TEST(Homogeneity, BuiltinFamiliesExact) {
  for (const Integrand& v : homogeneous_builtins()) {
    EXPECT_TRUE(v.homogeneous()) << v.name();
    EXPECT_TRUE(is_positively_homogeneous(v, 1e-12)) << v.name();
  }
  EXPECT_FALSE(is_positively_homogeneous(quartic_well(2, 2), 1e-6));
  EXPECT_FALSE(is_positively_homogeneous(double_well(Matrix(2, 2, {1, 0, 0, 0}), Matrix(2, 2)), 1e-6));
}

TEST(Homogeneity, RecessionIsHomogeneous) {
  for (const Integrand& v : {double_well(Matrix(2, 2, {1, 0, 0, 0}), Matrix(2, 2)), quartic_well(2, 2),
                             power_norm(2, 2, 2.5, 2.0, 1.0), affine(Matrix::identity(2), 1.0)}) {
    EXPECT_TRUE(is_positively_homogeneous(v.recession_integrand(), 1e-12)) << v.name();
  }
}

TEST(Growth, RandomSamplesRespectConstant) {
  std::vector<Integrand> all = homogeneous_builtins();
  all.push_back(double_well(Matrix(3, 3, {1, 0, 0, 0, 0, 0, 0, 0, 0}), Matrix(3, 3)));
  all.push_back(quartic_well(1, 1));
  all.push_back(affine(Matrix(2, 3, {1, 2, 3, -1, 0, 1}), -2.0));
  all.push_back(power_norm(1, 3, 1.5, 3.0, 2.0));
  RandomStream rng(13, 13);
  for (const Integrand& v : all)
    for (int t = 0; t < 10000; ++t) {
      const double r = 1e3 * std::pow(rng.uniform(), 3.0);
      const Matrix s = random_matrix(rng, v.m(), v.n(), r);
      ASSERT_LE(std::abs(v(s)), v.growth_const() * (1 + std::pow(r, v.p())) * (1 + 1e-12)) << v.name();
    }
}

TEST(Gradient, AnalyticMatchesFiniteDifferences) {
  std::vector<Integrand> all = homogeneous_builtins();
  all.push_back(quartic_well(2, 2));
  all.push_back(affine(Matrix(2, 2, {1, 2, 3, 4}), 1.0));
  RandomStream rng(17, 1);
  for (const Integrand& v : all) {
    Integrand::Parts P;
    P.m = v.m();
    P.n = v.n();
    P.p = v.p();
    P.eval = [v](const Matrix& s) { return v(s); };
    const Integrand fd(P);
    for (int t = 0; t < 10; ++t) {
      const Matrix s = random_matrix(rng, v.m(), v.n(), rng.uniform(0.5, 3.0));
      EXPECT_LT(norm(v.gradient(s) - fd.gradient(s)), 1e-6 * (1 + norm(v.gradient(s)))) << v.name();
    }
  }
}

TEST(Cofactor, ContractionMatchesDefinitionAndField) {
  RandomStream rng(21, 2);
  const Point a{0.2, -1.0, 0.7}, rho{0, 0.6, 0.8};
  const Integrand v = cofactor_contraction(a, rho);
  CofactorContraction h{[a](const Point& x) { return scale(a, 1 + x[0]); }, [rho](const Point&) { return rho; }};
  for (int t = 0; t < 20; ++t) {
    const Matrix s = random_matrix(rng, 3, 3, 2.0);
    double direct = 0.0;
    const Matrix C = cofactor(s);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) direct += a[i] * C(i, j) * rho[j];
    EXPECT_NEAR(v(s), direct, 1e-12);
    EXPECT_NEAR(h({0.5, 0, 0}, s), 1.5 * direct, 1e-12);
    EXPECT_NEAR(h({1, 0, 0}, 2.0 * s), 4.0 * h({1, 0, 0}, s), 1e-10);
    EXPECT_NEAR(h.frozen({0.5, 0, 0})(s), 1.5 * direct, 1e-12);
  }
}

TEST(Catalog, RoundTripThroughSpec) {
  std::vector<Integrand> all = homogeneous_builtins();
  all.push_back(quartic_well(2, 2));
  all.push_back(affine(Matrix(2, 2, {1, 2, 3, 4}), 1.0));
  all.push_back(double_well(Matrix(2, 2, {0, 1, 0, 0}), Matrix(2, 2, {0, -1, 0, 0})));
  all.push_back(power_norm(2, 2, 2, 1, 1).scaled(-2.0));
  RandomStream rng(3, 3);
  for (const Integrand& v : all) {
    const Integrand w = make_integrand(json::parse(v.spec_json()), v.m(), v.n());
    for (int t = 0; t < 5; ++t) {
      const Matrix s = random_matrix(rng, v.m(), v.n(), 2.0);
      EXPECT_DOUBLE_EQ(v(s), w(s)) << v.spec_json();
    }
  }
  EXPECT_EQ(make_integrand("det2").family(), Family::Determinant);
  EXPECT_THROW(make_integrand(json{{"tag", "no-such"}}), ValidationError);
  EXPECT_THROW(double_well(Matrix::identity(2), Matrix(2, 2)), ValidationError);
}
