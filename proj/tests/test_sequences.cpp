#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qcb/errors.hpp"
#include "qcb/sequences.hpp"

using namespace qcb;

namespace {
constexpr double kPi = std::numbers::pi;

MeshPtr share(DomainMesh m) { return std::make_shared<const DomainMesh>(std::move(m)); }

double lp_energy(const DomainMesh& mesh, const GradientField& G, double p) {
  double s = 0.0;
  for (std::size_t c = 0; c < G.size(); ++c) s += mesh.volumes[c] * std::pow(norm(G[c]), p);
  return s;
}
}  // namespace

TEST(Laminate, AlternatesBetweenWellsInEqualFractions) {
  const auto mesh = share(build_ball(2, 0.02));
  const Matrix A = outer({-1, 0, 0}, 2, {1, 0, 0}, 2), B = -1.0 * A;
  const GradientSequence seq(laminate(A, B, 0.5, {1, 0, 0}), mesh);
  const auto G = seq.materialize(8);
  double vol_a = 0.0;
  int flips = 0;
  for (std::size_t c = 0; c < G.size(); ++c) {
    const bool is_a = norm(G[c] - A) == 0.0;
    EXPECT_TRUE(is_a || norm(G[c] - B) == 0.0);
    if (is_a) vol_a += mesh->volumes[c];
  }
  EXPECT_NEAR(vol_a / mesh->volume(), 0.5, 0.02);
  // Period 1/k along x1: 16 periods, so 32 bands and 31 flips over [-1, 1].
  const PointLocator loc(mesh);
  bool prev = false;
  for (int i = 0; i <= 2000; ++i) {
    const int c = loc.locate({-0.999 + 1.998 * i / 2000, 0.0101, 0});
    ASSERT_GE(c, 0);
    const bool is_a = norm(G[c] - A) == 0.0;
    if (i > 0 && is_a != prev) ++flips;
    prev = is_a;
  }
  EXPECT_EQ(flips, 31);
  for (const auto& w : seq.weak_limit()) EXPECT_EQ(norm(w), 0.0);
}

TEST(Laminate, WeakLimitIsVolumeAverage) {
  const auto mesh = share(build_ball(2, 0.25));
  const Matrix Bm = outer({1, 2, 0}, 2, {0, 1, 0}, 2);
  const GradientSequence seq(laminate(Matrix(2, 2), Bm, 0.25, {0, 1, 0}), mesh);
  EXPECT_LT(norm(seq.weak_limit()[0] - 0.75 * Bm), 1e-15);
  const auto y = seq.young_measure();
  ASSERT_EQ(y.size(), 2u);
  EXPECT_EQ(y[0].first, 0.25);
}

TEST(Laminate, EmpiricalMomentsApproachTwoPointMeasure) {
  const auto mesh = share(build_ball(2, 0.01));
  const Matrix A = outer({1, -1, 0}, 2, {0.6, 0.8, 0}, 2);
  const Matrix B = -3.0 * A;
  const double lam = 0.75;
  const GradientSequence seq(laminate(A, B, lam, {0.6, 0.8, 0}), mesh);
  const std::vector<std::function<double(const Matrix&)>> tests{
      [](const Matrix&) { return 1.0; }, [](const Matrix& s) { return norm2(s); },
      [](const Matrix& s) { return det(s); }, [](const Matrix& s) { return s(0, 1); },
      [](const Matrix& s) { return std::sin(s(1, 1)); }};
  for (const auto& f : tests) {
    const double exact = lam * f(A) + (1 - lam) * f(B);
    double prev = 1e300;
    for (int k : {1, 4, 16}) {
      const auto G = seq.materialize(k);
      double s = 0.0;
      for (std::size_t c = 0; c < G.size(); ++c) s += mesh->volumes[c] * f(G[c]);
      const double err = std::abs(s / mesh->volume() - exact);
      EXPECT_LE(err, 0.25 * (1 + std::abs(f(B) - f(A))) / k) << k;
      if (k > 1 && prev > 1e-3) EXPECT_LT(err, prev);
      prev = err;
    }
  }
}

TEST(Laminate, RejectsIncompatibleWells) {
  EXPECT_THROW(laminate(Matrix(2, 2), Matrix::identity(2), 0.5, {1, 0, 0}), ValidationError);
  EXPECT_THROW(laminate(Matrix(2, 2), outer({1, 0, 0}, 2, {0, 1, 0}, 2), 0.5, {1, 0, 0}), ValidationError);
  EXPECT_THROW(laminate(Matrix(2, 2), outer({1, 0, 0}, 2, {1, 0, 0}, 2), 1.0, {1, 0, 0}), ValidationError);
  EXPECT_THROW(laminate(Matrix(2, 2), outer({1, 0, 0}, 2, {1, 0, 0}, 2), 0.5, {2, 0, 0}), ValidationError);
}

TEST(Concentration, UnitScaleReproducesProfile) {
  const auto mesh = share(build_ball(2, 0.1));
  const Profile pr = Profile::bump({1, -2, 0}, 2, 2);
  const GradientSequence seq(concentration(pr, {}, 2.0), mesh);
  const auto G = seq.materialize(1);
  const auto expect = cell_gradients(DisplacementField::sample(mesh, 2, Constraint::None,
                                                               [&](const Point& y) { return pr.value(y); }));
  for (std::size_t c = 0; c < G.size(); ++c) EXPECT_LT(norm(G[c] - expect[c]), 1e-14);
}

TEST(Concentration, EnergyInvariantWhenPEqualsN) {
  // Full-disk integral of |grad (1-r)^2 b|^2 is 2 pi |b|^2 / 3.
  const auto mesh = share(build_shell_ball(2, {0.125, 9, 8}));
  const Point b{0.6, 0.8, 0};
  const GradientSequence seq(concentration(Profile::bump(b, 2, 2), {}, 2.0), mesh);
  const double oracle = 2 * kPi / 3;
  const double e1 = lp_energy(*mesh, seq.materialize(1), 2);
  EXPECT_NEAR(e1, oracle, 0.01 * oracle);
  for (int k : {2, 4, 16, 64}) EXPECT_NEAR(lp_energy(*mesh, seq.materialize(k), 2), e1, 0.01 * oracle) << k;
}

TEST(Concentration, VanishesInMeasureWithBoundedEnergy) {
  const auto mesh = share(build_shell_ball(3, {0.125, 5, 8}));
  const GradientSequence seq(concentration(Profile::affine_bump(Matrix(3, 3, {1, 0.5, 0, 0, 1, 2, -1, 0, 1})), {}, 3.0), mesh);
  double prev_frac = 1e300, bound = 0.0;
  for (int k : {1, 2, 4, 8}) {
    const auto G = seq.materialize(k);
    double frac = 0.0;
    for (std::size_t c = 0; c < G.size(); ++c)
      if (norm(G[c]) > 0.1) frac += mesh->volumes[c];
    EXPECT_LT(frac, prev_frac);
    prev_frac = frac;
    const double e = lp_energy(*mesh, G, 3);
    if (k == 1) bound = e;
    EXPECT_LE(e, 1.05 * bound);
  }
  EXPECT_LT(prev_frac, 0.01);
}

TEST(Concentration, BoundarySupportIsLocal) {
  const Point rho{0, 1, 0};
  const auto mesh = share(build_shell_half_ball(2, rho, {0.125, 8, 8}));
  const GradientSequence seq(concentration(Profile::bump({1, 0, 0}, 2, 2), {}, 2.0), mesh);
  const auto atoms = seq.atoms();
  ASSERT_EQ(atoms.size(), 1u);
  EXPECT_TRUE(atoms[0].boundary);
  EXPECT_EQ(atoms[0].normal[1], 1.0);
  for (int k : {1, 4, 32}) {
    const auto G = seq.materialize(k);
    for (std::size_t c = 0; c < G.size(); ++c)
      if (norm(G[c]) > 0.0) EXPECT_LE(norm(mesh->centroid(c), 2), 1.0 / k + mesh->diameter(c)) << k;
  }
}

TEST(Concentration, UnderResolvedSupportIsRejected) {
  const auto mesh = share(build_ball(2, 0.2));
  const GradientSequence seq(concentration(Profile::bump({1, 0, 0}, 2, 2), {}, 2.0), mesh);
  EXPECT_THROW(seq.materialize(8), ResolutionError);
  EXPECT_FALSE(seq.resolvable(8));
  EXPECT_EQ(seq.max_resolvable(64), 0);
  const auto shell = share(build_shell_ball(2, {0.125, 6, 8}));
  const GradientSequence fine(concentration(Profile::bump({1, 0, 0}, 2, 2), {}, 2.0), shell);
  const int kr = fine.max_resolvable(64);
  ASSERT_GE(kr, 4);
  EXPECT_NO_THROW(fine.materialize(kr));
  EXPECT_THROW(fine.materialize(2 * kr), ResolutionError);
}

TEST(HalfBallIntegral, BumpAndAffineBump) {
  // Half-disk integral of |grad (1-r)^2 b|^2 is pi |b|^2 / 3.
  const Profile pr = Profile::bump({1, 1, 0}, 2, 2);
  const double val = half_ball_integral(pr, [](const Matrix& s) { return norm2(s); }, {0, 1, 0}, 0.02);
  EXPECT_NEAR(val, 2 * kPi / 3, 1e-3);
  // Gradient consistency against central differences.
  const Profile ab = Profile::affine_bump(Matrix(2, 2, {1, 2, -1, 0.5}));
  const Point y{0.3, -0.2, 0};
  const Matrix G = ab.gradient(y);
  for (int j = 0; j < 2; ++j) {
    Point yp = y, ym = y;
    yp[j] += 1e-6;
    ym[j] -= 1e-6;
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(G(i, j), (ab.value(yp)[i] - ab.value(ym)[i]) / 2e-6, 1e-8);
  }
}

TEST(Superposition, DisjointPartsAddOverlappingPartsFail) {
  const auto mesh = share(build_ball(2, 0.02));
  const Profile pr = Profile::bump({1, 0, 0}, 2, 2);
  const GradientSequence seq(superposition({concentration(pr, {-0.5, 0, 0}, 2.0), concentration(pr, {0.5, 0, 0}, 2.0)}),
                             mesh);
  const auto G = seq.materialize(4);
  const auto G0 = seq.materialize_leaf(0, 4), G1 = seq.materialize_leaf(1, 4);
  for (std::size_t c = 0; c < G.size(); ++c) EXPECT_EQ(norm(G[c] - G0[c] - G1[c]), 0.0);
  EXPECT_EQ(seq.atoms().size(), 2u);
  EXPECT_FALSE(seq.atoms()[0].boundary);
  EXPECT_THROW(seq.materialize(1), ValidationError);
}

TEST(SequenceIo, JsonRoundTrip) {
  const Matrix A = outer({1, 0, 0}, 2, {0, 1, 0}, 2);
  const auto lam = laminate(A, -1.0 * A, 0.5, {0, 1, 0});
  const auto back = sequence_from_json(sequence_to_json(lam));
  EXPECT_EQ(back.kind, SequenceSpec::Kind::Laminate);
  EXPECT_EQ(sequence_to_json(back), sequence_to_json(lam));
  const auto conc = concentration(Profile::affine_bump(Matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1})), {0, 0, 0}, 2.0);
  EXPECT_EQ(sequence_to_json(sequence_from_json(sequence_to_json(conc))), sequence_to_json(conc));
  auto pm = share(build_half_ball(2, {0, 1, 0}, 0.5));
  const auto f = DisplacementField::sample(pm, 1, Constraint::DirichletOnly, [](const Point& x) { return Point{x[0], 0, 0}; });
  const auto fs = concentration(Profile::field(f), {}, 2.0);
  const auto fb = sequence_from_json(sequence_to_json(fs));
  EXPECT_EQ(fb.profile->field_data()->values, f.values);
  EXPECT_THROW(sequence_from_json(nlohmann::json{{"type", "spiral"}}), ValidationError);
}
