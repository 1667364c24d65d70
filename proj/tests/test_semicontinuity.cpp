#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qcb/errors.hpp"
#include "qcb/semicontinuity.hpp"

using namespace qcb;

namespace {
constexpr double kPi = std::numbers::pi;

MeshPtr share(DomainMesh m) { return std::make_shared<const DomainMesh>(std::move(m)); }

double grad_energy(const DomainMesh& mesh, const GradientField& G) {
  double s = 0.0;
  for (std::size_t c = 0; c < G.size(); ++c) s += mesh.volumes[c] * norm2(G[c]);
  return s;
}

ProbeOptions fast_2d() {
  ProbeOptions o;
  o.model = {0.125, 7, 4};
  o.classify_octaves = 2;
  o.k_max = 32;
  o.solver.multistart = 6;
  return o;
}
}  // namespace

TEST(Functional, EvaluatesSimpleCases) {
  const auto mesh = share(build_ball(2, 0.05));
  const Functional F{mesh, constant_weight(1.0), power_norm(2, 2, 2.0)};
  EXPECT_EQ(evaluate_functional(F, GradientField(mesh->num_cells(), Matrix(2, 2))), 0.0);
  const Matrix A = outer({1, 0, 0}, 2, {0.6, 0.8, 0}, 2);
  const GradientSequence lam(laminate(A, -1.0 * A, 0.5, {0.6, 0.8, 0}), mesh);
  EXPECT_NEAR(evaluate_functional(F, lam.materialize(8)), mesh->volume(), 1e-3 * mesh->volume());
}

TEST(Functional, DeterminantOfZeroTraceFieldsVanishes) {
  for (double h : {0.2, 0.1, 0.05}) {
    const auto mesh = share(build_ball(2, h));
    const auto phi = DisplacementField::sample(mesh, 2, Constraint::AllBoundary, [](const Point& x) {
      const double w = 1 - x[0] * x[0] - x[1] * x[1];
      return Point{w * std::sin(3 * x[1]) + x[0] * w, w * x[0] * x[0] * x[1] + 0.5 * w, 0};
    });
    const auto G = cell_gradients(phi);
    const Functional F{mesh, bump_weight({0, 0, 0}, 10.0), determinant(2)};
    const Functional F1{mesh, constant_weight(1.0), determinant(2)};
    EXPECT_LE(std::abs(evaluate_functional(F1, G)), 1e-6 * grad_energy(*mesh, G)) << h;
    // A nonconstant weight breaks the identity, which is why g matters.
    EXPECT_GT(std::abs(evaluate_functional(F, G)), 1e-6 * grad_energy(*mesh, G)) << h;
  }
}

TEST(Functional, WeightMustBePositiveOnBoundary) {
  const auto mesh = share(build_ball(2, 0.25));
  EXPECT_THROW(validate(Functional{mesh, coordinate_weight(0), power_norm(2, 2, 2.0)}), ValidationError);
  EXPECT_THROW(validate(Functional{mesh, bump_weight({0, 0, 0}, 0.5), power_norm(2, 2, 2.0)}), ValidationError);
  EXPECT_NO_THROW(validate(Functional{mesh, constant_weight(2.0), power_norm(2, 2, 2.0)}));
}

TEST(WlscProbe, PowerNormIsConsistent) {
  const auto mesh = share(build_ball(2, 0.25));
  const Functional F{mesh, constant_weight(1.0), power_norm(2, 2, 2.0)};
  const std::vector<Point> pts{{1, 0, 0}, {0, -1, 0}};
  const std::vector<Profile> profiles{Profile::bump({1, 0, 0}, 2, 2), Profile::affine_bump(Matrix(2, 2, {1, 2, -1, 0.5}))};
  const auto w = wlsc_probe(F, pts, profiles, fast_2d());
  EXPECT_EQ(w.verdict, "consistent-with-wlsc");
  ASSERT_EQ(w.boundary_scan.size(), 2u);
  EXPECT_NEAR(w.boundary_scan[0].rho[0], 1.0, 1e-12);
  for (const auto& e : w.boundary_scan) EXPECT_EQ(e.classification, Classification::Zero);
  ASSERT_EQ(w.liminf_gap.size(), 4u);
  for (const auto& r : w.liminf_gap) {
    for (double g : r.gaps) EXPECT_GE(g, 0.0);
    EXPECT_NEAR(r.gaps.back(), r.predicted, 0.03 * r.predicted) << r.profile;
  }
  // Bump profile: half-disk integral pi |b|^2 / 3.
  EXPECT_NEAR(w.liminf_gap[0].predicted, kPi / 3, 1e-3);
}

TEST(WlscProbe, DeterminantIsViolatedByReplayedWitness) {
  const auto mesh = share(build_ball(2, 0.25));
  const Functional F{mesh, constant_weight(1.0), determinant(2)};
  const std::vector<Point> pts{{0, 1, 0}};
  const std::vector<Profile> profiles{Profile::bump({1, 0, 0}, 2, 2)};
  const auto w = wlsc_probe(F, pts, profiles, fast_2d());
  EXPECT_EQ(w.boundary_scan[0].classification, Classification::MinusInfinity);
  EXPECT_EQ(w.verdict, "wlsc-violated");
  ASSERT_TRUE(w.witness.has_value());
  const auto& r = w.liminf_gap[*w.witness];
  EXPECT_TRUE(r.witness);
  EXPECT_LT(r.liminf, -1e-3);
  // The compatible shell replays the witness exactly at every resolvable k.
  for (double g : r.gaps) EXPECT_NEAR(g, r.predicted, 1e-9 * std::abs(r.predicted));
  // The rank-one bump has zero determinant everywhere.
  for (double g : w.liminf_gap[0].gaps) EXPECT_NEAR(g, 0.0, 1e-12);
  const auto j = wlsc_to_json(w);
  EXPECT_EQ(j["verdict"], "wlsc-violated");
  EXPECT_EQ(j["boundary_scan"][0]["classification"], "minus-infinity");
}

TEST(WlscProbe, FrozenCofactorGapVanishesIn3d) {
  const auto mesh = share(build_ball(3, 0.5));
  const Point x0{0, 0, 1};
  const CofactorContraction h{[](const Point&) { return Point{1, 0, 0}; }, [](const Point& x) { return x; }};
  const Functional F{mesh, constant_weight(1.0), h.frozen(x0)};
  ProbeOptions o;
  o.model = {0.125, 5, 8};
  o.compatible = false;
  o.classify_h = 0.5;
  o.k_max = 8;
  o.solver.multistart = 4;
  const std::vector<Profile> profiles{Profile::affine_bump(Matrix(3, 3, {1, 0.5, 0, 0, 1, 2, -1, 0, 1})),
                                      Profile::bump({0, 1, 0}, 3, 3)};
  const std::vector<Point> pts{x0};
  const auto w = wlsc_probe(F, pts, profiles, o);
  EXPECT_EQ(w.boundary_scan[0].classification, Classification::Zero);
  EXPECT_EQ(w.verdict, "consistent-with-wlsc");
  for (const auto& r : w.liminf_gap)
    for (double g : r.gaps) EXPECT_NEAR(g, 0.0, 1e-3);
}

TEST(WlscProbe, RejectsInteriorPoints) {
  const auto mesh = share(build_ball(2, 0.25));
  const Functional F{mesh, constant_weight(1.0), power_norm(2, 2, 2.0)};
  const std::vector<Point> pts{{0.5, 0, 0}};
  EXPECT_THROW(wlsc_probe(F, pts, std::vector<Profile>{}, fast_2d()), ValidationError);
}

TEST(CofactorCheck, ZeroSequenceAndLaminate) {
  const auto ball = share(build_ball(3, 0.1));
  const CofactorContraction h{[](const Point& x) { return Point{1 + 0.5 * x[0], x[1], 0.2}; },
                              [](const Point& x) { return x; }};
  const std::vector<SpatialFunction> gs{constant_weight(1.0), bump_weight({0, 0, 1}, 0.6)};
  const GradientSequence zero(zero_sequence(3, 3), ball);
  const auto zr = cofactor_weak_continuity_check(h, zero, gs, std::vector<int>{1, 2});
  for (const auto& row : zr.rows) {
    EXPECT_EQ(row.reference, 0.0);
    EXPECT_EQ(row.final_gap, 0.0);
  }
  EXPECT_TRUE(zr.pass);

  const Matrix S(3, 3, {1, 0.2, 0, 0, 1, 0.3, 0.1, 0, 1});
  const Matrix J = outer({1, -1, 0.5}, 3, {0, 0, 1}, 3);
  const GradientSequence lam(laminate(J, -1.0 * J, 0.5, {0, 0, 1}, S), ball);
  const auto lr = cofactor_weak_continuity_check(h, lam, gs, std::vector<int>{4, 8, 16});
  for (const auto& row : lr.rows) {
    // Oracle: the weak limit is S, so the reference is ∫ g Cof S : a (x) rho.
    const double ref = integrate(*ball, [&](const Point& x, std::size_t) {
      return gs[&row - lr.rows.data()](x) * dot(cofactor(S), outer(h.a(x), 3, h.rho(x), 3));
    }, 3);
    EXPECT_NEAR(row.reference, ref, 1e-12 * std::max(1.0, std::abs(ref)));
    EXPECT_LE(row.final_gap, 1e-3 * row.scale) << row.g;
  }
}

TEST(CofactorCheck, BoundaryConcentrationGapDecreases) {
  const Point rho{0, 0, 1};
  const auto mesh = share(build_shell_half_ball(3, rho, {0.125, 6, 8}));
  const CofactorContraction h{[](const Point& x) {
                                const double s = (1 + 0.5 * x[0]) * plateau(norm(x, 3), 0.5, 0.9);
                                return Point{s, 0.5 * s, -0.3 * s};
                              },
                              [&](const Point&) { return rho; }};
  const GradientSequence seq(concentration(Profile::affine_bump(Matrix(3, 3, {1, 0.5, 0, 0, 1, 2, -1, 0, 1})), {}, 2.0),
                             mesh);
  const std::vector<SpatialFunction> gs{constant_weight(1.0), bump_weight({0, 0, 0}, 0.2)};
  const auto rep = cofactor_weak_continuity_check(h, seq, gs, std::vector<int>{4, 8, 16});
  for (const auto& row : rep.rows) {
    EXPECT_EQ(row.reference, 0.0);
    EXPECT_TRUE(row.monotone) << row.g;
    EXPECT_GT(row.scale, 0.0);
    EXPECT_LE(row.final_gap, 1e-2 * row.scale) << row.g;
  }
  EXPECT_NE(cofactor_report_to_csv(rep).find("g_index,g,k,value,reference,gap"), std::string::npos);
  // rho = e3 is not the outer normal on the curved part where a would not vanish.
  const CofactorContraction bad{[](const Point&) { return Point{1, 0, 0}; }, [&](const Point&) { return rho; }};
  EXPECT_THROW(cofactor_weak_continuity_check(bad, seq, gs, std::vector<int>{2}), ValidationError);
}

TEST(ScalingIdentity, PowerNormAndDeterminant) {
  const Point rho{0, 1, 0};
  const auto mesh = share(build_shell_half_ball(2, rho, {0.125, 8, 8}));
  const Profile bump = Profile::bump({0.6, 0.8, 0}, 2, 2);
  const auto s1 = scaling_identity_check(bump, power_norm(2, 2, 2.0), mesh, 1);
  const auto s32 = scaling_identity_check(bump, power_norm(2, 2, 2.0), mesh, 32);
  EXPECT_NEAR(s1.oracle, kPi / 3, 1e-3);
  EXPECT_LE(s1.relative, 0.02);
  EXPECT_LE(s32.relative, 0.02);
  const auto d = scaling_identity_check(bump, determinant(2), mesh, 32);
  EXPECT_NEAR(d.oracle, 0.0, 1e-12);
  EXPECT_LE(d.residual, 1e-12);
  EXPECT_THROW(scaling_identity_check(bump, power_norm(2, 2, 3.0), mesh, 1), ValidationError);
  EXPECT_THROW(scaling_identity_check(bump, power_norm(2, 2, 2.0), mesh, 1024), ResolutionError);
}
