#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qcb/errors.hpp"
#include "qcb/measures.hpp"

using namespace qcb;

namespace {
constexpr double kPi = std::numbers::pi;

MeshPtr share(DomainMesh m) { return std::make_shared<const DomainMesh>(std::move(m)); }

const CheckResult& check(const DpmValidation& v, const std::string& name) {
  for (const auto& c : v.checks)
    if (c.name == name) return c;
  throw std::runtime_error("missing check " + name);
}

const ConditionVerdict& verdict(const NecessaryConditionsReport& r, const std::string& name) {
  for (const auto& c : r.verdicts)
    if (c.name == name) return c;
  throw std::runtime_error("missing verdict " + name);
}

std::size_t index_of(const DpmEstimate& est, const std::string& name) {
  for (std::size_t v = 0; v < est.integrands.size(); ++v)
    if (est.integrands[v].name() == name) return v;
  throw std::runtime_error("missing integrand " + name);
}

double pairing(const DpmEstimate& est, std::size_t g, std::size_t v) {
  return est.pairings[g * est.integrands.size() + v].limit.value;
}
}  // namespace

TEST(Dictionary, DefaultEntries) {
  const auto d = default_dictionary(2, 2, 2.0);
  EXPECT_EQ(d.g.size(), 1u);
  EXPECT_EQ(d.v.size(), 5u);
  EXPECT_EQ(default_dictionary(3, 3, 2.0).v.size(), 4u);  // no determinant at p < n
}

TEST(Estimate, ZeroSequenceIsExact) {
  const auto mesh = share(build_ball(2, 0.2));
  const GradientSequence seq(zero_sequence(2, 2), mesh);
  TestDictionary dict = default_dictionary(2, 2, 2.0);
  dict.g.push_back(coordinate_weight(0));
  dict.g.push_back(bump_weight({0.3, 0, 0}, 0.4));
  const std::vector<int> ladder{1, 2, 4};
  const auto est = estimate_pairings(seq, dict, ladder);
  for (const auto& pr : est.pairings) {
    const double expect = integrate(*mesh, [&](const Point& x, std::size_t) { return dict.g[pr.g](x) * dict.v[pr.v](Matrix(2, 2)); }, 2);
    EXPECT_NEAR(pr.limit.value, expect, 1e-13);
  }
  for (double d : est.sigma_ac_density) EXPECT_EQ(d, 1.0);
  const auto val = validate_dpm(est);
  EXPECT_TRUE(val.pass);
  for (const auto& c : val.checks) EXPECT_TRUE(c.pass) << c.name << " " << c.witness;
  const auto rep = check_necessary_conditions(est);
  EXPECT_TRUE(rep.pass);
  const std::size_t lin = index_of(est, "affine");
  for (double m : rep.jensen_margin[lin]) EXPECT_NEAR(m, 0.0, 1e-12);
  for (const auto& row : rep.jensen_margin)
    for (double m : row) EXPECT_GE(m, -1e-9);
}

TEST(Estimate, LaminateMomentsAndConditions) {
  const auto mesh = share(build_ball(2, 0.05));
  const Matrix A = outer({1, 0, 0}, 2, {1, 0, 0}, 2);
  const GradientSequence seq(laminate(-1.0 * A, A, 0.5, {1, 0, 0}), mesh);
  const auto dict = default_dictionary(2, 2, 2.0);
  const std::vector<int> ladder{2, 4, 8};
  const auto est = estimate_pairings(seq, dict, ladder);
  // |grad u_k| = 1 everywhere: the mass integral is exactly 2 |Omega|.
  EXPECT_NEAR(pairing(est, 0, index_of(est, "power-norm-shifted")), 2 * mesh->volume(), 1e-12);
  EXPECT_TRUE(est.atoms.empty());
  const auto val = validate_dpm(est);
  for (const auto& c : val.checks) EXPECT_TRUE(c.pass) << c.name << " " << c.witness;
  const auto rep = check_necessary_conditions(est);
  EXPECT_LE(verdict(rep, "firstmoment").worst, 1e-3);
  EXPECT_GE(verdict(rep, "qc").worst, -1e-3);
  EXPECT_EQ(verdict(rep, "qc").checked, 5);
  EXPECT_TRUE(rep.pass);
  // Jensen margin for |s|^2 is 1 - Q|.|^2(0) = 1.
  for (double m : rep.jensen_margin[index_of(est, "power-norm")]) EXPECT_NEAR(m, 1.0, 1e-9);
  EXPECT_TRUE(split_oscillation_concentration(est).non_cauchy.empty());
}

TEST(Estimate, BoundaryConcentrationAtom) {
  // Half-disk integral of |grad (1-r)^2 b|^2 is pi |b|^2 / 3.
  const Point rho{0, 1, 0};
  const auto mesh = share(build_shell_half_ball(2, rho, {0.125, 8, 8}));
  const Point b{0.6, 0.8, 0};
  const GradientSequence seq(concentration(Profile::bump(b, 2, 2), {}, 2.0), mesh);
  const auto dict = default_dictionary(2, 2, 2.0);
  const auto ladder = geometric_ladder(32, 4);
  const auto est = estimate_pairings(seq, dict, ladder);
  const double oracle = kPi / 3;
  ASSERT_EQ(est.atoms.size(), 1u);
  EXPECT_TRUE(est.atoms[0].boundary);
  EXPECT_NEAR(est.atoms[0].mass, oracle, 0.02 * oracle);
  EXPECT_NEAR(pairing(est, 0, index_of(est, "power-norm-shifted")), mesh->volume() + oracle, 0.02 * oracle);
  EXPECT_NEAR(est.sphere_normalization[0], 1.0, 1e-12);
  EXPECT_NEAR(est.sphere_moments[0][index_of(est, "power-norm")], 1.0, 1e-12);
  // A rank-one profile carries no determinant; the affine test has zero recession.
  EXPECT_NEAR(est.sphere_moments[0][index_of(est, "det2")], 0.0, 1e-12);
  EXPECT_EQ(est.sphere_moments[0][index_of(est, "affine")], 0.0);
  const auto val = validate_dpm(est);
  for (const auto& c : val.checks) EXPECT_TRUE(c.pass) << c.name << " " << c.witness;
  const auto rep = check_necessary_conditions(est);
  EXPECT_TRUE(verdict(rep, "boundary").pass);
  // det2 has Q_b = -inf at the boundary, so its margin is not applicable.
  EXPECT_TRUE(std::isnan(rep.boundary_margin[0][index_of(est, "det2")]));
  EXPECT_EQ(rep.boundary_margin[0][index_of(est, "power-norm")], est.sphere_moments[0][index_of(est, "power-norm")]);
}

TEST(Estimate, CofactorBoundaryConditionsIn3d) {
  const Point rho{0, 0, 1};
  const auto mesh = share(build_shell_half_ball(3, rho, {0.125, 5, 8}));
  const GradientSequence seq(concentration(Profile::bump({0, 0, 1}, 3, 3), {}, 2.0), mesh);
  TestDictionary dict;
  dict.g.push_back(constant_weight(1.0));
  dict.v = {cofactor_contraction({1, 0, 0}, rho), cofactor_contraction({-1, 0, 0}, rho)};
  const std::vector<int> ladder{1, 2, 4};
  const auto est = estimate_pairings(seq, dict, ladder);
  ConditionOptions opt;
  opt.boundary_h = 0.5;
  opt.envelope_h = 0.5;
  const auto rep = check_necessary_conditions(est, opt);
  const auto& bd = verdict(rep, "boundary");
  EXPECT_EQ(bd.checked, 2);
  EXPECT_GE(bd.worst, -1e-6);
  EXPECT_TRUE(bd.pass);
}

TEST(Validate, CorruptedAtomFailsPositivity) {
  const auto mesh = share(build_shell_half_ball(2, {0, 1, 0}, {0.125, 6, 8}));
  const GradientSequence seq(concentration(Profile::bump({1, 0, 0}, 2, 2), {}, 2.0), mesh);
  auto est = estimate_pairings(seq, default_dictionary(2, 2, 2.0), std::vector<int>{1, 2, 4});
  EXPECT_TRUE(validate_dpm(est).pass);
  est.atoms[0].mass = -0.1;
  const auto val = validate_dpm(est);
  EXPECT_FALSE(val.pass);
  const auto& pos = check(val, "positivity");
  EXPECT_FALSE(pos.pass);
  EXPECT_DOUBLE_EQ(pos.worst, -0.1);
  EXPECT_NE(pos.witness.find("atom 0"), std::string::npos);
  EXPECT_TRUE(check(val, "density").pass);
}

TEST(Estimate, PairingsAreLinear) {
  const auto mesh = share(build_shell_half_ball(2, {0, 1, 0}, {0.125, 6, 8}));
  const GradientSequence seq(concentration(Profile::affine_bump(Matrix(2, 2, {1, 2, -1, 0.5})), {}, 2.0), mesh);
  TestDictionary dict;
  dict.g = {constant_weight(1.0), coordinate_weight(0)};
  const Integrand v1 = power_norm(2, 2, 2.0), v2 = determinant(2);
  Integrand::Parts P;
  P.m = P.n = 2;
  P.p = 2;
  P.eval = [=](const Matrix& s) { return 0.7 * v1(s) - 1.3 * v2(s); };
  P.homogeneous = true;
  dict.v = {v1, v2, Integrand(P)};
  const auto est = estimate_pairings(seq, dict, std::vector<int>{1, 2, 4});
  for (std::size_t g = 0; g < 2; ++g)
    for (std::size_t k = 0; k < 3; ++k) {
      const double a = est.pairings[g * 3 + 0].values[k], b = est.pairings[g * 3 + 1].values[k];
      EXPECT_NEAR(est.pairings[g * 3 + 2].values[k], 0.7 * a - 1.3 * b, 1e-10 * (1 + std::abs(a) + std::abs(b)));
    }
  // Bounded perturbations with zero recession leave the sphere moments alone.
  Integrand::Parts W;
  W.m = W.n = 2;
  W.p = 2;
  W.eval = [=](const Matrix& s) { return v1(s) + std::exp(-norm2(s)); };
  W.recession = [=](const Matrix& s) { return v1(s); };
  TestDictionary d2{dict.g, {v1, Integrand(W)}};
  const auto e2 = estimate_pairings(seq, d2, std::vector<int>{1, 2, 4});
  EXPECT_NEAR(e2.sphere_moments[0][0], e2.sphere_moments[0][1], 1e-12);
}

TEST(Tails, ConcentrationVersusLaminate) {
  const Point rho{0, 1, 0};
  const auto mesh = share(build_shell_half_ball(2, rho, {0.125, 9, 8}));
  const Point b{1, 0, 0};
  const GradientSequence conc(concentration(Profile::bump(b, 2, 2), {}, 2.0), mesh);
  const PointIntegrand sq = [](const Point&, const Matrix& s) { return norm2(s); };
  const std::vector<double> K{1, 4, 16, 64, 256, 1024};
  const auto ladder = geometric_ladder(64, 1);
  const auto rep = equiintegrability_diagnostic(conc, sq, K, ladder);
  EXPECT_FALSE(rep.equiintegrable);
  EXPECT_EQ(rep.verdict, "concentrating");
  for (double t : rep.sup_tail) EXPECT_GE(t, 0.9 * kPi / 3);
  const auto est = estimate_pairings(conc, TestDictionary{{constant_weight(1.0)}, {power_norm(2, 2, 2.0)}}, ladder);
  EXPECT_TRUE(tails_match_sphere_moments(rep, est, 0));

  const auto ball = share(build_ball(2, 0.1));
  const Matrix A = outer({1, 0, 0}, 2, {0, 1, 0}, 2);
  const GradientSequence lam(laminate(-2.0 * A, A, 0.5, {0, 1, 0}), ball);
  const std::vector<double> KL{1, 4.5};  // max |grad u_k|^2 = 4
  const auto lrep = equiintegrability_diagnostic(lam, sq, KL, std::vector<int>{1, 2, 4, 8});
  EXPECT_TRUE(lrep.equiintegrable);
  for (double t : lrep.tails[1]) EXPECT_EQ(t, 0.0);
  const PointIntegrand neg = [](const Point&, const Matrix& s) { return -norm2(s) - 1.0; };
  EXPECT_THROW(equiintegrability_diagnostic(lam, neg, KL, std::vector<int>{1}), ValidationError);
}

TEST(DpmIo, JsonRoundTrip) {
  const auto mesh = share(build_shell_half_ball(2, {0, 1, 0}, {0.125, 6, 8}));
  const GradientSequence seq(concentration(Profile::bump({1, 0, 0}, 2, 2), {}, 2.0), mesh);
  const auto est = estimate_pairings(seq, default_dictionary(2, 2, 2.0), std::vector<int>{1, 2, 4});
  const auto j = dpm_to_json(est);
  const auto back = dpm_from_json(j);
  EXPECT_EQ(dpm_to_json(back), j);
  EXPECT_EQ(validate_dpm(back).pass, validate_dpm(est).pass);
}
