#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qcb/domains.hpp"
#include "qcb/errors.hpp"

using namespace qcb;

namespace {
constexpr double kPi = std::numbers::pi;

MeshPtr share(DomainMesh m) { return std::make_shared<const DomainMesh>(std::move(m)); }

Point unit(Point p, int n) { return scale(p, 1.0 / norm(p, n)); }
}  // namespace

TEST(HalfBall, AreaAndVolume) {
  const auto disk = build_half_ball(2, {0, 1, 0}, 0.25);
  EXPECT_NEAR(disk.volume(), kPi / 2, 0.03 * kPi / 2);
  const auto ball = build_half_ball(3, {0, 0, 1}, 0.3);
  EXPECT_NEAR(ball.volume(), 2 * kPi / 3, 0.05 * 2 * kPi / 3);
  for (double v : ball.volumes) EXPECT_GT(v, 0.0);
}

TEST(HalfBall, GammaFacesLieOnPlane) {
  const Point rho = unit({1, 1, 0}, 2);
  const auto mesh = build_half_ball(2, rho, 0.25);
  int gamma = 0;
  for (const auto& f : mesh.faces) {
    const bool on_plane = std::abs(dot(rho, mesh.vertices[f.v[0]], 2)) <= 1e-12 &&
                          std::abs(dot(rho, mesh.vertices[f.v[1]], 2)) <= 1e-12;
    if (f.label == FaceLabel::FreeGamma) {
      ++gamma;
      EXPECT_TRUE(on_plane);
      const Point t = sub(mesh.vertices[f.v[1]], mesh.vertices[f.v[0]]);
      EXPECT_LE(std::abs(dot(t, rho, 2)), 1e-12);
    } else {
      EXPECT_FALSE(on_plane);
      EXPECT_NEAR(norm(mesh.vertices[f.v[0]], 2), 1.0, 1e-12);
    }
  }
  EXPECT_EQ(gamma, 8);
  for (const auto& v : mesh.vertices) EXPECT_LE(dot(rho, v, 2), 1e-12);
}

TEST(HalfBall, RejectsNonUnitNormal) {
  EXPECT_THROW(build_half_ball(2, {0, 1.001, 0}, 0.25), ValidationError);
  EXPECT_THROW(build_half_ball(2, {0, 1, 0}, 0.7), ValidationError);
}

TEST(HalfBall, RefinementReducesVolumeError) {
  // Inscribed polygons converge at second order; the ratio approaches 4 from below.
  for (int n : {2, 3}) {
    Point rho{};
    rho[n - 1] = 1;
    const double exact = build_half_ball(n, rho, 0.5).shape.exact_volume(n);
    const double e1 = exact - build_half_ball(n, rho, 0.25).volume();
    const double e2 = exact - build_half_ball(n, rho, 0.125).volume();
    EXPECT_GT(e1, 0.0);
    EXPECT_GT(e1 / e2, 3.5) << n;
  }
}

TEST(HalfCube, SmokeVolumeAndLabels) {
  const auto mesh = build_half_cube(3, {0, 0, 1}, 0.25);
  EXPECT_NEAR(mesh.volume(), 4.0, 1e-12);
  EXPECT_TRUE(mesh.has_gamma());
}

TEST(Masking, DirichletAndGammaVertices) {
  const auto mesh = share(build_half_ball(2, {0, 1, 0}, 0.25));
  auto u = DisplacementField::sample(mesh, 1, Constraint::DirichletOnly, [](const Point&) { return Point{1, 0, 0}; });
  bool interior_gamma_free = false;
  for (std::size_t v = 0; v < mesh->num_vertices(); ++v) {
    if (mesh->on_dirichlet[v]) EXPECT_EQ(u.at(v, 0), 0.0);
    if (mesh->on_gamma[v] && !mesh->on_dirichlet[v]) {
      EXPECT_EQ(u.at(v, 0), 1.0);
      interior_gamma_free = true;
    }
  }
  EXPECT_TRUE(interior_gamma_free);
  const auto w = DisplacementField::sample(mesh, 1, Constraint::AllBoundary, [](const Point&) { return Point{1, 0, 0}; });
  for (std::size_t v = 0; v < mesh->num_vertices(); ++v)
    if (mesh->on_boundary[v]) EXPECT_EQ(w.at(v, 0), 0.0);
}

TEST(CellGradients, AffineReproduction) {
  const Matrix S(2, 3, {1.5, -2, 0.25, 3, 0.5, -1});
  const auto mesh = share(build_ball(3, 0.25));
  const auto u = DisplacementField::sample(mesh, 2, Constraint::None, [&](const Point& x) {
    return Point{S(0, 0) * x[0] + S(0, 1) * x[1] + S(0, 2) * x[2], S(1, 0) * x[0] + S(1, 1) * x[1] + S(1, 2) * x[2], 0};
  });
  for (const Matrix& G : cell_gradients(u)) EXPECT_LT(norm(G - S), 1e-12);
  const auto zero = DisplacementField::zeros(mesh, 2, Constraint::None);
  for (const Matrix& G : cell_gradients(zero)) EXPECT_EQ(norm(G), 0.0);
}

TEST(CellGradients, NormalProfileOnHalfBall) {
  const Point rho = unit({1, -2, 2}, 3);
  const Point b{0.3, -1, 2};
  const auto mesh = share(build_half_ball(3, rho, 0.3));
  const auto u = DisplacementField::sample(mesh, 3, Constraint::None,
                                           [&](const Point& x) { return scale(b, dot(rho, x, 3)); });
  const Matrix expect = outer(b, 3, rho, 3);
  for (const Matrix& G : cell_gradients(u)) EXPECT_LT(norm(G - expect), 1e-12);
}

TEST(Integrate, ConstantsCoordinatesAndMoments) {
  const auto disk = build_half_ball(2, {0, 1, 0}, 0.125);
  EXPECT_NEAR(integrate(disk, [](const Point&, std::size_t) { return 1.0; }, 1), disk.volume(), 1e-13);
  const auto ball = build_ball(2, 0.1);
  EXPECT_NEAR(integrate(ball, [](const Point& x, std::size_t) { return x[0]; }, 2), 0.0, 1e-10);
  // Closed form: the integral of |x|^2 over the unit disk is pi/2.
  double prev = 1.0;
  for (double h : {0.2, 0.1, 0.05}) {
    const auto m = build_ball(2, h);
    const double err = std::abs(integrate(m, [](const Point& x, std::size_t) { return x[0] * x[0] + x[1] * x[1]; }, 2) - kPi / 2);
    EXPECT_LT(err, 2.0 * h * h);
    EXPECT_LT(err, prev);
    prev = err;
  }
}

TEST(Integrate, CubicRuleExactOnSimplex) {
  DomainMesh tri;
  tri.dim = 2;
  tri.vertices = {Point{0, 0, 0}, Point{1, 0, 0}, Point{0, 1, 0}};
  tri.cells = {{0, 1, 2, -1}};
  tri.finalize();
  // Int over the unit triangle of x^3 = 1/20, x^2 y = 1/60.
  EXPECT_NEAR(integrate(tri, [](const Point& x, std::size_t) { return x[0] * x[0] * x[0]; }, 3), 1.0 / 20, 1e-15);
  EXPECT_NEAR(integrate(tri, [](const Point& x, std::size_t) { return x[0] * x[0] * x[1]; }, 3), 1.0 / 60, 1e-15);
  DomainMesh tet;
  tet.dim = 3;
  tet.vertices = {Point{0, 0, 0}, Point{1, 0, 0}, Point{0, 1, 0}, Point{0, 0, 1}};
  tet.cells = {{0, 1, 2, 3}};
  tet.finalize();
  // Int over the unit tetrahedron of x y z = 1/720, x^3 = 1/120.
  EXPECT_NEAR(integrate(tet, [](const Point& x, std::size_t) { return x[0] * x[1] * x[2]; }, 3), 1.0 / 720, 1e-15);
  EXPECT_NEAR(integrate(tet, [](const Point& x, std::size_t) { return x[0] * x[0] * x[0]; }, 3), 1.0 / 120, 1e-15);
}

TEST(Shell, ConformingAndSelfSimilar) {
  for (int n : {2, 3}) {
    Point rho{};
    rho[n - 1] = 1;
    const ShellOptions opt{0.25, 3, 4};
    const auto mesh = build_shell_half_ball(n, rho, opt);
    EXPECT_NEAR(mesh.volume(), mesh.shape.exact_volume(n), 0.05 * mesh.shape.exact_volume(n));
    for (const auto& f : mesh.faces) {
      for (int i = 0; i < n; ++i) {
        const Point& x = mesh.vertices[f.v[i]];
        if (f.label == FaceLabel::FreeGamma)
          EXPECT_LE(std::abs(x[n - 1]), 1e-12);
        else
          EXPECT_NEAR(norm(x, n), 1.0, 1e-12);
      }
    }
    // Ring j + L is ring j scaled by exactly 2.
    const std::size_t S = (mesh.num_vertices() - 1) / (opt.octaves * opt.layers_per_octave + 1);
    for (std::size_t s = 0; s < S; ++s) {
      const Point& a = mesh.vertices[1 + s];
      const Point& b = mesh.vertices[1 + opt.layers_per_octave * S + s];
      for (int d = 0; d < n; ++d) EXPECT_EQ(b[d], 2.0 * a[d]);
    }
  }
  const auto full = build_shell_ball(2, {0.125, 4, 8});
  EXPECT_FALSE(full.has_gamma());
  EXPECT_NEAR(full.volume(), kPi, 0.01 * kPi);
}

TEST(Shell, ResolvesShrunkenSupport) {
  const auto mesh = build_shell_half_ball(2, {0, 1, 0}, {0.125, 9, 8});
  for (int k : {1, 4, 16, 64}) EXPECT_LE(mesh.max_diameter_near({}, 1.0 / k), 0.25 / k) << k;
}

TEST(MeshIo, JsonRoundTripAndSpecs) {
  const auto mesh = build_mesh("half-ball:rho=0,0,1;h=0.5");
  EXPECT_EQ(mesh.dim, 3);
  const auto back = mesh_from_json(mesh_to_json(mesh));
  ASSERT_EQ(back.num_cells(), mesh.num_cells());
  EXPECT_EQ(back.faces.size(), mesh.faces.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) EXPECT_EQ(back.faces[f].label, mesh.faces[f].label);
  EXPECT_EQ(mesh_to_json(back), mesh_to_json(mesh));
  EXPECT_EQ(build_mesh("ball:h=0.2").dim, 2);
  EXPECT_EQ(build_mesh("star:axes=1,0.5;h=0.25").shape.kind, ShapeKind::Star);
  EXPECT_THROW(build_mesh("no-such-file.json"), ValidationError);
}

TEST(Star, EllipseAreaAndNormals) {
  const auto mesh = build_star(2, {1.0, 0.5, 1}, 0.1);
  EXPECT_NEAR(mesh.volume(), kPi * 0.5, 0.02 * kPi * 0.5);
  const Point nrm = mesh.outer_normal({0, 0.5, 0});
  EXPECT_NEAR(nrm[1], 1.0, 1e-14);
}

TEST(Locator, FindsCellsAndInterpolates) {
  const auto mesh = share(build_ball(2, 0.2));
  const auto u = DisplacementField::sample(mesh, 2, Constraint::None,
                                           [](const Point& x) { return Point{2 * x[0] - x[1], 0.5 * x[1], 0}; });
  const PointLocator loc(mesh);
  for (const Point x : {Point{0.1, 0.2, 0}, Point{-0.5, 0.3, 0}, Point{0.0, -0.9, 0}}) {
    const auto val = evaluate_p1(u, loc, x);
    EXPECT_NEAR(val[0], 2 * x[0] - x[1], 1e-12);
    EXPECT_NEAR(val[1], 0.5 * x[1], 1e-12);
  }
  EXPECT_EQ(loc.locate({2, 2, 0}), -1);
}
