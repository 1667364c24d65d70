#pragma once

// Simplicial meshes of balls, half-balls and star-shaped domains with P1
// calculus: barycentric gradients, per-cell gradients, quadrature.

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qcb/linalg.hpp"

namespace qcb {

enum class FaceLabel { Dirichlet, FreeGamma, None };
enum class ShapeKind { Ball, HalfBall, HalfCube, Star };

std::string to_string(FaceLabel l);
std::string to_string(ShapeKind k);

struct Shape {
  ShapeKind kind = ShapeKind::Ball;
  Point center{};
  Point rho{};                  ///< outer normal of the flat part (half shapes)
  Point semi_axes{1.0, 1.0, 1.0};  ///< ball radius is semi_axes[0]; star uses all n

  /// Boundary radius along the unit direction theta (star-shaped about center).
  double radius(const Point& theta, int n) const;
  /// Outer unit normal at (or nearest to) the boundary point x.
  Point outer_normal(const Point& x, int n) const;
  /// Distance-like defect of x from the boundary (0 on the boundary).
  double boundary_distance(const Point& x, int n) const;
  /// Exact measure of the continuous domain.
  double exact_volume(int n) const;
  bool is_half() const { return kind == ShapeKind::HalfBall || kind == ShapeKind::HalfCube; }
};

struct BoundaryFace {
  std::array<int, 3> v{-1, -1, -1};  ///< first n entries used
  int cell = -1;
  FaceLabel label = FaceLabel::None;
};

/// Parameters of a self-similar graded mesh around `shape.center`.
struct ShellInfo {
  bool graded = false;
  double ha = 0.0;         ///< spacing of the angular cube-surface grid
  int octaves = 0;         ///< innermost ring radius 2^-octaves
  int layers_per_octave = 0;
};

struct DomainMesh {
  int dim = 2;
  std::vector<Point> vertices;
  std::vector<std::array<int, 4>> cells;  ///< first dim+1 entries used
  std::vector<double> volumes;
  std::vector<std::array<Point, 4>> grad_lambda;  ///< barycentric gradients per cell
  std::vector<BoundaryFace> faces;
  std::vector<char> on_boundary, on_dirichlet, on_gamma;
  Shape shape;
  ShellInfo shell;
  std::string spec;

  /// Computes volumes, barycentric gradients, boundary faces, labels and
  /// vertex flags from vertices, cells and shape.
  void finalize();

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_cells() const { return cells.size(); }
  double volume() const;
  Point centroid(std::size_t c) const;
  double diameter(std::size_t c) const;
  /// Largest diameter among cells having a vertex in B(x0, r).
  double max_diameter_near(const Point& x0, double r) const;
  bool has_gamma() const;
  Point outer_normal(const Point& x) const { return shape.outer_normal(x, dim); }
};

using MeshPtr = std::shared_ptr<const DomainMesh>;

DomainMesh build_ball(int n, double h, const Point& center = {}, double radius = 1.0);
/// B(0,1) ∩ {rho·x < 0}; |rho| = 1 within 1e-12.
DomainMesh build_half_ball(int n, const Point& rho, double h);
/// [-1,1]^{n-1} x [-1,0] in the frame whose last axis is rho.
DomainMesh build_half_cube(int n, const Point& rho, double h);
/// Ellipsoid with the given semi-axes, meshed by radially stretching the ball mesh.
DomainMesh build_star(int n, const Point& semi_axes, double h);

struct ShellOptions {
  double ha = 0.125;
  int octaves = 7;
  int layers_per_octave = 8;
};
/// Unit ball (or half-ball with normal rho) graded self-similarly toward the
/// center: ring radii 2^{-octaves + j/layers_per_octave}.
DomainMesh build_shell_ball(int n, const ShellOptions& opt);
DomainMesh build_shell_half_ball(int n, const Point& rho, const ShellOptions& opt);

/// "ball:n=2;h=0.2", "half-ball:rho=0,1;h=0.25", "shell-half-ball:rho=0,0,1;octaves=7",
/// "star:axes=1,0.7;h=0.1", "half-cube:rho=0,1;h=0.25" or a path to a mesh JSON file.
DomainMesh build_mesh(const std::string& spec, int default_n = 2);

std::string mesh_to_json(const DomainMesh& mesh);
DomainMesh mesh_from_json(const std::string& text);

// P1 fields ------------------------------------------------------------------

enum class Constraint {
  AllBoundary,    ///< W_0: every boundary vertex pinned
  DirichletOnly,  ///< free on Gamma, pinned on the rest of the boundary
  None
};

struct DisplacementField {
  MeshPtr mesh;
  int m = 1;
  std::vector<double> values;  ///< vertex-major, m per vertex
  std::vector<char> pinned;

  static DisplacementField zeros(MeshPtr mesh, int m, Constraint c);
  /// Nodal sampling of f; pinned vertices are zeroed.
  static DisplacementField sample(MeshPtr mesh, int m, Constraint c,
                                  const std::function<Point(const Point&)>& f);

  double& at(std::size_t vertex, int comp) { return values[vertex * m + comp]; }
  double at(std::size_t vertex, int comp) const { return values[vertex * m + comp]; }
  void apply_mask();
};

std::vector<char> pinned_mask(const DomainMesh& mesh, Constraint c);

Matrix cell_gradient(const DomainMesh& mesh, int m, std::span<const double> nodal, std::size_t c);
std::vector<Matrix> cell_gradients(const DomainMesh& mesh, int m, std::span<const double> nodal);
std::vector<Matrix> cell_gradients(const DisplacementField& u);

/// Sum of vol_c * f_c.
double integrate(const DomainMesh& mesh, std::span<const double> per_cell);
/// Quadrature of f(x, cell). Order 1 is the centroid rule; orders 2 and 3
/// use a 1 + (n+1) point rule exact for cubics.
double integrate(const DomainMesh& mesh, const std::function<double(const Point&, std::size_t)>& f,
                 int quad_order);

/// Per-cell integrals of f with the same rules as integrate().
std::vector<double> cell_integrals(const DomainMesh& mesh, const std::function<double(const Point&)>& f,
                                   int quad_order = 2);

/// Bucket-grid point location on a mesh.
class PointLocator {
 public:
  explicit PointLocator(MeshPtr mesh, double tol = 1e-10);
  /// Cell containing x and its barycentric coordinates, or -1.
  int locate(const Point& x, std::array<double, 4>* bary = nullptr) const;

 private:
  MeshPtr mesh_;
  double tol_;
  Point lo_{}, hi_{};
  std::array<int, 3> dims_{1, 1, 1};
  std::vector<std::vector<int>> buckets_;
  std::array<double, 4> barycentric(std::size_t c, const Point& x) const;
};

/// P1 interpolant of a field at an arbitrary point; zero outside the mesh.
std::array<double, 3> evaluate_p1(const DisplacementField& u, const PointLocator& loc, const Point& x);

}  // namespace qcb
