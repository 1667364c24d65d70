#include "qcb/domains.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "qcb/catalog.hpp"
#include "qcb/errors.hpp"
#include "qcb/parallel.hpp"

namespace qcb {

namespace {

using Cell = std::array<int, 4>;

constexpr double kPlaneTol = 1e-12;

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double unit_ball_volume(int n) {
  switch (n) {
    case 1: return 2.0;
    case 2: return std::numbers::pi;
    default: return 4.0 * std::numbers::pi / 3.0;
  }
}

void kuhn_grid(int n, const std::array<int, 3>& N, const Point& lo, const Point& hi,
               std::vector<Point>& verts, std::vector<Cell>& cells) {
  std::array<int, 3> M{1, 1, 1};
  for (int d = 0; d < n; ++d) M[d] = N[d] + 1;
  auto index = [&](int i0, int i1, int i2) { return i0 + M[0] * (i1 + M[1] * i2); };
  verts.assign(static_cast<std::size_t>(M[0]) * M[1] * M[2], Point{});
  for (int i2 = 0; i2 < M[2]; ++i2)
    for (int i1 = 0; i1 < M[1]; ++i1)
      for (int i0 = 0; i0 < M[0]; ++i0) {
        const int idx[3] = {i0, i1, i2};
        Point p{};
        for (int d = 0; d < n; ++d) p[d] = lo[d] + (hi[d] - lo[d]) * idx[d] / N[d];
        verts[index(i0, i1, i2)] = p;
      }
  std::array<int, 3> perm{0, 1, 2};
  std::vector<std::array<int, 3>> perms;
  do perms.push_back(perm);
  while (std::next_permutation(perm.begin(), perm.begin() + n));
  std::array<int, 3> C{1, 1, 1};
  for (int d = 0; d < n; ++d) C[d] = N[d];
  cells.clear();
  for (int i2 = 0; i2 < C[2]; ++i2)
    for (int i1 = 0; i1 < C[1]; ++i1)
      for (int i0 = 0; i0 < C[0]; ++i0)
        for (const auto& pi : perms) {
          std::array<int, 3> at{i0, i1, i2};
          Cell c{-1, -1, -1, -1};
          c[0] = index(at[0], at[1], at[2]);
          for (int j = 0; j < n; ++j) {
            ++at[pi[j]];
            c[j + 1] = index(at[0], at[1], at[2]);
          }
          cells.push_back(c);
        }
}

std::uint64_t facet_key(std::array<int, 3> f, int k) {
  std::sort(f.begin(), f.begin() + k);
  std::uint64_t key = 0;
  for (int i = 0; i < 3; ++i) key = (key << 21) | static_cast<std::uint64_t>(i < k ? f[i] + 1 : 0);
  return key;
}

/// Facets (n vertices each) that belong to exactly one cell, in cell order.
std::vector<std::pair<std::array<int, 3>, int>> boundary_facets(int n, const std::vector<Cell>& cells,
                                                                std::size_t num_vertices) {
  require(num_vertices < (1u << 21) - 1, "mesh too large for facet hashing");
  std::unordered_map<std::uint64_t, int> count;
  count.reserve(cells.size() * (n + 1));
  auto facet = [n](const Cell& c, int skip) {
    std::array<int, 3> f{-1, -1, -1};
    int k = 0;
    for (int i = 0; i <= n; ++i)
      if (i != skip) f[k++] = c[i];
    return f;
  };
  for (const Cell& c : cells)
    for (int s = 0; s <= n; ++s) ++count[facet_key(facet(c, s), n)];
  std::vector<std::pair<std::array<int, 3>, int>> out;
  for (std::size_t ci = 0; ci < cells.size(); ++ci)
    for (int s = 0; s <= n; ++s) {
      const auto f = facet(cells[ci], s);
      if (count[facet_key(f, n)] == 1) out.emplace_back(f, static_cast<int>(ci));
    }
  return out;
}

Point cube_to_ball(const Point& y, int n) {
  double inf = 0.0, two = 0.0;
  for (int d = 0; d < n; ++d) {
    inf = std::max(inf, std::abs(y[d]));
    two += y[d] * y[d];
  }
  if (two == 0.0) return y;
  return scale(y, inf / std::sqrt(two));
}

Point to_frame(const Point& y, const std::array<Point, kMaxDim>& frame, int n) {
  Point x{};
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < n; ++d) x[d] += y[i] * frame[i][d];
  return x;
}

void check_unit(const Point& rho, int n) {
  require(n >= 1 && n <= kMaxDim, "mesh dimension must lie in [1,3]");
  require(std::abs(norm(rho, n) - 1.0) <= 1e-12, "rho must be a unit vector (within 1e-12)");
}

void check_h(double h) { require(h > 0.0 && h <= 0.5, "resolution h must lie in (0, 0.5]"); }

std::string num(double x) {
  std::ostringstream s;
  s.precision(17);
  s << x;
  return s.str();
}

std::string point_str(const Point& p, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s += (i ? "," : "") + num(p[i]);
  return s;
}

}  // namespace

std::string to_string(FaceLabel l) {
  switch (l) {
    case FaceLabel::Dirichlet: return "dirichlet";
    case FaceLabel::FreeGamma: return "free-gamma";
    case FaceLabel::None: return "none";
  }
  return "none";
}

std::string to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::Ball: return "ball";
    case ShapeKind::HalfBall: return "half-ball";
    case ShapeKind::HalfCube: return "half-cube";
    case ShapeKind::Star: return "star";
  }
  return "ball";
}

double Shape::boundary_distance(const Point& x, int n) const {
  const Point rel = sub(x, center);
  const double r = norm(rel, n), R = semi_axes[0];
  switch (kind) {
    case ShapeKind::Ball: return std::abs(r - R);
    case ShapeKind::Star: {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += rel[i] * rel[i] / (semi_axes[i] * semi_axes[i]);
      return std::abs(std::sqrt(s) - 1.0) * semi_axes[0];
    }
    case ShapeKind::HalfBall: {
      const double t = dot(rho, rel, n);
      const double flat = std::max(std::abs(t), r - R);
      const double curved = std::max(std::abs(r - R), t);
      return std::max(0.0, std::min(flat, curved));
    }
    case ShapeKind::HalfCube: {
      const auto frame = frame_with_last(rho, n);
      double outside = 0.0, inside = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) {
        const double y = dot(frame[i], rel, n);
        const double lo = -1.0, hi = i + 1 < n ? 1.0 : 0.0;
        outside = std::max(outside, std::max(y - hi, lo - y));
        inside = std::min(inside, std::min(hi - y, y - lo));
      }
      return outside > 0.0 ? outside : inside;
    }
  }
  return r;
}

double Shape::radius(const Point& theta, int n) const {
  if (kind != ShapeKind::Star) return semi_axes[0];
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += theta[i] * theta[i] / (semi_axes[i] * semi_axes[i]);
  return 1.0 / std::sqrt(s);
}

Point Shape::outer_normal(const Point& x, int n) const {
  const Point rel = sub(x, center);
  if (is_half() && dot(rho, rel, n) >= -1e-9) return rho;
  if (kind == ShapeKind::HalfCube) {
    const auto frame = frame_with_last(rho, n);
    int best = n - 1;
    double best_val = -dot(frame[n - 1], rel, n);
    double sign = -1.0;
    for (int i = 0; i + 1 < n; ++i) {
      const double yi = dot(frame[i], rel, n);
      if (std::abs(yi) > best_val) {
        best_val = std::abs(yi);
        best = i;
        sign = yi >= 0.0 ? 1.0 : -1.0;
      }
    }
    return scale(frame[best], sign);
  }
  Point g = rel;
  if (kind == ShapeKind::Star)
    for (int i = 0; i < n; ++i) g[i] = rel[i] / (semi_axes[i] * semi_axes[i]);
  const double r = norm(g, n);
  require(r > 0.0, "outer normal undefined at the center");
  return scale(g, 1.0 / r);
}

double Shape::exact_volume(int n) const {
  switch (kind) {
    case ShapeKind::Ball: return unit_ball_volume(n) * std::pow(semi_axes[0], n);
    case ShapeKind::HalfBall: return 0.5 * unit_ball_volume(n) * std::pow(semi_axes[0], n);
    case ShapeKind::HalfCube: return std::pow(2.0, n - 1);
    case ShapeKind::Star: {
      double v = unit_ball_volume(n);
      for (int i = 0; i < n; ++i) v *= semi_axes[i];
      return v;
    }
  }
  return 0.0;
}

void DomainMesh::finalize() {
  const int n = dim;
  require(n >= 1 && n <= kMaxDim, "mesh dimension must lie in [1,3]");
  const std::size_t nc = cells.size();
  volumes.assign(nc, 0.0);
  grad_lambda.assign(nc, {});
  const double nfact = factorial(n);
  for (std::size_t c = 0; c < nc; ++c) {
    const Cell& cell = cells[c];
    for (int i = 0; i <= n; ++i)
      require(cell[i] >= 0 && static_cast<std::size_t>(cell[i]) < vertices.size(), "cell references a missing vertex");
    Matrix J(n, n);
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < n; ++d) J(d, i) = vertices[cell[i + 1]][d] - vertices[cell[0]][d];
    const double dj = det(J);
    require(std::abs(dj) > 0.0, "degenerate cell " + std::to_string(c));
    volumes[c] = std::abs(dj) / nfact;
    const Matrix Ji = inverse(J);
    auto& gl = grad_lambda[c];
    gl[0] = Point{};
    for (int i = 1; i <= n; ++i) {
      Point g{};
      for (int d = 0; d < n; ++d) g[d] = Ji(i - 1, d);
      gl[i] = g;
      gl[0] = sub(gl[0], g);
    }
  }

  faces.clear();
  for (const auto& [f, cell] : boundary_facets(n, cells, vertices.size())) {
    BoundaryFace bf;
    bf.v = f;
    bf.cell = cell;
    bf.label = FaceLabel::Dirichlet;
    if (shape.is_half()) {
      bool flat = true;
      for (int i = 0; i < n; ++i)
        flat = flat && std::abs(dot(shape.rho, sub(vertices[f[i]], shape.center), n)) <= kPlaneTol;
      if (flat) bf.label = FaceLabel::FreeGamma;
    }
    faces.push_back(bf);
  }
  const std::size_t nv = vertices.size();
  on_boundary.assign(nv, 0);
  on_dirichlet.assign(nv, 0);
  on_gamma.assign(nv, 0);
  for (const auto& f : faces)
    for (int i = 0; i < n; ++i) {
      on_boundary[f.v[i]] = 1;
      if (f.label == FaceLabel::FreeGamma)
        on_gamma[f.v[i]] = 1;
      else
        on_dirichlet[f.v[i]] = 1;
    }
}

double DomainMesh::volume() const {
  return deterministic_sum(volumes.size(), [&](std::size_t c) { return volumes[c]; });
}

Point DomainMesh::centroid(std::size_t c) const {
  Point x{};
  for (int i = 0; i <= dim; ++i) x = add(x, vertices[cells[c][i]]);
  return scale(x, 1.0 / (dim + 1));
}

double DomainMesh::diameter(std::size_t c) const {
  double d = 0.0;
  for (int i = 0; i <= dim; ++i)
    for (int j = i + 1; j <= dim; ++j)
      d = std::max(d, norm(sub(vertices[cells[c][i]], vertices[cells[c][j]]), dim));
  return d;
}

double DomainMesh::max_diameter_near(const Point& x0, double r) const {
  double worst = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    bool near = false;
    for (int i = 0; i <= dim && !near; ++i) near = norm(sub(vertices[cells[c][i]], x0), dim) < r;
    if (near) worst = std::max(worst, diameter(c));
  }
  return worst;
}

bool DomainMesh::has_gamma() const {
  return std::any_of(faces.begin(), faces.end(), [](const BoundaryFace& f) { return f.label == FaceLabel::FreeGamma; });
}

DomainMesh build_ball(int n, double h, const Point& center, double radius) {
  require(n >= 1 && n <= kMaxDim, "mesh dimension must lie in [1,3]");
  check_h(h);
  require(radius > 0.0, "ball radius must be positive");
  const int N = 2 * static_cast<int>(std::ceil(1.0 / h));
  DomainMesh mesh;
  mesh.dim = n;
  kuhn_grid(n, {N, N, N}, {-1, -1, -1}, {1, 1, 1}, mesh.vertices, mesh.cells);
  for (auto& v : mesh.vertices) v = add(center, scale(cube_to_ball(v, n), radius));
  mesh.shape.kind = ShapeKind::Ball;
  mesh.shape.center = center;
  mesh.shape.semi_axes = {radius, radius, radius};
  mesh.spec = "ball:n=" + std::to_string(n) + ";h=" + num(h);
  if (radius != 1.0 || center != Point{}) mesh.spec += ";radius=" + num(radius) + ";center=" + point_str(center, n);
  mesh.finalize();
  return mesh;
}

DomainMesh build_half_ball(int n, const Point& rho, double h) {
  check_unit(rho, n);
  check_h(h);
  const int half = static_cast<int>(std::ceil(1.0 / h));
  DomainMesh mesh;
  mesh.dim = n;
  std::array<int, 3> N{2 * half, 2 * half, 2 * half};
  N[n - 1] = half;
  Point lo{-1, -1, -1}, hi{1, 1, 1};
  hi[n - 1] = 0.0;
  kuhn_grid(n, N, lo, hi, mesh.vertices, mesh.cells);
  const auto frame = frame_with_last(rho, n);
  for (auto& v : mesh.vertices) v = to_frame(cube_to_ball(v, n), frame, n);
  mesh.shape.kind = ShapeKind::HalfBall;
  mesh.shape.rho = rho;
  mesh.spec = "half-ball:rho=" + point_str(rho, n) + ";h=" + num(h);
  mesh.finalize();
  return mesh;
}

DomainMesh build_half_cube(int n, const Point& rho, double h) {
  check_unit(rho, n);
  check_h(h);
  const int half = static_cast<int>(std::ceil(1.0 / h));
  DomainMesh mesh;
  mesh.dim = n;
  std::array<int, 3> N{2 * half, 2 * half, 2 * half};
  N[n - 1] = half;
  Point lo{-1, -1, -1}, hi{1, 1, 1};
  hi[n - 1] = 0.0;
  kuhn_grid(n, N, lo, hi, mesh.vertices, mesh.cells);
  const auto frame = frame_with_last(rho, n);
  for (auto& v : mesh.vertices) v = to_frame(v, frame, n);
  mesh.shape.kind = ShapeKind::HalfCube;
  mesh.shape.rho = rho;
  mesh.spec = "half-cube:rho=" + point_str(rho, n) + ";h=" + num(h);
  mesh.finalize();
  return mesh;
}

DomainMesh build_star(int n, const Point& semi_axes, double h) {
  for (int i = 0; i < n; ++i) require(semi_axes[i] > 0.0, "star: semi-axes must be positive");
  DomainMesh mesh = build_ball(n, h);
  mesh.shape.kind = ShapeKind::Star;
  mesh.shape.semi_axes = semi_axes;
  for (auto& v : mesh.vertices) {
    const double r = norm(v, n);
    if (r == 0.0) continue;
    v = scale(v, mesh.shape.radius(scale(v, 1.0 / r), n));
  }
  mesh.spec = "star:axes=" + point_str(semi_axes, n) + ";h=" + num(h);
  mesh.finalize();
  return mesh;
}

namespace {

DomainMesh shell_mesh(int n, bool half, const Point& rho, const ShellOptions& opt) {
  require(n >= 1 && n <= kMaxDim, "mesh dimension must lie in [1,3]");
  require(opt.ha > 0.0 && opt.ha <= 0.5, "shell: angular spacing ha must lie in (0, 0.5]");
  require(opt.octaves >= 1 && opt.octaves <= 40, "shell: octaves must lie in [1,40]");
  require(opt.layers_per_octave >= 1 && opt.layers_per_octave <= 64, "shell: layers per octave must lie in [1,64]");
  if (half) check_unit(rho, n);

  // Angular grid: boundary facets of a Kuhn cube (lower half for half shells).
  const int k = static_cast<int>(std::ceil(1.0 / opt.ha));
  std::array<int, 3> N{2 * k, 2 * k, 2 * k};
  Point lo{-1, -1, -1}, hi{1, 1, 1};
  if (half) {
    N[n - 1] = k;
    hi[n - 1] = 0.0;
  }
  std::vector<Point> cube_verts;
  std::vector<Cell> cube_cells;
  kuhn_grid(n, N, lo, hi, cube_verts, cube_cells);
  std::vector<std::array<int, 3>> facets;
  for (const auto& [f, cell] : boundary_facets(n, cube_cells, cube_verts.size())) {
    (void)cell;
    if (half) {
      bool flat = true;
      for (int i = 0; i < n; ++i) flat = flat && cube_verts[f[i]][n - 1] == 0.0;
      if (flat) continue;
    }
    facets.push_back(f);
  }
  std::vector<int> renum(cube_verts.size(), -1);
  std::vector<int> used;
  for (const auto& f : facets)
    for (int i = 0; i < n; ++i) used.push_back(f[i]);
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());
  for (std::size_t s = 0; s < used.size(); ++s) renum[used[s]] = static_cast<int>(s);
  for (auto& f : facets) {
    for (int i = 0; i < n; ++i) f[i] = renum[f[i]];
    std::sort(f.begin(), f.begin() + n);
  }
  const int S = static_cast<int>(used.size());
  const auto frame = half ? frame_with_last(rho, n) : std::array<Point, kMaxDim>{Point{1, 0, 0}, Point{0, 1, 0}, Point{0, 0, 1}};
  std::vector<Point> dirs(S);
  for (int s = 0; s < S; ++s) {
    const Point y = cube_verts[used[s]];
    dirs[s] = to_frame(scale(y, 1.0 / norm(y, n)), frame, n);
  }

  const int L = opt.layers_per_octave;
  const int J = opt.octaves * L;
  DomainMesh mesh;
  mesh.dim = n;
  mesh.vertices.reserve(1 + static_cast<std::size_t>(J + 1) * S);
  mesh.vertices.push_back(Point{});
  for (int j = 0; j <= J; ++j) {
    const double r = std::ldexp(std::exp2(static_cast<double>(j % L) / L), j / L - opt.octaves);
    for (int s = 0; s < S; ++s) mesh.vertices.push_back(scale(dirs[s], r));
  }
  auto vid = [S](int ring, int s) { return 1 + ring * S + s; };
  for (const auto& f : facets) {
    Cell c{0, -1, -1, -1};
    for (int i = 0; i < n; ++i) c[i + 1] = vid(0, f[i]);
    mesh.cells.push_back(c);
  }
  for (int j = 0; j < J; ++j)
    for (const auto& f : facets)
      for (int t = 0; t < n; ++t) {
        Cell c{-1, -1, -1, -1};
        int q = 0;
        for (int i = 0; i <= t; ++i) c[q++] = vid(j, f[i]);
        for (int i = t; i < n; ++i) c[q++] = vid(j + 1, f[i]);
        mesh.cells.push_back(c);
      }
  mesh.shape.kind = half ? ShapeKind::HalfBall : ShapeKind::Ball;
  mesh.shape.rho = half ? rho : Point{};
  mesh.shell = {true, opt.ha, opt.octaves, opt.layers_per_octave};
  mesh.spec = std::string(half ? "shell-half-ball:rho=" + point_str(rho, n) + ";" : "shell-ball:n=" + std::to_string(n) + ";") +
              "ha=" + num(opt.ha) + ";octaves=" + std::to_string(opt.octaves) + ";lpo=" + std::to_string(L);
  mesh.finalize();
  return mesh;
}

}  // namespace

DomainMesh build_shell_ball(int n, const ShellOptions& opt) { return shell_mesh(n, false, {}, opt); }

DomainMesh build_shell_half_ball(int n, const Point& rho, const ShellOptions& opt) {
  return shell_mesh(n, true, rho, opt);
}

DomainMesh build_mesh(const std::string& spec, int default_n) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const bool known = kind == "ball" || kind == "half-ball" || kind == "half-cube" || kind == "star" ||
                     kind == "shell-ball" || kind == "shell-half-ball";
  if (!known) {
    std::ifstream in(spec);
    require(static_cast<bool>(in), "mesh spec is neither a known shape nor a readable file: " + spec);
    std::stringstream buf;
    buf << in.rdbuf();
    return mesh_from_json(buf.str());
  }
  std::map<std::string, std::string> kv;
  if (colon != std::string::npos) {
    std::stringstream ss(spec.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ';')) {
      if (item.empty()) continue;
      const auto eq = item.find('=');
      require(eq != std::string::npos, "mesh spec item needs key=value: " + item);
      kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
  }
  auto get = [&](const std::string& key, double dflt) {
    const auto it = kv.find(key);
    if (it == kv.end()) return dflt;
    try {
      return std::stod(it->second);
    } catch (const std::exception&) {
      throw ValidationError("mesh spec: bad number for " + key + ": " + it->second);
    }
  };
  int n = static_cast<int>(get("n", default_n));
  Point rho{};
  if (kv.count("rho")) {
    int dim = 0;
    rho = point_from_string(kv["rho"], &dim);
    if (!kv.count("n")) n = dim;
    require(dim == n, "mesh spec: rho dimension does not match n");
  } else {
    rho[n - 1] = 1.0;
  }
  const double h = get("h", 0.2);
  ShellOptions opt;
  opt.ha = get("ha", opt.ha);
  opt.octaves = static_cast<int>(get("octaves", opt.octaves));
  opt.layers_per_octave = static_cast<int>(get("lpo", opt.layers_per_octave));
  if (kind == "ball") {
    Point center{};
    if (kv.count("center")) center = point_from_string(kv["center"], nullptr);
    return build_ball(n, h, center, get("radius", 1.0));
  }
  if (kind == "half-ball") return build_half_ball(n, rho, h);
  if (kind == "half-cube") return build_half_cube(n, rho, h);
  if (kind == "star") {
    Point axes{1, 1, 1};
    if (kv.count("axes")) {
      int dim = 0;
      axes = point_from_string(kv["axes"], &dim);
      if (!kv.count("n")) n = dim;
      require(dim == n, "mesh spec: axes dimension does not match n");
    }
    return build_star(n, axes, h);
  }
  if (kind == "shell-ball") return build_shell_ball(n, opt);
  return build_shell_half_ball(n, rho, opt);
}

std::string mesh_to_json(const DomainMesh& mesh) {
  using nlohmann::json;
  const int n = mesh.dim;
  json j;
  j["dim"] = n;
  j["spec"] = mesh.spec;
  json shape;
  shape["kind"] = to_string(mesh.shape.kind);
  shape["center"] = std::vector<double>(mesh.shape.center.begin(), mesh.shape.center.begin() + n);
  shape["rho"] = std::vector<double>(mesh.shape.rho.begin(), mesh.shape.rho.begin() + n);
  shape["semi_axes"] = std::vector<double>(mesh.shape.semi_axes.begin(), mesh.shape.semi_axes.begin() + n);
  j["shape"] = shape;
  if (mesh.shell.graded)
    j["shell"] = {{"ha", mesh.shell.ha}, {"octaves", mesh.shell.octaves}, {"lpo", mesh.shell.layers_per_octave}};
  json verts = json::array();
  for (const auto& v : mesh.vertices) verts.push_back(std::vector<double>(v.begin(), v.begin() + n));
  j["vertices"] = verts;
  json cells = json::array();
  for (const auto& c : mesh.cells) cells.push_back(std::vector<int>(c.begin(), c.begin() + n + 1));
  j["cells"] = cells;
  json faces = json::array();
  for (const auto& f : mesh.faces)
    faces.push_back({{"vertices", std::vector<int>(f.v.begin(), f.v.begin() + n)}, {"label", to_string(f.label)}});
  j["boundary_faces"] = faces;
  return j.dump();
}

DomainMesh mesh_from_json(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("mesh JSON: ") + e.what());
  }
  try {
    DomainMesh mesh;
    mesh.dim = j.at("dim").get<int>();
    const int n = mesh.dim;
    require(n >= 1 && n <= kMaxDim, "mesh JSON: dim must lie in [1,3]");
    mesh.spec = j.value("spec", std::string());
    const auto& shape = j.at("shape");
    const auto kind = shape.at("kind").get<std::string>();
    if (kind == "ball") mesh.shape.kind = ShapeKind::Ball;
    else if (kind == "half-ball") mesh.shape.kind = ShapeKind::HalfBall;
    else if (kind == "half-cube") mesh.shape.kind = ShapeKind::HalfCube;
    else if (kind == "star") mesh.shape.kind = ShapeKind::Star;
    else throw ValidationError("mesh JSON: unknown shape kind " + kind);
    auto read = [n](const json& a, Point dflt) {
      for (int i = 0; i < n && i < static_cast<int>(a.size()); ++i) dflt[i] = a[i].get<double>();
      return dflt;
    };
    mesh.shape.center = read(shape.value("center", json::array()), Point{});
    mesh.shape.rho = read(shape.value("rho", json::array()), Point{});
    mesh.shape.semi_axes = read(shape.value("semi_axes", json::array()), Point{1, 1, 1});
    if (j.contains("shell")) {
      const auto& s = j["shell"];
      mesh.shell = {true, s.at("ha").get<double>(), s.at("octaves").get<int>(), s.at("lpo").get<int>()};
    }
    for (const auto& v : j.at("vertices")) mesh.vertices.push_back(read(v, Point{}));
    for (const auto& c : j.at("cells")) {
      require(static_cast<int>(c.size()) == n + 1, "mesh JSON: cell with wrong vertex count");
      Cell cell{-1, -1, -1, -1};
      for (int i = 0; i <= n; ++i) cell[i] = c[i].get<int>();
      mesh.cells.push_back(cell);
    }
    mesh.finalize();
    return mesh;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("mesh JSON: ") + e.what());
  }
}

std::vector<char> pinned_mask(const DomainMesh& mesh, Constraint c) {
  switch (c) {
    case Constraint::AllBoundary: return mesh.on_boundary;
    case Constraint::DirichletOnly: return mesh.on_dirichlet;
    case Constraint::None: return std::vector<char>(mesh.num_vertices(), 0);
  }
  return {};
}

DisplacementField DisplacementField::zeros(MeshPtr mesh, int m, Constraint c) {
  require(m >= 1 && m <= kMaxDim, "field dimension must lie in [1,3]");
  DisplacementField u;
  u.m = m;
  u.values.assign(mesh->num_vertices() * m, 0.0);
  u.pinned = pinned_mask(*mesh, c);
  u.mesh = std::move(mesh);
  return u;
}

DisplacementField DisplacementField::sample(MeshPtr mesh, int m, Constraint c,
                                            const std::function<Point(const Point&)>& f) {
  DisplacementField u = zeros(std::move(mesh), m, c);
  for (std::size_t v = 0; v < u.mesh->num_vertices(); ++v) {
    const Point val = f(u.mesh->vertices[v]);
    for (int a = 0; a < m; ++a) u.at(v, a) = val[a];
  }
  u.apply_mask();
  return u;
}

void DisplacementField::apply_mask() {
  for (std::size_t v = 0; v < pinned.size(); ++v)
    if (pinned[v])
      for (int a = 0; a < m; ++a) values[v * m + a] = 0.0;
}

Matrix cell_gradient(const DomainMesh& mesh, int m, std::span<const double> nodal, std::size_t c) {
  const int n = mesh.dim;
  Matrix G(m, n);
  const auto& cell = mesh.cells[c];
  const auto& gl = mesh.grad_lambda[c];
  for (int i = 0; i <= n; ++i) {
    const double* u = &nodal[static_cast<std::size_t>(cell[i]) * m];
    for (int a = 0; a < m; ++a)
      for (int d = 0; d < n; ++d) G(a, d) += u[a] * gl[i][d];
  }
  return G;
}

std::vector<Matrix> cell_gradients(const DomainMesh& mesh, int m, std::span<const double> nodal) {
  require(nodal.size() == mesh.num_vertices() * m, "nodal array does not match the mesh");
  std::vector<Matrix> out(mesh.num_cells());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = cell_gradient(mesh, m, nodal, c);
  return out;
}

std::vector<Matrix> cell_gradients(const DisplacementField& u) { return cell_gradients(*u.mesh, u.m, u.values); }

double integrate(const DomainMesh& mesh, std::span<const double> per_cell) {
  require(per_cell.size() == mesh.num_cells(), "per-cell array does not match the mesh");
  return deterministic_sum(per_cell.size(), [&](std::size_t c) { return mesh.volumes[c] * per_cell[c]; });
}

namespace {
double cell_quadrature(const DomainMesh& mesh, const std::function<double(const Point&, std::size_t)>& f,
                       int quad_order, std::size_t c) {
  const int n = mesh.dim;
  if (quad_order == 1) return mesh.volumes[c] * f(mesh.centroid(c), c);
  // Degree-3 rule: centroid plus n+1 points (3, 1, ..., 1)/(n+3).
  const double w_side = std::pow(n + 3.0, 3) / factorial(n + 3);
  const double w_mid = -std::pow(n + 1.0, 3) / factorial(n + 2);
  const double total = (n + 1) * w_side + w_mid;
  const double ws = w_side / total, wm = w_mid / total;
  const auto& cell = mesh.cells[c];
  double acc = wm * f(mesh.centroid(c), c);
  for (int i = 0; i <= n; ++i) {
    Point x{};
    for (int j = 0; j <= n; ++j) x = add(x, scale(mesh.vertices[cell[j]], (i == j ? 3.0 : 1.0) / (n + 3)));
    acc += ws * f(x, c);
  }
  return mesh.volumes[c] * acc;
}
}  // namespace

double integrate(const DomainMesh& mesh, const std::function<double(const Point&, std::size_t)>& f,
                 int quad_order) {
  require(quad_order >= 1 && quad_order <= 3, "quadrature order must lie in {1,2,3}");
  return deterministic_sum(mesh.num_cells(), [&](std::size_t c) { return cell_quadrature(mesh, f, quad_order, c); });
}

std::vector<double> cell_integrals(const DomainMesh& mesh, const std::function<double(const Point&)>& f,
                                   int quad_order) {
  require(quad_order >= 1 && quad_order <= 3, "quadrature order must lie in {1,2,3}");
  std::vector<double> out(mesh.num_cells());
  auto g = [&](const Point& x, std::size_t) { return f(x); };
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = cell_quadrature(mesh, g, quad_order, c);
  return out;
}

PointLocator::PointLocator(MeshPtr mesh, double tol) : mesh_(std::move(mesh)), tol_(tol) {
  const int n = mesh_->dim;
  lo_ = hi_ = mesh_->vertices.front();
  for (const auto& v : mesh_->vertices)
    for (int d = 0; d < n; ++d) {
      lo_[d] = std::min(lo_[d], v[d]);
      hi_[d] = std::max(hi_[d], v[d]);
    }
  const int per_dim = std::clamp(static_cast<int>(std::pow(static_cast<double>(mesh_->num_cells()), 1.0 / n)), 1, 128);
  for (int d = 0; d < n; ++d) dims_[d] = per_dim;
  buckets_.assign(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2], {});
  auto bucket_of = [&](double x, int d) {
    const double span = hi_[d] - lo_[d];
    if (span <= 0.0) return 0;
    return std::clamp(static_cast<int>((x - lo_[d]) / span * dims_[d]), 0, dims_[d] - 1);
  };
  for (std::size_t c = 0; c < mesh_->num_cells(); ++c) {
    std::array<int, 3> blo{0, 0, 0}, bhi{0, 0, 0};
    for (int d = 0; d < n; ++d) {
      double a = mesh_->vertices[mesh_->cells[c][0]][d], b = a;
      for (int i = 1; i <= n; ++i) {
        a = std::min(a, mesh_->vertices[mesh_->cells[c][i]][d]);
        b = std::max(b, mesh_->vertices[mesh_->cells[c][i]][d]);
      }
      blo[d] = bucket_of(a - tol_, d);
      bhi[d] = bucket_of(b + tol_, d);
    }
    for (int i2 = blo[2]; i2 <= bhi[2]; ++i2)
      for (int i1 = blo[1]; i1 <= bhi[1]; ++i1)
        for (int i0 = blo[0]; i0 <= bhi[0]; ++i0)
          buckets_[i0 + dims_[0] * (i1 + dims_[1] * i2)].push_back(static_cast<int>(c));
  }
}

std::array<double, 4> PointLocator::barycentric(std::size_t c, const Point& x) const {
  const int n = mesh_->dim;
  std::array<double, 4> lam{0, 0, 0, 0};
  for (int i = 0; i <= n; ++i) {
    const Point& xi = mesh_->vertices[mesh_->cells[c][i]];
    lam[i] = 1.0 + dot(mesh_->grad_lambda[c][i], sub(x, xi), n);
  }
  return lam;
}

int PointLocator::locate(const Point& x, std::array<double, 4>* bary) const {
  const int n = mesh_->dim;
  std::array<int, 3> b{0, 0, 0};
  for (int d = 0; d < n; ++d) {
    if (x[d] < lo_[d] - tol_ || x[d] > hi_[d] + tol_) return -1;
    const double span = hi_[d] - lo_[d];
    b[d] = span <= 0.0 ? 0 : std::clamp(static_cast<int>((x[d] - lo_[d]) / span * dims_[d]), 0, dims_[d] - 1);
  }
  int best = -1;
  double best_min = -1e300;
  std::array<double, 4> best_lam{};
  for (int c : buckets_[b[0] + dims_[0] * (b[1] + dims_[1] * b[2])]) {
    const auto lam = barycentric(c, x);
    double mn = lam[0];
    for (int i = 1; i <= n; ++i) mn = std::min(mn, lam[i]);
    if (mn > best_min) {
      best_min = mn;
      best = c;
      best_lam = lam;
    }
    if (mn >= 0.0) break;
  }
  if (best < 0 || best_min < -tol_) return -1;
  if (bary) *bary = best_lam;
  return best;
}

std::array<double, 3> evaluate_p1(const DisplacementField& u, const PointLocator& loc, const Point& x) {
  std::array<double, 3> out{0, 0, 0};
  std::array<double, 4> lam{};
  const int c = loc.locate(x, &lam);
  if (c < 0) return out;
  const auto& cell = u.mesh->cells[c];
  for (int i = 0; i <= u.mesh->dim; ++i)
    for (int a = 0; a < u.m; ++a) out[a] += lam[i] * u.at(cell[i], a);
  return out;
}

}  // namespace qcb
