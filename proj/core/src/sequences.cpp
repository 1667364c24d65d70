#include "qcb/sequences.hpp"

#include <algorithm>
#include <cmath>

#include "qcb/catalog.hpp"
#include "qcb/errors.hpp"
#include "qcb/parallel.hpp"

namespace qcb {

Profile Profile::bump(const Point& b, int m, int n) {
  require(m >= 1 && m <= 3 && n >= 1 && n <= 3, "profile dimensions must lie in 1..3");
  Profile pr;
  pr.kind_ = Kind::Bump;
  pr.m_ = m;
  pr.n_ = n;
  pr.b_ = b;
  return pr;
}

Profile Profile::affine_bump(const Matrix& M) {
  require(M.rows >= 1 && M.rows <= 3 && M.cols >= 1 && M.cols <= 3, "profile dimensions must lie in 1..3");
  Profile pr;
  pr.kind_ = Kind::AffineBump;
  pr.m_ = M.rows;
  pr.n_ = M.cols;
  pr.M_ = M;
  return pr;
}

Profile Profile::field(const DisplacementField& u) {
  require(static_cast<bool>(u.mesh), "field profile needs a mesh");
  const DomainMesh& mesh = *u.mesh;
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    require(norm(mesh.vertices[v], mesh.dim) <= 1.0 + 1e-9, "field profile must live in the unit ball");
    if (mesh.on_dirichlet[v])
      for (int a = 0; a < u.m; ++a) require(u.at(v, a) == 0.0, "field profile must vanish on the curved boundary");
  }
  Profile pr;
  pr.kind_ = Kind::Field;
  pr.m_ = u.m;
  pr.n_ = mesh.dim;
  pr.field_ = std::make_shared<const DisplacementField>(u);
  pr.locator_ = std::make_shared<const PointLocator>(u.mesh);
  return pr;
}

std::string Profile::name() const {
  switch (kind_) {
    case Kind::Bump: return "bump";
    case Kind::AffineBump: return "affine-bump";
    case Kind::Field: return "field";
  }
  return "field";
}

Point Profile::value(const Point& y) const {
  const double r = norm(y, n_);
  Point u{};
  if (r >= 1.0) return u;
  switch (kind_) {
    case Kind::Bump: return scale(b_, (1.0 - r) * (1.0 - r));
    case Kind::AffineBump: {
      const double w = (1.0 - r * r) * (1.0 - r * r);
      for (int i = 0; i < m_; ++i) {
        double s = 0.0;
        for (int j = 0; j < n_; ++j) s += M_(i, j) * y[j];
        u[i] = s * w;
      }
      return u;
    }
    case Kind::Field: {
      const auto val = evaluate_p1(*field_, *locator_, y);
      for (int i = 0; i < m_; ++i) u[i] = val[i];
      return u;
    }
  }
  return u;
}

Matrix Profile::gradient(const Point& y) const {
  const double r = norm(y, n_);
  Matrix G(m_, n_);
  if (r >= 1.0) return G;
  switch (kind_) {
    case Kind::Bump: {
      if (r == 0.0) return G;  // cone tip; any subgradient choice has measure zero
      Point e = scale(y, 1.0 / r);
      return outer(b_, m_, scale(e, -2.0 * (1.0 - r)), n_);
    }
    case Kind::AffineBump: {
      const double w = (1.0 - r * r) * (1.0 - r * r);
      Point My{};
      for (int i = 0; i < m_; ++i)
        for (int j = 0; j < n_; ++j) My[i] += M_(i, j) * y[j];
      // grad w = -4 (1 - r^2) y
      return w * M_ + outer(My, m_, scale(y, -4.0 * (1.0 - r * r)), n_);
    }
    case Kind::Field: {
      const int c = locator_->locate(y);
      if (c < 0) return G;
      return cell_gradient(*field_->mesh, m_, field_->values, static_cast<std::size_t>(c));
    }
  }
  return G;
}

std::string to_string(SequenceSpec::Kind k) {
  switch (k) {
    case SequenceSpec::Kind::Zero: return "zero";
    case SequenceSpec::Kind::Concentration: return "concentration";
    case SequenceSpec::Kind::Laminate: return "laminate";
    case SequenceSpec::Kind::Superposition: return "superposition";
  }
  return "zero";
}

SequenceSpec zero_sequence(int m, int n) {
  SequenceSpec s;
  s.m = m;
  s.n = n;
  return s;
}

SequenceSpec concentration(const Profile& profile, const Point& x0, double p) {
  SequenceSpec s;
  s.kind = SequenceSpec::Kind::Concentration;
  s.m = profile.m();
  s.n = profile.n();
  s.profile = std::make_shared<const Profile>(profile);
  s.x0 = x0;
  s.p = p;
  validate(s);
  return s;
}

SequenceSpec laminate(const Matrix& A, const Matrix& B, double lambda, const Point& direction, const Matrix& base) {
  SequenceSpec s;
  s.kind = SequenceSpec::Kind::Laminate;
  s.m = A.rows;
  s.n = A.cols;
  s.A = A;
  s.B = B;
  s.base = base.size() == 0 ? Matrix(A.rows, A.cols) : base;
  s.lambda = lambda;
  s.direction = direction;
  validate(s);
  return s;
}

SequenceSpec superposition(std::vector<SequenceSpec> parts) {
  require(!parts.empty(), "superposition needs at least one part");
  SequenceSpec s;
  s.kind = SequenceSpec::Kind::Superposition;
  s.m = parts.front().m;
  s.n = parts.front().n;
  s.parts = std::move(parts);
  validate(s);
  return s;
}

void validate(const SequenceSpec& s) {
  require(s.m >= 1 && s.m <= 3 && s.n >= 1 && s.n <= 3, "sequence dimensions must lie in 1..3");
  switch (s.kind) {
    case SequenceSpec::Kind::Zero: break;
    case SequenceSpec::Kind::Concentration:
      require(static_cast<bool>(s.profile), "concentration needs a profile");
      require(s.profile->m() == s.m && s.profile->n() == s.n, "profile shape does not match the sequence");
      require(s.p >= 1.0 && std::isfinite(s.p), "exponent p must be >= 1");
      break;
    case SequenceSpec::Kind::Laminate: {
      require(s.A.rows == s.m && s.A.cols == s.n && s.B.rows == s.m && s.B.cols == s.n, "laminate wells must be m x n");
      require(s.base.rows == s.m && s.base.cols == s.n, "laminate base must be m x n");
      require(s.lambda > 0.0 && s.lambda < 1.0, "lambda must lie in (0,1)");
      require(std::abs(norm(s.direction, s.n) - 1.0) <= 1e-12, "laminate direction must be a unit vector");
      const Matrix J = s.B - s.A;
      require(rank(J, 1e-10) == 1, "B - A must have rank one");
      Point b{};
      for (int i = 0; i < s.m; ++i)
        for (int j = 0; j < s.n; ++j) b[i] += J(i, j) * s.direction[j];
      require(norm(J - outer(b, s.m, s.direction, s.n)) <= 1e-10 * norm(J), "B - A must equal b (x) direction");
      break;
    }
    case SequenceSpec::Kind::Superposition: {
      require(!s.parts.empty(), "superposition needs at least one part");
      double p = 0.0;
      for (const auto& part : s.parts) {
        require(part.m == s.m && part.n == s.n, "superposition parts must share their shape");
        validate(part);
        if (part.kind == SequenceSpec::Kind::Concentration) {
          require(p == 0.0 || p == part.p, "superposed concentrations must share p");
          p = part.p;
        }
      }
      break;
    }
  }
}

json profile_to_json(const Profile& pr) {
  json j{{"type", pr.name()}, {"m", pr.m()}, {"n", pr.n()}};
  switch (pr.kind()) {
    case Profile::Kind::Bump: j["b"] = point_to_json(pr.b(), pr.m()); break;
    case Profile::Kind::AffineBump: j["M"] = matrix_to_json(pr.M()); break;
    case Profile::Kind::Field: {
      // Generated meshes are stored by their spec string and rebuilt bit-identically.
      const DomainMesh& mesh = *pr.field_data()->mesh;
      const std::string kind = mesh.spec.substr(0, mesh.spec.find(':'));
      const bool generated = kind == "ball" || kind == "half-ball" || kind == "half-cube" || kind == "star" ||
                             kind == "shell-ball" || kind == "shell-half-ball";
      j["mesh"] = generated ? json(mesh.spec) : json::parse(mesh_to_json(mesh));
      j["values"] = pr.field_data()->values;
      break;
    }
  }
  return j;
}

Profile profile_from_json(const json& j, int n_default) {
  const std::string type = j.value("type", "bump");
  if (type == "bump") {
    const int n = j.value("n", n_default);
    const int m = j.value("m", static_cast<int>(j.at("b").size()));
    return Profile::bump(point_from_json(j.at("b"), m), m, n);
  }
  if (type == "affine-bump") return Profile::affine_bump(matrix_from_json(j.at("M")));
  if (type == "field") {
    const json& mj = j.at("mesh");
    auto mesh = std::make_shared<const DomainMesh>(mj.is_string() ? build_mesh(mj.get<std::string>()) : mesh_from_json(mj.dump()));
    const int m = j.value("m", 1);
    const Constraint c = mesh->shape.is_half() ? Constraint::DirichletOnly : Constraint::AllBoundary;
    DisplacementField u = DisplacementField::zeros(mesh, m, c);
    const auto values = j.at("values").get<std::vector<double>>();
    require(values.size() == u.values.size(), "field profile values do not match the mesh");
    u.values = values;
    return Profile::field(u);
  }
  throw ValidationError("unknown profile type: " + type);
}

namespace {

void flatten(const SequenceSpec& s, std::vector<SequenceSpec>& out) {
  if (s.kind == SequenceSpec::Kind::Superposition)
    for (const auto& p : s.parts) flatten(p, out);
  else
    out.push_back(s);
}

}  // namespace

json sequence_to_json(const SequenceSpec& s) {
  json j{{"type", to_string(s.kind)}, {"m", s.m}, {"n", s.n}};
  switch (s.kind) {
    case SequenceSpec::Kind::Zero: break;
    case SequenceSpec::Kind::Concentration:
      j["profile"] = profile_to_json(*s.profile);
      j["x0"] = point_to_json(s.x0, s.n);
      j["p"] = s.p;
      break;
    case SequenceSpec::Kind::Laminate:
      j["A"] = matrix_to_json(s.A);
      j["B"] = matrix_to_json(s.B);
      j["base"] = matrix_to_json(s.base);
      j["lambda"] = s.lambda;
      j["direction"] = point_to_json(s.direction, s.n);
      break;
    case SequenceSpec::Kind::Superposition:
      j["parts"] = json::array();
      for (const auto& p : s.parts) j["parts"].push_back(sequence_to_json(p));
      break;
  }
  return j;
}

SequenceSpec sequence_from_json(const json& j) {
  require(j.is_object(), "sequence spec must be a JSON object");
  const std::string type = j.value("type", "zero");
  const int m = j.value("m", 2), n = j.value("n", 2);
  if (type == "zero") return zero_sequence(m, n);
  if (type == "concentration") {
    const Profile pr = profile_from_json(j.at("profile"), n);
    const Point x0 = j.contains("x0") ? point_from_json(j.at("x0"), pr.n()) : Point{};
    return concentration(pr, x0, j.value("p", static_cast<double>(pr.n())));
  }
  if (type == "laminate") {
    const Matrix A = matrix_from_json(j.at("A"), m, n);
    const Matrix B = matrix_from_json(j.at("B"), m, n);
    const Matrix base = j.contains("base") ? matrix_from_json(j.at("base"), m, n) : Matrix(m, n);
    return laminate(A, B, j.value("lambda", 0.5), point_from_json(j.at("direction"), n), base);
  }
  if (type == "superposition") {
    std::vector<SequenceSpec> parts;
    for (const auto& p : j.at("parts")) parts.push_back(sequence_from_json(p));
    return superposition(std::move(parts));
  }
  throw ValidationError("unknown sequence type: " + type);
}

DisplacementField concentration_field(const SequenceSpec& leaf, const MeshPtr& mesh, int k) {
  require(leaf.kind == SequenceSpec::Kind::Concentration, "not a concentration spec");
  const double amp = std::pow(static_cast<double>(k), leaf.n / leaf.p - 1.0);
  const Profile& pr = *leaf.profile;
  return DisplacementField::sample(mesh, leaf.m, Constraint::None, [&](const Point& x) {
    return scale(pr.value(scale(sub(x, leaf.x0), static_cast<double>(k))), amp);
  });
}

GradientSequence::GradientSequence(SequenceSpec spec, MeshPtr mesh) : spec_(std::move(spec)), mesh_(std::move(mesh)) {
  require(static_cast<bool>(mesh_), "gradient sequence needs a mesh");
  validate(spec_);
  require(mesh_->dim == spec_.n, "mesh dimension does not match the sequence");
  flatten(spec_, leaves_);
}

double GradientSequence::p() const {
  for (const auto& l : leaves_)
    if (l.kind == SequenceSpec::Kind::Concentration) return l.p;
  return 2.0;
}

bool GradientSequence::resolvable(int k) const {
  if (k < 1) return false;
  for (const auto& l : leaves_)
    if (l.kind == SequenceSpec::Kind::Concentration &&
        mesh_->max_diameter_near(l.x0, 1.0 / k) > (1.0 + 1e-9) / (4.0 * k))
      return false;
  return true;
}

int GradientSequence::max_resolvable(int k_max) const {
  int best = 0;
  for (int k = 1; k <= k_max; k *= 2)
    if (resolvable(k)) best = k;
  return best;
}

GradientField GradientSequence::materialize_leaf(std::size_t leaf, int k) const {
  require(k >= 1, "k must be >= 1");
  require(leaf < leaves_.size(), "leaf index out of range");
  const SequenceSpec& l = leaves_[leaf];
  const DomainMesh& mesh = *mesh_;
  const int m = l.m, n = l.n;
  switch (l.kind) {
    case SequenceSpec::Kind::Zero: return GradientField(mesh.num_cells(), Matrix(m, n));
    case SequenceSpec::Kind::Concentration: {
      if (mesh.max_diameter_near(l.x0, 1.0 / k) > (1.0 + 1e-9) / (4.0 * k))
        throw ResolutionError("support B(x0, 1/" + std::to_string(k) + ") is not resolved by the mesh");
      return cell_gradients(concentration_field(l, mesh_, k));
    }
    case SequenceSpec::Kind::Laminate: {
      GradientField out(mesh.num_cells());
      const Matrix lo = l.base + l.A, hi = l.base + l.B;
      for (std::size_t c = 0; c < out.size(); ++c) {
        const double t = k * dot(l.direction, mesh.centroid(c), n);
        out[c] = (t - std::floor(t)) < l.lambda ? lo : hi;
      }
      return out;
    }
    case SequenceSpec::Kind::Superposition: break;
  }
  throw ValidationError("superposition is not a leaf");
}

GradientField GradientSequence::materialize(int k) const {
  if (leaves_.size() == 1) return materialize_leaf(0, k);
  GradientField total(mesh_->num_cells(), Matrix(spec_.m, spec_.n));
  std::vector<char> used(total.size(), 0);
  for (std::size_t i = 0; i < leaves_.size(); ++i) {
    const GradientField f = materialize_leaf(i, k);
    for (std::size_t c = 0; c < f.size(); ++c) {
      if (norm(f[c]) == 0.0) continue;
      if (used[c]) throw ValidationError("superposition parts overlap at k=" + std::to_string(k));
      used[c] = 1;
      total[c] = f[c];
    }
  }
  return total;
}

std::vector<GradientField> GradientSequence::materialize(std::span<const int> ladder) const {
  std::vector<GradientField> out(ladder.size());
  std::vector<std::string> errors(ladder.size());
  parallel_for(ladder.size(), [&](std::size_t i) {
    try {
      out[i] = materialize(ladder[i]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty()) {
      // Re-raise with the original type on the calling thread.
      (void)materialize(ladder[i]);
    }
  return out;
}

GradientField GradientSequence::weak_limit() const {
  Matrix g(spec_.m, spec_.n);
  for (const auto& l : leaves_)
    if (l.kind == SequenceSpec::Kind::Laminate) g += l.base + l.lambda * l.A + (1.0 - l.lambda) * l.B;
  return GradientField(mesh_->num_cells(), g);
}

std::vector<CandidateAtom> GradientSequence::atoms() const {
  std::vector<CandidateAtom> out;
  for (std::size_t i = 0; i < leaves_.size(); ++i) {
    const auto& l = leaves_[i];
    if (l.kind != SequenceSpec::Kind::Concentration) continue;
    CandidateAtom a;
    a.location = l.x0;
    a.leaf = i;
    for (std::size_t v = 0; v < mesh_->num_vertices() && !a.boundary; ++v)
      a.boundary = mesh_->on_boundary[v] && norm(sub(mesh_->vertices[v], l.x0), mesh_->dim) <= 1e-9;
    if (a.boundary) a.normal = mesh_->outer_normal(l.x0);
    out.push_back(a);
  }
  return out;
}

YoungAtoms GradientSequence::young_measure() const {
  for (const auto& l : leaves_)
    if (l.kind == SequenceSpec::Kind::Laminate) return {{l.lambda, l.base + l.A}, {1.0 - l.lambda, l.base + l.B}};
  return {{1.0, Matrix(spec_.m, spec_.n)}};
}

double half_ball_integral(const Profile& profile, const std::function<double(const Matrix&)>& v, const Point& rho,
                          double h) {
  const int n = profile.n();
  if (const DisplacementField* f = profile.field_data()) {
    const DomainMesh& mesh = *f->mesh;
    return deterministic_sum(mesh.num_cells(), [&](std::size_t c) {
      if (dot(rho, mesh.centroid(c), n) > 0.0) return 0.0;
      return mesh.volumes[c] * v(cell_gradient(mesh, f->m, f->values, c));
    });
  }
  const DomainMesh mesh = build_half_ball(n, rho, h);
  return integrate(mesh, [&](const Point& y, std::size_t) { return v(profile.gradient(y)); }, 3);
}

}  // namespace qcb
