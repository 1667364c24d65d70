#include "qcb/relaxation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <numbers>

#include "qcb/errors.hpp"
#include "qcb/parallel.hpp"
#include "qcb/random.hpp"

namespace qcb {

namespace {

double face_measure(const DomainMesh& mesh, const BoundaryFace& f) {
  const int n = mesh.dim;
  if (n == 1) return 1.0;
  const Point a = sub(mesh.vertices[f.v[1]], mesh.vertices[f.v[0]]);
  if (n == 2) return norm(a, 2);
  const Point b = sub(mesh.vertices[f.v[2]], mesh.vertices[f.v[0]]);
  const Point c{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
  return 0.5 * norm(c, 3);
}

double inf_norm(std::span<const double> x) {
  double r = 0.0;
  for (double v : x) r = std::max(r, std::abs(v));
  return r;
}

double dotv(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct RunOutcome {
  std::vector<double> x;
  RunRecord record;
  std::vector<double> trace;
};

/// Limited-memory BFGS with Armijo backtracking over the free entries.
RunOutcome lbfgs(const DiscreteEnergy& E, std::vector<double> x, const std::vector<char>& free_dof,
                 const SolverOptions& opt, double stop_below) {
  const std::size_t N = x.size();
  auto project = [&](std::vector<double>& g) {
    for (std::size_t i = 0; i < N; ++i)
      if (!free_dof[i]) g[i] = 0.0;
  };
  std::vector<double> g(N), gn(N), xn(N), d(N);
  double f = E.value_and_gradient(x, g);
  project(g);
  RunOutcome out;
  out.trace.push_back(f);
  std::deque<std::vector<double>> S, Y;
  std::deque<double> R;
  int quiet = 0;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (f <= stop_below) {
      out.record.unbounded = true;
      out.record.converged = true;
      break;
    }
    if (inf_norm(g) <= opt.grad_tol) {
      out.record.converged = true;
      break;
    }
    // Two-loop recursion.
    d = g;
    std::vector<double> alpha(S.size());
    for (int k = static_cast<int>(S.size()) - 1; k >= 0; --k) {
      alpha[k] = R[k] * dotv(S[k], d);
      for (std::size_t i = 0; i < N; ++i) d[i] -= alpha[k] * Y[k][i];
    }
    if (!S.empty()) {
      const double gamma = dotv(S.back(), Y.back()) / dotv(Y.back(), Y.back());
      for (auto& v : d) v *= gamma;
    } else {
      const double gi = inf_norm(g);
      for (auto& v : d) v /= std::max(1.0, gi) * std::max(1.0, static_cast<double>(N) / 64.0);
    }
    for (std::size_t k = 0; k < S.size(); ++k) {
      const double beta = R[k] * dotv(Y[k], d);
      for (std::size_t i = 0; i < N; ++i) d[i] += (alpha[k] - beta) * S[k][i];
    }
    for (auto& v : d) v = -v;
    project(d);
    double slope = dotv(g, d);
    if (!(slope < 0.0)) {
      S.clear();
      Y.clear();
      R.clear();
      for (std::size_t i = 0; i < N; ++i) d[i] = -g[i];
      slope = dotv(g, d);
    }
    double t = 1.0;
    double fn = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < N; ++i) xn[i] = x[i] + t * d[i];
      fn = E.value_and_gradient(xn, gn);
      if (std::isfinite(fn) && fn <= f + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (!S.empty()) {
        S.clear();
        Y.clear();
        R.clear();
        continue;
      }
      out.record.stalled = inf_norm(g) > 1e-6;
      out.record.converged = !out.record.stalled;
      break;
    }
    project(gn);
    std::vector<double> s(N), y(N);
    for (std::size_t i = 0; i < N; ++i) {
      s[i] = xn[i] - x[i];
      y[i] = gn[i] - g[i];
    }
    const double sy = dotv(s, y);
    if (sy > 1e-12 * std::sqrt(dotv(s, s) * dotv(y, y))) {
      S.push_back(s);
      Y.push_back(y);
      R.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opt.lbfgs_memory) {
        S.pop_front();
        Y.pop_front();
        R.pop_front();
      }
    }
    const double df = f - fn;
    x.swap(xn);
    g.swap(gn);
    f = fn;
    out.trace.push_back(f);
    if (inf_norm(s) <= opt.step_tol * (1.0 + inf_norm(x))) {
      out.record.converged = true;
      ++it;
      break;
    }
    quiet = df <= 1e-15 * (1.0 + std::abs(f)) ? quiet + 1 : 0;
    if (quiet >= 5) {
      out.record.converged = true;
      ++it;
      break;
    }
  }
  out.record.iterations = it;
  out.record.value = f;
  out.x = std::move(x);
  return out;
}

double cutoff(const DomainMesh& mesh, const Point& x) {
  const Point rel = sub(x, mesh.shape.center);
  const double r = norm(rel, mesh.dim);
  if (r == 0.0) return 1.0;
  const double R = mesh.shape.radius(scale(rel, 1.0 / r), mesh.dim);
  return std::max(0.0, 1.0 - (r / R) * (r / R));
}

struct Start {
  std::string kind;
  DisplacementField field;
};

std::vector<Start> make_starts(const Integrand& v, const Matrix& s0, const MeshPtr& mesh, Constraint c, int count,
                               std::uint64_t seed, bool laminates) {
  const int m = v.m(), n = mesh->dim;
  std::vector<Start> starts;
  auto push = [&](std::string kind, const std::function<Point(const Point&)>& f) {
    if (static_cast<int>(starts.size()) >= count) return;
    starts.push_back({std::move(kind), DisplacementField::sample(mesh, m, c, f)});
  };
  push("zero", [](const Point&) { return Point{}; });
  for (int a = 0; a < m; ++a)
    for (double sgn : {1.0, -1.0})
      push("bump", [&, a, sgn](const Point& x) {
        Point u{};
        u[a] = sgn * cutoff(*mesh, x);
        return u;
      });
  for (int a = 0; a < m; ++a)
    for (int dd = 0; dd < n; ++dd)
      for (double sgn : {1.0, -1.0})
        push("rank-one", [&, a, dd, sgn](const Point& x) {
          Point u{};
          u[a] = sgn * (x[dd] - mesh->shape.center[dd]) * cutoff(*mesh, x);
          return u;
        });
  if (laminates) {
    const auto lam = lamination_bound(v, s0);
    if (lam.value < v(s0) - 1e-12 * (1.0 + std::abs(v(s0)))) {
      // Recover a and n from the rank-one jump.
      int bi = 0, bj = 0;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          if (std::abs(lam.a_outer_n(i, j)) > std::abs(lam.a_outer_n(bi, bj))) {
            bi = i;
            bj = j;
          }
      Point av{}, nv{};
      for (int j = 0; j < n; ++j) nv[j] = lam.a_outer_n(bi, j);
      const double nn = norm(nv, n);
      for (int i = 0; i < m; ++i) av[i] = lam.a_outer_n(i, bj) * nn / lam.a_outer_n(bi, bj);
      nv = scale(nv, 1.0 / nn);
      double tmin = 1e300, tmax = -1e300;
      for (const auto& x : mesh->vertices) {
        tmin = std::min(tmin, dot(nv, x, n));
        tmax = std::max(tmax, dot(nv, x, n));
      }
      const double lambda = lam.lambda;
      for (int teeth : {1, 2, 4, 8}) {
        const double P = (tmax - tmin) / teeth;
        push("laminate", [=](const Point& x) {
          const double t = std::fmod(dot(nv, x, n) - tmin, P);
          const double saw = t <= lambda * P ? (1.0 - lambda) * t : (1.0 - lambda) * lambda * P - lambda * (t - lambda * P);
          return scale(av, saw);
        });
      }
    }
  }
  int r = 0;
  while (static_cast<int>(starts.size()) < count) {
    RandomStream rng(seed, 0x5747 + static_cast<std::uint64_t>(r++));
    struct Mode {
      Point w;
      double phase, coef;
    };
    std::vector<std::array<Mode, 4>> modes(m);
    for (int a = 0; a < m; ++a)
      for (auto& md : modes[a]) {
        for (int dd = 0; dd < n; ++dd) md.w[dd] = 2.0 * std::numbers::pi * rng.normal();
        md.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        md.coef = rng.normal();
      }
    DisplacementField f = DisplacementField::sample(mesh, m, c, [&](const Point& x) {
      Point u{};
      for (int a = 0; a < m; ++a) {
        double s = 0.0;
        for (const auto& md : modes[a]) s += md.coef * std::sin(dot(md.w, x, n) + md.phase);
        u[a] = s * cutoff(*mesh, x);
      }
      return u;
    });
    const double amp = inf_norm(f.values);
    if (amp > 0.0)
      for (auto& val : f.values) val /= amp;
    starts.push_back({"random", std::move(f)});
  }
  return starts;
}

std::vector<char> free_dofs(const DisplacementField& u) {
  std::vector<char> fr(u.values.size(), 1);
  for (std::size_t v = 0; v < u.pinned.size(); ++v)
    if (u.pinned[v])
      for (int a = 0; a < u.m; ++a) fr[v * u.m + a] = 0;
  return fr;
}

std::string resolution_note(const DomainMesh& mesh) {
  return "upper bound at resolution " + mesh.spec;
}

RelaxationResult run_multistart(const Integrand& v, const Matrix& s0, const MeshPtr& mesh, Constraint c,
                                const SolverOptions& opt, double stop_below, bool laminates,
                                std::optional<Point> q = std::nullopt) {
  require(opt.multistart >= 1, "multistart must be >= 1");
  require(s0.rows == v.m() && s0.cols == v.n(), "s0 shape does not match the integrand");
  require(mesh->dim == v.n(), "mesh dimension does not match the integrand");
  const DiscreteEnergy E(v, s0, mesh, v.m(), q);
  auto starts = make_starts(v, s0, mesh, c, opt.multistart, opt.seed, laminates);
  std::vector<RunOutcome> outs(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) {
    const auto fr = free_dofs(starts[i].field);
    outs[i] = lbfgs(E, starts[i].field.values, fr, opt, stop_below);
    outs[i].record.start = static_cast<int>(i);
    outs[i].record.kind = starts[i].kind;
  });
  RelaxationResult res;
  std::size_t best = 0;
  for (std::size_t i = 0; i < outs.size(); ++i) {
    if (outs[i].record.value < outs[best].record.value) best = i;
    res.runs.push_back(outs[i].record);
    res.nonconvergence = res.nonconvergence || outs[i].record.stalled;
    DisplacementField f = starts[i].field;
    f.values = outs[i].x;
    res.run_minimizers.push_back(std::move(f));
  }
  res.value = outs[best].record.value;
  res.minimizer = res.run_minimizers[best];
  res.trace = outs[best].trace;
  res.resolution_note = resolution_note(*mesh);
  return res;
}

void classify_dichotomy(RelaxationResult& res, const Integrand& v, const MeshPtr& mesh) {
  const double eps = res.eps_cls;
  bool all_above = true;
  for (const auto& r : res.runs) all_above = all_above && r.value >= -eps;
  if (all_above) {
    res.classification = Classification::Zero;
    return;
  }
  if (res.value <= -10.0 * eps) {
    const DiscreteEnergy E(v, Matrix(v.m(), v.n()), mesh, v.m());
    DisplacementField w = res.minimizer;
    // Rescale so the witness energy equals -scale; exact for p-homogeneous v.
    const double target = -classification_scale(v);
    const double lam = std::pow(target / res.value, 1.0 / v.p());
    for (auto& x : w.values) x *= lam;
    const auto ev = scaling_probe(E, w, v.p());
    res.evidence = ev;
    res.witness = w;
    res.classification = ev.confirmed ? Classification::MinusInfinity : Classification::Inconclusive;
    return;
  }
  res.classification = Classification::Inconclusive;
}

}  // namespace

std::string to_string(Classification c) {
  switch (c) {
    case Classification::Finite: return "finite";
    case Classification::Zero: return "zero";
    case Classification::MinusInfinity: return "minus-infinity";
    case Classification::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

DiscreteEnergy::DiscreteEnergy(Integrand v, Matrix s0, MeshPtr mesh, int m, std::optional<Point> q)
    : v_(std::move(v)), s0_(s0), mesh_(std::move(mesh)), m_(m), q_(q) {
  volume_ = mesh_->volume();
  if (q_) {
    gamma_weight_.assign(mesh_->num_vertices(), 0.0);
    for (const auto& f : mesh_->faces) {
      if (f.label != FaceLabel::FreeGamma) continue;
      const double w = face_measure(*mesh_, f) / mesh_->dim;
      for (int i = 0; i < mesh_->dim; ++i) gamma_weight_[f.v[i]] += w;
    }
  }
}

double DiscreteEnergy::value(std::span<const double> nodal) const {
  const DomainMesh& mesh = *mesh_;
  double e = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) e += mesh.volumes[c] * v_(s0_ + cell_gradient(mesh, m_, nodal, c));
  if (q_)
    for (std::size_t v = 0; v < gamma_weight_.size(); ++v)
      if (gamma_weight_[v] != 0.0)
        for (int a = 0; a < m_; ++a) e -= gamma_weight_[v] * (*q_)[a] * nodal[v * m_ + a];
  return e / volume_;
}

double DiscreteEnergy::value_and_gradient(std::span<const double> nodal, std::span<double> grad) const {
  const DomainMesh& mesh = *mesh_;
  const int n = mesh.dim;
  std::fill(grad.begin(), grad.end(), 0.0);
  double e = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const Matrix G = s0_ + cell_gradient(mesh, m_, nodal, c);
    const double vol = mesh.volumes[c];
    e += vol * v_(G);
    const Matrix D = v_.gradient(G);
    const auto& cell = mesh.cells[c];
    const auto& gl = mesh.grad_lambda[c];
    for (int i = 0; i <= n; ++i) {
      double* gi = &grad[static_cast<std::size_t>(cell[i]) * m_];
      for (int a = 0; a < m_; ++a) {
        double s = 0.0;
        for (int d = 0; d < n; ++d) s += D(a, d) * gl[i][d];
        gi[a] += vol * s;
      }
    }
  }
  if (q_)
    for (std::size_t v = 0; v < gamma_weight_.size(); ++v)
      if (gamma_weight_[v] != 0.0)
        for (int a = 0; a < m_; ++a) {
          e -= gamma_weight_[v] * (*q_)[a] * nodal[v * m_ + a];
          grad[v * m_ + a] -= gamma_weight_[v] * (*q_)[a];
        }
  for (auto& g : grad) g /= volume_;
  return e / volume_;
}

double classification_scale(const Integrand& v) { return std::max(1.0, sphere_sup(v)); }

ScalingEvidence scaling_probe(const DiscreteEnergy& energy, const DisplacementField& u, double p) {
  ScalingEvidence ev;
  ev.energy = energy.value(u.values);
  auto ratio = [&](double lambda) {
    std::vector<double> x = u.values;
    for (auto& v : x) v *= lambda;
    return energy.value(x) / (std::pow(lambda, p) * ev.energy);
  };
  ev.ratio_2 = ratio(2.0);
  ev.ratio_4 = ratio(4.0);
  ev.max_rel_error = std::max(std::abs(ev.ratio_2 - 1.0), std::abs(ev.ratio_4 - 1.0));
  ev.confirmed = ev.energy < 0.0 && ev.max_rel_error <= 1e-8;
  return ev;
}

RelaxationResult quasiconvex_envelope(const Integrand& v, const Matrix& s0, const RelaxationProblem& problem) {
  require(static_cast<bool>(problem.mesh), "relaxation problem needs a mesh");
  const bool dichotomy = v.homogeneous() && norm(s0) == 0.0;
  const double scale = classification_scale(v);
  const double stop = dichotomy ? -1e3 * 1e-6 * scale : -std::numeric_limits<double>::infinity();
  RelaxationResult res = run_multistart(v, s0, problem.mesh, Constraint::AllBoundary, problem.options, stop, true);
  res.eps_cls = 1e-6 * scale;
  if (dichotomy)
    classify_dichotomy(res, v, problem.mesh);
  else
    res.classification = Classification::Finite;
  return res;
}

RelaxationResult boundary_quasiconvexification(const Integrand& v, const Point& rho, const RelaxationProblem& problem) {
  require(static_cast<bool>(problem.mesh), "relaxation problem needs a mesh");
  const DomainMesh& mesh = *problem.mesh;
  require(v.homogeneous() || is_positively_homogeneous(v, 1e-10),
          "boundary quasiconvexification needs a positively p-homogeneous integrand (use its recession)");
  require(mesh.shape.is_half(), "boundary quasiconvexification needs a half-ball mesh");
  require(norm(sub(mesh.shape.rho, rho), mesh.dim) <= 1e-12, "mesh normal does not match rho");
  const double scale = classification_scale(v);
  const double eps = 1e-6 * scale;
  RelaxationResult res =
      run_multistart(v, Matrix(v.m(), v.n()), problem.mesh, Constraint::DirichletOnly, problem.options, -1e3 * eps, false);
  res.eps_cls = eps;
  classify_dichotomy(res, v, problem.mesh);
  return res;
}

LaminationBound lamination_bound(const Integrand& v, const Matrix& s0, int directions) {
  const int m = v.m(), n = v.n();
  LaminationBound best;
  best.value = v(s0);
  best.a_outer_n = Matrix(m, n);
  const auto avecs = unit_sphere_sample(1, m, std::min(directions, m == 1 ? 1 : directions), 3);
  const auto nvecs = unit_sphere_sample(1, n, std::min(directions, n == 1 ? 1 : directions), 5);
  const double T = 4.0 * (1.0 + norm(s0));
  auto phi = [&](const Matrix& J, double t, double lam) {
    return lam * v(s0 + ((1.0 - lam) * t) * J) + (1.0 - lam) * v(s0 - (lam * t) * J);
  };
  struct Cand {
    double val;
    Matrix J;
    double t, lam;
  };
  std::vector<Cand> cands;
  for (const auto& a : avecs)
    for (const auto& nn : nvecs) {
      Point ap{}, np{};
      for (int i = 0; i < m; ++i) ap[i] = a[i];
      for (int j = 0; j < n; ++j) np[j] = nn[j];
      const Matrix J = outer(ap, m, np, n);
      Cand c{1e300, J, 0, 0};
      for (int it = 1; it <= 40; ++it)
        for (int il = 1; il <= 19; ++il) {
          const double t = T * it / 40.0, lam = il / 20.0;
          const double val = phi(J, t, lam);
          if (val < c.val) c = {val, J, t, lam};
        }
      cands.push_back(c);
    }
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) { return x.val < y.val; });
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  for (std::size_t k = 0; k < std::min<std::size_t>(4, cands.size()); ++k) {
    Cand c = cands[k];
    double dt = T / 40.0, dl = 0.05;
    for (int round = 0; round < 30; ++round) {
      auto golden = [&](double lo, double hi, auto f) {
        double a = lo, b = hi;
        double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
        double f1 = f(x1), f2 = f(x2);
        for (int i = 0; i < 40; ++i) {
          if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(x1);
          } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(x2);
          }
        }
        return 0.5 * (a + b);
      };
      c.t = golden(std::max(0.0, c.t - dt), c.t + dt, [&](double t) { return phi(c.J, t, c.lam); });
      c.lam = golden(std::max(1e-6, c.lam - dl), std::min(1.0 - 1e-6, c.lam + dl), [&](double l) { return phi(c.J, c.t, l); });
      c.val = phi(c.J, c.t, c.lam);
      dt *= 0.7;
      dl *= 0.7;
    }
    if (c.val < best.value) {
      best.value = c.val;
      best.a_outer_n = c.t * c.J;
      best.lambda = c.lam;
    }
  }
  return best;
}

Verdict qcb_test(const Integrand& v, const Matrix& s0, const Point& rho, int trials, std::uint64_t seed, MeshPtr mesh,
                 const SolverOptions& options) {
  require(v.has_analytic_gradient(), "qcb test needs an analytic gradient");
  require(static_cast<bool>(mesh), "qcb test needs a mesh");
  require(mesh->shape.is_half(), "qcb test needs a half-ball mesh");
  require(norm(sub(mesh->shape.rho, rho), mesh->dim) <= 1e-12, "mesh normal does not match rho");
  require(trials >= 0, "trials must be nonnegative");
  const int m = v.m(), n = v.n();
  const Matrix D = v.gradient(s0);
  Point q{};
  for (int a = 0; a < m; ++a)
    for (int d = 0; d < n; ++d) q[a] += D(a, d) * rho[d];
  const DiscreteEnergy E(v, s0, mesh, m, q);
  const double vs0 = v(s0);
  const double eps = 1e-6 * classification_scale(v);

  Verdict verdict;
  verdict.q = q;
  verdict.margin = std::numeric_limits<double>::infinity();
  auto consider = [&](const DisplacementField& u) {
    const double defect = E.value(u.values) - vs0;
    ++verdict.trials;
    if (defect < verdict.margin) {
      verdict.margin = defect;
      if (defect < -eps) verdict.witness = u;
    }
  };
  // Random admissible fields at several amplitudes.
  SolverOptions sopt = options;
  sopt.seed = seed;
  const int random_count = trials;
  const auto random_starts =
      make_starts(v, s0, mesh, Constraint::DirichletOnly, 1 + 2 * m + 2 * m * n + random_count, seed, false);
  RandomStream amp_rng(seed, 0xa3b1);
  for (const auto& st : random_starts) {
    DisplacementField u = st.field;
    const double amp = amp_rng.uniform(0.05, 2.0);
    for (auto& x : u.values) x *= amp;
    consider(u);
  }
  // Descent on the defect functional.
  const double stop = vs0 - 1e3 * eps;
  auto descent = run_multistart(v, s0, mesh, Constraint::DirichletOnly, sopt, stop, false, q);
  for (const auto& u : descent.run_minimizers) consider(u);
  if (v.homogeneous() && norm(s0) == 0.0) {
    RelaxationProblem prob{v, s0, mesh, sopt};
    const auto bq = boundary_quasiconvexification(v, rho, prob);
    for (const auto& u : bq.run_minimizers) consider(u);
    if (bq.witness) consider(*bq.witness);
  }
  if (verdict.margin < -eps) {
    verdict.outcome = "falsified";
    verdict.note = "violation beyond eps_cls found";
  } else {
    verdict.outcome = "unfalsified";
    verdict.witness.reset();
    verdict.note = "no violation among the searched fields; not a proof";
  }
  return verdict;
}

}  // namespace qcb
