#include "qcb/semicontinuity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "qcb/catalog.hpp"
#include "qcb/errors.hpp"
#include "qcb/parallel.hpp"

namespace qcb {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

double weighted_sum(const std::vector<double>& w, const Integrand& v, const GradientField& G) {
  return deterministic_sum(G.size(), [&](std::size_t c) { return w[c] == 0.0 ? 0.0 : w[c] * v(G[c]); });
}

int sign_flips(const std::vector<double>& xs) {
  double mag = 0.0;
  for (double x : xs) mag = std::max(mag, std::abs(x));
  int flips = 0, last = 0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double d = xs[i] - xs[i - 1];
    if (std::abs(d) <= 1e-14 * (1.0 + mag)) continue;
    const int s = d > 0 ? 1 : -1;
    if (last != 0 && s != last) ++flips;
    last = s;
  }
  return flips;
}

std::vector<double> rho_key(const Point& rho) { return {rho[0], rho[1], rho[2]}; }

nlohmann::json limit_json(const LadderLimit& l) {
  return {{"value", l.value}, {"error", l.error}, {"cauchy", l.cauchy}, {"aitken", l.aitken}};
}

nlohmann::json num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

}  // namespace

void validate(const Functional& F) {
  require(static_cast<bool>(F.mesh), "functional needs a mesh");
  require(static_cast<bool>(F.g.f), "functional needs a weight");
  require(F.v.n() == F.mesh->dim, "integrand column count must equal the domain dimension");
  const DomainMesh& mesh = *F.mesh;
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    const double g = F.g(mesh.vertices[i]);
    require(g >= 0.0, "weight g is negative at vertex " + std::to_string(i));
    if (mesh.on_boundary[i])
      require(g > 1e-9, "weight g must be positive on the boundary (vertex " + std::to_string(i) + ")");
  }
}

double evaluate_functional(const Functional& F, const GradientField& field) {
  require(field.size() == F.mesh->num_cells(), "field does not conform to the functional's mesh");
  const auto w = cell_integrals(*F.mesh, F.g.f, 3);
  return weighted_sum(w, F.v, field);
}

std::vector<Point> boundary_points_with_mass(const DpmEstimate& est, double atom_tol) {
  std::vector<Point> out;
  for (const auto& a : est.atoms)
    if (a.boundary && a.mass > atom_tol) out.push_back(a.location);
  return out;
}

WlscVerdict wlsc_probe(const Functional& F, std::span<const Point> boundary_points, std::span<const Profile> profiles,
                       const ProbeOptions& options) {
  validate(F);
  const DomainMesh& dom = *F.mesh;
  const int n = dom.dim, m = F.v.m();
  require(!boundary_points.empty(), "wlsc probe needs at least one boundary point");
  require(F.v.has_recession(), "wlsc probe needs the recession function of v");
  require(options.k_max >= 1, "k_max must be positive");
  require(options.tol >= 0.0, "tolerance must be nonnegative");
  require(!options.compatible || (options.classify_octaves >= 1 && options.classify_octaves < options.model.octaves),
          "compatible classification needs fewer octaves than the model mesh");
  for (const auto& pr : profiles) require(pr.m() == m && pr.n() == n, "profile shape does not match the integrand");

  const Integrand v_inf = F.v.recession_integrand();
  WlscVerdict out;
  out.tolerance = options.tol;

  // Classification of Q_{b,rho} v_inf(0), shared by points with the same normal.
  struct Classified {
    RelaxationResult result;
    MeshPtr model;
  };
  std::map<std::vector<double>, Classified> by_rho;
  std::vector<Point> normals;
  for (const Point& x0 : boundary_points) {
    require(dom.shape.boundary_distance(x0, n) <= 1e-6, "probe point does not lie on the boundary");
    const Point rho = dom.outer_normal(x0);
    normals.push_back(rho);
    if (by_rho.count(rho_key(rho))) continue;
    ShellOptions cls = options.model;
    cls.octaves = options.classify_octaves;
    const MeshPtr cmesh = std::make_shared<const DomainMesh>(
        options.compatible ? build_shell_half_ball(n, rho, cls) : build_half_ball(n, rho, options.classify_h));
    RelaxationProblem prob{v_inf, v_inf.zero(), cmesh, options.solver};
    Classified c{boundary_quasiconvexification(v_inf, rho, prob),
                 std::make_shared<const DomainMesh>(build_shell_half_ball(n, rho, options.model))};
    by_rho.emplace(rho_key(rho), std::move(c));
  }

  struct Task {
    std::size_t point;
    Profile profile;
    bool witness;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < boundary_points.size(); ++i) {
    const auto& cl = by_rho.at(rho_key(normals[i]));
    ScanEntry e;
    e.x = boundary_points[i];
    e.rho = normals[i];
    e.classification = cl.result.classification;
    e.value = cl.result.value;
    e.eps = cl.result.eps_cls;
    e.evidence = cl.result.evidence;
    out.boundary_scan.push_back(e);
    if (e.classification == Classification::Inconclusive)
      out.notices.push_back("point " + std::to_string(i) + ": classification inconclusive, skipped in the verdict");
    for (const auto& pr : profiles) tasks.push_back({i, pr, false});
    if (cl.result.classification == Classification::MinusInfinity && cl.result.witness)
      tasks.push_back({i, Profile::field(*cl.result.witness), true});
  }

  out.liminf_gap.resize(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t t) {
    const Task& task = tasks[t];
    const Point x0 = boundary_points[task.point];
    const Point rho = normals[task.point];
    const auto& model = by_rho.at(rho_key(rho)).model;
    const GradientSequence seq(concentration(task.profile, {}, F.v.p()), model);
    GapRecord rec;
    rec.point = task.point;
    rec.profile = task.profile.name();
    rec.witness = task.witness;
    const int kr = seq.max_resolvable(options.k_max);
    rec.sequence = {{"sequence", sequence_to_json(seq.spec())}, {"mesh", model->spec}, {"x0", point_to_json(x0, n)}};
    const double g0 = F.g(x0);
    rec.predicted = g0 * half_ball_integral(task.profile, [&](const Matrix& s) { return v_inf(s); }, rho, options.oracle_h);
    if (kr == 0) {
      rec.liminf = kNaN;
      rec.limit.value = kNaN;
      out.liminf_gap[t] = std::move(rec);
      return;
    }
    rec.ladder = geometric_ladder(kr, 1);
    const auto w = cell_integrals(*model, [&](const Point& y) { return F.g(add(x0, y)); }, 3);
    GradientField zero(model->num_cells(), F.v.zero());
    const double I0 = weighted_sum(w, F.v, zero);
    for (int k : rec.ladder) rec.gaps.push_back(weighted_sum(w, F.v, seq.materialize(k)) - I0);
    rec.limit = extrapolate(rec.gaps);
    rec.liminf = std::min(rec.limit.value, rec.gaps.back());
    rec.monotone = sign_flips(rec.gaps) <= 1;
    out.liminf_gap[t] = std::move(rec);
  });

  for (std::size_t t = 0; t < out.liminf_gap.size(); ++t) {
    const auto& r = out.liminf_gap[t];
    if (std::isnan(r.liminf))
      out.notices.push_back("point " + std::to_string(r.point) + ", profile " + r.profile +
                            ": no resolvable k on the model mesh");
    else if (!r.monotone)
      out.notices.push_back("point " + std::to_string(r.point) + ", profile " + r.profile +
                            ": gaps are not monotone in k");
    if (!out.witness && r.liminf < -options.tol) out.witness = t;
  }
  bool all_zero = true;
  for (const auto& e : out.boundary_scan) all_zero = all_zero && e.classification == Classification::Zero;
  bool all_resolved = true;
  for (const auto& r : out.liminf_gap) all_resolved = all_resolved && !std::isnan(r.liminf);
  if (out.witness)
    out.verdict = "wlsc-violated";
  else if (all_zero && all_resolved)
    out.verdict = "consistent-with-wlsc";
  else
    out.verdict = "inconclusive";
  return out;
}

CofactorReport cofactor_weak_continuity_check(const CofactorContraction& h, const GradientSequence& seq,
                                              std::span<const SpatialFunction> g_list, std::span<const int> ladder,
                                              const CofactorCheckOptions& options) {
  require(seq.m() == 3 && seq.n() == 3, "cofactor check needs n = m = 3");
  require(seq.p() == 2.0, "cofactor check needs p = 2");
  require(static_cast<bool>(h.a) && static_cast<bool>(h.rho), "cofactor contraction needs a and rho");
  require(!g_list.empty(), "cofactor check needs at least one weight");
  require(!ladder.empty(), "k ladder must not be empty");
  const DomainMesh& mesh = *seq.mesh();
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    if (!mesh.on_boundary[i]) continue;
    const Point& x = mesh.vertices[i];
    if (norm(h.a(x), 3) <= 1e-12) continue;
    const double dev = norm(sub(h.rho(x), mesh.outer_normal(x)), 3);
    require(dev <= options.normal_tol, "rho differs from the outer normal at boundary vertex " + std::to_string(i) +
                                           " by " + fmt(dev));
  }

  const std::size_t C = mesh.num_cells();
  const auto fields = seq.materialize(ladder);
  const auto limit_field = seq.weak_limit();
  CofactorReport rep;
  rep.ladder.assign(ladder.begin(), ladder.end());
  rep.rel_tol = options.rel_tol;
  for (const auto& g : g_list) {
    // W_c = ∫_c g a (x) rho and s_c = ∫_c g |a| |rho|.
    std::vector<Matrix> W(C, Matrix(3, 3));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const auto col = cell_integrals(
            mesh, [&](const Point& x) { return g(x) * h.a(x)[i] * h.rho(x)[j]; }, options.quad_order);
        for (std::size_t c = 0; c < C; ++c) W[c](i, j) = col[c];
      }
    const auto s = cell_integrals(
        mesh, [&](const Point& x) { return std::abs(g(x)) * norm(h.a(x), 3) * norm(h.rho(x), 3); }, options.quad_order);

    CofactorRow row;
    row.g = g.name;
    auto pairing = [&](const GradientField& G) {
      return deterministic_sum(C, [&](std::size_t c) { return dot(cofactor(G[c]), W[c]); });
    };
    row.reference = pairing(limit_field);
    for (const auto& G : fields) {
      row.values.push_back(pairing(G));
      row.gaps.push_back(std::abs(row.values.back() - row.reference));
      row.scale = std::max(row.scale, deterministic_sum(C, [&](std::size_t c) { return s[c] * norm(cofactor(G[c])); }));
    }
    row.limit = extrapolate(row.values);
    row.final_gap = row.gaps.back();
    const double floor = 1e-12 * std::max(1.0, row.scale);
    for (std::size_t i = 1; i < row.gaps.size(); ++i)
      if (row.gaps[i] > floor && row.gaps[i] >= row.gaps[i - 1]) row.monotone = false;
    row.pass = row.monotone && row.final_gap <= options.rel_tol * row.scale + floor;
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

ScalingIdentity scaling_identity_check(const Profile& profile, const Integrand& v, const MeshPtr& mesh, int k,
                                       double oracle_h) {
  require(static_cast<bool>(mesh), "scaling identity needs a mesh");
  const int n = mesh->dim;
  require(v.p() == n, "scaling identity needs p = n");
  require(v.homogeneous() || is_positively_homogeneous(v), "scaling identity needs a positively p-homogeneous v");
  require(mesh->shape.kind == ShapeKind::HalfBall && norm(mesh->shape.center, 3) == 0.0,
          "scaling identity runs on a half-ball about the origin");
  require(profile.m() == v.m() && profile.n() == n, "profile shape does not match the integrand");
  const GradientSequence seq(concentration(profile, {}, v.p()), mesh);
  const auto G = seq.materialize(k);
  ScalingIdentity out;
  out.k = k;
  out.value = deterministic_sum(G.size(), [&](std::size_t c) { return mesh->volumes[c] * v(G[c]); });
  out.oracle = half_ball_integral(profile, [&](const Matrix& s) { return v(s); }, mesh->shape.rho, oracle_h);
  out.residual = std::abs(out.value - out.oracle);
  out.relative = std::abs(out.oracle) > 1e-12 ? out.residual / std::abs(out.oracle) : out.residual;
  return out;
}

nlohmann::json wlsc_to_json(const WlscVerdict& w) {
  nlohmann::json j;
  j["verdict"] = w.verdict;
  j["tolerance"] = w.tolerance;
  j["witness"] = w.witness ? nlohmann::json(*w.witness) : nlohmann::json(nullptr);
  j["boundary_scan"] = nlohmann::json::array();
  for (const auto& e : w.boundary_scan) {
    nlohmann::json s{{"x", point_to_json(e.x, 3)},
                     {"rho", point_to_json(e.rho, 3)},
                     {"classification", to_string(e.classification)},
                     {"value", num(e.value)},
                     {"eps", e.eps}};
    if (e.evidence)
      s["scaling"] = {{"ratio_2", e.evidence->ratio_2},
                      {"ratio_4", e.evidence->ratio_4},
                      {"max_rel_error", e.evidence->max_rel_error},
                      {"confirmed", e.evidence->confirmed}};
    j["boundary_scan"].push_back(s);
  }
  j["liminf_gap"] = nlohmann::json::array();
  for (const auto& r : w.liminf_gap) {
    nlohmann::json g{{"point", r.point},        {"profile", r.profile},     {"witness", r.witness},
                     {"ladder", r.ladder},      {"limit", limit_json(r.limit)}, {"liminf", num(r.liminf)},
                     {"predicted", num(r.predicted)}, {"monotone", r.monotone}, {"sequence", r.sequence}};
    g["gaps"] = nlohmann::json::array();
    for (double x : r.gaps) g["gaps"].push_back(num(x));
    j["liminf_gap"].push_back(g);
  }
  j["notices"] = w.notices;
  return j;
}

nlohmann::json cofactor_report_to_json(const CofactorReport& r) {
  nlohmann::json j{{"ladder", r.ladder}, {"rel_tol", r.rel_tol}, {"pass", r.pass}};
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows)
    j["rows"].push_back({{"g", row.g},
                         {"values", row.values},
                         {"limit", limit_json(row.limit)},
                         {"reference", row.reference},
                         {"gaps", row.gaps},
                         {"final_gap", row.final_gap},
                         {"scale", row.scale},
                         {"monotone", row.monotone},
                         {"pass", row.pass}});
  return j;
}

std::string cofactor_report_to_csv(const CofactorReport& r) {
  std::ostringstream s;
  s.precision(17);
  s << "g_index,g,k,value,reference,gap\n";
  for (std::size_t gi = 0; gi < r.rows.size(); ++gi)
    for (std::size_t i = 0; i < r.ladder.size(); ++i)
      s << gi << ',' << r.rows[gi].g << ',' << r.ladder[i] << ',' << r.rows[gi].values[i] << ',' << r.rows[gi].reference << ',' << r.rows[gi].gaps[i] << '\n';
  return s.str();
}

}  // namespace qcb
