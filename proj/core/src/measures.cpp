#include "qcb/measures.hpp"

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

std::string fmt_point(const Point& x, int n) {
  std::string s = "(";
  for (int i = 0; i < n; ++i) s += (i ? "," : "") + fmt(x[i]);
  return s + ")";
}

double pnorm(const Matrix& s, double p) { return std::pow(norm(s), p); }

std::vector<double> matrix_key(const Matrix& a) { return a.flat(); }

}  // namespace

TestDictionary default_dictionary(int m, int n, double p) {
  TestDictionary d;
  d.g.push_back(constant_weight(1.0));
  d.v.push_back(power_norm(m, n, p, 1.0, 1.0));
  d.v.push_back(power_norm(m, n, p));
  if (p == 2.0) {
    Matrix A(m, n);
    A(0, 0) = -1.0;
    d.v.push_back(double_well(A, -1.0 * A));
  }
  if (m == n && n >= 2 && p == n) d.v.push_back(determinant(n));
  Matrix L(m, n);
  L(0, 0) = 1.0;
  d.v.push_back(affine(L, 0.0, p));
  return d;
}

DpmEstimate estimate_pairings(const GradientSequence& seq, const TestDictionary& dict, std::span<const int> ladder,
                              const EstimateOptions& options) {
  require(!ladder.empty(), "k ladder must not be empty");
  for (std::size_t i = 0; i < ladder.size(); ++i)
    require(ladder[i] >= 1 && (i == 0 || ladder[i] > ladder[i - 1]), "k ladder must be increasing and positive");
  require(!dict.g.empty() && !dict.v.empty(), "dictionary needs at least one weight and one integrand");
  require(options.density_bin > 0.0, "density bin must be positive");
  const DomainMesh& mesh = *seq.mesh();
  const std::size_t C = mesh.num_cells();
  for (const auto& v : dict.v)
    require(v.m() == seq.m() && v.n() == seq.n(), "dictionary integrand shape does not match the sequence");

  DpmEstimate est;
  est.m = seq.m();
  est.n = seq.n();
  est.p = seq.p();
  est.ladder.assign(ladder.begin(), ladder.end());
  est.integrands = dict.v;
  for (const auto& g : dict.g) {
    est.g_names.push_back(g.name);
    est.g_specs.push_back(g.spec_json);
  }
  est.cell_volumes = mesh.volumes;
  est.cell_centroids.resize(C);
  for (std::size_t c = 0; c < C; ++c) est.cell_centroids[c] = mesh.centroid(c);

  const auto fields = seq.materialize(ladder);
  const std::size_t K = ladder.size(), G = dict.g.size(), V = dict.v.size();
  std::vector<std::vector<double>> gw(G);
  for (std::size_t g = 0; g < G; ++g) gw[g] = cell_integrals(mesh, dict.g[g].f, 2);

  // Pairings over (g, v, k), each reduced in a fixed order.
  est.pairings.resize(G * V);
  for (std::size_t g = 0; g < G; ++g)
    for (std::size_t v = 0; v < V; ++v) {
      est.pairings[g * V + v].g = g;
      est.pairings[g * V + v].v = v;
      est.pairings[g * V + v].values.assign(K, 0.0);
    }
  parallel_for(G * V * K, [&](std::size_t t) {
    const std::size_t k = t % K, gv = t / K;
    const auto& field = fields[k];
    const auto& w = gw[est.pairings[gv].g];
    const Integrand& vf = dict.v[est.pairings[gv].v];
    double s = 0.0;
    for (std::size_t c = 0; c < C; ++c) s += w[c] * vf(field[c]);
    est.pairings[gv].values[k] = s;
  });
  for (auto& pr : est.pairings) pr.limit = extrapolate(pr.values);

  std::vector<double> mass(K);
  for (std::size_t k = 0; k < K; ++k)
    mass[k] = deterministic_sum(C, [&](std::size_t c) { return mesh.volumes[c] * (1.0 + pnorm(fields[k][c], est.p)); });
  est.total_mass = extrapolate(mass);

  // Empirical absolutely continuous density at the largest k, averaged over
  // cubes and with concentration supports removed.
  const auto candidates = seq.atoms();
  const int kmax = ladder.back();
  std::vector<char> in_atom(C, 0);
  std::vector<GradientField> leaf_top(candidates.size());
  for (std::size_t a = 0; a < candidates.size(); ++a) {
    leaf_top[a] = seq.materialize_leaf(candidates[a].leaf, kmax);
    for (std::size_t c = 0; c < C; ++c)
      if (norm(leaf_top[a][c]) > 0.0) in_atom[c] = 1;
  }
  Point lo = mesh.vertices.front();
  for (const auto& x : mesh.vertices)
    for (int d = 0; d < est.n; ++d) lo[d] = std::min(lo[d], x[d]);
  auto bin_of = [&](std::size_t c) {
    std::array<long, 3> key{0, 0, 0};
    for (int d = 0; d < est.n; ++d)
      key[d] = static_cast<long>(std::floor((est.cell_centroids[c][d] - lo[d]) / options.density_bin));
    return key;
  };
  std::map<std::array<long, 3>, std::pair<double, double>> bins;
  double all_q = 0.0, all_v = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    if (in_atom[c]) continue;
    const double q = 1.0 + pnorm(fields.back()[c], est.p);
    auto& b = bins[bin_of(c)];
    b.first += mesh.volumes[c] * q;
    b.second += mesh.volumes[c];
    all_q += mesh.volumes[c] * q;
    all_v += mesh.volumes[c];
  }
  const double fallback = all_v > 0.0 ? all_q / all_v : 1.0;
  est.sigma_ac_density.resize(C);
  for (std::size_t c = 0; c < C; ++c) {
    const auto it = bins.find(bin_of(c));
    est.sigma_ac_density[c] = it == bins.end() || it->second.second == 0.0 ? fallback : it->second.first / it->second.second;
  }

  // Atoms at the sequence's concentration points.
  std::vector<std::optional<Integrand>> recession(V);
  for (std::size_t v = 0; v < V; ++v) {
    try {
      recession[v] = dict.v[v].recession_integrand();
    } catch (const std::exception& e) {
      est.notices.push_back("no recession for " + dict.v[v].name() + ": " + e.what());
    }
  }
  for (std::size_t a = 0; a < candidates.size(); ++a) {
    const auto& cand = candidates[a];
    std::vector<double> m_k(K), norm_k(K);
    std::vector<std::vector<double>> mom_k(V, std::vector<double>(K));
    for (std::size_t k = 0; k < K; ++k) {
      const GradientField leaf = k + 1 == K ? leaf_top[a] : seq.materialize_leaf(cand.leaf, ladder[k]);
      double mk = 0.0, nk = 0.0;
      std::vector<double> num(V, 0.0);
      for (std::size_t c = 0; c < C; ++c) {
        if (norm(leaf[c]) == 0.0) continue;
        const double vol = mesh.volumes[c];
        const double sp = pnorm(fields[k][c], est.p);
        mk += vol * (1.0 + sp - est.sigma_ac_density[c]);
        nk += vol * sp;
        for (std::size_t v = 0; v < V; ++v)
          if (recession[v]) num[v] += vol * (*recession[v])(fields[k][c]);
      }
      m_k[k] = mk;
      norm_k[k] = mk > 0.0 ? nk / mk : 0.0;
      for (std::size_t v = 0; v < V; ++v) mom_k[v][k] = !recession[v] ? kNaN : (mk > 0.0 ? num[v] / mk : 0.0);
    }
    Atom atom;
    atom.location = cand.location;
    atom.boundary = cand.boundary;
    atom.normal = cand.normal;
    const auto ml = extrapolate(m_k);
    atom.mass = ml.value;
    atom.mass_error = ml.error;
    est.atoms.push_back(atom);
    est.sphere_normalization.push_back(extrapolate(norm_k).value);
    std::vector<double> moments(V);
    for (std::size_t v = 0; v < V; ++v) moments[v] = recession[v] ? extrapolate(mom_k[v]).value : kNaN;
    est.sphere_moments.push_back(std::move(moments));
  }

  // Oscillation part from the generator's two-point structure.
  const YoungAtoms young = seq.young_measure();
  double dens = 0.0, wsum = 0.0;
  Matrix bary(est.m, est.n);
  for (const auto& [w, S] : young) {
    dens += w * (1.0 + pnorm(S, est.p));
    wsum += w;
    bary += w * S;
  }
  est.young_inverse_density.assign(C, wsum / dens);
  double normalization = 0.0;
  for (const auto& [w, S] : young) normalization += w * (1.0 + pnorm(S, est.p)) / dens;
  est.young_normalization.assign(C, normalization);
  est.young_barycenter.assign(C, (1.0 / dens) * bary);
  est.young_moments.resize(V);
  for (std::size_t v = 0; v < V; ++v) {
    double mv = 0.0;
    for (const auto& [w, S] : young) mv += w * dict.v[v](S) / dens;
    est.young_moments[v].assign(C, mv);
  }
  est.weak_limit = seq.weak_limit();
  return est;
}

MomentSplit split_oscillation_concentration(const DpmEstimate& est) {
  MomentSplit s;
  s.young_moments = est.young_moments;
  s.sphere_moments = est.sphere_moments;
  for (const auto& pr : est.pairings)
    if (!pr.limit.cauchy) s.non_cauchy.push_back(est.g_names[pr.g] + "|" + est.integrands[pr.v].name());
  return s;
}

DpmValidation validate_dpm(const DpmEstimate& est, double tol) {
  DpmValidation out;
  const std::size_t C = est.sigma_ac_density.size();

  CheckResult pos;
  pos.name = "positivity";
  pos.tolerance = tol;
  pos.worst = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < C; ++c)
    if (est.sigma_ac_density[c] < pos.worst) {
      pos.worst = est.sigma_ac_density[c];
      pos.witness = "cell " + std::to_string(c) + " density " + fmt(pos.worst);
    }
  for (std::size_t a = 0; a < est.atoms.size(); ++a)
    if (est.atoms[a].mass < pos.worst) {
      pos.worst = est.atoms[a].mass;
      pos.witness = "atom " + std::to_string(a) + " at " + fmt_point(est.atoms[a].location, est.n) + " mass " +
                    fmt(est.atoms[a].mass);
    }
  pos.pass = pos.worst >= -tol;
  if (pos.pass) pos.witness.clear();
  out.checks.push_back(pos);

  CheckResult dens;
  dens.name = "density";
  dens.tolerance = tol;
  for (std::size_t c = 0; c < C; ++c) {
    const double d = est.sigma_ac_density[c];
    const double rec = 1.0 / est.young_inverse_density[c];
    const double err = std::abs(d - rec) / std::max(1.0, std::abs(d));
    if (!(err <= dens.worst)) {
      dens.worst = err;
      dens.witness = "cell " + std::to_string(c) + " density " + fmt(d) + " vs reconstructed " + fmt(rec);
    }
  }
  dens.pass = dens.worst <= tol;
  if (dens.pass) dens.witness.clear();
  out.checks.push_back(dens);

  CheckResult nrm;
  nrm.name = "normalization";
  nrm.tolerance = tol;
  for (std::size_t c = 0; c < C; ++c) {
    const double err = std::abs(est.young_normalization[c] - 1.0);
    if (!(err <= nrm.worst)) {
      nrm.worst = err;
      nrm.witness = "cell " + std::to_string(c) + " moment of 1 is " + fmt(est.young_normalization[c]);
    }
  }
  for (std::size_t a = 0; a < est.atoms.size(); ++a) {
    if (est.atoms[a].mass <= tol) continue;
    const double err = std::abs(est.sphere_normalization[a] - 1.0);
    if (!(err <= nrm.worst)) {
      nrm.worst = err;
      nrm.witness = "atom " + std::to_string(a) + " sphere moment of 1 is " + fmt(est.sphere_normalization[a]);
    }
  }
  nrm.pass = nrm.worst <= tol;
  if (nrm.pass) nrm.witness.clear();
  out.checks.push_back(nrm);

  // Informational: total mass against the split, and each pairing against its representation.
  CheckResult mass;
  mass.name = "mass-bookkeeping";
  mass.gating = false;
  double split = 0.0, bars = est.total_mass.error;
  for (std::size_t c = 0; c < C; ++c) split += est.cell_volumes[c] * est.sigma_ac_density[c];
  for (const auto& a : est.atoms) {
    split += a.mass;
    bars += a.mass_error;
  }
  mass.worst = std::abs(est.total_mass.value - split);
  mass.tolerance = bars + tol * std::max(1.0, std::abs(est.total_mass.value));
  mass.pass = mass.worst <= mass.tolerance;
  if (!mass.pass) mass.witness = "total " + fmt(est.total_mass.value) + " vs split " + fmt(split);
  out.checks.push_back(mass);

  CheckResult rep;
  rep.name = "representation";
  rep.gating = false;
  rep.tolerance = tol;
  for (const auto& pr : est.pairings) {
    const SpatialFunction g = make_weight(json::parse(est.g_specs[pr.g]));
    double pred = 0.0;
    for (std::size_t c = 0; c < C; ++c)
      pred += est.cell_volumes[c] * g(est.cell_centroids[c]) * est.young_moments[pr.v][c] / est.young_inverse_density[c];
    for (std::size_t a = 0; a < est.atoms.size(); ++a)
      pred += g(est.atoms[a].location) * est.atoms[a].mass * est.sphere_moments[a][pr.v];
    const double err = std::abs(pr.limit.value - pred) / std::max(1.0, std::abs(pr.limit.value));
    const double allowed = tol + pr.limit.error / std::max(1.0, std::abs(pr.limit.value));
    if (!(err - allowed <= rep.worst)) {
      rep.worst = err - allowed;
      rep.witness = est.g_names[pr.g] + "|" + est.integrands[pr.v].name() + " pairing " + fmt(pr.limit.value) +
                    " vs represented " + fmt(pred);
    }
  }
  rep.pass = rep.worst <= 0.0;
  if (rep.pass) rep.witness.clear();
  out.checks.push_back(rep);

  for (const auto& c : out.checks)
    if (c.gating && !c.pass) out.pass = false;
  return out;
}

NecessaryConditionsReport check_necessary_conditions(const DpmEstimate& est, const ConditionOptions& options) {
  NecessaryConditionsReport rep;
  const std::size_t C = est.weak_limit.size(), V = est.integrands.size(), A = est.atoms.size();
  const int n = est.n;

  ConditionVerdict first{"firstmoment"};
  first.tolerance = options.barycenter_tol;
  first.worst = 0.0;
  rep.barycenter_residual.resize(C);
  for (std::size_t c = 0; c < C; ++c) {
    const Matrix bary = (1.0 / est.young_inverse_density[c]) * est.young_barycenter[c];
    rep.barycenter_residual[c] = norm(est.weak_limit[c] - bary);
    first.worst = std::max(first.worst, rep.barycenter_residual[c]);
    ++first.checked;
  }
  first.pass = first.worst <= first.tolerance;

  // Jensen against Qv at each distinct weak-limit value.
  ConditionVerdict qc{"qc"};
  qc.tolerance = options.jensen_tol;
  rep.jensen_margin.assign(V, std::vector<double>(C, kNaN));
  MeshPtr ball;
  std::map<std::vector<double>, std::size_t> distinct;
  for (std::size_t c = 0; c < C; ++c) distinct.emplace(matrix_key(est.weak_limit[c]), c);
  if (C > 0) {
    ball = std::make_shared<const DomainMesh>(build_ball(n, options.envelope_h));
  }
  for (std::size_t v = 0; v < V; ++v) {
    const Integrand& vf = est.integrands[v];
    std::map<std::vector<double>, double> qv;
    bool skipped = false;
    for (const auto& [key, c0] : distinct) {
      const Matrix S = est.weak_limit[c0];
      const auto env = quasiconvex_envelope(vf, S, {vf, S, ball, options.solver});
      if (env.classification == Classification::Inconclusive) {
        rep.notices.push_back("qc: skipped " + vf.name() + ", envelope classification inconclusive");
        skipped = true;
        break;
      }
      qv[key] = env.classification == Classification::MinusInfinity
                    ? -std::numeric_limits<double>::infinity()
                    : std::min(env.value, lamination_bound(vf, S).value);
    }
    if (skipped) {
      ++qc.skipped;
      continue;
    }
    ++qc.checked;
    for (std::size_t c = 0; c < C; ++c) {
      const double jensen = est.young_moments[v][c] / est.young_inverse_density[c];
      const double margin = jensen - qv[matrix_key(est.weak_limit[c])];
      rep.jensen_margin[v][c] = margin;
      qc.worst = std::min(qc.worst, margin);
    }
  }
  qc.pass = qc.worst >= -qc.tolerance;

  // Sphere moments at atoms, gated by the dichotomy of the recession function.
  ConditionVerdict interior{"interior"}, boundary{"boundary"};
  interior.tolerance = boundary.tolerance = options.atom_tol;
  rep.interior_margin.assign(A, std::vector<double>(V, kNaN));
  rep.boundary_margin.assign(A, std::vector<double>(V, kNaN));
  std::vector<std::optional<Classification>> interior_cls(V);
  std::map<std::pair<std::size_t, std::vector<double>>, Classification> boundary_cls;
  for (std::size_t a = 0; a < A; ++a) {
    const Atom& atom = est.atoms[a];
    for (std::size_t v = 0; v < V; ++v) {
      const double moment = est.sphere_moments[a][v];
      if (std::isnan(moment)) {
        rep.notices.push_back("atom " + std::to_string(a) + ": no recession moment for " + est.integrands[v].name());
        ++(atom.boundary ? boundary : interior).skipped;
        continue;
      }
      const Integrand vinf = est.integrands[v].recession_integrand();
      Classification cls;
      if (!atom.boundary) {
        if (!interior_cls[v]) {
          const Matrix zero(est.m, est.n);
          interior_cls[v] = quasiconvex_envelope(vinf, zero, {vinf, zero, ball, options.solver}).classification;
        }
        cls = *interior_cls[v];
      } else {
        Point rho = atom.normal;
        const auto key = std::make_pair(v, std::vector<double>(rho.begin(), rho.begin() + n));
        auto it = boundary_cls.find(key);
        if (it == boundary_cls.end()) {
          auto half = std::make_shared<const DomainMesh>(build_half_ball(n, rho, options.boundary_h));
          const Matrix zero(est.m, est.n);
          it = boundary_cls
                   .emplace(key, boundary_quasiconvexification(vinf, rho, {vinf, zero, half, options.solver}).classification)
                   .first;
        }
        cls = it->second;
      }
      ConditionVerdict& verdict = atom.boundary ? boundary : interior;
      if (cls == Classification::MinusInfinity) continue;  // condition does not apply
      if (cls != Classification::Zero) {
        rep.notices.push_back(std::string(atom.boundary ? "boundary" : "interior") + ": skipped " +
                              est.integrands[v].name() + " at atom " + std::to_string(a) +
                              ", recession classification " + to_string(cls));
        ++verdict.skipped;
        continue;
      }
      (atom.boundary ? rep.boundary_margin : rep.interior_margin)[a][v] = moment;
      verdict.worst = std::min(verdict.worst, moment);
      ++verdict.checked;
    }
  }
  interior.pass = interior.worst >= -interior.tolerance;
  boundary.pass = boundary.worst >= -boundary.tolerance;

  rep.verdicts = {first, qc, interior, boundary};
  for (const auto& v : rep.verdicts) rep.pass = rep.pass && v.pass;
  return rep;
}

TailReport equiintegrability_diagnostic(const GradientSequence& seq, const PointIntegrand& h, std::span<const double> K,
                                        std::span<const int> ladder, double rel_tol) {
  require(!K.empty() && !ladder.empty(), "tail diagnostic needs K and k ladders");
  for (std::size_t i = 1; i < K.size(); ++i) require(K[i] > K[i - 1], "K ladder must be increasing");
  const DomainMesh& mesh = *seq.mesh();
  const std::size_t C = mesh.num_cells();
  TailReport rep;
  rep.K.assign(K.begin(), K.end());
  rep.ladder.assign(ladder.begin(), ladder.end());
  rep.tails.assign(K.size(), std::vector<double>(ladder.size(), 0.0));
  std::vector<Point> centroids(C);
  for (std::size_t c = 0; c < C; ++c) centroids[c] = mesh.centroid(c);
  const auto fields = seq.materialize(ladder);
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    std::vector<double> hv(C);
    double hmax = 0.0, total = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      hv[c] = h(centroids[c], fields[k][c]);
      hmax = std::max(hmax, std::abs(hv[c]));
    }
    for (std::size_t c = 0; c < C; ++c) {
      if (hv[c] < -1e-12 * std::max(1.0, hmax))
        throw ValidationError("integrand is negative along the sequence (cell " + std::to_string(c) + ", k=" +
                              std::to_string(ladder[k]) + ", value " + fmt(hv[c]) + ")");
      total += mesh.volumes[c] * std::max(0.0, hv[c]);
    }
    rep.scale = std::max(rep.scale, total);
    for (std::size_t i = 0; i < K.size(); ++i) {
      double t = 0.0;
      for (std::size_t c = 0; c < C; ++c)
        if (hv[c] >= K[i]) t += mesh.volumes[c] * hv[c];
      rep.tails[i][k] = t;
    }
  }
  rep.sup_tail.resize(K.size());
  for (std::size_t i = 0; i < K.size(); ++i)
    rep.sup_tail[i] = *std::max_element(rep.tails[i].begin(), rep.tails[i].end());
  rep.tolerance = rel_tol * std::max(1.0, rep.scale);
  rep.equiintegrable = rep.sup_tail.back() <= rep.tolerance;
  rep.verdict = rep.equiintegrable ? "equiintegrable" : "concentrating";
  return rep;
}

bool tails_match_sphere_moments(const TailReport& tails, const DpmEstimate& est, std::size_t v, double tol) {
  require(v < est.integrands.size(), "integrand index out of range");
  bool charged = false;
  for (std::size_t a = 0; a < est.atoms.size(); ++a) {
    const double w = est.atoms[a].mass * est.sphere_moments[a][v];
    if (std::isfinite(w) && std::abs(w) > tol) charged = true;
  }
  return tails.equiintegrable != charged;
}

namespace {

json limit_to_json(const LadderLimit& l) {
  return {{"value", l.value}, {"error", l.error}, {"cauchy", l.cauchy}, {"aitken", l.aitken}};
}

LadderLimit limit_from_json(const json& j) {
  LadderLimit l;
  l.value = j.at("value").get<double>();
  l.error = j.at("error").get<double>();
  l.cauchy = j.at("cauchy").get<bool>();
  l.aitken = j.at("aitken").get<bool>();
  return l;
}

json matrices_to_json(const std::vector<Matrix>& ms) {
  std::vector<double> flat;
  for (const auto& m : ms) {
    const auto f = m.flat();
    flat.insert(flat.end(), f.begin(), f.end());
  }
  return flat;
}

std::vector<Matrix> matrices_from_json(const json& j, int m, int n) {
  const auto flat = j.get<std::vector<double>>();
  require(flat.size() % static_cast<std::size_t>(m * n) == 0, "matrix table has the wrong length");
  std::vector<Matrix> out(flat.size() / (m * n));
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = Matrix::from_flat(m, n, std::vector<double>(flat.begin() + i * m * n, flat.begin() + (i + 1) * m * n));
  return out;
}

// NaN is not representable in JSON; skipped moments travel as null.
json nullable(const std::vector<double>& xs) {
  json a = json::array();
  for (double x : xs) a.push_back(std::isnan(x) ? json(nullptr) : json(x));
  return a;
}

std::vector<double> from_nullable(const json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(x.is_null() ? kNaN : x.get<double>());
  return out;
}

}  // namespace

json dpm_to_json(const DpmEstimate& est) {
  json j;
  j["m"] = est.m;
  j["n"] = est.n;
  j["p"] = est.p;
  j["ladder"] = est.ladder;
  j["g_names"] = est.g_names;
  j["g_specs"] = json::array();
  for (const auto& s : est.g_specs) j["g_specs"].push_back(json::parse(s));
  j["integrands"] = json::array();
  for (const auto& v : est.integrands) j["integrands"].push_back(json::parse(v.spec_json()));
  j["pairings"] = json::array();
  for (const auto& pr : est.pairings)
    j["pairings"].push_back({{"g", pr.g}, {"v", pr.v}, {"values", pr.values}, {"limit", limit_to_json(pr.limit)}});
  j["total_mass"] = limit_to_json(est.total_mass);
  j["cell_volumes"] = est.cell_volumes;
  std::vector<double> cent;
  for (const auto& x : est.cell_centroids) cent.insert(cent.end(), x.begin(), x.begin() + est.n);
  j["cell_centroids"] = cent;
  j["sigma_ac_density"] = est.sigma_ac_density;
  j["atoms"] = json::array();
  for (std::size_t a = 0; a < est.atoms.size(); ++a) {
    const Atom& at = est.atoms[a];
    j["atoms"].push_back({{"location", point_to_json(at.location, est.n)},
                          {"mass", at.mass},
                          {"mass_error", at.mass_error},
                          {"boundary", at.boundary},
                          {"normal", point_to_json(at.normal, est.n)},
                          {"sphere_moments", nullable(est.sphere_moments[a])},
                          {"sphere_normalization", est.sphere_normalization[a]}});
  }
  j["young_moments"] = est.young_moments;
  j["young_inverse_density"] = est.young_inverse_density;
  j["young_normalization"] = est.young_normalization;
  j["young_barycenter"] = matrices_to_json(est.young_barycenter);
  j["weak_limit"] = matrices_to_json(est.weak_limit);
  j["notices"] = est.notices;
  return j;
}

DpmEstimate dpm_from_json(const json& j) {
  DpmEstimate est;
  est.m = j.at("m").get<int>();
  est.n = j.at("n").get<int>();
  est.p = j.at("p").get<double>();
  est.ladder = j.at("ladder").get<std::vector<int>>();
  est.g_names = j.at("g_names").get<std::vector<std::string>>();
  for (const auto& s : j.at("g_specs")) est.g_specs.push_back(s.dump());
  for (const auto& v : j.at("integrands")) est.integrands.push_back(make_integrand(v, est.m, est.n));
  for (const auto& pj : j.at("pairings")) {
    Pairing pr;
    pr.g = pj.at("g").get<std::size_t>();
    pr.v = pj.at("v").get<std::size_t>();
    pr.values = pj.at("values").get<std::vector<double>>();
    pr.limit = limit_from_json(pj.at("limit"));
    est.pairings.push_back(pr);
  }
  est.total_mass = limit_from_json(j.at("total_mass"));
  est.cell_volumes = j.at("cell_volumes").get<std::vector<double>>();
  const auto cent = j.at("cell_centroids").get<std::vector<double>>();
  require(cent.size() == est.cell_volumes.size() * est.n, "centroid table has the wrong length");
  est.cell_centroids.resize(est.cell_volumes.size());
  for (std::size_t c = 0; c < est.cell_centroids.size(); ++c)
    for (int d = 0; d < est.n; ++d) est.cell_centroids[c][d] = cent[c * est.n + d];
  est.sigma_ac_density = j.at("sigma_ac_density").get<std::vector<double>>();
  for (const auto& aj : j.at("atoms")) {
    Atom at;
    at.location = point_from_json(aj.at("location"), est.n);
    at.mass = aj.at("mass").get<double>();
    at.mass_error = aj.at("mass_error").get<double>();
    at.boundary = aj.at("boundary").get<bool>();
    at.normal = point_from_json(aj.at("normal"), est.n);
    est.atoms.push_back(at);
    est.sphere_moments.push_back(from_nullable(aj.at("sphere_moments")));
    est.sphere_normalization.push_back(aj.at("sphere_normalization").get<double>());
  }
  est.young_moments = j.at("young_moments").get<std::vector<std::vector<double>>>();
  est.young_inverse_density = j.at("young_inverse_density").get<std::vector<double>>();
  est.young_normalization = j.at("young_normalization").get<std::vector<double>>();
  est.young_barycenter = matrices_from_json(j.at("young_barycenter"), est.m, est.n);
  est.weak_limit = matrices_from_json(j.at("weak_limit"), est.m, est.n);
  est.notices = j.value("notices", std::vector<std::string>{});
  const std::size_t C = est.cell_volumes.size();
  require(est.sigma_ac_density.size() == C && est.young_inverse_density.size() == C &&
              est.young_normalization.size() == C && est.young_barycenter.size() == C && est.weak_limit.size() == C,
          "per-cell tables disagree in length");
  require(est.young_moments.size() == est.integrands.size(), "young moment table does not match the dictionary");
  return est;
}

}  // namespace qcb
