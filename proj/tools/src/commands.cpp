#include "commands.hpp"

#include <cmath>
#include <optional>
#include <sstream>

#include "io.hpp"
#include "qcb/catalog.hpp"
#include "qcb/errors.hpp"

namespace qcb::cli {

namespace {

using json = nlohmann::json;

const json kNull = nullptr;

std::vector<CommandDesc> build_table() {
  const OptionDesc seed{"seed", "64-bit seed for every random start", 0};
  const OptionDesc multistart{"multistart", "random starts per descent", 8};
  const OptionDesc max_it{"max_iterations", "L-BFGS iteration cap", 400};
  return {
      {"relax",
       "Quasiconvex envelope Qv(s0) on a ball mesh (boundary problem on a half-ball mesh)",
       {{"integrand", "catalog tag or JSON entry", "power-norm"},
        {"m", "rows of s (default: mesh dimension)", kNull},
        {"s0", "base matrix: zero, identity or JSON rows", "zero"},
        {"mesh", "mesh spec or mesh JSON file", "ball:h=0.2"},
        multistart, max_it, seed,
        {"out", "result JSON", "result.json"}},
       {"mesh"}},
      {"qcb",
       "Boundary quasiconvexification Q_{b,rho}v(0) and, with --s0, the boundary quasiconvexity test",
       {{"integrand", "catalog tag or JSON entry (non-homogeneous entries use their recession)", "det2"},
        {"m", "rows of s (default: n)", kNull},
        {"n", "dimension when --rho is absent", kNull},
        {"rho", "unit normal, e.g. 0,1 (default: last axis)", kNull},
        {"mesh", "half-ball mesh spec (default: half-ball with --rho and --mesh-h)", kNull},
        {"mesh_h", "mesh size of the default half-ball", 0.25},
        {"s0", "base matrix for the boundary quasiconvexity test", kNull},
        {"trials", "random admissible fields tried by the test", 16},
        multistart, max_it, seed,
        {"out", "result JSON", "qcb.json"}},
       {"mesh"}},
      {"generate",
       "Materialize the gradient field of a sequence at index k",
       {{"spec", "sequence JSON (optionally with a \"mesh\" key)", kNull, true},
        {"k", "sequence index", 64},
        {"mesh", "mesh spec or file (default: the sequence's mesh, else ball h=0.1)", kNull},
        {"out", "field JSON", "field.json"}},
       {"spec", "mesh"}},
      {"estimate",
       "Estimate the DiPerna-Majda pair of a sequence on a k-ladder",
       {{"spec", "sequence JSON (optionally with a \"mesh\" key)", kNull, true},
        {"dict", "test dictionary JSON {\"g\": [...], \"v\": [...]} (default dictionary otherwise)", kNull},
        {"kmax", "largest ladder index (power of two)", 64},
        {"kmin", "smallest ladder index", 1},
        {"ladder", "explicit ladder, e.g. 4,8,16", kNull},
        {"mesh", "mesh spec or file", kNull},
        {"density_bin", "cube side for the absolutely continuous density", 0.25},
        {"out", "estimate JSON", "dpm.json"}},
       {"spec", "dict", "mesh"}},
      {"check",
       "Validate an estimate and check the necessary conditions",
       {{"dpm", "estimate JSON written by estimate", kNull, true},
        {"conditions", "all, validator or necessary", "all"},
        {"tol", "validator tolerance", 1e-3},
        {"barycenter_tol", "first-moment tolerance", 1e-3},
        {"jensen_tol", "Jensen margin tolerance", 1e-3},
        {"atom_tol", "atom mass threshold and boundary margin tolerance", 1e-6},
        {"envelope_h", "ball mesh size for Qv", 0.25},
        {"boundary_h", "half-ball mesh size for Q_{b,rho}v_inf(0)", 0.25},
        multistart, seed,
        {"out", "report JSON", "report.json"}},
       {"dpm"}},
      {"wlsc",
       "Boundary probe for weak lower semicontinuity of I(u) = int g v(grad u)",
       {{"functional", "functional JSON {\"mesh\", \"g\", \"v\"}", kNull, true},
        {"points", "boundary points JSON array", kNull, true},
        {"profiles", "concentration profiles JSON array", kNull, true},
        {"ha", "angular spacing of the model shell", 0.125},
        {"octaves", "octaves of the model shell", 8},
        {"lpo", "layers per octave of the model shell", 4},
        {"compatible", "classify on a shell compatible with the model", true},
        {"classify_octaves", "octaves of the compatible classification shell", 2},
        {"classify_h", "half-ball mesh size when not compatible", 0.25},
        {"k_max", "largest sequence index", 64},
        {"tol", "violation tolerance", 1e-6},
        {"oracle_h", "half-ball quadrature size for the predicted gap", 0.02},
        multistart, seed,
        {"out", "verdict JSON", "verdict.json"}},
       {"functional", "points", "profiles"}},
      {"cof-check",
       "Weak continuity check of a cofactor contraction along a sequence",
       {{"seq", "experiment JSON {\"sequence\", \"mesh\", \"a\", \"rho\", \"g\", \"ladder\"} or a bare sequence",
         kNull, true},
        {"ladder", "k ladder (default: the file's, else 4,8,16,32)", kNull},
        {"mesh", "mesh spec or file (default: the file's)", kNull},
        {"rel_tol", "final gap tolerance relative to the scale", 1e-2},
        {"quad_order", "quadrature order for the weights", 3},
        {"out", "report CSV", "report.csv"}},
       {"seq", "mesh"}},
  };
}

fs::path sibling(const fs::path& out, const std::string& suffix) {
  auto p = out;
  return p.replace_extension().string() + suffix;
}

MeshPtr make_mesh(const std::string& spec, int default_n) {
  return std::make_shared<const DomainMesh>(build_mesh(spec, default_n));
}

int opt_int(const json& cfg, const char* key, int dflt) { return cfg.at(key).is_null() ? dflt : cfg.at(key).get<int>(); }

SolverOptions solver_options(const json& cfg) {
  SolverOptions o;
  if (cfg.contains("multistart")) o.multistart = cfg.at("multistart").get<int>();
  if (cfg.contains("max_iterations")) o.max_iterations = cfg.at("max_iterations").get<int>();
  o.seed = cfg.at("seed").get<std::uint64_t>();
  return o;
}

Point parse_point(const json& j, int* dim) {
  if (j.is_string()) return point_from_string(j.get<std::string>(), dim);
  require(j.is_array() && !j.empty() && j.size() <= 3, "point must have 1 to 3 coordinates");
  *dim = static_cast<int>(j.size());
  return point_from_json(j, *dim);
}

std::vector<int> int_list(const json& j) {
  if (j.is_string()) {
    std::vector<int> out;
    std::stringstream ss(j.get<std::string>());
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    return out;
  }
  return j.get<std::vector<int>>();
}

/// A sequence file is either a bare SequenceSpec or {"sequence": ..., "mesh": ...}.
struct SequenceFile {
  json doc;
  SequenceSpec spec;
  MeshPtr mesh;
};

SequenceFile load_sequence(const json& cfg, const std::string& key) {
  SequenceFile f;
  f.doc = read_json(cfg.at(key).get<std::string>());
  f.spec = sequence_from_json(f.doc.contains("sequence") ? f.doc.at("sequence") : f.doc);
  std::string mesh;
  if (!cfg.at("mesh").is_null())
    mesh = cfg.at("mesh").get<std::string>();
  else if (f.doc.contains("mesh"))
    mesh = f.doc.at("mesh").get<std::string>();
  else
    mesh = "ball:n=" + std::to_string(f.spec.n) + ";h=0.1";
  f.mesh = make_mesh(mesh, f.spec.n);
  return f;
}

std::vector<int> ladder_for(const GradientSequence& seq, int kmax, int kmin) {
  const int top = seq.max_resolvable(kmax);
  if (top < std::max(kmin, 1)) throw ResolutionError("no resolvable ladder index in [kmin, kmax] on this mesh");
  return geometric_ladder(top, kmin);
}

Execution run_relax(const json& cfg) {
  const auto mesh = make_mesh(cfg.at("mesh").get<std::string>(), 2);
  const int n = mesh->dim;
  const Integrand v = make_integrand(cfg.at("integrand"), opt_int(cfg, "m", n), n);
  require(v.n() == n, "integrand dimension does not match the mesh");
  const Matrix s0 = matrix_from_json(cfg.at("s0"), v.m(), v.n());
  const RelaxationProblem prob{v, s0, mesh, solver_options(cfg)};
  const bool boundary = mesh->has_gamma();
  if (boundary) require(norm(s0) == 0.0, "the boundary problem on a half-ball mesh needs s0 = 0");
  const RelaxationResult res =
      boundary ? boundary_quasiconvexification(v, mesh->shape.rho, prob) : quasiconvex_envelope(v, s0, prob);
  json j = relaxation_to_json(res);
  j["problem"] = boundary ? "boundary-quasiconvexification" : "quasiconvex-envelope";
  j["integrand"] = json::parse(v.spec_json());
  j["s0"] = matrix_to_json(s0);
  j["mesh"] = mesh->spec;
  const fs::path out = cfg.at("out").get<std::string>();
  write_json(out, j);
  write_text(sibling(out, ".trace.csv"), trace_csv(res.trace));
  write_text(sibling(out, ".runs.csv"), runs_csv(res.runs));
  return {{out, sibling(out, ".trace.csv"), sibling(out, ".runs.csv")},
          res.nonconvergence,
          "classification: " + to_string(res.classification) + "  value: " + num(res.value)};
}

Execution run_qcb(const json& cfg) {
  int n = opt_int(cfg, "n", 2);
  Point rho{};
  const bool has_rho = !cfg.at("rho").is_null();
  if (has_rho) rho = parse_point(cfg.at("rho"), &n);
  Integrand v = make_integrand(cfg.at("integrand"), opt_int(cfg, "m", n), n);
  if (!has_rho && cfg.at("n").is_null()) n = v.n();
  require(v.n() == n, "integrand dimension does not match rho");
  if (!has_rho) rho[n - 1] = 1.0;
  require(std::abs(norm(rho, n) - 1.0) <= 1e-12, "rho must be a unit vector");
  std::string spec;
  if (!cfg.at("mesh").is_null()) {
    spec = cfg.at("mesh").get<std::string>();
  } else {
    std::ostringstream s;
    s << "half-ball:rho=";
    for (int i = 0; i < n; ++i) s << (i ? "," : "") << num(rho[i]);
    s << ";h=" << num(cfg.at("mesh_h").get<double>());
    spec = s.str();
  }
  const auto mesh = make_mesh(spec, n);
  const Integrand original = v;
  json j;
  if (!v.homogeneous() && !is_positively_homogeneous(v)) {
    require(v.has_recession(), "integrand is not positively homogeneous and has no recession function");
    v = v.recession_integrand();
    j["notice"] = "classified the recession function of the integrand";
  }
  const SolverOptions opt = solver_options(cfg);
  const RelaxationResult res = boundary_quasiconvexification(v, rho, {v, v.zero(), mesh, opt});
  j.update(relaxation_to_json(res));
  j["integrand"] = json::parse(original.spec_json());
  j["rho"] = point_to_json(rho, n);
  j["mesh"] = mesh->spec;
  std::string summary = "classification: " + to_string(res.classification) + "  value: " + num(res.value);
  if (!cfg.at("s0").is_null()) {
    const Matrix s0 = matrix_from_json(cfg.at("s0"), original.m(), original.n());
    const Verdict ver = qcb_test(original, s0, rho, cfg.at("trials").get<int>(), opt.seed, mesh, opt);
    j["qcb_test"] = qcb_verdict_to_json(ver, original.m());
    j["qcb_test"]["s0"] = matrix_to_json(s0);
    summary += "  qcb test: " + ver.outcome;
  }
  const fs::path out = cfg.at("out").get<std::string>();
  write_json(out, j);
  write_text(sibling(out, ".runs.csv"), runs_csv(res.runs));
  return {{out, sibling(out, ".runs.csv")}, res.nonconvergence, summary};
}

Execution run_generate(const json& cfg) {
  const SequenceFile f = load_sequence(cfg, "spec");
  const GradientSequence seq(f.spec, f.mesh);
  const int k = cfg.at("k").get<int>();
  const GradientField G = seq.materialize(k);
  const fs::path out = cfg.at("out").get<std::string>();
  json j = gradient_field_to_json(*f.mesh, G, k);
  j["sequence"] = sequence_to_json(f.spec);
  write_json(out, j);
  write_text(sibling(out, ".csv"), gradient_field_csv(*f.mesh, G));
  return {{out, sibling(out, ".csv")}, false, "cells: " + std::to_string(G.size()) + "  k: " + std::to_string(k)};
}

TestDictionary load_dictionary(const json& cfg, const SequenceSpec& spec, double p) {
  if (cfg.at("dict").is_null()) return default_dictionary(spec.m, spec.n, p);
  const json d = read_json(cfg.at("dict").get<std::string>());
  TestDictionary dict;
  for (const auto& g : d.value("g", json::array({1.0}))) dict.g.push_back(make_weight(g));
  for (const auto& v : d.at("v")) dict.v.push_back(make_integrand(v, spec.m, spec.n));
  require(!dict.g.empty() && !dict.v.empty(), "dictionary needs at least one weight and one integrand");
  return dict;
}

Execution run_estimate(const json& cfg) {
  const SequenceFile f = load_sequence(cfg, "spec");
  const GradientSequence seq(f.spec, f.mesh);
  const std::vector<int> ladder = cfg.at("ladder").is_null()
                                      ? ladder_for(seq, cfg.at("kmax").get<int>(), cfg.at("kmin").get<int>())
                                      : int_list(cfg.at("ladder"));
  const TestDictionary dict = load_dictionary(cfg, f.spec, seq.p());
  EstimateOptions eo;
  eo.density_bin = cfg.at("density_bin").get<double>();
  const DpmEstimate est = estimate_pairings(seq, dict, ladder, eo);
  const fs::path out = cfg.at("out").get<std::string>();
  json j = dpm_to_json(est);
  j["sequence"] = sequence_to_json(f.spec);
  j["mesh"] = f.mesh->spec;
  write_json(out, j);
  write_text(sibling(out, ".pairings.csv"), pairings_csv(est));
  write_text(sibling(out, ".atoms.csv"), atoms_csv(est));
  return {{out, sibling(out, ".pairings.csv"), sibling(out, ".atoms.csv")},
          false,
          "pairings: " + std::to_string(est.pairings.size()) + "  atoms: " + std::to_string(est.atoms.size()) +
              "  total mass: " + num(est.total_mass.value)};
}

Execution run_check(const json& cfg) {
  const DpmEstimate est = dpm_from_json(read_json(cfg.at("dpm").get<std::string>()));
  const std::string which = cfg.at("conditions").get<std::string>();
  require(which == "all" || which == "validator" || which == "necessary",
          "conditions must be all, validator or necessary");
  json j{{"pass", true}};
  std::optional<DpmValidation> val;
  std::optional<NecessaryConditionsReport> nec;
  if (which != "necessary") {
    val = validate_dpm(est, cfg.at("tol").get<double>());
    j["validator"] = validation_to_json(*val);
    j["pass"] = j["pass"].get<bool>() && val->pass;
  }
  if (which != "validator") {
    ConditionOptions co;
    co.barycenter_tol = cfg.at("barycenter_tol").get<double>();
    co.jensen_tol = cfg.at("jensen_tol").get<double>();
    co.atom_tol = cfg.at("atom_tol").get<double>();
    co.envelope_h = cfg.at("envelope_h").get<double>();
    co.boundary_h = cfg.at("boundary_h").get<double>();
    co.solver = solver_options(cfg);
    nec = check_necessary_conditions(est, co);
    j["necessary"] = necessary_to_json(*nec);
    j["pass"] = j["pass"].get<bool>() && nec->pass;
  }
  const fs::path out = cfg.at("out").get<std::string>();
  write_json(out, j);
  write_text(sibling(out, ".csv"), checks_csv(val ? &*val : nullptr, nec ? &*nec : nullptr));
  return {{out, sibling(out, ".csv")}, false, std::string("pass: ") + (j["pass"].get<bool>() ? "true" : "false")};
}

Execution run_wlsc(const json& cfg) {
  const json fj = read_json(cfg.at("functional").get<std::string>());
  require(fj.is_object() && fj.contains("v"), "functional needs at least \"v\"");
  const auto mesh = make_mesh(fj.value("mesh", std::string("ball:h=0.25")), 2);
  const int n = mesh->dim;
  const Functional F{mesh, make_weight(fj.value("g", json(1.0))), make_integrand(fj.at("v"), n, n)};
  std::vector<Point> points;
  for (const auto& p : read_json(cfg.at("points").get<std::string>())) points.push_back(point_from_json(p, n));
  std::vector<Profile> profiles;
  for (const auto& p : read_json(cfg.at("profiles").get<std::string>())) profiles.push_back(profile_from_json(p, n));
  ProbeOptions o;
  o.model = {cfg.at("ha").get<double>(), cfg.at("octaves").get<int>(), cfg.at("lpo").get<int>()};
  o.compatible = cfg.at("compatible").get<bool>();
  o.classify_octaves = cfg.at("classify_octaves").get<int>();
  o.classify_h = cfg.at("classify_h").get<double>();
  o.k_max = cfg.at("k_max").get<int>();
  o.tol = cfg.at("tol").get<double>();
  o.oracle_h = cfg.at("oracle_h").get<double>();
  o.solver = solver_options(cfg);
  const WlscVerdict w = wlsc_probe(F, points, profiles, o);
  const fs::path out = cfg.at("out").get<std::string>();
  write_json(out, wlsc_to_json(w));
  write_text(sibling(out, ".csv"), wlsc_csv(w));
  return {{out, sibling(out, ".csv")}, false, "verdict: " + w.verdict};
}

/// a(x) = vector (1 + tilt . x) weight(x).
VectorField vector_field(const json& j) {
  const Point vec = point_from_json(j.value("vector", json::array({1, 0, 0})), 3);
  const Point tilt = j.contains("tilt") ? point_from_json(j.at("tilt"), 3) : Point{};
  const SpatialFunction w = make_weight(j.value("weight", json(1.0)));
  return [=](const Point& x) { return scale(vec, (1.0 + dot(tilt, x, 3)) * w(x)); };
}

Execution run_cof_check(const json& cfg) {
  const SequenceFile f = load_sequence(cfg, "seq");
  const GradientSequence seq(f.spec, f.mesh);
  const json& d = f.doc;
  const json a_spec = d.value("a", json{{"vector", {1, 0, 0}},
                                         {"weight", {{"kind", "plateau"}, {"center", {0, 0, 0}}, {"r1", 0.5}, {"r2", 0.9}}}});
  VectorField rho;
  const json r = d.value("rho", json(f.mesh->shape.is_half() ? "normal" : "radial"));
  if (r.is_string() && r.get<std::string>() == "radial") {
    rho = [](const Point& x) { return x; };
  } else if (r.is_string() && r.get<std::string>() == "normal") {
    require(f.mesh->shape.is_half(), "rho = normal needs a half-ball mesh");
    const Point n = f.mesh->shape.rho;
    rho = [n](const Point&) { return n; };
  } else {
    const Point c = point_from_json(r, 3);
    rho = [c](const Point&) { return c; };
  }
  const CofactorContraction h{vector_field(a_spec), rho};
  std::vector<SpatialFunction> gs;
  for (const auto& g : d.value("g", json::array({1.0}))) gs.push_back(make_weight(g));
  const std::vector<int> ladder = !cfg.at("ladder").is_null() ? int_list(cfg.at("ladder"))
                                  : d.contains("ladder")      ? int_list(d.at("ladder"))
                                                              : std::vector<int>{4, 8, 16, 32};
  CofactorCheckOptions co;
  co.rel_tol = cfg.at("rel_tol").get<double>();
  co.quad_order = cfg.at("quad_order").get<int>();
  const CofactorReport rep = cofactor_weak_continuity_check(h, seq, gs, ladder, co);
  const fs::path out = cfg.at("out").get<std::string>();
  write_text(out, cofactor_report_to_csv(rep));
  json j = cofactor_report_to_json(rep);
  j["mesh"] = f.mesh->spec;
  write_json(sibling(out, ".json"), j);
  return {{out, sibling(out, ".json")}, false, std::string("pass: ") + (rep.pass ? "true" : "false")};
}

}  // namespace

const std::vector<CommandDesc>& command_table() {
  static const std::vector<CommandDesc> table = build_table();
  return table;
}

const CommandDesc& find_command(const std::string& name) {
  for (const auto& c : command_table())
    if (c.name == name) return c;
  throw ValidationError("unknown command: " + name);
}

Execution execute(const std::string& command, const json& config) {
  try {
    if (command == "relax") return run_relax(config);
    if (command == "qcb") return run_qcb(config);
    if (command == "generate") return run_generate(config);
    if (command == "estimate") return run_estimate(config);
    if (command == "check") return run_check(config);
    if (command == "wlsc") return run_wlsc(config);
    if (command == "cof-check") return run_cof_check(config);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad config or input file: ") + e.what());
  }
  throw ValidationError("unknown command: " + command);
}

}  // namespace qcb::cli
