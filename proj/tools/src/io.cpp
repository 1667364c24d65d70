#include "io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qcb/catalog.hpp"
#include "qcb/errors.hpp"

namespace qcb::cli {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), "cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json field_to_json(const DisplacementField& u) {
  const DomainMesh& mesh = *u.mesh;
  return {{"mesh", mesh.spec.empty() ? json::parse(mesh_to_json(mesh)) : json(mesh.spec)},
          {"m", u.m},
          {"values", u.values}};
}

json relaxation_to_json(const RelaxationResult& r) {
  json j{{"value", r.value},
         {"classification", to_string(r.classification)},
         {"eps_cls", r.eps_cls},
         {"nonconvergence", r.nonconvergence},
         {"resolution_note", r.resolution_note},
         {"trace", r.trace},
         {"minimizer", field_to_json(r.minimizer)}};
  json ev = json::object();
  if (r.evidence)
    ev = {{"energy", r.evidence->energy},
          {"ratio_2", r.evidence->ratio_2},
          {"ratio_4", r.evidence->ratio_4},
          {"max_rel_error", r.evidence->max_rel_error},
          {"confirmed", r.evidence->confirmed}};
  if (r.witness) ev["witness"] = field_to_json(*r.witness);
  j["evidence"] = ev;
  return j;
}

json qcb_verdict_to_json(const Verdict& v, int m) {
  json j{{"outcome", v.outcome},
         {"margin", v.margin},
         {"q", point_to_json(v.q, m)},
         {"trials", v.trials},
         {"note", v.note}};
  if (v.witness) j["witness"] = field_to_json(*v.witness);
  return j;
}

std::string trace_csv(const std::vector<double>& trace) {
  std::string s = "iteration,energy\n";
  for (std::size_t i = 0; i < trace.size(); ++i) s += std::to_string(i) + "," + num(trace[i]) + "\n";
  return s;
}

std::string runs_csv(const std::vector<RunRecord>& runs) {
  std::string s = "start,kind,value,iterations,converged,stalled,unbounded\n";
  for (const auto& r : runs)
    s += std::to_string(r.start) + "," + r.kind + "," + num(r.value) + "," + std::to_string(r.iterations) + "," +
         std::to_string(r.converged) + "," + std::to_string(r.stalled) + "," + std::to_string(r.unbounded) + "\n";
  return s;
}

json gradient_field_to_json(const DomainMesh& mesh, const GradientField& G, int k) {
  json cells = json::array();
  for (const auto& g : G) cells.push_back(matrix_to_json(g));
  return {{"k", k},
          {"mesh", mesh.spec},
          {"m", G.empty() ? 0 : G[0].rows},
          {"n", mesh.dim},
          {"gradients", cells}};
}

std::string gradient_field_csv(const DomainMesh& mesh, const GradientField& G) {
  std::string s = "cell,volume";
  for (int i = 0; i < mesh.dim; ++i) s += ",x" + std::to_string(i);
  if (!G.empty())
    for (int a = 0; a < G[0].rows; ++a)
      for (int b = 0; b < G[0].cols; ++b) s += ",s" + std::to_string(a) + std::to_string(b);
  s += "\n";
  for (std::size_t c = 0; c < G.size(); ++c) {
    s += std::to_string(c) + "," + num(mesh.volumes[c]);
    const Point x = mesh.centroid(c);
    for (int i = 0; i < mesh.dim; ++i) s += "," + num(x[i]);
    for (int a = 0; a < G[c].rows; ++a)
      for (int b = 0; b < G[c].cols; ++b) s += "," + num(G[c](a, b));
    s += "\n";
  }
  return s;
}

std::string pairings_csv(const DpmEstimate& est) {
  std::string s = "g,v,g_name,v_name,k,value,limit,limit_error,cauchy\n";
  for (const auto& p : est.pairings)
    for (std::size_t i = 0; i < est.ladder.size(); ++i)
      s += std::to_string(p.g) + "," + std::to_string(p.v) + "," + est.g_names[p.g] + "," +
           est.integrands[p.v].name() + "," + std::to_string(est.ladder[i]) + "," + num(p.values[i]) + "," +
           num(p.limit.value) + "," + num(p.limit.error) + "," + std::to_string(p.limit.cauchy) + "\n";
  return s;
}

std::string atoms_csv(const DpmEstimate& est) {
  std::string s = "atom";
  for (int i = 0; i < est.n; ++i) s += ",x" + std::to_string(i);
  s += ",mass,mass_error,boundary,normalization";
  for (std::size_t v = 0; v < est.integrands.size(); ++v) s += ",moment_" + std::to_string(v);
  s += "\n";
  for (std::size_t a = 0; a < est.atoms.size(); ++a) {
    const Atom& at = est.atoms[a];
    s += std::to_string(a);
    for (int i = 0; i < est.n; ++i) s += "," + num(at.location[i]);
    s += "," + num(at.mass) + "," + num(at.mass_error) + "," + std::to_string(at.boundary) + "," +
         num(a < est.sphere_normalization.size() ? est.sphere_normalization[a] : NAN);
    for (std::size_t v = 0; v < est.integrands.size(); ++v)
      s += "," + num(a < est.sphere_moments.size() ? est.sphere_moments[a][v] : NAN);
    s += "\n";
  }
  return s;
}

namespace {

json nullable(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json nullable(const std::vector<double>& xs) {
  json a = json::array();
  for (double x : xs) a.push_back(nullable(x));
  return a;
}

}  // namespace

json validation_to_json(const DpmValidation& v) {
  json checks = json::array();
  for (const auto& c : v.checks)
    checks.push_back({{"name", c.name},
                      {"pass", c.pass},
                      {"gating", c.gating},
                      {"worst", nullable(c.worst)},
                      {"tolerance", c.tolerance},
                      {"witness", c.witness}});
  return {{"pass", v.pass}, {"checks", checks}};
}

json necessary_to_json(const NecessaryConditionsReport& r) {
  json verdicts = json::array();
  for (const auto& c : r.verdicts)
    verdicts.push_back({{"name", c.name},
                        {"pass", c.pass},
                        {"worst", nullable(c.worst)},
                        {"tolerance", c.tolerance},
                        {"checked", c.checked},
                        {"skipped", c.skipped}});
  json jensen = json::array(), interior = json::array(), boundary = json::array();
  for (const auto& row : r.jensen_margin) jensen.push_back(nullable(row));
  for (const auto& row : r.interior_margin) interior.push_back(nullable(row));
  for (const auto& row : r.boundary_margin) boundary.push_back(nullable(row));
  return {{"pass", r.pass},
          {"verdicts", verdicts},
          {"barycenter_residual", nullable(r.barycenter_residual)},
          {"jensen_margin", jensen},
          {"interior_margin", interior},
          {"boundary_margin", boundary},
          {"notices", r.notices}};
}

std::string checks_csv(const DpmValidation* v, const NecessaryConditionsReport* r) {
  std::string s = "section,check,pass,gating,worst,tolerance,checked,skipped,witness\n";
  auto quoted = [](const std::string& w) {
    std::string q = "\"";
    for (char c : w) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  if (v)
    for (const auto& c : v->checks)
      s += "validator," + c.name + "," + std::to_string(c.pass) + "," + std::to_string(c.gating) + "," +
           num(c.worst) + "," + num(c.tolerance) + ",,," + quoted(c.witness) + "\n";
  if (r)
    for (const auto& c : r->verdicts)
      s += "necessary," + c.name + "," + std::to_string(c.pass) + ",1," + num(c.worst) + "," + num(c.tolerance) +
           "," + std::to_string(c.checked) + "," + std::to_string(c.skipped) + ",\n";
  return s;
}

std::string wlsc_csv(const WlscVerdict& w) {
  std::string s = "point,profile,witness,k,gap,predicted,liminf\n";
  for (const auto& r : w.liminf_gap)
    for (std::size_t i = 0; i < r.ladder.size(); ++i)
      s += std::to_string(r.point) + "," + r.profile + "," + std::to_string(r.witness) + "," +
           std::to_string(r.ladder[i]) + "," + num(r.gaps[i]) + "," + num(r.predicted) + "," + num(r.liminf) + "\n";
  return s;
}

}  // namespace qcb::cli
