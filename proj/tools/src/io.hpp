#pragma once

// File helpers and the JSON/CSV renderings of core results.

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>

#include "qcb/measures.hpp"
#include "qcb/relaxation.hpp"
#include "qcb/semicontinuity.hpp"
#include "qcb/sequences.hpp"

namespace qcb::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

json read_json(const fs::path& path);
std::string read_text(const fs::path& path);
/// Creates parent directories; JSON is indented by 2 and newline-terminated.
void write_json(const fs::path& path, const json& j);
void write_text(const fs::path& path, const std::string& text);

/// Shortest decimal with 17 significant digits ("%.17g"); NaN and inf spelled out.
std::string num(double x);

json field_to_json(const DisplacementField& u);
json relaxation_to_json(const RelaxationResult& r);
json qcb_verdict_to_json(const Verdict& v, int m);
/// iteration,energy
std::string trace_csv(const std::vector<double>& trace);
/// start,kind,value,iterations,converged,stalled,unbounded
std::string runs_csv(const std::vector<RunRecord>& runs);

json gradient_field_to_json(const DomainMesh& mesh, const GradientField& G, int k);
/// cell,volume,x0..x{n-1},s00..s{m-1}{n-1}
std::string gradient_field_csv(const DomainMesh& mesh, const GradientField& G);

/// g,v,g_name,v_name,k,value,limit,limit_error,cauchy
std::string pairings_csv(const DpmEstimate& est);
/// atom,x0..,mass,mass_error,boundary,normalization,moment_0..
std::string atoms_csv(const DpmEstimate& est);

json validation_to_json(const DpmValidation& v);
json necessary_to_json(const NecessaryConditionsReport& r);
/// section,check,pass,gating,worst,tolerance,checked,skipped,witness
std::string checks_csv(const DpmValidation* v, const NecessaryConditionsReport* r);

/// point,profile,witness,k,gap,predicted,liminf
std::string wlsc_csv(const WlscVerdict& w);

}  // namespace qcb::cli
