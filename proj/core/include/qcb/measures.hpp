#pragma once

// DiPerna-Majda pairs (sigma, nu-hat) of synthetic gradient sequences, known
// through their action on a finite dictionary of test pairs (g, v).

#include <functional>
#include <limits>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "qcb/ladder.hpp"
#include "qcb/relaxation.hpp"
#include "qcb/sequences.hpp"
#include "qcb/spatial.hpp"

namespace qcb {

struct TestDictionary {
  std::vector<SpatialFunction> g;
  std::vector<Integrand> v;
};

/// g = {1}; v = {1 + |s|^p, |s|^p, double-well between -+e11 (p = 2), det (m = n = p),
/// s_11}. Entries that do not fit (m, n, p) are left out.
TestDictionary default_dictionary(int m, int n, double p);

struct Pairing {
  std::size_t g = 0, v = 0;
  std::vector<double> values;  ///< one per ladder entry
  LadderLimit limit;
};

struct Atom {
  Point location{};
  double mass = 0.0;
  double mass_error = 0.0;
  bool boundary = false;
  Point normal{};
};

struct DpmEstimate {
  int m = 1, n = 1;
  double p = 2.0;
  std::vector<int> ladder;
  std::vector<std::string> g_names, g_specs;
  std::vector<Integrand> integrands;
  std::vector<Pairing> pairings;  ///< g-major over (g, v)
  LadderLimit total_mass;         ///< limit of the integral of 1 + |grad u_k|^p
  std::vector<double> cell_volumes;
  std::vector<Point> cell_centroids;
  std::vector<double> sigma_ac_density;                ///< empirical, per cell
  std::vector<Atom> atoms;
  std::vector<std::vector<double>> sphere_moments;     ///< [atom][v]
  std::vector<double> sphere_normalization;            ///< [atom], moment of v0 = 1
  std::vector<std::vector<double>> young_moments;      ///< [v][cell], integral of v0 d nu-hat_x
  std::vector<double> young_inverse_density;           ///< [cell], moment of 1/(1+|s|^p)
  std::vector<double> young_normalization;             ///< [cell], moment of v0 = 1
  std::vector<Matrix> young_barycenter;                ///< [cell], integral of s/(1+|s|^p) d nu-hat_x
  std::vector<Matrix> weak_limit;                      ///< [cell]
  std::vector<std::string> notices;
};

struct EstimateOptions {
  double density_bin = 0.25;  ///< side of the cubes over which sigma_ac is averaged
};

/// Pairings on the ladder plus atoms at the sequence's concentration points.
DpmEstimate estimate_pairings(const GradientSequence& seq, const TestDictionary& dict, std::span<const int> ladder,
                              const EstimateOptions& options = {});

struct MomentSplit {
  std::vector<std::vector<double>> young_moments;
  std::vector<std::vector<double>> sphere_moments;
  std::vector<std::string> non_cauchy;  ///< pairings whose increments failed to shrink
};
MomentSplit split_oscillation_concentration(const DpmEstimate& est);

struct CheckResult {
  std::string name;
  bool pass = true;
  bool gating = true;  ///< informational checks do not affect the overall verdict
  double worst = 0.0;
  double tolerance = 0.0;
  std::string witness;
};

struct DpmValidation {
  std::vector<CheckResult> checks;
  bool pass = true;
};

/// Positivity of sigma, the density formula, and normalization of nu-hat.
DpmValidation validate_dpm(const DpmEstimate& est, double tol = 1e-3);

struct ConditionOptions {
  double barycenter_tol = 1e-3;
  double jensen_tol = 1e-3;
  double atom_tol = 1e-6;
  double envelope_h = 0.25;   ///< ball mesh used for Qv at weak-limit values
  double boundary_h = 0.25;   ///< half-ball mesh used for Q_{b,rho} v_inf(0)
  SolverOptions solver{};
};

struct ConditionVerdict {
  std::string name;
  bool pass = true;
  double worst = std::numeric_limits<double>::infinity();
  double tolerance = 0.0;
  int checked = 0;
  int skipped = 0;
};

struct NecessaryConditionsReport {
  std::vector<double> barycenter_residual;                 ///< [cell]
  std::vector<std::vector<double>> jensen_margin;          ///< [v][cell], NaN when skipped
  std::vector<std::vector<double>> interior_margin;        ///< [atom][v], NaN when skipped
  std::vector<std::vector<double>> boundary_margin;        ///< [atom][v], NaN when skipped
  std::vector<ConditionVerdict> verdicts;                  ///< firstmoment, qc, interior, boundary
  std::vector<std::string> notices;
  bool pass = true;
};

NecessaryConditionsReport check_necessary_conditions(const DpmEstimate& est, const ConditionOptions& options = {});

/// Tail integrals T(K, k) of h(x, grad u_k) >= 0 over {h >= K}.
struct TailReport {
  std::vector<double> K;
  std::vector<int> ladder;
  std::vector<std::vector<double>> tails;  ///< [K][k]
  std::vector<double> sup_tail;            ///< [K], sup over k
  double scale = 0.0;                      ///< sup_k of the integral of h
  double tolerance = 0.0;
  bool equiintegrable = true;
  std::string verdict;                     ///< "equiintegrable" | "concentrating"
};

using PointIntegrand = std::function<double(const Point& x, const Matrix& s)>;

TailReport equiintegrability_diagnostic(const GradientSequence& seq, const PointIntegrand& h, std::span<const double> K,
                                        std::span<const int> ladder, double rel_tol = 1e-6);

/// Concentration verdicts must co-occur with a nonzero sphere moment of the
/// same integrand at some atom, and equiintegrable ones with none.
bool tails_match_sphere_moments(const TailReport& tails, const DpmEstimate& est, std::size_t v, double tol = 1e-6);

nlohmann::json dpm_to_json(const DpmEstimate& est);
DpmEstimate dpm_from_json(const nlohmann::json& j);

}  // namespace qcb
