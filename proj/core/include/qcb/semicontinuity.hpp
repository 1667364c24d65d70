#pragma once

// Integral functionals I(u) = ∫ g v(∇u) along gradient sequences: boundary
// probes for weak lower semicontinuity, weak continuity of cofactor
// contractions, and the concentration scaling identity.

#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qcb/ladder.hpp"
#include "qcb/measures.hpp"
#include "qcb/relaxation.hpp"
#include "qcb/sequences.hpp"
#include "qcb/spatial.hpp"

namespace qcb {

struct Functional {
  MeshPtr mesh;
  SpatialFunction g;
  Integrand v;
};

/// g >= 0 at every vertex and g > 1e-9 at every boundary vertex.
void validate(const Functional& F);

/// Σ_c v(G_c) ∫_c g, with a cubic rule for the weight.
double evaluate_functional(const Functional& F, const GradientField& field);

struct ProbeOptions {
  /// Flat-boundary model around each x0: a graded half-ball of radius 1.
  ShellOptions model{0.125, 8, 4};
  /// Classify on the same shell with fewer octaves, so that the witness
  /// replays exactly on the model; otherwise on a uniform half-ball.
  bool compatible = true;
  int classify_octaves = 2;
  double classify_h = 0.25;
  int k_max = 64;
  double tol = 1e-6;
  double oracle_h = 0.02;  ///< half-ball quadrature for the predicted gap
  SolverOptions solver{};
};

struct ScanEntry {
  Point x{};
  Point rho{};
  Classification classification = Classification::Inconclusive;
  double value = 0.0;  ///< best normalized energy of the classification run
  double eps = 0.0;
  std::optional<ScalingEvidence> evidence;
};

struct GapRecord {
  std::size_t point = 0;
  std::string profile;
  bool witness = false;     ///< the replayed negative-energy minimizer
  std::vector<int> ladder;
  std::vector<double> gaps;  ///< I(u_k) - I(0)
  LadderLimit limit;
  double liminf = 0.0;
  double predicted = 0.0;    ///< g(x0) ∫_{half-ball} v_inf(∇u)
  bool monotone = true;      ///< at most one sign flip among the increments
  nlohmann::json sequence;   ///< the tested sequence, model mesh included
};

struct WlscVerdict {
  std::vector<ScanEntry> boundary_scan;
  std::vector<GapRecord> liminf_gap;
  std::string verdict;  ///< "consistent-with-wlsc" | "wlsc-violated" | "inconclusive"
  std::optional<std::size_t> witness;  ///< index into liminf_gap
  double tolerance = 0.0;
  std::vector<std::string> notices;
};

WlscVerdict wlsc_probe(const Functional& F, std::span<const Point> boundary_points, std::span<const Profile> profiles,
                       const ProbeOptions& options = {});

/// Boundary atoms of an estimate carrying mass above atom_tol.
std::vector<Point> boundary_points_with_mass(const DpmEstimate& est, double atom_tol = 1e-6);

struct CofactorRow {
  std::string g;
  std::vector<double> values;     ///< ∫ g h(x, ∇u_k)
  LadderLimit limit;
  double reference = 0.0;         ///< ∫ g h(x, ∇u) at the weak limit u
  std::vector<double> gaps;       ///< |values_k - reference|
  double final_gap = 0.0;
  double scale = 0.0;             ///< sup_k ∫ g |a| |rho| |Cof ∇u_k|
  bool monotone = true;           ///< gaps decrease along the ladder
  bool pass = true;
};

struct CofactorReport {
  std::vector<int> ladder;
  std::vector<CofactorRow> rows;
  double rel_tol = 1e-2;
  bool pass = true;
};

struct CofactorCheckOptions {
  double rel_tol = 1e-2;
  double normal_tol = 1e-6;  ///< |rho - outer normal| where a does not vanish
  int quad_order = 3;
};

/// n = m = 3, p = 2. rho must be the outer normal at boundary vertices where a != 0.
CofactorReport cofactor_weak_continuity_check(const CofactorContraction& h, const GradientSequence& seq,
                                              std::span<const SpatialFunction> g_list, std::span<const int> ladder,
                                              const CofactorCheckOptions& options = {});

struct ScalingIdentity {
  int k = 1;
  double value = 0.0;     ///< ∫_Omega v(∇u_k)
  double oracle = 0.0;    ///< ∫_{B ∩ {rho.y < 0}} v(∇u)
  double residual = 0.0;
  double relative = 0.0;  ///< residual / |oracle|, or the residual when the oracle vanishes
};

/// p = n, v positively p-homogeneous; mesh is a half-ball about the origin.
ScalingIdentity scaling_identity_check(const Profile& profile, const Integrand& v, const MeshPtr& mesh, int k,
                                       double oracle_h = 0.02);

nlohmann::json wlsc_to_json(const WlscVerdict& w);
nlohmann::json cofactor_report_to_json(const CofactorReport& r);
/// One line per (g, k): g_index,g,k,value,reference,gap.
std::string cofactor_report_to_csv(const CofactorReport& r);

}  // namespace qcb
