#pragma once

// Direct minimization of |Omega|^-1 ∫ v(s0 + ∇u) over P1 fields: quasiconvex
// envelopes (u = 0 on the whole boundary) and boundary quasiconvexifications
// (u free on the flat part Gamma).

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qcb/domains.hpp"
#include "qcb/integrands.hpp"

namespace qcb {

enum class Classification { Finite, Zero, MinusInfinity, Inconclusive };
std::string to_string(Classification c);

struct SolverOptions {
  int multistart = 8;
  int max_iterations = 400;
  double grad_tol = 1e-10;   ///< on the normalized energy gradient (inf norm)
  double step_tol = 1e-13;
  int lbfgs_memory = 8;
  std::uint64_t seed = 0;
};

struct RelaxationProblem {
  Integrand v;
  Matrix s0;
  MeshPtr mesh;
  SolverOptions options;
};

struct RunRecord {
  int start = 0;
  std::string kind;
  double value = 0.0;      ///< normalized final energy
  int iterations = 0;
  bool converged = false;
  bool stalled = false;
  bool unbounded = false;  ///< stopped at the stop-below threshold
};

struct ScalingEvidence {
  double energy = 0.0;          ///< normalized energy of the witness
  double ratio_2 = 0.0;         ///< E(2u) / (2^p E(u))
  double ratio_4 = 0.0;         ///< E(4u) / (4^p E(u))
  double max_rel_error = 0.0;
  bool confirmed = false;
};

struct RelaxationResult {
  double value = 0.0;               ///< min over starts of the normalized energy
  DisplacementField minimizer;
  std::vector<double> trace;        ///< per-iteration energies of the winning run
  Classification classification = Classification::Finite;
  double eps_cls = 0.0;
  std::optional<DisplacementField> witness;
  std::optional<ScalingEvidence> evidence;
  std::vector<RunRecord> runs;
  std::vector<DisplacementField> run_minimizers;
  bool nonconvergence = false;      ///< some start stalled in its line search
  std::string resolution_note;      ///< "upper bound at resolution ..."
};

/// Discrete energy |Omega|^-1 (∫ v(s0 + ∇u) - ∫_Gamma q·u), optionally with its
/// nodal gradient.
class DiscreteEnergy {
 public:
  DiscreteEnergy(Integrand v, Matrix s0, MeshPtr mesh, int m, std::optional<Point> q = std::nullopt);
  double value(std::span<const double> nodal) const;
  double value_and_gradient(std::span<const double> nodal, std::span<double> grad) const;
  double volume() const { return volume_; }

 private:
  Integrand v_;
  Matrix s0_;
  MeshPtr mesh_;
  int m_;
  std::optional<Point> q_;
  std::vector<double> gamma_weight_;  ///< ∫_Gamma lambda_v dS per vertex
  double volume_;
};

/// Qv(s0) upper bound on a mesh with fully pinned boundary.
RelaxationResult quasiconvex_envelope(const Integrand& v, const Matrix& s0, const RelaxationProblem& problem);
/// Q_{b,rho} v(0) on a half-ball mesh with the same rho; v positively p-homogeneous.
RelaxationResult boundary_quasiconvexification(const Integrand& v, const Point& rho, const RelaxationProblem& problem);

struct LaminationBound {
  double value = 0.0;
  Matrix a_outer_n;   ///< rank-one jump a ⊗ n
  double lambda = 0.0;
};
/// min over rank-one a ⊗ n and lambda of lambda v(s0 + (1-lambda) a⊗n) + (1-lambda) v(s0 - lambda a⊗n);
/// an upper bound on Qv(s0) (first-order laminates).
LaminationBound lamination_bound(const Integrand& v, const Matrix& s0, int directions = 24);

struct Verdict {
  std::string outcome;          ///< "falsified" | "unfalsified" | classification names
  double margin = 0.0;          ///< most negative normalized defect found
  Point q{};
  int trials = 0;
  std::optional<DisplacementField> witness;
  std::string note;
};

/// Searches for a field violating
///   ∫_Gamma q·u + v(s0)|Omega| <= ∫ v(s0 + ∇u),  q = (∂v/∂s)(s0) rho.
Verdict qcb_test(const Integrand& v, const Matrix& s0, const Point& rho, int trials, std::uint64_t seed,
                 MeshPtr mesh, const SolverOptions& options = {});

/// Scale used by the classification tolerance eps_cls = 1e-6 * scale.
double classification_scale(const Integrand& v);

/// E(lambda u) = lambda^p E(u) probe at lambda in {2, 4}.
ScalingEvidence scaling_probe(const DiscreteEnergy& energy, const DisplacementField& u, double p);

}  // namespace qcb
