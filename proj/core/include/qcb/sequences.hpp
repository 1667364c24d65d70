#pragma once

// Explicit gradient sequences indexed by k: point concentrations
// u_k(x) = k^{n/p-1} u(k(x - x0)), rank-one laminates, and disjoint
// superpositions of those.

#include <memory>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qcb/domains.hpp"

namespace qcb {

using GradientField = std::vector<Matrix>;

/// Zero-trace field on the unit ball used as the concentration shape.
class Profile {
 public:
  enum class Kind { Bump, AffineBump, Field };

  /// u(y) = b max(0, 1 - |y|)^2.
  static Profile bump(const Point& b, int m, int n);
  /// u(y) = M y max(0, 1 - |y|^2)^2.
  static Profile affine_bump(const Matrix& M);
  /// P1 field on a ball or half-ball mesh; must vanish on the curved boundary.
  static Profile field(const DisplacementField& u);

  Kind kind() const { return kind_; }
  int m() const { return m_; }
  int n() const { return n_; }
  std::string name() const;
  /// Zero outside the unit ball and outside the field's mesh.
  Point value(const Point& y) const;
  /// Analytic for the built-in shapes, cellwise constant for P1 fields.
  Matrix gradient(const Point& y) const;
  const Point& b() const { return b_; }
  const Matrix& M() const { return M_; }
  const DisplacementField* field_data() const { return field_.get(); }

 private:
  Kind kind_ = Kind::Bump;
  int m_ = 1, n_ = 1;
  Point b_{};
  Matrix M_;
  std::shared_ptr<const DisplacementField> field_;
  std::shared_ptr<const PointLocator> locator_;
};

struct SequenceSpec {
  enum class Kind { Zero, Concentration, Laminate, Superposition };
  Kind kind = Kind::Zero;
  int m = 1, n = 1;
  // Concentration
  std::shared_ptr<const Profile> profile;
  Point x0{};
  double p = 2.0;
  // Laminate: base + A on a volume fraction lambda of each period, base + B elsewhere.
  Matrix A, B, base;
  double lambda = 0.5;
  Point direction{};
  // Superposition
  std::vector<SequenceSpec> parts;
};

std::string to_string(SequenceSpec::Kind k);

nlohmann::json profile_to_json(const Profile& profile);
/// {"type": "bump" | "affine-bump" | "field", ...}; n_default fills a missing "n".
Profile profile_from_json(const nlohmann::json& j, int n_default = 2);

SequenceSpec zero_sequence(int m, int n);
SequenceSpec concentration(const Profile& profile, const Point& x0, double p);
SequenceSpec laminate(const Matrix& A, const Matrix& B, double lambda, const Point& direction,
                      const Matrix& base = Matrix());
SequenceSpec superposition(std::vector<SequenceSpec> parts);

/// Throws ValidationError on malformed specs (rank-one test at 1e-10, unit direction, lambda in (0,1)).
void validate(const SequenceSpec& spec);

nlohmann::json sequence_to_json(const SequenceSpec& spec);
SequenceSpec sequence_from_json(const nlohmann::json& j);

/// Concentration point read off a spec, with its boundary status on a mesh.
struct CandidateAtom {
  Point location{};
  bool boundary = false;
  Point normal{};
  std::size_t leaf = 0;  ///< index into GradientSequence::leaves()
};

/// Weighted point masses of a spatially homogeneous Young measure.
using YoungAtoms = std::vector<std::pair<double, Matrix>>;

class GradientSequence {
 public:
  GradientSequence(SequenceSpec spec, MeshPtr mesh);

  const SequenceSpec& spec() const { return spec_; }
  const MeshPtr& mesh() const { return mesh_; }
  int m() const { return spec_.m; }
  int n() const { return spec_.n; }
  double p() const;

  /// Per-cell gradients of u_k; ResolutionError when a concentration support
  /// B(x0, 1/k) meets cells wider than 1/(4k).
  GradientField materialize(int k) const;
  /// All ladder entries, computed in parallel.
  std::vector<GradientField> materialize(std::span<const int> ladder) const;
  /// Contribution of one leaf spec.
  GradientField materialize_leaf(std::size_t leaf, int k) const;
  GradientField weak_limit() const;

  bool resolvable(int k) const;
  /// Largest power of two <= k_max that is resolvable (0 if none).
  int max_resolvable(int k_max) const;

  const std::vector<SequenceSpec>& leaves() const { return leaves_; }
  std::vector<CandidateAtom> atoms() const;
  /// Structural Young measure: lambda delta_{base+A} + (1-lambda) delta_{base+B}
  /// for a laminate, delta_0 for concentrations.
  YoungAtoms young_measure() const;

 private:
  SequenceSpec spec_;
  MeshPtr mesh_;
  std::vector<SequenceSpec> leaves_;
};

/// Nodal values of u_k for a concentration leaf.
DisplacementField concentration_field(const SequenceSpec& leaf, const MeshPtr& mesh, int k);

/// Integral of v(grad u) over the half-ball {rho . y < 0} of the unit ball,
/// by cubic quadrature on a half-ball mesh of size h.
double half_ball_integral(const Profile& profile, const std::function<double(const Matrix&)>& v, const Point& rho,
                          double h);

}  // namespace qcb
