#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace siws {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Person-to-person layer: infection rates beta (n x n) and recovery rates delta.
struct PopulationLayer {
  Matrix beta;
  Vector delta;
};

// Resource layer. `alpha` is the flow matrix A_w: off-diagonal entries are
// the flow rates between resource nodes, the diagonal holds the outflow
// (minus the column sum of the off-diagonal part under regime A2).
struct InfrastructureLayer {
  Matrix alpha;
  Vector delta_w;
};

// Cross-layer rates: beta_w (n x m) resource-to-person, c_w (m x n) person-to-resource.
struct CouplingLayer {
  Matrix beta_w;
  Matrix c_w;
};

enum class Regime { A1, A2 };

const char* to_string(Regime regime);

// Parameter bundle with the assembled compact form
//
//   B_f = [ B    B_w              ]     D_f = diag(D, D_w - diag(A_w))
//         [ C_w  A_w - diag(A_w)  ]
//
// Only dimensions are checked here. The observability analysis works on
// parameter sets (with a free A_w) that do not satisfy either regime, so the
// sign and regime checks live in validate_model().
class SiwsSystem {
 public:
  SiwsSystem(PopulationLayer pop, InfrastructureLayer infra, CouplingLayer coupling);

  int n() const { return static_cast<int>(pop_.delta.size()); }
  int m() const { return static_cast<int>(infra_.delta_w.size()); }
  int dim() const { return n() + m(); }

  const PopulationLayer& pop() const { return pop_; }
  const InfrastructureLayer& infra() const { return infra_; }
  const CouplingLayer& coupling() const { return coupling_; }

  const Matrix& b_f() const { return b_f_; }
  const Vector& d_f_diag() const { return d_f_diag_; }
  Matrix d_f() const { return d_f_diag_.asDiagonal(); }

 private:
  PopulationLayer pop_;
  InfrastructureLayer infra_;
  CouplingLayer coupling_;
  Matrix b_f_;
  Vector d_f_diag_;
};

// A SiwsSystem whose parameters passed the sign checks and the inequalities
// of the requested regime. Immutable once constructed.
class LayeredModel : public SiwsSystem {
 public:
  Regime regime() const { return regime_; }
  bool satisfies_a1() const { return satisfies_a1_; }
  bool satisfies_a2() const { return satisfies_a2_; }

 private:
  friend LayeredModel validate_model(PopulationLayer, InfrastructureLayer, CouplingLayer, Regime);
  LayeredModel(SiwsSystem sys, Regime regime, bool a1, bool a2)
      : SiwsSystem(std::move(sys)), regime_(regime), satisfies_a1_(a1), satisfies_a2_(a2) {}

  Regime regime_;
  bool satisfies_a1_;
  bool satisfies_a2_;
};

// Throws Error{DimensionMismatch | NegativeEntry | RegimeViolation}.
LayeredModel validate_model(PopulationLayer pop, InfrastructureLayer infra,
                            CouplingLayer coupling, Regime regime);

// Lists every failed inequality of a regime; empty when the regime holds.
// Sign violations (negative rates) are not repeated here.
std::vector<std::string> regime_violations(const SiwsSystem& sys, Regime regime);

// z = (x, w): infected fractions and contamination levels.
struct State {
  Vector x;
  Vector w;

  Vector stacked() const;
  static State split(const Vector& z, int n);
  bool in_domain() const;
};

struct Projection {
  State state;
  // Largest absolute change applied to any component.
  double clamp = 0.0;
};

// Clamps x into [0,1]^n and w into [0,inf)^m.
Projection project_to_domain(const Vector& z, int n);

}  // namespace siws
