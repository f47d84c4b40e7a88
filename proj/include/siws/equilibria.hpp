#pragma once

#include "siws/error.hpp"
#include "siws/model.hpp"
#include "siws/spectral.hpp"

#include <optional>
#include <string>
#include <vector>

namespace siws {

enum class LocalVerdict { LocallyExpStable, Unstable, Marginal };
const char* to_string(LocalVerdict v);

inline constexpr double kMarginBand = 1e-9;

struct JacobianReport {
  Matrix j_matrix;
  double s_value = 0.0;
  LocalVerdict verdict = LocalVerdict::Marginal;
};

// Linearization of the layered dynamics at (x, w):
//   [ B - X B - D - F1 - F2   (I - X) B_w ]
//   [ C_w                     A_w - D_w   ]
// with F1 = diag(B x), F2 = diag(B_w w).
JacobianReport jacobian(const SiwsSystem& sys, const State& z);

enum class HealthyVerdict { LocallyExpStable, GloballyStable, Unstable, Unclassified };
const char* to_string(HealthyVerdict v);

// Which result decided the healthy-state verdict.
enum class HealthyRule {
  DecoupledStable,    // B_w = 0 or C_w = 0, both diagonal blocks Hurwitz
  DecoupledUnstable,  // B_w = 0 or C_w = 0, a diagonal block with s > 0
  IrreducibleLocal,   // irreducible, rho < 1: local exponential stability
  IrreducibleGlobal,  // irreducible, rho <= 1: attraction of the whole domain
  IrreducibleUnstable,  // irreducible, rho > 1: s(B_f - D_f) > 0
  None,
};
const char* to_string(HealthyRule r);

struct HealthyClassification {
  HealthyVerdict verdict = HealthyVerdict::Unclassified;
  std::vector<HealthyRule> rules;
  double s_j0 = 0.0;  // s(J(0,0)) = s(B_f - D_f)
  double rho = 0.0;
};

HealthyClassification classify_healthy_state(const LayeredModel& model);

// Monotone map whose fixed points are the equilibria. With y = D_f^-1 B_f z:
//   T_i(z) = y_i / (1 + y_i)                   for population nodes,
//   T_j(z) = (y_j z_j + y_j) / (1 + y_j)       for resource nodes.
// Throws Error{NegativeInput | WrongRegime | DimensionMismatch}.
Vector t_map(const LayeredModel& model, const Vector& z);

enum class EquilibriumKind { HealthyUnique, Endemic };
const char* to_string(EquilibriumKind k);

struct EquilibriumResult {
  EquilibriumKind kind = EquilibriumKind::HealthyUnique;
  std::optional<State> z_hat;
  double rho = 0.0;
  double residual = 0.0;
  int iterations = 0;        // downward sweep from the upper bracket
  int iterations_up = 0;     // upward sweep from the lower bracket
  double bracket_gap = 0.0;  // ||upper limit - lower limit||_inf
  bool monotone = true;      // both sweeps stayed monotone (up to rounding)
  Vector upper_bracket;
  Vector lower_bracket;
};

class NoConvergenceError : public Error {
 public:
  NoConvergenceError(const std::string& what, Vector best, double gap)
      : Error(ErrorCode::NoConvergence, what), best_(std::move(best)), gap_(gap) {}
  const Vector& best_iterate() const { return best_; }
  double gap() const { return gap_; }

 private:
  Vector best_;
  double gap_;
};

struct FixedPointControls {
  double step_tol = 1e-13;
  long max_iter = 1000000;
  double agree_tol = 1e-10;
  double residual_tol = 1e-10;
};

// Endemic equilibrium by two-sided monotone iteration of t_map, from
// (1, -(A_w - D_w)^-1 C_w 1) downward and from eps * Perron vector upward.
// Throws Error{WrongRegime | NotIrreducible | BracketFailure} and NoConvergenceError.
EquilibriumResult endemic_equilibrium(const LayeredModel& model, const FixedPointControls& controls = {});

struct SisResult {
  EquilibriumKind kind = EquilibriumKind::HealthyUnique;
  std::optional<Vector> x_tilde;
  double rho = 0.0;  // rho(D^-1 B)
  double residual = 0.0;
  int iterations = 0;
};

// Population-only SIS equilibrium, x' = (B - X B - D) x.
// Throws Error{NotIrreducible | NegativeEntry | RegimeViolation} and NoConvergenceError.
SisResult sis_endemic(const PopulationLayer& pop, const FixedPointControls& controls = {});

// Right-hand side of the population-only SIS model.
Vector sis_field(const PopulationLayer& pop, const Vector& x);

struct EndemicComparison {
  Vector x_hat;
  Vector x_tilde;
  Vector gap;  // x_hat - x_tilde
  double min_gap = 0.0;
  double max_gap = 0.0;
  bool layered_dominates = false;
};

inline constexpr double kOrderingTol = 1e-9;

// Throws Error{HypothesisViolated} unless regime A2 holds, B_f and B are
// irreducible and both reproduction numbers exceed one.
EndemicComparison compare_endemic(const LayeredModel& model, const FixedPointControls& controls = {});

}  // namespace siws
