#pragma once

#include "siws/model.hpp"

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace siws {

// Right-hand side (-D_f + (I - X(z)) B_f) z. Defined on all of R^(n+m).
Vector vector_field(const SiwsSystem& sys, const Vector& z);
Vector vector_field(const SiwsSystem& sys, const State& z);

// Local series z(t) = sum_k coeffs[k] t^k around an expansion point, with
// optional sensitivities sens[k] = d coeffs[k] / d coeffs[0].
struct TaylorJet {
  int order = 0;
  std::vector<Vector> coeffs;
  std::vector<Matrix> sens;

  bool has_sensitivities() const { return !sens.empty(); }
};

// The field is quadratic, so the series coefficients follow exactly from
//   (k+1) z_{k+1} = -D_f z_k + B_f z_k - [ sum_{i<=k} x_i .* (B_f z_{k-i})_x ; 0 ]
// and the sensitivities from differentiating that recurrence.
TaylorJet taylor_jet(const SiwsSystem& sys, const Vector& z0, int order, bool with_sensitivities);

struct SimulationControls {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double clamp_tol = 1e-9;
  // Non-positive means t_end / 100.
  double max_step = 0.0;
  // Number of sample intervals; the trajectory holds samples + 1 states.
  int samples = 100;
  // Stop integrating once ||f(z)||_inf stays below this for
  // steady_steps consecutive accepted steps.
  double steady_tol = 1e-13;
  int steady_steps = 3;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  std::size_t steps_accepted = 0;
  std::size_t steps_rejected = 0;
  double max_clamp = 0.0;
  // Time at which the steady-state exit fired; negative if it never did.
  double steady_at = -1.0;
};

// Dormand-Prince 5(4) with per-step error control and continuous output.
// Each accepted state and every sample is projected onto the domain.
// Throws Error{StepSizeUnderflow | ClampExceeded | DimensionMismatch}.
Trajectory simulate(const LayeredModel& model, const State& z0, double t_end,
                    const SimulationControls& controls = {});

// CSV with header t,x_1..x_n,w_1..w_m,x_mean,w_mean and 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

// 17 significant digits, shortest exponent form; used by every text artifact.
std::string format_double(double v);

}  // namespace siws
