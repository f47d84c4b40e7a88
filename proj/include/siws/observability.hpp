#pragma once

#include "siws/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace siws {

// Output map y = C x with C of size q x n.
struct MeasurementMap {
  Matrix c;
};

struct RankPolicy {
  double safety = 10.0;
  // Scale every nonzero row to unit length before the SVD. Block row k of
  // the observability matrix grows like ||J||^k, which would otherwise push
  // the low-order rows under the threshold.
  bool equilibrate_rows = true;
};

struct RankResult {
  int rank = 0;
  bool full_rank = false;  // rank == number of columns
  std::vector<double> singular_values;
  double threshold = 0.0;
};

// Numeric rank: #{sigma_i > sigma_max * max(rows, cols) * eps * safety}.
RankResult rank_test(const Matrix& a, const RankPolicy& policy = {});

// Block rows 0..2 from the hand-derived Lie-derivative formulas at x(0) = 0:
//   [ C      0     ]
//   [ C X_x  C B_w ]
//   [ C X_xx C W_w ]
// with X_x = (B - D) - diag(B_w w), W_w = B_w F_w0 + X_x B_w - diag(B_w w) B_w
// and X_xx = X_x^2 - diag(B_w w) B - diag(B B_w w + B_w F_w0 w) + B_w C_w.
Matrix closed_form_rows(const SiwsSystem& sys, const MeasurementMap& meas, const Vector& w0);

// Fourth block row from a term-by-term hand expansion of the third derivative.
// Used only as a diagnostic against the variational jet.
Matrix expanded_row3(const SiwsSystem& sys, const MeasurementMap& meas, const Vector& w0);

struct ObservabilityMatrix {
  Matrix o;                          // (K+1) q x (n+m)
  double closed_form_mismatch = 0.0;  // max relative error of rows 0..2
  std::optional<double> row3_mismatch;
};

// Block row k is k! C (d z_k / d z_0)|_x evaluated at z0 = (0, w0), taken
// from the variational Taylor jet. Rows 0..2 are cross-checked against
// closed_form_rows(). Throws Error{ClosedFormMismatch | DimensionMismatch}.
ObservabilityMatrix build_O(const SiwsSystem& sys, const MeasurementMap& meas, const Vector& w0, int order);

inline constexpr double kClosedFormTol = 1e-8;

struct FCondition {
  int rank_c = 0;
  int rank_cbw = 0;
  bool holds = false;  // rank C = n and rank C B_w = m
};

FCondition f_condition(const SiwsSystem& sys, const MeasurementMap& meas, const RankPolicy& policy = {});

struct SensorPlacement {
  bool observable = false;  // B_w has full column rank
  int rank_bw = 0;
  int deficiency = 0;  // m - rank(B_w)
};

// Full-state sensing C = I. Throws Error{PreconditionViolated} when n < m.
SensorPlacement sensor_placement_check(const SiwsSystem& sys, const RankPolicy& policy = {});

struct ObserveOptions {
  int order = -1;  // <= 0 means n + m
  int samples = 5;
  std::uint64_t seed = 0;
  double w_lo = 0.0;
  double w_hi = 2.0;
  RankPolicy policy;
};

struct ObservabilityReport {
  int order = 0;
  Matrix o_matrix;
  RankResult rank;
  std::optional<RankResult> rank_prev_order;  // order K-1, when K = n+m
  std::vector<Vector> w_eval;  // w0 first, then the random samples
  std::vector<int> sample_ranks;
  bool generic = true;
  FCondition f_cond;
  std::optional<SensorPlacement> full_state_sensing;  // present when C = I and n >= m
  bool a_w_satisfies_a2 = false;
  double closed_form_mismatch = 0.0;
  std::optional<double> row3_mismatch;
  std::vector<std::string> diagnostics;
};

ObservabilityReport analyze_observability(const SiwsSystem& sys, const MeasurementMap& meas, const Vector& w0,
                                          const ObserveOptions& options = {});

}  // namespace siws
