#include "siws/observability.hpp"

#include "siws/dynamics.hpp"
#include "siws/error.hpp"
#include "siws/random.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace siws {

namespace {

void require_meas(const SiwsSystem& sys, const MeasurementMap& meas) {
  if (meas.c.cols() != sys.n()) {
    throw Error(ErrorCode::DimensionMismatch, "measurement matrix needs " + std::to_string(sys.n()) + " columns");
  }
}

void require_w(const SiwsSystem& sys, const Vector& w0) {
  if (w0.size() != sys.m()) {
    throw Error(ErrorCode::DimensionMismatch, "w0 needs " + std::to_string(sys.m()) + " entries");
  }
}

double relative_mismatch(const Matrix& a, const Matrix& ref) {
  const double diff = (a - ref).cwiseAbs().maxCoeff();
  if (diff == 0.0) return 0.0;
  const double scale = ref.cwiseAbs().maxCoeff();
  return scale > 0.0 ? diff / scale : std::numeric_limits<double>::infinity();
}

struct Blocks {
  Matrix B, D, Bw, Cw, Fx0, Fw0, Bw_t, Xx, Bt;
  Vector w;
};

Blocks blocks(const SiwsSystem& sys, const Vector& w0) {
  Blocks k;
  k.B = sys.pop().beta;
  k.D = sys.pop().delta.asDiagonal();
  k.Bw = sys.coupling().beta_w;
  k.Cw = sys.coupling().c_w;
  k.Fx0 = k.B - k.D;
  k.Fw0 = sys.infra().alpha;
  k.Fw0.diagonal() -= sys.infra().delta_w;
  k.w = w0;
  k.Bw_t = (k.Bw * w0).asDiagonal();
  k.Xx = k.Fx0 - k.Bw_t;
  k.Bt = (k.B * k.Bw * w0 + k.Bw * k.Fw0 * w0).asDiagonal();
  return k;
}

Matrix stack_row(const MeasurementMap& meas, const Matrix& x_block, const Matrix& w_block) {
  Matrix row(meas.c.rows(), x_block.cols() + w_block.cols());
  row << meas.c * x_block, meas.c * w_block;
  return row;
}

}  // namespace

RankResult rank_test(const Matrix& a, const RankPolicy& policy) {
  RankResult r;
  if (a.size() == 0) return r;
  Matrix work = a;
  if (policy.equilibrate_rows) {
    for (Eigen::Index i = 0; i < work.rows(); ++i) {
      const double nrm = work.row(i).norm();
      if (nrm > 0.0) work.row(i) /= nrm;
    }
  }
  Eigen::JacobiSVD<Matrix> svd(work);
  const Vector sv = svd.singularValues();
  r.singular_values.assign(sv.data(), sv.data() + sv.size());
  const double smax = sv.size() ? sv(0) : 0.0;
  r.threshold = smax * static_cast<double>(std::max(a.rows(), a.cols())) *
                std::numeric_limits<double>::epsilon() * policy.safety;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > r.threshold) ++r.rank;
  }
  r.full_rank = r.rank == a.cols();
  return r;
}

Matrix closed_form_rows(const SiwsSystem& sys, const MeasurementMap& meas, const Vector& w0) {
  require_meas(sys, meas);
  require_w(sys, w0);
  const Blocks k = blocks(sys, w0);
  const int q = static_cast<int>(meas.c.rows());
  const int n = sys.n();
  const int m = sys.m();

  const Matrix Xxx = k.Xx * k.Xx - k.Bw_t * k.B - k.Bt + k.Bw * k.Cw;
  const Matrix Ww = k.Bw * k.Fw0 + k.Xx * k.Bw - k.Bw_t * k.Bw;

  Matrix out(3 * q, n + m);
  out.middleRows(0, q) = stack_row(meas, Matrix::Identity(n, n), Matrix::Zero(n, m));
  out.middleRows(q, q) = stack_row(meas, k.Xx, k.Bw);
  out.middleRows(2 * q, q) = stack_row(meas, Xxx, Ww);
  return out;
}

Matrix expanded_row3(const SiwsSystem& sys, const MeasurementMap& meas, const Vector& w0) {
  require_meas(sys, meas);
  require_w(sys, w0);
  const Blocks k = blocks(sys, w0);
  const Vector& w = k.w;
  const Matrix Xxx = k.Xx * k.Xx - k.Bw_t * k.B - k.Bt;
  const Matrix Ww = k.Bw * k.Fw0 + k.Xx * k.Bw - k.Bw_t * k.Bw;
  const Matrix Dt = (k.Fx0 * k.Bw * w).asDiagonal();
  const Matrix Dwt = (k.B * k.Xx * k.Bw * w - k.B * k.B * k.Fw0 * w + k.Bw * k.Fw0 * k.Fw0 * w +
                      k.Bw * k.Cw * k.Bw * w)
                         .asDiagonal();
  const Matrix BBw_diag = (k.B * k.Bw * w).asDiagonal();
  const Matrix Bw_t2 = k.Bw_t * k.Bw_t;

  const Matrix x_block = k.Fx0 * Xxx - Dt * k.B - Dwt - 2.0 * Bw_t2 * k.B - 2.0 * k.Bw_t * k.B * k.Xx -
                         2.0 * k.Bt * k.Xx - BBw_diag + k.Bw * (k.Fw0 * k.Cw + k.Cw * k.Xx);
  const Matrix w_block = k.Bw * k.Fw0 * k.Fw0 + k.Xx * Ww - 2.0 * Bw_t2 * k.Bw -
                         k.Bw_t * (k.Bw * k.Fw0 + k.B * k.Bw) - 2.0 * k.Bt * Ww - Dt * k.Bw +
                         k.Bw * k.Cw * k.Bw;
  return stack_row(meas, x_block, w_block);
}

ObservabilityMatrix build_O(const SiwsSystem& sys, const MeasurementMap& meas, const Vector& w0, int order) {
  require_meas(sys, meas);
  require_w(sys, w0);
  if (order < 1) throw Error(ErrorCode::PreconditionViolated, "observability order must be >= 1");
  const int n = sys.n();
  const int q = static_cast<int>(meas.c.rows());

  Vector z0 = Vector::Zero(sys.dim());
  z0.tail(sys.m()) = w0;
  const TaylorJet jet = taylor_jet(sys, z0, order, /*with_sensitivities=*/true);

  ObservabilityMatrix out;
  out.o.resize((order + 1) * q, sys.dim());
  double factorial = 1.0;
  for (int k = 0; k <= order; ++k) {
    if (k > 0) factorial *= k;
    out.o.middleRows(k * q, q) = factorial * (meas.c * jet.sens[k].topRows(n));
  }

  if (q > 0) {
    const Matrix closed = closed_form_rows(sys, meas, w0);
    const int rows = std::min(order + 1, 3);
    for (int k = 0; k < rows; ++k) {
      out.closed_form_mismatch =
          std::max(out.closed_form_mismatch, relative_mismatch(closed.middleRows(k * q, q), out.o.middleRows(k * q, q)));
    }
    if (out.closed_form_mismatch > kClosedFormTol) {
      throw Error(ErrorCode::ClosedFormMismatch,
                  "closed-form rows 0..2 differ from the jet by " + format_double(out.closed_form_mismatch));
    }
    if (order >= 3) {
      out.row3_mismatch = relative_mismatch(expanded_row3(sys, meas, w0), out.o.middleRows(3 * q, q));
    }
  }
  return out;
}

FCondition f_condition(const SiwsSystem& sys, const MeasurementMap& meas, const RankPolicy& policy) {
  require_meas(sys, meas);
  FCondition f;
  f.rank_c = rank_test(meas.c, policy).rank;
  f.rank_cbw = rank_test(meas.c * sys.coupling().beta_w, policy).rank;
  f.holds = f.rank_c == sys.n() && f.rank_cbw == sys.m();
  return f;
}

SensorPlacement sensor_placement_check(const SiwsSystem& sys, const RankPolicy& policy) {
  if (sys.n() < sys.m()) {
    throw Error(ErrorCode::PreconditionViolated, "full-state sensing result needs n >= m");
  }
  SensorPlacement s;
  s.rank_bw = rank_test(sys.coupling().beta_w, policy).rank;
  s.deficiency = sys.m() - s.rank_bw;
  s.observable = s.deficiency == 0;
  return s;
}

ObservabilityReport analyze_observability(const SiwsSystem& sys, const MeasurementMap& meas, const Vector& w0,
                                          const ObserveOptions& opt) {
  require_meas(sys, meas);
  require_w(sys, w0);
  ObservabilityReport rep;
  rep.order = opt.order > 0 ? opt.order : sys.dim();

  const ObservabilityMatrix built = build_O(sys, meas, w0, rep.order);
  rep.o_matrix = built.o;
  rep.closed_form_mismatch = built.closed_form_mismatch;
  rep.row3_mismatch = built.row3_mismatch;
  if (rep.row3_mismatch && *rep.row3_mismatch > kClosedFormTol) {
    rep.diagnostics.push_back("hand-expanded fourth block row differs from the jet by relative " +
                              format_double(*rep.row3_mismatch));
  }
  rep.rank = rank_test(rep.o_matrix, opt.policy);

  const int q = static_cast<int>(meas.c.rows());
  if (rep.order == sys.dim() && rep.order > 1) {
    RankResult prev = rank_test(rep.o_matrix.topRows(rep.order * q), opt.policy);
    if (prev.rank != rep.rank.rank) {
      rep.diagnostics.push_back("rank with orders 0..n+m-1 is " + std::to_string(prev.rank) + ", with 0..n+m is " +
                                std::to_string(rep.rank.rank));
    }
    rep.rank_prev_order = std::move(prev);
  }

  rep.w_eval.push_back(w0);
  rep.sample_ranks.push_back(rep.rank.rank);
  Rng rng(opt.seed);
  for (int s = 0; s < opt.samples; ++s) {
    Vector w(sys.m());
    for (int j = 0; j < sys.m(); ++j) w(j) = rng.uniform(opt.w_lo, opt.w_hi);
    const ObservabilityMatrix sample = build_O(sys, meas, w, rep.order);
    rep.sample_ranks.push_back(rank_test(sample.o, opt.policy).rank);
    rep.w_eval.push_back(std::move(w));
  }
  rep.generic = std::all_of(rep.sample_ranks.begin(), rep.sample_ranks.end(),
                            [&](int r) { return r == rep.sample_ranks.front(); });
  if (!rep.generic) rep.diagnostics.push_back("rank of O varies across the sampled w0");

  rep.f_cond = f_condition(sys, meas, opt.policy);
  const bool identity_c = meas.c.rows() == sys.n() && meas.c.isIdentity(0.0);
  if (identity_c && sys.n() >= sys.m()) rep.full_state_sensing = sensor_placement_check(sys, opt.policy);
  if (rep.f_cond.holds && !rep.rank.full_rank) {
    rep.diagnostics.push_back("rank condition on C and C B_w holds but O is numerically rank deficient");
  }

  rep.a_w_satisfies_a2 = regime_violations(sys, Regime::A2).empty() &&
                         [&] {
                           const Matrix& a = sys.infra().alpha;
                           for (Eigen::Index i = 0; i < a.rows(); ++i)
                             for (Eigen::Index j = 0; j < a.cols(); ++j)
                               if (i != j && a(i, j) < 0.0) return false;
                           return true;
                         }();
  if (!rep.a_w_satisfies_a2) rep.diagnostics.push_back("supplied A_w does not satisfy regime A2");
  return rep;
}

}  // namespace siws
