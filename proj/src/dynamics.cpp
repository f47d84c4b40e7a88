#include "siws/dynamics.hpp"

#include "siws/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

namespace siws {

namespace {

void require_dim(const SiwsSystem& sys, const Vector& z) {
  if (z.size() != sys.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "state has " + std::to_string(z.size()) + " entries, model expects " + std::to_string(sys.dim()));
  }
}

// Dormand-Prince 5(4) tableau, error weights and dense-output weights.
constexpr double c2 = 0.2, c3 = 0.3, c4 = 0.8, c5 = 8.0 / 9.0;
constexpr double a21 = 0.2;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

struct DenseStep {
  double t0 = 0.0;
  double h = 0.0;
  std::array<Vector, 5> r;

  Vector at(double t) const {
    const double s = (t - t0) / h;
    const double s1 = 1.0 - s;
    return r[0] + s * (r[1] + s1 * (r[2] + s * (r[3] + s1 * r[4])));
  }
};

double error_norm(const Vector& err, const Vector& y0, const Vector& y1, double atol, double rtol) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sk = atol + rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
    const double q = err(i) / sk;
    acc += q * q;
  }
  return std::sqrt(acc / static_cast<double>(err.size()));
}

}  // namespace

Vector vector_field(const SiwsSystem& sys, const Vector& z) {
  require_dim(sys, z);
  const int n = sys.n();
  Vector out = sys.b_f() * z;
  Vector q = z.head(n).cwiseProduct(out.head(n));
  out -= sys.d_f_diag().cwiseProduct(z);
  out.head(n) -= q;
  return out;
}

Vector vector_field(const SiwsSystem& sys, const State& z) { return vector_field(sys, z.stacked()); }

TaylorJet taylor_jet(const SiwsSystem& sys, const Vector& z0, int order, bool with_sensitivities) {
  require_dim(sys, z0);
  if (order < 1) throw Error(ErrorCode::PreconditionViolated, "jet order must be >= 1");
  const int n = sys.n();
  const int dim = sys.dim();
  const Matrix& bf = sys.b_f();
  const Vector& d = sys.d_f_diag();

  TaylorJet jet;
  jet.order = order;
  jet.coeffs.reserve(order + 1);
  jet.coeffs.push_back(z0);
  std::vector<Vector> u;  // B_f z_k
  u.reserve(order + 1);
  std::vector<Matrix> du;  // B_f S_k
  if (with_sensitivities) {
    jet.sens.reserve(order + 1);
    jet.sens.push_back(Matrix::Identity(dim, dim));
    du.reserve(order + 1);
  }

  for (int k = 0; k < order; ++k) {
    u.push_back(bf * jet.coeffs[k]);
    // Cauchy product of x(t) with (B_f z(t))_x, degree k.
    Vector q = jet.coeffs[0].head(n).cwiseProduct(u[k].head(n));
    for (int i = 1; i <= k; ++i) q += jet.coeffs[i].head(n).cwiseProduct(u[k - i].head(n));
    Vector next = u[k];
    next -= d.cwiseProduct(jet.coeffs[k]);
    next.head(n) -= q;
    jet.coeffs.push_back(next / static_cast<double>(k + 1));

    if (!with_sensitivities) continue;
    du.push_back(bf * jet.sens[k]);
    Matrix dq = Matrix::Zero(n, dim);
    for (int i = 0; i <= k; ++i) {
      dq += u[k - i].head(n).asDiagonal() * jet.sens[i].topRows(n);
      dq += jet.coeffs[i].head(n).asDiagonal() * du[k - i].topRows(n);
    }
    Matrix snext = du[k];
    snext -= d.asDiagonal() * jet.sens[k];
    snext.topRows(n) -= dq;
    jet.sens.push_back(snext / static_cast<double>(k + 1));
  }
  return jet;
}

Trajectory simulate(const LayeredModel& model, const State& z0, double t_end, const SimulationControls& c) {
  const int n = model.n();
  if (z0.x.size() != n || z0.w.size() != model.m()) {
    throw Error(ErrorCode::DimensionMismatch, "initial state does not match model dimensions");
  }
  if (!z0.in_domain()) throw Error(ErrorCode::PreconditionViolated, "initial state lies outside the domain");
  if (!(t_end > 0.0)) throw Error(ErrorCode::PreconditionViolated, "t_end must be positive");
  if (c.samples < 1) throw Error(ErrorCode::PreconditionViolated, "samples must be >= 1");

  const double max_step = c.max_step > 0.0 ? c.max_step : t_end / 100.0;
  auto f = [&](const Vector& z) { return vector_field(model, z); };

  Trajectory traj;
  traj.times.reserve(c.samples + 1);
  traj.states.reserve(c.samples + 1);
  auto sample_time = [&](int i) { return i == c.samples ? t_end : t_end * i / c.samples; };
  traj.times.push_back(0.0);
  traj.states.push_back(z0);
  int next_sample = 1;

  Vector y = z0.stacked();
  Vector k1 = f(y);
  double t = 0.0;

  // Initial step from the scaled magnitudes of y and f(y).
  double h;
  {
    Vector sk = (c.abs_tol + c.rel_tol * y.array().abs()).matrix();
    const double dn0 = (y.array() / sk.array()).matrix().norm() / std::sqrt(double(y.size()));
    const double dn1 = (k1.array() / sk.array()).matrix().norm() / std::sqrt(double(y.size()));
    h = (dn0 < 1e-5 || dn1 < 1e-5) ? 1e-6 : 0.01 * dn0 / dn1;
    h = std::min(h, max_step);
  }

  int steady_count = 0;
  bool last_rejected = false;
  Vector k2, k3, k4, k5, k6, k7, y1, ys;
  while (next_sample <= c.samples) {
    if (std::abs(k1.lpNorm<Eigen::Infinity>()) < c.steady_tol) {
      ++steady_count;
    } else {
      steady_count = 0;
    }
    if (steady_count >= c.steady_steps) {
      traj.steady_at = t;
      const State here = State::split(y, n);
      for (; next_sample <= c.samples; ++next_sample) {
        traj.times.push_back(sample_time(next_sample));
        traj.states.push_back(here);
      }
      break;
    }

    // Stretch a step that would leave a remainder at rounding level.
    if (t + h * (1.0 + 1e-8) >= t_end || t_end - (t + h) < 64.0 * std::numeric_limits<double>::epsilon() * t_end) {
      h = t_end - t;
    }
    if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
      throw Error(ErrorCode::StepSizeUnderflow, "step size underflow at t = " + format_double(t));
    }

    // Reject-and-retry loop for the current step.
    for (;;) {
      ys = y + h * a21 * k1;
      k2 = f(ys);
      ys = y + h * (a31 * k1 + a32 * k2);
      k3 = f(ys);
      ys = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
      k4 = f(ys);
      ys = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      k5 = f(ys);
      ys = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      k6 = f(ys);
      y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      k7 = f(y1);
      const Vector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const double en = error_norm(err, y, y1, c.abs_tol, c.rel_tol);
      if (!std::isfinite(en)) {
        ++traj.steps_rejected;
        h *= 0.2;
      } else if (en <= 1.0) {
        double fac = en > 0.0 ? 0.9 * std::pow(en, -0.2) : 10.0;
        fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 10.0);
        last_rejected = false;
        ++traj.steps_accepted;

        DenseStep dense;
        dense.t0 = t;
        dense.h = h;
        const Vector ydiff = y1 - y;
        const Vector bspl = h * k1 - ydiff;
        dense.r[0] = y;
        dense.r[1] = ydiff;
        dense.r[2] = bspl;
        dense.r[3] = ydiff - h * k7 - bspl;
        dense.r[4] = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

        const double t1 = (t + h >= t_end || h == t_end - t) ? t_end : t + h;
        for (; next_sample <= c.samples && sample_time(next_sample) <= t1; ++next_sample) {
          const double ts = sample_time(next_sample);
          Projection p = project_to_domain(ts == t1 ? y1 : dense.at(ts), n);
          if (p.clamp > c.clamp_tol) {
            throw Error(ErrorCode::ClampExceeded, "sample clamp " + format_double(p.clamp) + " at t = " + format_double(ts));
          }
          traj.max_clamp = std::max(traj.max_clamp, p.clamp);
          traj.times.push_back(ts);
          traj.states.push_back(std::move(p.state));
        }

        Projection p = project_to_domain(y1, n);
        if (p.clamp > c.clamp_tol) {
          throw Error(ErrorCode::ClampExceeded, "step clamp " + format_double(p.clamp) + " at t = " + format_double(t1));
        }
        traj.max_clamp = std::max(traj.max_clamp, p.clamp);
        t = t1;
        if (p.clamp > 0.0) {
          y = p.state.stacked();
          k1 = f(y);
        } else {
          y = y1;
          k1 = k7;
        }
        h = std::min(h * fac, max_step);
        break;
      } else {
        ++traj.steps_rejected;
        last_rejected = true;
        h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
      }
      if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
        throw Error(ErrorCode::StepSizeUnderflow, "step size underflow at t = " + format_double(t));
      }
    }
  }
  return traj;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  if (traj.states.empty()) return;
  const auto n = traj.states.front().x.size();
  const auto m = traj.states.front().w.size();
  os << "t";
  for (Eigen::Index i = 1; i <= n; ++i) os << ",x_" << i;
  for (Eigen::Index j = 1; j <= m; ++j) os << ",w_" << j;
  os << ",x_mean,w_mean\n";
  for (std::size_t r = 0; r < traj.states.size(); ++r) {
    const State& s = traj.states[r];
    os << format_double(traj.times[r]);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_double(s.x(i));
    for (Eigen::Index j = 0; j < m; ++j) os << ',' << format_double(s.w(j));
    os << ',' << format_double(s.x.mean()) << ',' << format_double(s.w.mean()) << '\n';
  }
}

}  // namespace siws
