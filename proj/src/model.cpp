#include "siws/model.hpp"

#include "siws/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace siws {

namespace {

void require_shape(const Matrix& a, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (a.rows() != rows || a.cols() != cols) {
    std::ostringstream msg;
    msg << name << " is " << a.rows() << "x" << a.cols() << ", expected " << rows << "x" << cols;
    throw Error(ErrorCode::DimensionMismatch, msg.str());
  }
}

void require_nonnegative(const Matrix& a, const char* name, bool skip_diagonal = false) {
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (skip_diagonal && i == j) continue;
      const double v = a(i, j);
      if (!std::isfinite(v) || v < 0.0) {
        std::ostringstream msg;
        msg << name << "(" << i << "," << j << ") = " << v;
        throw Error(ErrorCode::NegativeEntry, msg.str());
      }
    }
  }
}

void require_nonnegative(const Vector& a, const char* name) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a(i)) || a(i) < 0.0) {
      std::ostringstream msg;
      msg << name << "(" << i << ") = " << a(i);
      throw Error(ErrorCode::NegativeEntry, msg.str());
    }
  }
}

}  // namespace

const char* to_string(Regime regime) { return regime == Regime::A1 ? "A1" : "A2"; }

SiwsSystem::SiwsSystem(PopulationLayer pop, InfrastructureLayer infra, CouplingLayer coupling)
    : pop_(std::move(pop)), infra_(std::move(infra)), coupling_(std::move(coupling)) {
  const Eigen::Index n = pop_.delta.size();
  const Eigen::Index m = infra_.delta_w.size();
  if (n < 1 || m < 1) {
    throw Error(ErrorCode::DimensionMismatch, "population and infrastructure layers need at least one node");
  }
  require_shape(pop_.beta, n, n, "beta");
  require_shape(infra_.alpha, m, m, "alpha");
  require_shape(coupling_.beta_w, n, m, "beta_w");
  require_shape(coupling_.c_w, m, n, "c_w");

  b_f_.resize(n + m, n + m);
  b_f_.topLeftCorner(n, n) = pop_.beta;
  b_f_.topRightCorner(n, m) = coupling_.beta_w;
  b_f_.bottomLeftCorner(m, n) = coupling_.c_w;
  b_f_.bottomRightCorner(m, m) = infra_.alpha;
  b_f_.bottomRightCorner(m, m).diagonal().setZero();

  d_f_diag_.resize(n + m);
  d_f_diag_.head(n) = pop_.delta;
  d_f_diag_.tail(m) = infra_.delta_w - infra_.alpha.diagonal();
}

std::vector<std::string> regime_violations(const SiwsSystem& sys, Regime regime) {
  std::vector<std::string> out;
  const auto& pop = sys.pop();
  const auto& infra = sys.infra();
  for (int i = 0; i < sys.n(); ++i) {
    if (!(pop.delta(i) > 0.0)) {
      out.push_back("delta_" + std::to_string(i + 1) + " = " + std::to_string(pop.delta(i)) + " is not > 0");
    }
  }
  if (regime == Regime::A1) {
    for (int j = 0; j < sys.m(); ++j) {
      if (!(sys.d_f_diag()(sys.n() + j) > 0.0)) {
        out.push_back("delta_w_" + std::to_string(j + 1) + " + outflow = " +
                      std::to_string(sys.d_f_diag()(sys.n() + j)) + " is not > 0");
      }
    }
    return out;
  }
  for (int j = 0; j < sys.m(); ++j) {
    if (!(infra.delta_w(j) > 0.0)) {
      out.push_back("delta_w_" + std::to_string(j + 1) + " = " + std::to_string(infra.delta_w(j)) + " is not > 0");
    }
  }
  const double scale = infra.alpha.cwiseAbs().maxCoeff();
  const double tol = 1e-14 * scale;
  for (int j = 0; j < sys.m(); ++j) {
    const double col = infra.alpha.col(j).sum();
    if (std::abs(col) > tol) {
      std::ostringstream msg;
      msg << "column " << j + 1 << " of alpha sums to " << col << " (alpha_jj must equal minus the outflow)";
      out.push_back(msg.str());
    }
  }
  return out;
}

LayeredModel validate_model(PopulationLayer pop, InfrastructureLayer infra, CouplingLayer coupling,
                            Regime regime) {
  SiwsSystem sys(std::move(pop), std::move(infra), std::move(coupling));
  require_nonnegative(sys.pop().beta, "beta");
  require_nonnegative(sys.pop().delta, "delta");
  require_nonnegative(sys.infra().alpha, "alpha", /*skip_diagonal=*/true);
  require_nonnegative(sys.infra().delta_w, "delta_w");
  require_nonnegative(sys.coupling().beta_w, "beta_w");
  require_nonnegative(sys.coupling().c_w, "c_w");
  for (Eigen::Index j = 0; j < sys.infra().alpha.rows(); ++j) {
    if (!std::isfinite(sys.infra().alpha(j, j))) {
      throw Error(ErrorCode::NegativeEntry, "alpha(" + std::to_string(j) + "," + std::to_string(j) + ") is not finite");
    }
  }

  const auto a1 = regime_violations(sys, Regime::A1);
  const auto a2 = regime_violations(sys, Regime::A2);
  const auto& failed = regime == Regime::A1 ? a1 : a2;
  if (!failed.empty()) {
    std::string msg = std::string("regime ") + to_string(regime) + ": " + failed.front();
    for (std::size_t k = 1; k < failed.size(); ++k) msg += "; " + failed[k];
    throw Error(ErrorCode::RegimeViolation, msg);
  }
  return LayeredModel(std::move(sys), regime, a1.empty(), a2.empty());
}

Vector State::stacked() const {
  Vector z(x.size() + w.size());
  z << x, w;
  return z;
}

State State::split(const Vector& z, int n) {
  if (n < 0 || n > z.size()) throw Error(ErrorCode::DimensionMismatch, "state split index out of range");
  return State{z.head(n), z.tail(z.size() - n)};
}

bool State::in_domain() const {
  return (x.array() >= 0.0).all() && (x.array() <= 1.0).all() && (w.array() >= 0.0).all();
}

Projection project_to_domain(const Vector& z, int n) {
  Projection p{State::split(z, n), 0.0};
  for (Eigen::Index i = 0; i < p.state.x.size(); ++i) {
    const double v = std::clamp(p.state.x(i), 0.0, 1.0);
    p.clamp = std::max(p.clamp, std::abs(v - p.state.x(i)));
    p.state.x(i) = v;
  }
  for (Eigen::Index j = 0; j < p.state.w.size(); ++j) {
    const double v = std::max(p.state.w(j), 0.0);
    p.clamp = std::max(p.clamp, std::abs(v - p.state.w(j)));
    p.state.w(j) = v;
  }
  return p;
}

}  // namespace siws
