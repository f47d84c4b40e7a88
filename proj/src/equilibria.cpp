#include "siws/equilibria.hpp"

#include "siws/dynamics.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>

namespace siws {

namespace {

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

// Relative slack for the monotonicity bookkeeping; the sweeps are monotone in
// exact arithmetic and only rounding can break it.
bool within_rounding(double a, double b) { return a <= b + 4e-16 * std::max(1.0, std::abs(b)); }

struct Sweep {
  Vector z;
  int iterations = 0;
  bool monotone = true;
  double last_step = 0.0;
};

template <class Map>
Sweep iterate_monotone(const Map& map, Vector z, bool downward, const FixedPointControls& c) {
  Sweep s;
  for (long it = 1; it <= c.max_iter; ++it) {
    Vector next = map(z);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const bool ok = downward ? within_rounding(next(i), z(i)) : within_rounding(z(i), next(i));
      if (!ok) s.monotone = false;
    }
    s.last_step = inf_norm(next - z);
    z = std::move(next);
    s.iterations = static_cast<int>(it);
    if (s.last_step < c.step_tol) {
      s.z = std::move(z);
      return s;
    }
  }
  throw NoConvergenceError("fixed-point iteration hit the cap of " + std::to_string(c.max_iter) +
                               " iterations, last step " + format_double(s.last_step),
                           z, s.last_step);
}

bool all_zero(const Matrix& a) { return (a.array() == 0.0).all(); }

void require_a2(const LayeredModel& model) {
  if (!model.satisfies_a2()) {
    throw Error(ErrorCode::WrongRegime, "requires regime A2 (delta_w > 0 and zero column sums of alpha)");
  }
}

Vector t_map_unchecked(const SiwsSystem& sys, const Vector& z) {
  const int n = sys.n();
  const Vector y = (sys.b_f() * z).cwiseQuotient(sys.d_f_diag());
  Vector t(z.size());
  for (int i = 0; i < n; ++i) t(i) = y(i) / (1.0 + y(i));
  for (Eigen::Index j = n; j < z.size(); ++j) t(j) = (y(j) * z(j) + y(j)) / (1.0 + y(j));
  return t;
}

}  // namespace

const char* to_string(LocalVerdict v) {
  switch (v) {
    case LocalVerdict::LocallyExpStable: return "LocallyExpStable";
    case LocalVerdict::Unstable: return "Unstable";
    case LocalVerdict::Marginal: return "Marginal";
  }
  return "?";
}

const char* to_string(HealthyVerdict v) {
  switch (v) {
    case HealthyVerdict::LocallyExpStable: return "LocallyExpStable";
    case HealthyVerdict::GloballyStable: return "GloballyStable";
    case HealthyVerdict::Unstable: return "Unstable";
    case HealthyVerdict::Unclassified: return "Unclassified";
  }
  return "?";
}

const char* to_string(HealthyRule r) {
  switch (r) {
    case HealthyRule::DecoupledStable: return "DecoupledStable";
    case HealthyRule::DecoupledUnstable: return "DecoupledUnstable";
    case HealthyRule::IrreducibleLocal: return "IrreducibleLocal";
    case HealthyRule::IrreducibleGlobal: return "IrreducibleGlobal";
    case HealthyRule::IrreducibleUnstable: return "IrreducibleUnstable";
    case HealthyRule::None: return "None";
  }
  return "?";
}

const char* to_string(EquilibriumKind k) {
  return k == EquilibriumKind::Endemic ? "Endemic" : "HealthyUnique";
}

JacobianReport jacobian(const SiwsSystem& sys, const State& z) {
  const int n = sys.n();
  const int m = sys.m();
  if (z.x.size() != n || z.w.size() != m) {
    throw Error(ErrorCode::DimensionMismatch, "state does not match model dimensions");
  }
  const auto& beta = sys.pop().beta;
  const auto& beta_w = sys.coupling().beta_w;
  const Vector f1 = beta * z.x;
  const Vector f2 = beta_w * z.w;

  JacobianReport rep;
  rep.j_matrix.resize(n + m, n + m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double v = beta(i, j) - z.x(i) * beta(i, j);
      if (i == j) v = v - sys.pop().delta(i) - f1(i) - f2(i);
      rep.j_matrix(i, j) = v;
    }
  }
  rep.j_matrix.topRightCorner(n, m) = (Vector::Ones(n) - z.x).asDiagonal() * beta_w;
  rep.j_matrix.bottomLeftCorner(m, n) = sys.coupling().c_w;
  rep.j_matrix.bottomRightCorner(m, m) = sys.infra().alpha;
  rep.j_matrix.bottomRightCorner(m, m).diagonal() -= sys.infra().delta_w;

  rep.s_value = stability_margin(rep.j_matrix);
  if (rep.s_value < -kMarginBand) {
    rep.verdict = LocalVerdict::LocallyExpStable;
  } else if (rep.s_value > kMarginBand) {
    rep.verdict = LocalVerdict::Unstable;
  } else {
    rep.verdict = LocalVerdict::Marginal;
  }
  return rep;
}

HealthyClassification classify_healthy_state(const LayeredModel& model) {
  HealthyClassification out;
  out.s_j0 = stability_margin(model.b_f() - model.d_f());
  const SpectralReport spec = reproduction_number(model);
  out.rho = spec.rho;

  if (all_zero(model.coupling().beta_w) || all_zero(model.coupling().c_w)) {
    const Matrix pop_block = model.pop().beta - Matrix(model.pop().delta.asDiagonal());
    Matrix infra_block = model.infra().alpha;
    infra_block.diagonal() -= model.infra().delta_w;
    const double s_pop = stability_margin(pop_block);
    const double s_infra = stability_margin(infra_block);
    if (s_pop < -kMarginBand && s_infra < -kMarginBand) {
      out.verdict = HealthyVerdict::LocallyExpStable;
      out.rules = {HealthyRule::DecoupledStable};
    } else if (s_pop > kMarginBand || s_infra > kMarginBand) {
      out.verdict = HealthyVerdict::Unstable;
      out.rules = {HealthyRule::DecoupledUnstable};
    } else {
      out.rules = {HealthyRule::None};
    }
    return out;
  }

  if (!spec.irreducible) {
    out.rules = {HealthyRule::None};
    return out;
  }
  if (spec.rho < 1.0 - kCriticalBand) {
    out.verdict = HealthyVerdict::GloballyStable;
    out.rules = {HealthyRule::IrreducibleLocal, HealthyRule::IrreducibleGlobal};
  } else if (spec.rho <= 1.0 + kCriticalBand) {
    out.verdict = HealthyVerdict::GloballyStable;
    out.rules = {HealthyRule::IrreducibleGlobal};
  } else {
    out.verdict = HealthyVerdict::Unstable;
    out.rules = {HealthyRule::IrreducibleUnstable};
  }
  return out;
}

Vector t_map(const LayeredModel& model, const Vector& z) {
  require_a2(model);
  if (z.size() != model.dim()) throw Error(ErrorCode::DimensionMismatch, "t_map argument has wrong length");
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (!(z(i) >= 0.0)) throw Error(ErrorCode::NegativeInput, "t_map needs z >= 0, entry " + std::to_string(i));
  }
  return t_map_unchecked(model, z);
}

EquilibriumResult endemic_equilibrium(const LayeredModel& model, const FixedPointControls& c) {
  require_a2(model);
  if (!is_irreducible(model.b_f())) throw Error(ErrorCode::NotIrreducible, "B_f is not irreducible");

  const SpectralReport spec = reproduction_number(model);
  EquilibriumResult res;
  res.rho = spec.rho;
  if (spec.rho <= 1.0 + kCriticalBand) {
    res.kind = EquilibriumKind::HealthyUnique;
    return res;
  }

  const int n = model.n();
  const int m = model.m();
  Matrix aw_dw = model.infra().alpha;
  aw_dw.diagonal() -= model.infra().delta_w;
  const Vector w_upper = aw_dw.partialPivLu().solve(-(model.coupling().c_w * Vector::Ones(n)));
  res.upper_bracket.resize(n + m);
  res.upper_bracket << Vector::Ones(n), w_upper;
  for (int j = 0; j < m; ++j) {
    if (!(w_upper(j) > 0.0)) {
      throw Error(ErrorCode::BracketFailure,
                  "upper bracket component w_" + std::to_string(j + 1) + " = " + format_double(w_upper(j)) +
                      " is not strictly positive");
    }
  }

  const Vector& perron = *spec.perron_right;
  const double eps = 0.5 * (spec.rho - 1.0) / (spec.rho * perron.maxCoeff());
  res.lower_bracket = eps * perron;

  auto map = [&](const Vector& z) { return t_map_unchecked(model, z); };
  const Sweep down = iterate_monotone(map, res.upper_bracket, /*downward=*/true, c);
  const Sweep up = iterate_monotone(map, res.lower_bracket, /*downward=*/false, c);
  res.iterations = down.iterations;
  res.iterations_up = up.iterations;
  res.monotone = down.monotone && up.monotone;
  res.bracket_gap = inf_norm(down.z - up.z);
  if (res.bracket_gap > c.agree_tol) {
    throw NoConvergenceError("upper and lower sweeps disagree by " + format_double(res.bracket_gap), down.z,
                             res.bracket_gap);
  }

  res.residual = inf_norm(vector_field(model, down.z));
  if (res.residual > c.residual_tol) {
    throw NoConvergenceError("residual " + format_double(res.residual) + " above tolerance", down.z,
                             res.bracket_gap);
  }
  State z_hat = State::split(down.z, n);
  if (!((z_hat.x.array() > 0.0).all() && (z_hat.x.array() < 1.0).all() && (z_hat.w.array() > 0.0).all())) {
    throw NoConvergenceError("limit is not strictly inside the domain", down.z, res.bracket_gap);
  }
  res.kind = EquilibriumKind::Endemic;
  res.z_hat = std::move(z_hat);
  return res;
}

Vector sis_field(const PopulationLayer& pop, const Vector& x) {
  const Vector bx = pop.beta * x;
  return bx - x.cwiseProduct(bx) - pop.delta.cwiseProduct(x);
}

SisResult sis_endemic(const PopulationLayer& pop, const FixedPointControls& c) {
  const Eigen::Index n = pop.delta.size();
  if (n < 1 || pop.beta.rows() != n || pop.beta.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "population layer dimensions are inconsistent");
  }
  if ((pop.beta.array() < 0.0).any()) throw Error(ErrorCode::NegativeEntry, "beta has a negative entry");
  if (!(pop.delta.array() > 0.0).all()) throw Error(ErrorCode::RegimeViolation, "every delta_i must be > 0");
  if (!is_irreducible(pop.beta)) throw Error(ErrorCode::NotIrreducible, "B is not irreducible");

  const Matrix ngm = pop.delta.cwiseInverse().asDiagonal() * pop.beta;
  SisResult res;
  res.rho = spectral_radius(ngm);
  if (res.rho <= 1.0 + kCriticalBand) return res;

  auto map = [&](const Vector& x) {
    const Vector y = ngm * x;
    return Vector(y.array() / (1.0 + y.array()));
  };
  const Sweep down = iterate_monotone(map, Vector::Ones(n), /*downward=*/true, c);
  res.iterations = down.iterations;
  res.residual = inf_norm(sis_field(pop, down.z));
  if (res.residual > c.residual_tol) {
    throw NoConvergenceError("SIS residual " + format_double(res.residual) + " above tolerance", down.z,
                             down.last_step);
  }
  if (!((down.z.array() > 0.0).all() && (down.z.array() < 1.0).all())) {
    throw NoConvergenceError("SIS limit is not strictly inside (0,1)^n", down.z, down.last_step);
  }
  res.kind = EquilibriumKind::Endemic;
  res.x_tilde = down.z;
  return res;
}

EndemicComparison compare_endemic(const LayeredModel& model, const FixedPointControls& c) {
  if (!model.satisfies_a2()) throw Error(ErrorCode::HypothesisViolated, "regime A2 does not hold");
  if (!is_irreducible(model.b_f())) throw Error(ErrorCode::HypothesisViolated, "B_f is not irreducible");
  if (!is_irreducible(model.pop().beta)) throw Error(ErrorCode::HypothesisViolated, "B is not irreducible");

  const EquilibriumResult layered = endemic_equilibrium(model, c);
  if (layered.kind != EquilibriumKind::Endemic) {
    throw Error(ErrorCode::HypothesisViolated, "rho(D_f^-1 B_f) = " + format_double(layered.rho) + " is not > 1");
  }
  const SisResult sis = sis_endemic(model.pop(), c);
  if (sis.kind != EquilibriumKind::Endemic) {
    throw Error(ErrorCode::HypothesisViolated, "rho(D^-1 B) = " + format_double(sis.rho) + " is not > 1");
  }

  EndemicComparison out;
  out.x_hat = layered.z_hat->x;
  out.x_tilde = *sis.x_tilde;
  out.gap = out.x_hat - out.x_tilde;
  out.min_gap = out.gap.minCoeff();
  out.max_gap = out.gap.maxCoeff();
  out.layered_dominates = out.min_gap >= -kOrderingTol && out.max_gap > kOrderingTol;
  return out;
}

}  // namespace siws
