#pragma once

#include "siws/model.hpp"
#include "siws/random.hpp"
#include "siws/scenario.hpp"

#include <algorithm>
#include <cmath>

namespace siws::testing {

// beta=2, delta=1, beta_w=c=delta_w=1: endemic point (2/3, 2/3), SIS level 1/2.
inline LayeredModel scalar_model(double beta = 2.0, double delta = 1.0, double beta_w = 1.0, double c = 1.0,
                                 double delta_w = 1.0) {
  return validate_model(PopulationLayer{Matrix::Constant(1, 1, beta), Vector::Constant(1, delta)},
                        InfrastructureLayer{Matrix::Zero(1, 1), Vector::Constant(1, delta_w)},
                        CouplingLayer{Matrix::Constant(1, 1, beta_w), Matrix::Constant(1, 1, c)}, Regime::A2);
}

// n = m = 2, C = I, D = D_w = I, A_w = 11^T. A_w is outside both regimes.
inline SiwsSystem two_by_two_system() {
  Matrix b(2, 2);
  b << 1, 1, 1, 2;
  Matrix bw(2, 2);
  bw << 1, 0, 1, 0;
  return SiwsSystem(PopulationLayer{b, Vector::Ones(2)}, InfrastructureLayer{Matrix::Ones(2, 2), Vector::Ones(2)},
                    CouplingLayer{bw, Matrix::Ones(2, 2)});
}

inline LayeredModel random_model(std::uint64_t seed, Target target, int n_max = 6, int m_max = 6) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const int n = 1 + static_cast<int>(rng.next() % static_cast<std::uint64_t>(n_max));
  const int m = 1 + static_cast<int>(rng.next() % static_cast<std::uint64_t>(m_max));
  const double density = rng.uniform(0.3, 0.8);
  return generate_random_scenario(n, m, density, seed, target).validated();
}

// Unconstrained nonnegative parameters, for the observability tests.
inline SiwsSystem random_system(Rng& rng, int n, int m) {
  auto mat = [&](int r, int c) {
    Matrix a(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) a(i, j) = rng.uniform();
    return a;
  };
  auto vec = [&](int k) {
    Vector v(k);
    for (int i = 0; i < k; ++i) v(i) = rng.uniform(0.5, 1.5);
    return v;
  };
  return SiwsSystem(PopulationLayer{mat(n, n), vec(n)}, InfrastructureLayer{mat(m, m), vec(m)},
                    CouplingLayer{mat(n, m), mat(m, n)});
}

inline State random_state(Rng& rng, int n, int m) {
  State z{Vector(n), Vector(m)};
  for (int i = 0; i < n; ++i) z.x(i) = rng.uniform();
  for (int j = 0; j < m; ++j) z.w(j) = rng.uniform(0.0, 2.0);
  return z;
}

inline double rel_err(const Matrix& a, const Matrix& ref) {
  return (a - ref).cwiseAbs().maxCoeff() / std::max(1.0, ref.cwiseAbs().maxCoeff());
}

}  // namespace siws::testing
