#pragma once

#include "siws/error.hpp"
#include "siws/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace siws {

// Strongly connected components of the digraph with an edge j -> i whenever
// M(i,j) > 0. Components are listed in reverse topological order.
std::vector<std::vector<int>> strongly_connected_components(const Matrix& m);

bool is_irreducible(const Matrix& m);

enum class Threshold { SubThreshold, Critical, SuperThreshold };

const char* to_string(Threshold t);

inline constexpr double kCriticalBand = 1e-9;

struct SpectralReport {
  double rho = 0.0;       // rho(D_f^-1 B_f)
  double rho_power = 0.0;  // power-iteration value (irreducible only, else equals rho)
  double s_margin = 0.0;  // s(B_f - D_f)
  bool irreducible = false;
  std::optional<Vector> perron_right;
  std::optional<Vector> perron_left;
  double rho_pop = 0.0;  // rho(D^-1 B)
  Threshold classification = Threshold::SubThreshold;
  std::vector<std::string> warnings;
};

// Dense eigensolve of D_f^-1 B_f, cross-checked by power iteration when
// irreducible. Throws Error{EigenFailure}.
SpectralReport reproduction_number(const SiwsSystem& sys);

// Spectral radius of a square matrix via the dense eigensolver.
double spectral_radius(const Matrix& m);

// Largest real part of the spectrum of a Metzler matrix.
// Throws Error{MetzlerViolation | EigenFailure}.
double stability_margin(const Matrix& m);

bool is_metzler(const Matrix& m);

struct PerronResult {
  double value = 0.0;
  Vector vector;  // strictly positive, unit 2-norm
  int iterations = 0;
  // Collatz-Wielandt bounds min_i (Nv)_i/v_i <= rho <= max_i (Nv)_i/v_i.
  double lower = 0.0;
  double upper = 0.0;
};

// Power iteration on N + I for an irreducible nonnegative N (the shift makes
// the iteration matrix primitive). Stops when the Collatz-Wielandt bracket
// is tighter than rel_tol. Throws Error{EigenFailure} when it is not.
PerronResult perron_power_iteration(const Matrix& nonneg, double rel_tol = 1e-13, int max_iter = 200000);

struct LyapunovCertificate {
  Vector p_diag;
  double sym_max_eig = 0.0;  // lambda_max(M^T P + P M)
  bool strict = false;
  int refinement_steps = 0;
};

inline constexpr double kNonStrictTol = 1e-9;

// Largest eigenvalue of M^T P + P M for P = diag(p).
double lyapunov_max_eig(const Matrix& m, const Vector& p);

class CertificateError : public Error {
 public:
  CertificateError(const std::string& what, LyapunovCertificate best)
      : Error(ErrorCode::CertificateNotFound, what), best_(std::move(best)) {}
  const LyapunovCertificate& best() const { return best_; }

 private:
  LyapunovCertificate best_;
};

// Diagonal P with M^T P + P M negative (semi)definite, built from the left
// and right Perron vectors of M and verified afterwards. A failing candidate
// is refined by projected gradient descent on lambda_max before giving up.
// Reducible input skips the Perron construction and starts from P = I.
// Throws Error{MetzlerViolation | HypothesisViolated} and CertificateError.
LyapunovCertificate diagonal_lyapunov(const Matrix& m, bool strict);

}  // namespace siws
