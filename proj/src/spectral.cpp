#include "siws/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace siws {

namespace {

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, std::string(what) + " must be square");
}

Eigen::VectorXcd eigenvalues_of(const Matrix& m) {
  Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::EigenFailure, "dense eigensolver did not converge");
  return es.eigenvalues();
}

// Eigenvector of the eigenvalue with the largest real part, sign-fixed and
// normalized. Returns nullopt if it is not strictly positive.
std::optional<Vector> dominant_positive_vector(const Matrix& m) {
  Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/true);
  if (es.info() != Eigen::Success) return std::nullopt;
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < es.eigenvalues().size(); ++i) {
    if (es.eigenvalues()(i).real() > es.eigenvalues()(best).real()) best = i;
  }
  Vector v = es.eigenvectors().col(best).real();
  if (v.sum() < 0.0) v = -v;
  const double norm = v.norm();
  if (!(norm > 0.0)) return std::nullopt;
  v /= norm;
  if ((v.array() <= 0.0).any()) return std::nullopt;
  return v;
}

}  // namespace

const char* to_string(Threshold t) {
  switch (t) {
    case Threshold::SubThreshold: return "SubThreshold";
    case Threshold::Critical: return "Critical";
    case Threshold::SuperThreshold: return "SuperThreshold";
  }
  return "?";
}

std::vector<std::vector<int>> strongly_connected_components(const Matrix& m) {
  require_square(m, "irreducibility test matrix");
  const int k = static_cast<int>(m.rows());
  std::vector<std::vector<int>> succ(k);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < k; ++i) {
      if (m(i, j) > 0.0) succ[j].push_back(i);
    }
  }

  // Iterative Tarjan.
  std::vector<int> index(k, -1), low(k, 0), stack;
  std::vector<bool> on_stack(k, false);
  std::vector<std::vector<int>> out;
  int counter = 0;
  struct Frame {
    int v;
    std::size_t next;
  };
  std::vector<Frame> call;
  for (int root = 0; root < k; ++root) {
    if (index[root] != -1) continue;
    call.push_back({root, 0});
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      Frame& fr = call.back();
      const int v = fr.v;
      if (fr.next < succ[v].size()) {
        const int w = succ[v][fr.next++];
        if (index[w] == -1) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::vector<int> comp;
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
      }
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
    }
  }
  return out;
}

bool is_irreducible(const Matrix& m) {
  if (m.rows() == 0) return false;
  return strongly_connected_components(m).size() == 1;
}

bool is_metzler(const Matrix& m) {
  if (m.rows() != m.cols()) return false;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (i != j && !(m(i, j) >= 0.0)) return false;
    }
  }
  return true;
}

double spectral_radius(const Matrix& m) {
  require_square(m, "spectral radius argument");
  return eigenvalues_of(m).cwiseAbs().maxCoeff();
}

double stability_margin(const Matrix& m) {
  require_square(m, "stability margin argument");
  if (!is_metzler(m)) throw Error(ErrorCode::MetzlerViolation, "matrix has a negative off-diagonal entry");
  return eigenvalues_of(m).real().maxCoeff();
}

PerronResult perron_power_iteration(const Matrix& nonneg, double rel_tol, int max_iter) {
  require_square(nonneg, "Perron iteration matrix");
  const Eigen::Index k = nonneg.rows();
  PerronResult r;
  Vector v = Vector::Constant(k, 1.0 / std::sqrt(double(k)));
  for (int it = 1; it <= max_iter; ++it) {
    const Vector nv = nonneg * v;
    const Eigen::ArrayXd ratio = nv.array() / v.array();
    r.lower = ratio.minCoeff();
    r.upper = ratio.maxCoeff();
    r.iterations = it;
    if (r.upper - r.lower <= rel_tol * r.upper) {
      r.value = 0.5 * (r.lower + r.upper);
      r.vector = v;
      return r;
    }
    v = nv + v;
    v /= v.norm();
  }
  throw Error(ErrorCode::EigenFailure, "power iteration did not converge: bracket [" + std::to_string(r.lower) +
                                           ", " + std::to_string(r.upper) + "] after " +
                                           std::to_string(max_iter) + " iterations");
}

SpectralReport reproduction_number(const SiwsSystem& sys) {
  SpectralReport rep;
  const Vector inv_d = sys.d_f_diag().cwiseInverse();
  const Matrix ngm = inv_d.asDiagonal() * sys.b_f();

  const Eigen::VectorXcd ev = eigenvalues_of(ngm);
  rep.rho = ev.cwiseAbs().maxCoeff();
  rep.rho_power = rep.rho;
  rep.irreducible = is_irreducible(sys.b_f());

  if (rep.irreducible) {
    const PerronResult pr = perron_power_iteration(ngm);
    rep.rho_power = pr.value;
    const double scale = std::max(rep.rho, std::numeric_limits<double>::min());
    if (std::abs(pr.value - rep.rho) > 1e-9 * scale) {
      throw Error(ErrorCode::EigenFailure, "dense rho " + std::to_string(rep.rho) + " and power-iteration rho " +
                                               std::to_string(pr.value) + " disagree");
    }
    int near = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (std::abs(ev(i) - std::complex<double>(rep.rho, 0.0)) <= 1e-8 * std::max(1.0, rep.rho)) ++near;
    }
    if (near > 1) rep.warnings.push_back("Perron eigenvalue is numerically not simple");

    auto right = dominant_positive_vector(ngm);
    if (!right) {
      right = pr.vector;
      rep.warnings.push_back("dense right Perron vector not strictly positive; using power iterate");
    }
    auto left = dominant_positive_vector(ngm.transpose());
    if (!left) {
      left = perron_power_iteration(ngm.transpose()).vector;
      rep.warnings.push_back("dense left Perron vector not strictly positive; using power iterate");
    }
    rep.perron_right = std::move(right);
    rep.perron_left = std::move(left);
  }

  const Matrix pop_ngm = sys.pop().delta.cwiseInverse().asDiagonal() * sys.pop().beta;
  rep.rho_pop = spectral_radius(pop_ngm);
  rep.s_margin = stability_margin(sys.b_f() - sys.d_f());

  if (std::abs(rep.rho - 1.0) <= kCriticalBand) {
    rep.classification = Threshold::Critical;
  } else {
    rep.classification = rep.rho < 1.0 ? Threshold::SubThreshold : Threshold::SuperThreshold;
    if (rep.irreducible && ((rep.s_margin < 0.0) != (rep.rho < 1.0))) {
      rep.warnings.push_back("sign of s(B_f - D_f) disagrees with rho - 1");
    }
  }
  return rep;
}

double lyapunov_max_eig(const Matrix& m, const Vector& p) {
  const Matrix pm = p.asDiagonal() * m;
  const Matrix sym = pm.transpose() + pm;
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::EigenFailure, "symmetric eigensolver failed");
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

LyapunovCertificate diagonal_lyapunov(const Matrix& m, bool strict) {
  require_square(m, "Lyapunov matrix");
  if (!is_metzler(m)) throw Error(ErrorCode::MetzlerViolation, "matrix has a negative off-diagonal entry");
  const double s = stability_margin(m);
  if (strict && !(s < 0.0)) {
    throw Error(ErrorCode::HypothesisViolated, "strict certificate needs s(M) < 0, got " + std::to_string(s));
  }
  if (!strict && !(s <= kNonStrictTol)) {
    throw Error(ErrorCode::HypothesisViolated, "certificate needs s(M) <= 0, got " + std::to_string(s));
  }

  auto accepted = [strict](double lam) { return strict ? lam < 0.0 : lam <= kNonStrictTol; };

  LyapunovCertificate cert;
  cert.strict = strict;
  if (is_irreducible(m)) {
    // Shift to a nonnegative irreducible matrix with the same eigenvectors.
    const double shift = m.diagonal().minCoeff();
    const Matrix nonneg = m - shift * Matrix::Identity(m.rows(), m.cols());
    const Vector v = perron_power_iteration(nonneg).vector;
    const Vector u = perron_power_iteration(nonneg.transpose()).vector;
    cert.p_diag = u.cwiseQuotient(v);
    cert.p_diag /= cert.p_diag.maxCoeff();
  } else {
    // Perron vectors of a reducible matrix can vanish; start from P = I.
    cert.p_diag = Vector::Ones(m.rows());
  }
  cert.sym_max_eig = lyapunov_max_eig(m, cert.p_diag);
  if (accepted(cert.sym_max_eig)) return cert;

  // Projected gradient descent on lambda_max(M^T P + P M) over p >= floor,
  // normalized to max(p) = 1. d lambda / d p_i = 2 q_i (M q)_i.
  LyapunovCertificate best = cert;
  Vector p = cert.p_diag;
  double lam = cert.sym_max_eig;
  double step = 0.1 / std::max(1.0, m.cwiseAbs().maxCoeff());
  constexpr double floor = 1e-8;
  for (int it = 1; it <= 10000; ++it) {
    const Matrix pm = p.asDiagonal() * m;
    Eigen::SelfAdjointEigenSolver<Matrix> es(pm.transpose() + pm);
    const Vector q = es.eigenvectors().col(m.rows() - 1);
    const Vector grad = 2.0 * q.cwiseProduct(m * q);
    Vector trial = (p - step * grad).cwiseMax(floor);
    trial /= trial.maxCoeff();
    const double lam_trial = lyapunov_max_eig(m, trial);
    if (lam_trial < lam) {
      p = trial;
      lam = lam_trial;
      step *= 1.2;
    } else {
      step *= 0.5;
    }
    if (lam < best.sym_max_eig) {
      best.p_diag = p;
      best.sym_max_eig = lam;
      best.refinement_steps = it;
    }
    if (accepted(lam)) return best;
    if (step < 1e-300) break;
  }
  throw CertificateError("no diagonal certificate found, best lambda_max = " + std::to_string(best.sym_max_eig),
                         best);
}

}  // namespace siws
