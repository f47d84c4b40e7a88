// Acceptance gate. One PASS/FAIL line per criterion; exit status is the
// number of failed criteria.

#include "siws/dynamics.hpp"
#include "siws/equilibria.hpp"
#include "siws/error.hpp"
#include "siws/observability.hpp"
#include "siws/scenario.hpp"
#include "siws/spectral.hpp"
#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <future>
#include <sstream>

using namespace siws;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Largest domain clamp seen by any simulation in this binary.
double g_max_clamp = 0.0;
std::size_t g_sim_count = 0;

void note_clamp(const Trajectory& t) {
  g_max_clamp = std::max(g_max_clamp, t.max_clamp);
  ++g_sim_count;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

int pick(Rng& rng, int lo, int hi) { return lo + static_cast<int>(rng.next() % static_cast<std::uint64_t>(hi - lo + 1)); }

Scenario random_scenario(std::uint64_t seed, Target target) {
  Rng rng(seed * 7919 + 17);
  const int n = pick(rng, 1, 8);
  const int m = pick(rng, 1, 8);
  return generate_random_scenario(n, m, rng.uniform(0.25, 0.8), seed, target);
}

State random_nonzero_state(Rng& rng, int n, int m) {
  State z = testing::random_state(rng, n, m);
  if (z.x.isZero(0.0) && z.w.isZero(0.0)) z.x(0) = 0.5;
  return z;
}

// Same dynamics, but with the decay moved into the resource outflow so that
// only the weaker regime holds.
LayeredModel as_a1_only(const Scenario& s) {
  InfrastructureLayer infra = s.infra;
  infra.alpha.diagonal() -= infra.delta_w;
  infra.delta_w.setZero();
  return validate_model(s.pop, infra, s.coupling, Regime::A1);
}

Outcome c1_extinction() {
  Outcome o;
  double worst = 0.0;
  int runs = 0;
  std::vector<std::future<std::pair<double, double>>> jobs;
  for (std::uint64_t k = 0; k < 50; ++k) {
    jobs.push_back(std::async(std::launch::async, [k] {
      const Scenario s = random_scenario(1000 + k, Target::SubThreshold);
      const LayeredModel model = k % 2 ? as_a1_only(s) : s.validated();
      const double rho = reproduction_number(model).rho;
      if (rho > 1 - 1e-3 || !is_irreducible(model.b_f())) return std::pair{1.0, 0.0};
      Rng rng(k + 1);
      double local = 0.0, clamp = 0.0;
      for (int r = 0; r < 10; ++r) {
        const Trajectory t = simulate(model, testing::random_state(rng, model.n(), model.m()), 200.0);
        local = std::max(local, t.states.back().stacked().lpNorm<Eigen::Infinity>());
        clamp = std::max(clamp, t.max_clamp);
      }
      return std::pair{local, clamp};
    }));
  }
  for (auto& j : jobs) {
    const auto [norm, clamp] = j.get();
    worst = std::max(worst, norm);
    g_max_clamp = std::max(g_max_clamp, clamp);
    g_sim_count += 10;
    runs += 10;
  }
  o.pass = worst < 1e-6;
  o.detail = std::to_string(runs) + " runs, max ||z(200)|| = " + fmt(worst);
  return o;
}

Outcome c2_endemic() {
  Outcome o;
  double worst_res = 0.0, worst_dist = 0.0, min_z = 1e300, max_x = 0.0;
  std::vector<std::future<std::array<double, 5>>> jobs;
  for (std::uint64_t k = 0; k < 50; ++k) {
    jobs.push_back(std::async(std::launch::async, [k]() -> std::array<double, 5> {
      const LayeredModel model = random_scenario(2000 + k, Target::SuperThreshold).validated();
      const EquilibriumResult r = endemic_equilibrium(model);
      if (r.kind != EquilibriumKind::Endemic) return {1e300, 1e300, -1, 2, 0};
      const Vector zhat = r.z_hat->stacked();
      Rng rng(k + 77);
      double dist = 0.0, clamp = 0.0;
      for (int i = 0; i < 5; ++i) {
        const Trajectory t = simulate(model, random_nonzero_state(rng, model.n(), model.m()), 1000.0);
        dist = std::max(dist, (t.states.back().stacked() - zhat).lpNorm<Eigen::Infinity>());
        clamp = std::max(clamp, t.max_clamp);
      }
      return {r.residual, dist, zhat.minCoeff(), r.z_hat->x.maxCoeff(), clamp};
    }));
  }
  for (auto& j : jobs) {
    try {
      const auto v = j.get();
      worst_res = std::max(worst_res, v[0]);
      worst_dist = std::max(worst_dist, v[1]);
      min_z = std::min(min_z, v[2]);
      max_x = std::max(max_x, v[3]);
      g_max_clamp = std::max(g_max_clamp, v[4]);
      g_sim_count += 5;
    } catch (const Error& e) {
      o.pass = false;
      o.detail += std::string(e.what()) + "; ";
    }
  }
  o.pass = o.pass && worst_res < 1e-10 && min_z > 0.0 && max_x < 1.0 && worst_dist < 1e-6;
  o.detail += "50 models, max residual " + fmt(worst_res) + ", min z " + fmt(min_z) + ", max x " + fmt(max_x) +
              ", max ODE distance " + fmt(worst_dist);
  return o;
}

Outcome c3_scalar() {
  const LayeredModel m = testing::scalar_model();
  const EquilibriumResult r = endemic_equilibrium(m);
  const SisResult s = sis_endemic(m.pop());
  const double ex = std::abs(r.z_hat->x(0) - 2.0 / 3.0);
  const double ew = std::abs(r.z_hat->w(0) - 2.0 / 3.0);
  const double es = std::abs((*s.x_tilde)(0) - 0.5);
  return {std::max({ex, ew, es}) < 1e-12,
          "|x-2/3| " + fmt(ex) + ", |w-2/3| " + fmt(ew) + ", |x_sis-1/2| " + fmt(es)};
}

Outcome c4_layered_rho_exceeds_pop() {
  double worst = 1e300;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const SpectralReport r =
        reproduction_number(random_scenario(3000 + k, k % 2 ? Target::SubThreshold : Target::SuperThreshold).validated());
    worst = std::min(worst, (r.rho - r.rho_pop) / (1e-12 * r.rho));
  }
  return {worst > 1.0, "100 instances, min (rho - rho_pop)/(1e-12 rho) = " + fmt(worst)};
}

Outcome c5_endemic_ordering() {
  Outcome o;
  int found = 0, tried = 0;
  double worst_low = 1e300, min_max_gap = 1e300;
  for (std::uint64_t seed = 4000; found < 50 && tried < 5000; ++seed, ++tried) {
    Rng rng(seed);
    const int n = pick(rng, 2, 8), m = pick(rng, 1, 6);
    const LayeredModel model = generate_random_scenario(n, m, rng.uniform(0.5, 0.9), seed, Target::SuperThreshold).validated();
    if (!is_irreducible(model.pop().beta) || reproduction_number(model).rho_pop <= 1.0 + 1e-6) continue;
    const EndemicComparison c = compare_endemic(model);
    worst_low = std::min(worst_low, (c.x_hat - c.x_tilde).minCoeff());
    min_max_gap = std::min(min_max_gap, c.max_gap);
    if (!c.layered_dominates) o.pass = false;
    ++found;
  }
  const EndemicComparison sc = compare_endemic(testing::scalar_model());
  const double scalar_err = std::abs(sc.max_gap - 1.0 / 6.0);
  o.pass = o.pass && found == 50 && worst_low >= -1e-9 && min_max_gap > 1e-9 && scalar_err < 1e-12;
  o.detail = std::to_string(found) + " instances (" + std::to_string(tried) + " drawn), min(x_hat - x_tilde) " +
             fmt(worst_low) + ", min max-gap " + fmt(min_max_gap) + ", scalar |gap-1/6| " + fmt(scalar_err);
  return o;
}

Outcome c6_trichotomy() {
  int checked = 0, bad = 0;
  for (std::uint64_t k = 0; checked < 200 && k < 400; ++k) {
    const SpectralReport r =
        reproduction_number(random_scenario(5000 + k, k % 2 ? Target::SubThreshold : Target::SuperThreshold).validated());
    if (std::abs(r.rho - 1.0) <= 1e-6) continue;
    ++checked;
    if ((r.s_margin > 0) != (r.rho > 1) || r.s_margin == 0.0) ++bad;
  }
  return {checked == 200 && bad == 0, std::to_string(checked) + " models, " + std::to_string(bad) + " sign mismatches"};
}

Outcome c8_two_by_two() {
  const SiwsSystem sys = testing::two_by_two_system();
  const MeasurementMap meas{Matrix::Identity(2, 2)};
  double worst = 0.0;
  for (double w1 : {0.0, 0.25, 0.5, 1.0, 1.75}) {
    Vector w0(2);
    w0 << w1, 0.3;
    Matrix ref(2, 2);
    ref << 1 - 2 * w1, 1, 2 - 2 * w1, 1;
    worst = std::max(worst, (closed_form_rows(sys, meas, w0).block(4, 2, 2, 2) - ref).cwiseAbs().maxCoeff());
    worst = std::max(worst, (build_O(sys, meas, w0, 4).o.block(4, 2, 2, 2) - ref).cwiseAbs().maxCoeff());
  }
  Rng rng(8);
  std::string ranks;
  bool all_full = true;
  for (int i = 0; i < 5; ++i) {
    Vector w0(2);
    w0 << rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0);
    const int r = rank_test(build_O(sys, meas, w0, 4).o).rank;
    ranks += std::to_string(r);
    all_full = all_full && r == 4;
  }
  const FCondition f = f_condition(sys, meas);
  return {worst == 0.0 && all_full && f.rank_cbw == 1 && !f.holds,
          "CW_w max error " + fmt(worst) + ", ranks at random w0: " + ranks + ", rank(CB_w) = " + std::to_string(f.rank_cbw)};
}

Outcome c9_closed_form_and_fd() {
  Rng rng(99);
  double worst_closed = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = pick(rng, 1, 6), m = pick(rng, 1, 6);
    const SiwsSystem sys = testing::random_system(rng, n, m);
    Matrix c(pick(rng, 1, n), n);
    for (int i = 0; i < c.rows(); ++i)
      for (int j = 0; j < n; ++j) c(i, j) = rng.uniform(-1.0, 1.0);
    Vector w0(m);
    for (int j = 0; j < m; ++j) w0(j) = rng.uniform(0.0, 2.0);
    try {
      worst_closed = std::max(worst_closed, build_O(sys, MeasurementMap{c}, w0, 3).closed_form_mismatch);
    } catch (const Error&) {
      worst_closed = 1e300;
    }
  }
  double worst_fd = 0.0;
  const double h = 1e-6;
  for (int t = 0; t < 20; ++t) {
    const int n = pick(rng, 1, 5), m = pick(rng, 1, 5);
    const SiwsSystem sys = testing::random_system(rng, n, m);
    const Vector z0 = testing::random_state(rng, n, m).stacked();
    const TaylorJet jet = taylor_jet(sys, z0, 4, true);
    for (int k = 0; k <= 4; ++k) {
      Matrix fd(sys.dim(), sys.dim());
      for (int col = 0; col < sys.dim(); ++col) {
        Vector zp = z0, zm = z0;
        zp(col) += h;
        zm(col) -= h;
        fd.col(col) = (taylor_jet(sys, zp, 4, false).coeffs[k] - taylor_jet(sys, zm, 4, false).coeffs[k]) / (2 * h);
      }
      worst_fd = std::max(worst_fd, testing::rel_err(jet.sens[k], fd));
    }
  }
  return {worst_closed <= 1e-8 && worst_fd <= 1e-5,
          "100 instances, max closed-form mismatch " + fmt(worst_closed) + "; 20 instances, max FD error " + fmt(worst_fd)};
}

Outcome c10_full_state_sensing() {
  Rng rng(10);
  int full = 0, eligible = 0;
  for (int t = 0; t < 50; ++t) {
    const int m = pick(rng, 1, 5), n = m + pick(rng, 0, 3);
    const SiwsSystem sys = testing::random_system(rng, n, m);
    if (!sensor_placement_check(sys).observable) continue;
    ++eligible;
    Vector w0(m);
    for (int j = 0; j < m; ++j) w0(j) = rng.uniform(0.0, 2.0);
    if (rank_test(build_O(sys, MeasurementMap{Matrix::Identity(n, n)}, w0, n + m).o).full_rank) ++full;
  }
  return {eligible == 50 && full == 50,
          std::to_string(full) + "/" + std::to_string(eligible) + " full rank with C = I"};
}

Matrix random_irreducible_metzler(Rng& rng, int k) {
  for (;;) {
    Matrix m = Matrix::Zero(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        if (i != j && rng.bernoulli(0.35)) m(i, j) = rng.uniform(0.1, 2.0);
    for (int i = 0; i < k; ++i) m(i, i) = rng.uniform(-3.0, 0.0);
    if (is_irreducible(m)) return m;
  }
}

Outcome c11_lyapunov() {
  Rng rng(11);
  double worst_strict = -1e300, worst_ns = -1e300, min_p = 1e300;
  int failures = 0;
  for (int t = 0; t < 70; ++t) {
    const int k = pick(rng, 1, 20);
    Matrix m = random_irreducible_metzler(rng, k);
    const double s = stability_margin(m);
    const bool strict = t < 50;
    m.diagonal().array() -= s + (strict ? rng.uniform(0.01, 1.0) : 0.0);
    try {
      const LyapunovCertificate c = diagonal_lyapunov(m, strict);
      min_p = std::min(min_p, c.p_diag.minCoeff());
      (strict ? worst_strict : worst_ns) = std::max(strict ? worst_strict : worst_ns, c.sym_max_eig);
    } catch (const Error&) {
      ++failures;
    }
  }
  return {failures == 0 && worst_strict < 0.0 && worst_ns <= 1e-9 && min_p > 0.0,
          "50 strict: max lambda " + fmt(worst_strict) + "; 20 with s = 0: max lambda " + fmt(worst_ns) +
              "; min p " + fmt(min_p) + "; failures " + std::to_string(failures)};
}

Outcome c12_shipped_scenarios(const fs::path& scen_dir, const fs::path& out_root) {
  Outcome o;
  std::ostringstream detail;
  auto run = [&](const std::string& name) {
    const RunOutcome r = run_scenario_file(scen_dir / (name + ".json"), out_root / name);
    if (r.report.contains("simulation") && r.report["simulation"].is_object()) {
      g_max_clamp = std::max(g_max_clamp, r.report["simulation"]["max_clamp"].get<double>());
      ++g_sim_count;
    }
    if (r.exit_code != 0) {
      o.pass = false;
      detail << name << " exit " << r.exit_code << "; ";
    }
    return r.report;
  };
  auto expect = [&](const std::string& name, bool ok, const std::string& what) {
    if (!ok) o.pass = false;
    detail << name << (ok ? " ok" : " FAILED") << " (" << what << "); ";
  };

  try {
    json a = run("fig2a");
    const double a_norm = a["simulation"]["final_inf_norm"];
    expect("fig2a", a["spectral"]["rho"].get<double>() < 1.0 && a_norm < 1e-6, "||z(200)|| " + fmt(a_norm));

    json b = run("fig2b");
    const double b_dist = b["simulation"]["distance_to_equilibrium"];
    expect("fig2b", b["spectral"]["rho"].get<double>() > 1.0 && b["equilibrium"]["kind"] == "Endemic" && b_dist < 1e-6,
           "distance " + fmt(b_dist));

    json c = run("fig3");
    // Convergence without an equilibrium claim: the state stops moving over
    // the last quarter of the horizon.
    const Scenario s3 = load_scenario(scen_dir / "fig3.json");
    const Trajectory t3 = simulate(s3.validated(), *s3.initial_state, s3.t_end, s3.controls);
    note_clamp(t3);
    const double drift =
        (t3.states.back().stacked() - t3.states[3 * (t3.states.size() - 1) / 4].stacked()).lpNorm<Eigen::Infinity>();
    expect("fig3",
           c["model"]["regime"] == "A1" && !c["model"]["satisfies_a2"].get<bool>() &&
               c["equilibrium"]["kind"] == "Unclassified" && drift < 1e-6,
           "drift over last quarter " + fmt(drift));

    json d = run("fig5a");
    double x_gap = 0.0;
    for (std::size_t i = 0; i < d["sis"]["x_tilde"].size(); ++i) {
      x_gap = std::max(x_gap, std::abs(d["simulation"]["final_state"]["x"][i].get<double>() -
                                       d["sis"]["x_tilde"][i].get<double>()));
    }
    const double w5 = d["simulation"]["w_mean_final"];
    expect("fig5a", w5 < 1e-6 && d["sis"]["kind"] == "Endemic" && x_gap < 1e-6,
           "w_mean " + fmt(w5) + ", |x - x_sis| " + fmt(x_gap));

    json e = run("fig5b");
    const double e_dist = e["simulation"]["distance_to_equilibrium"];
    expect("fig5b",
           e["equilibrium"]["kind"] == "Endemic" && e["sis"]["kind"] == "Endemic" &&
               e["compare"]["layered_dominates"] == true && e_dist < 1e-6,
           "distance " + fmt(e_dist));
  } catch (const std::exception& ex) {
    o.pass = false;
    detail << "exception: " << ex.what();
  }
  o.detail = detail.str();
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path scen_dir = argc > 1 ? fs::path(argv[1]) : fs::path(SIWS_SCENARIO_DIR);
  const fs::path out_root = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "siws_acceptance";

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"C1  extinction below threshold", c1_extinction},
      {"C2  endemic equilibrium above threshold", c2_endemic},
      {"C3  scalar closed forms", c3_scalar},
      {"C4  layered rho exceeds population rho", c4_layered_rho_exceeds_pop},
      {"C5  layered endemic level dominates SIS", c5_endemic_ordering},
      {"C6  sign of s(B_f - D_f) matches rho - 1", c6_trichotomy},
      {"C7  domain clamps within tolerance", [] {
         return Outcome{g_max_clamp <= 1e-9,
                        std::to_string(g_sim_count) + " simulations, max clamp " + fmt(g_max_clamp)};
       }},
      {"C8  two-by-two observability example", c8_two_by_two},
      {"C9  closed-form rows and sensitivities", c9_closed_form_and_fd},
      {"C10 full-state sensing gives full rank", c10_full_state_sensing},
      {"C11 diagonal Lyapunov certificates", c11_lyapunov},
      {"C12 shipped scenarios", [&] { return c12_shipped_scenarios(scen_dir, out_root); }},
  };

  // C7 aggregates the simulations of C1, C2 and C12, so it is evaluated last.
  std::vector<std::pair<std::string, Outcome>> results(criteria.size());
  int failed = 0;
  for (std::size_t i : {0, 1, 2, 3, 4, 5, 7, 8, 9, 10, 11, 6}) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.detail += " [" + fmt(secs) + " s]";
    results[i] = {criteria[i].first, o};
  }
  for (const auto& [name, o] : results) {
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    if (!o.pass) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
  return failed;
}
