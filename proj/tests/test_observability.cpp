#include "doctest.h"

#include "siws/dynamics.hpp"
#include "siws/error.hpp"
#include "siws/observability.hpp"
#include "support.hpp"

using namespace siws;

TEST_SUITE("observability") {

TEST_CASE("CW_w block of the two-by-two example") {
  const SiwsSystem sys = testing::two_by_two_system();
  const MeasurementMap meas{Matrix::Identity(2, 2)};
  for (double w1 : {0.0, 0.3, 0.5, 1.25, 1.9}) {
    Vector w0(2);
    w0 << w1, 0.7;
    Matrix ref(2, 2);
    ref << 1 - 2 * w1, 1, 2 - 2 * w1, 1;
    const Matrix closed = closed_form_rows(sys, meas, w0);
    CHECK((closed.block(4, 2, 2, 2) - ref).cwiseAbs().maxCoeff() < 1e-14);
    const ObservabilityMatrix o = build_O(sys, meas, w0, 4);
    CHECK((o.o.block(4, 2, 2, 2) - ref).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("two-by-two example is observable without the sufficient condition") {
  const SiwsSystem sys = testing::two_by_two_system();
  const MeasurementMap meas{Matrix::Identity(2, 2)};
  ObserveOptions opt;
  opt.seed = 2;
  const ObservabilityReport r = analyze_observability(sys, meas, Vector::Constant(2, 0.5), opt);
  CHECK(r.rank.rank == 4);
  CHECK(r.rank.full_rank);
  CHECK(r.generic);
  CHECK(r.sample_ranks.size() == 6);
  CHECK(r.f_cond.rank_c == 2);
  CHECK(r.f_cond.rank_cbw == 1);
  CHECK_FALSE(r.f_cond.holds);
  REQUIRE(r.full_state_sensing);
  CHECK_FALSE(r.full_state_sensing->observable);
  CHECK(r.full_state_sensing->deficiency == 1);
  CHECK_FALSE(r.a_w_satisfies_a2);
}

TEST_CASE("leading block rows at w0 = 0") {
  Rng rng(5);
  const SiwsSystem sys = testing::random_system(rng, 3, 2);
  const MeasurementMap meas{Matrix::Identity(3, 3)};
  const ObservabilityMatrix o = build_O(sys, meas, Vector::Zero(2), 5);
  CHECK(o.o.block(0, 0, 3, 3) == Matrix::Identity(3, 3));
  CHECK(o.o.block(0, 3, 3, 2).isZero(0.0));
  const Matrix bd = sys.pop().beta - Matrix(sys.pop().delta.asDiagonal());
  CHECK(o.o.block(3, 0, 3, 3) == bd);
}

TEST_CASE("closed-form rows agree with the jet on random instances") {
  Rng rng(6);
  for (int t = 0; t < 30; ++t) {
    const int n = 1 + t % 4, m = 1 + t % 3;
    const SiwsSystem sys = testing::random_system(rng, n, m);
    Matrix c(1 + t % n, n);
    for (int i = 0; i < c.rows(); ++i)
      for (int j = 0; j < n; ++j) c(i, j) = rng.uniform(-1.0, 1.0);
    Vector w0(m);
    for (int j = 0; j < m; ++j) w0(j) = rng.uniform(0.0, 2.0);
    const ObservabilityMatrix o = build_O(sys, MeasurementMap{c}, w0, 3);
    CHECK(o.closed_form_mismatch <= kClosedFormTol);
    REQUIRE(o.row3_mismatch);
  }
}

TEST_CASE("block rows match finite differences of output derivatives") {
  Rng rng(7);
  const double h = 1e-6;
  const SiwsSystem sys = testing::random_system(rng, 3, 2);
  const MeasurementMap meas{Matrix::Identity(3, 3)};
  Vector w0(2);
  w0 << 0.4, 1.1;
  const ObservabilityMatrix o = build_O(sys, meas, w0, 4);
  Vector z0 = Vector::Zero(5);
  z0.tail(2) = w0;
  double factorial = 1.0;
  for (int k = 0; k <= 4; ++k) {
    if (k > 0) factorial *= k;
    Matrix fd(3, 5);
    for (int c = 0; c < 5; ++c) {
      Vector zp = z0, zm = z0;
      zp(c) += h;
      zm(c) -= h;
      fd.col(c) = factorial * (taylor_jet(sys, zp, 4, false).coeffs[k].head(3) -
                               taylor_jet(sys, zm, 4, false).coeffs[k].head(3)) / (2 * h);
    }
    CHECK(testing::rel_err(o.o.middleRows(3 * k, 3), fd) < 1e-5);
  }
}

TEST_CASE("rank_test basics") {
  CHECK(rank_test(Matrix::Zero(4, 3)).rank == 0);
  Matrix blk = Matrix::Zero(5, 5);
  blk.topLeftCorner(2, 2) << 1, 2, 2, 4;  // rank 1
  blk.bottomRightCorner(3, 3) = Matrix::Identity(3, 3);
  blk(2, 3) = 7;
  const RankResult r = rank_test(blk);
  CHECK(r.rank == 4);
  CHECK_FALSE(r.full_rank);
  CHECK(rank_test(Matrix::Identity(3, 3)).full_rank);
}

TEST_CASE("f_condition and sensor placement") {
  Matrix bw(3, 2);
  bw << 1, 0, 0, 1, 1, 1;
  const SiwsSystem sys(PopulationLayer{Matrix::Ones(3, 3), Vector::Ones(3)},
                       InfrastructureLayer{Matrix::Zero(2, 2), Vector::Ones(2)}, CouplingLayer{bw, Matrix::Ones(2, 3)});
  const FCondition f = f_condition(sys, MeasurementMap{Matrix::Identity(3, 3)});
  CHECK(f.holds);
  CHECK(sensor_placement_check(sys).observable);

  Matrix c = Matrix::Identity(3, 3);
  c(1, 1) = 0;
  CHECK_FALSE(f_condition(sys, MeasurementMap{c}).holds);

  Matrix dup(3, 2);
  dup << 1, 1, 2, 2, 0, 0;
  const SiwsSystem sys2(sys.pop(), sys.infra(), CouplingLayer{dup, sys.coupling().c_w});
  const SensorPlacement s = sensor_placement_check(sys2);
  CHECK_FALSE(s.observable);
  CHECK(s.deficiency == 1);

  const SiwsSystem wide(PopulationLayer{Matrix::Ones(1, 1), Vector::Ones(1)},
                        InfrastructureLayer{Matrix::Zero(2, 2), Vector::Ones(2)},
                        CouplingLayer{Matrix::Ones(1, 2), Matrix::Ones(2, 1)});
  CHECK_THROWS_AS(sensor_placement_check(wide), Error);
}

TEST_CASE("full column rank B_w gives a full-rank O") {
  Rng rng(9);
  for (int t = 0; t < 10; ++t) {
    const int m = 1 + t % 3, n = m + t % 2;
    const SiwsSystem sys = testing::random_system(rng, n, m);
    ObserveOptions opt;
    opt.seed = t;
    opt.samples = 2;
    const ObservabilityReport r = analyze_observability(sys, MeasurementMap{Matrix::Identity(n, n)},
                                                        Vector::Constant(m, 0.5), opt);
    REQUIRE(r.f_cond.holds);
    CHECK(r.rank.full_rank);
  }
}

TEST_CASE("dimension errors") {
  const SiwsSystem sys = testing::two_by_two_system();
  CHECK_THROWS_AS(build_O(sys, MeasurementMap{Matrix::Identity(3, 3)}, Vector::Zero(2), 3), Error);
  CHECK_THROWS_AS(build_O(sys, MeasurementMap{Matrix::Identity(2, 2)}, Vector::Zero(3), 3), Error);
  CHECK_THROWS_AS(build_O(sys, MeasurementMap{Matrix::Identity(2, 2)}, Vector::Zero(2), 0), Error);
}

}  // TEST_SUITE
