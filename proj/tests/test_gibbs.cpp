#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "kmslab/acceptance.hpp"
#include "kmslab/gibbs.hpp"

using namespace kmslab;
using Catch::Matchers::WithinAbs;

namespace {
CauchyData span_data(const WeightedOperator& C, int modes, Rng& rng) {
  Vec f0 = Vec::Zero(C.dim), f1 = Vec::Zero(C.dim);
  for (int k = 0; k < modes; ++k) {
    f0 += rng.symmetric() * C.eigenvectors.col(k).real();
    f1 += rng.symmetric() * C.eigenvectors.col(k).real();
  }
  return CauchyData(f0.cast<Complex>(), f1.cast<Complex>());
}
}  // namespace

TEST_CASE("fock truncation bookkeeping") {
  Scenario sc = make_flat16();
  auto ground = ground_state(sc.lattice, sc.background);
  auto ft = build_fock(ground, 3, 25, 1.0);
  CHECK(ft.m() == 3);
  CHECK(ft.dim() == 26.0 * 26.0 * 26.0);
  CHECK_THAT(ft.omega_min(), WithinAbs(1.0, 1e-12));  // flat gap
  CHECK_THAT(ft.leakage_bound(), WithinAbs(std::exp(-25.0), 1e-14));
  // lowest modes selected, ascending
  CHECK(ft.omegas[0] <= ft.omegas[1]);
  CHECK(ft.omegas[1] <= ft.omegas[2]);

  CHECK_THROWS_AS(build_fock(ground, 5, 25, 1.0), InvariantError);  // cap
  CHECK_THROWS_AS(build_fock(ground, 0, 25, 1.0), InvariantError);
  CHECK_THROWS_AS(build_fock(ground, 3, 25, -1.0), InvariantError);
  auto kms = kms_state(sc.lattice, sc.background, 1.0);
  CHECK_THROWS_AS(build_fock(kms, 3, 25, 1.0), InvariantError);
}

TEST_CASE("truncated ladder operators") {
  Scenario sc = make_flat16();
  auto ft = build_fock(ground_state(sc.lattice, sc.background), 1, 6, 1.0);
  Mat a = ft.annihilator();
  SECTION("commutator [a, a*] = 1 below the top rung") {
    Mat comm = a * a.transpose() - a.transpose() * a;
    for (int k = 0; k < 6; ++k) CHECK_THAT(comm(k, k), WithinAbs(1.0, 1e-14));
    CHECK_THAT(comm(6, 6), WithinAbs(-6.0, 1e-12));  // truncation artifact
  }
  SECTION("adjoint annihilates the top rung") {
    Vec top = Vec::Zero(7);
    top[6] = 1.0;
    CHECK((a.transpose() * top).norm() == 0.0);
  }
  SECTION("number operator diagonal") {
    Mat num = a.transpose() * a;
    for (int k = 0; k <= 6; ++k) CHECK_THAT(num(k, k), WithinAbs(k, 1e-13));
  }
}

TEST_CASE("partition function: frozen single-mode values") {
  Scenario sc = make_flat16();
  auto ground = ground_state(sc.lattice, sc.background);
  auto ft = build_fock(ground, 1, 30, 1.0);  // omega_0 = 1
  // frozen: 1/(1 - e^{-1})
  CHECK_THAT(partition_function_closed(ft),
             WithinAbs(1.5819767068693265, 1e-14));
  CHECK_THAT(partition_function(ft),
             WithinAbs(partition_function_closed(ft), 1e-13));
  // frozen Bose occupation 1/(e - 1); truncation error ~ n_max e^{-n_max}
  CHECK_THAT(gibbs_occupation(ft, 0), WithinAbs(0.5819767068693265, 1e-11));
}

TEST_CASE("factorized traces equal the dense kronecker route") {
  Scenario sc = make_flat16();
  auto C = assemble_C(sc.lattice, sc.background);
  auto ground = ground_state(sc.lattice, sc.background);
  auto ft = build_fock(ground, 2, 5, 1.0);  // dim 36, dense is cheap
  Rng rng(71);
  CauchyData f = span_data(C, 2, rng);

  CMat phi = full_field_operator(ft, f);
  Vec h = full_hamiltonian_diagonal(ft);
  Vec gibbs = (-1.0 * ft.beta * h).array().exp();
  const double Z = gibbs.sum();

  SECTION("weyl expectation") {
    CMat W = detail::unitary_exp(phi);
    Complex dense = (gibbs.asDiagonal().toDenseMatrix().cast<Complex>() * W)
                        .trace() /
                    Z;
    Complex fact = gibbs_weyl_expectation(ft, f).value;
    CHECK(std::abs(dense - fact) < 1e-12);
  }
  SECTION("two-point function") {
    Complex dense =
        (gibbs.asDiagonal().toDenseMatrix().cast<Complex>() * phi * phi)
            .trace() /
        Z;
    Complex fact = gibbs_two_point(ft, f, f).value;
    CHECK(std::abs(dense - fact) < 1e-12);
  }
}

TEST_CASE("gibbs oracle reproduces the KMS state on retained modes") {
  Scenario sc = make_flat16();
  auto C = assemble_C(sc.lattice, sc.background);
  auto ground = ground_state(sc.lattice, sc.background);
  auto kms = kms_state(sc.lattice, sc.background, 1.0);
  auto ft = build_fock(ground, 3, 25, 1.0);
  Rng rng(73);
  for (int trial = 0; trial < 5; ++trial) {
    CauchyData f = span_data(C, 3, rng);
    auto ge = gibbs_weyl_expectation(ft, f);
    CHECK(ge.discarded_weight < 1e-12);  // in-span data leaks nothing
    CHECK(std::abs(ge.value - weyl_expectation(kms, f)) <
          1e-8 + ge.discarded_weight);
    auto g2 = gibbs_two_point(ft, f, f);
    CHECK(std::abs(g2.value - kms.smear(f, f, 0.0)) < 1e-8);
  }
}

TEST_CASE("kms trace identity holds exactly at finite truncation") {
  Scenario sc = make_flat16();
  auto C = assemble_C(sc.lattice, sc.background);
  auto ft = build_fock(ground_state(sc.lattice, sc.background), 2, 12, 0.9);
  Rng rng(79);
  CauchyData f = span_data(C, 2, rng);
  CauchyData g = span_data(C, 2, rng);
  for (double t : {0.0, 0.7, 2.3})
    CHECK(gibbs_kms_check(ft, f, g, t) < 1e-12);
  // negative control: wrong strip width breaks the identity
  CHECK(gibbs_kms_check(ft, f, g, 0.7, 1.05) > 1e-3);
}

TEST_CASE("quartic cumulant vanishes for the quasi-free gibbs state") {
  Scenario sc = make_flat16();
  auto C = assemble_C(sc.lattice, sc.background);
  auto ft = build_fock(ground_state(sc.lattice, sc.background), 3, 25, 1.0);
  Rng rng(83);
  CauchyData f = span_data(C, 3, rng);
  CHECK(quartic_cumulant(ft, f) < 1e-6);
}
