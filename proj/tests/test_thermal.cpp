#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "kmslab/acceptance.hpp"
#include "kmslab/thermal.hpp"

using namespace kmslab;
using Catch::Matchers::WithinAbs;

TEST_CASE("flat instance: frozen kernel diagonals") {
  Scenario sc = make_flat16();
  auto C = assemble_C(sc.lattice, sc.background);

  SECTION("ground W00 diagonal = (1/2pi) sum_k 1/(2 omega_k)") {
    auto g = ground_state_closed(sc.lattice, sc.background, C);
    auto b = g.blocks(0.0);
    for (int i = 0; i < 16; ++i)
      CHECK_THAT(b.w00(i, i).real(),
                 WithinAbs(0.4769883972722701, 1e-12));  // frozen
  }
  SECTION("beta=1 W00 diagonal = (1/2pi) sum_k coth(omega_k/2)/(2 omega_k)") {
    auto k = kms_state_closed(sc.lattice, sc.background, C, 1.0);
    auto b = k.blocks(0.0);
    for (int i = 0; i < 16; ++i)
      CHECK_THAT(b.w00(i, i).real(),
                 WithinAbs(0.6705633667593885, 1e-12));  // frozen
  }
}

TEST_CASE("equal-time commutator part of the mixed blocks is the delta") {
  // Universal (all instances, ground and KMS): the antisymmetric part
  // w01 - w10^T equals i diag(1/w).  On stationary backgrounds the
  // symmetric (flux) part of w01 is genuinely nonzero, so only static
  // instances get the stronger w01 = +(i/2) diag(1/w) check.
  for (auto maker : {make_flat16, make_lapse16, make_shift16}) {
    Scenario sc = maker();
    TwoPointState ground = ground_state(sc.lattice, sc.background);
    TwoPointState kms = kms_state(sc.lattice, sc.background, 1.3);
    for (const auto& st : {ground, kms}) {
      auto b = st.blocks(0.0);
      CMat comm = b.w01 - b.w10.transpose();
      for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) {
          const Complex want =
              i == j ? Complex(0, 1.0 / sc.lattice.vol_weight[i]) : 0.0;
          CHECK(std::abs(comm(i, j) - want) < 1e-10);
        }
      if (sc.background.is_static) {
        for (int i = 0; i < 16; ++i)
          for (int j = 0; j < 16; ++j) {
            const Complex want =
                i == j ? Complex(0, 0.5 / sc.lattice.vol_weight[i]) : 0.0;
            CHECK(std::abs(b.w01(i, j) - want) < 1e-10);
            CHECK(std::abs(b.w10(i, j) + want) < 1e-10);
          }
      }
    }
  }
}

TEST_CASE("two-point positivity and hermiticity") {
  Scenario sc = make_shift16();
  auto st = kms_state(sc.lattice, sc.background, 0.7);
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    CauchyData d = rng.complex_data(16);
    Complex norm2 = st.smear(d.conj(), d, 0.0);
    CHECK(norm2.real() >= 0.0);
    CHECK(std::abs(norm2.imag()) < 1e-12 * (1.0 + norm2.real()));
    CauchyData f = rng.real_data(16), g = rng.real_data(16);
    CHECK(std::abs(st.smear(f, g, 0.0) - std::conj(st.smear(g, f, 0.0))) <
          1e-12);
  }
}

TEST_CASE("heisenberg evolution intertwines with the one-particle phase") {
  Scenario sc = make_shift16();
  auto ps = assemble_phase_space(sc.lattice, sc.background);
  Evolution ev(ps);
  auto st = kms_state_spectral(sc.lattice, sc.background, ps, 1.0);
  Rng rng(43);
  CauchyData f = rng.real_data(16), g = rng.real_data(16);
  const double t = 1.1;
  // P T_t = e^{-ith} P, hence w2(f, T_{-t} g; 0) = w2(f, g; dt=-t)
  Complex a = st.smear(f, ev(g, -t), 0.0);
  Complex b = st.smear(f, g, -t);
  CHECK(std::abs(a - b) < 1e-10 * std::abs(b));
}

TEST_CASE("kms verification residuals") {
  Scenario sc = make_lapse16();
  auto C = assemble_C(sc.lattice, sc.background);
  auto ps = assemble_phase_space(sc.lattice, sc.background);
  Evolution ev(ps);
  auto st = kms_state_closed(sc.lattice, sc.background, C, 2.0);
  Rng rng(47);
  CauchyData f = rng.real_data(16), g = rng.real_data(16);
  for (double t : {0.0, 1.6}) {
    auto r = kms_verify(st, ev, f, g, t);
    CHECK(r.one_particle < 1e-10);
    CHECK(r.weyl < 1e-10);
  }
  SECTION("corrupted state fails loudly") {
    auto bad = st.corrupted(1.02);
    CHECK(kms_verify(bad, ev, f, g, 0.7).one_particle > 1e-3);
  }
  SECTION("ground state rejected") {
    auto ground = ground_state_closed(sc.lattice, sc.background, C);
    CHECK_THROWS_AS(kms_verify(ground, ev, f, g, 0.0), InvariantError);
  }
  SECTION("the ground state is the beta -> inf limit, not KMS at finite beta") {
    // ground correlators inserted into the finite-beta identity must fail
    auto ground = ground_state_closed(sc.lattice, sc.background, C);
    TwoPointState fake = ground;
    fake.kind = TwoPointState::Kind::kms;
    fake.beta = 1.0;
    CHECK(kms_verify(fake, ev, f, g, 0.7).one_particle > 1e-3);
  }
}

TEST_CASE("weyl expectations") {
  Scenario sc = make_flat16();
  auto st = kms_state(sc.lattice, sc.background, 1.0);
  Rng rng(53);
  CauchyData f = rng.real_data(16);
  Complex w = weyl_expectation(st, f);
  CHECK(std::abs(w) <= 1.0);
  CHECK(std::abs(w) > 0.0);
  CHECK_THROWS_AS(weyl_expectation(st, rng.complex_data(16)),
                  InvariantError);

  SECTION("weyl relation: W(f)W(g) = e^{-i sigma(f,g)/2} W(f+g)") {
    // quasi-free: omega(W(f)W(g)) = omega(W f) omega(W g) e^{-w2(f,g)},
    // which must match e^{-i sigma(f,g)/2} omega(W(f+g)).
    CauchyData g = rng.real_data(16);
    CauchyData sum(f.phi0 + g.phi0, f.phi1 + g.phi1);
    Complex lhs = weyl_expectation(st, f) * weyl_expectation(st, g) *
                  std::exp(-st.smear(f, g, 0.0));
    Complex rhs =
        std::exp(Complex(0, -0.5) * symplectic_form(sc.lattice, f, g)) *
        weyl_expectation(st, sum);
    CHECK(std::abs(lhs - rhs) < 1e-12);
  }
}

TEST_CASE("gauge transformations of the second kind") {
  Scenario sc = make_flat16();
  auto st = kms_state(sc.lattice, sc.background, 1.0);
  Rng rng(59);
  GaugeFunctional mu{rng.real_vector(16), rng.real_vector(16)};
  auto gauged = gauge_transform(st, sc.lattice, mu);
  CauchyData f = rng.real_data(16);
  // phase only: modulus of the Weyl expectation is unchanged
  CHECK_THAT(std::abs(gauged.weyl(f)),
             WithinAbs(std::abs(weyl_expectation(st, f)), 1e-14));
  // one-point function is the linear functional itself
  CauchyData two(2.0 * f.phi0, 2.0 * f.phi1);
  CHECK_THAT(gauged.one_point(two), WithinAbs(2.0 * gauged.one_point(f),
                                              1e-12));
}

TEST_CASE("thermal observables on the flat instance") {
  Scenario sc = make_flat16();
  auto obs = thermal_observables(sc.lattice, sc.background, 1.0);
  for (int i = 0; i < 16; ++i) {
    // frozen: (1/2pi) sum_k n(omega_k)/omega_k
    CHECK_THAT(obs.phi2[i], WithinAbs(0.6705633667593885 - 0.4769883972722701,
                                      1e-12));
    // frozen: (1/2pi) sum_k omega_k n(omega_k)
    CHECK_THAT(obs.energy_density[i],
               WithinAbs(0.44975137178357427, 1e-12));
  }
  CHECK_THROWS_AS(
      thermal_observables(sc.lattice, make_shift16().background, 1.0),
      InvariantError);
}

TEST_CASE("spectral and closed-form constructions agree on smears") {
  Scenario sc = make_lapse16();
  auto C = assemble_C(sc.lattice, sc.background);
  auto ps = assemble_phase_space(sc.lattice, sc.background);
  Rng rng(61);
  CauchyData f = rng.real_data(16), g = rng.real_data(16);
  auto gc = ground_state_closed(sc.lattice, sc.background, C);
  auto gs = ground_state_spectral(sc.lattice, sc.background, ps);
  CHECK(std::abs(gc.smear(f, g, 0.4) - gs.smear(f, g, 0.4)) < 1e-10);
  auto kc = kms_state_closed(sc.lattice, sc.background, C, 0.8);
  auto ks = kms_state_spectral(sc.lattice, sc.background, ps, 0.8);
  CHECK(std::abs(kc.smear(f, g, 0.4) - ks.smear(f, g, 0.4)) < 1e-10);
}
