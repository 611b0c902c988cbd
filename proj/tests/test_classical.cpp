#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "kmslab/acceptance.hpp"
#include "kmslab/classical.hpp"

using namespace kmslab;
using Catch::Matchers::WithinAbs;

namespace {
double data_dist(const CauchyData& a, const CauchyData& b) {
  return std::max((a.phi0 - b.phi0).cwiseAbs().maxCoeff(),
                  (a.phi1 - b.phi1).cwiseAbs().maxCoeff());
}
}  // namespace

TEST_CASE("evolution group law and identity") {
  for (auto maker : {make_flat16, make_lapse16, make_shift16}) {
    Scenario sc = maker();
    auto ps = assemble_phase_space(sc.lattice, sc.background);
    Evolution ev(ps);
    Rng rng(11);
    CauchyData d = rng.complex_data(16);
    CHECK(data_dist(ev(d, 0.0), d) < 1e-12);
    CauchyData one_shot = ev(d, 1.9);
    CauchyData two_step = ev(ev(d, 0.7), 1.2);
    CHECK(data_dist(one_shot, two_step) < 1e-11);
    // inverse
    CHECK(data_dist(ev(one_shot, -1.9), d) < 1e-11);
  }
}

TEST_CASE("spectral evolution matches an independent RK4 integration") {
  Scenario sc = make_shift16();
  auto ps = assemble_phase_space(sc.lattice, sc.background);
  Evolution ev(ps);
  Rng rng(17);
  CauchyData d = rng.real_data(16);
  CauchyData exact = ev(d, 1.0);
  CauchyData rk = evolve_rk4(ps, d, 1.0, 4000);
  CHECK(data_dist(exact, rk) < 1e-8);
}

TEST_CASE("static evolution satisfies d/dt phi0 = N phi1") {
  Scenario sc = make_lapse16();
  auto ps = assemble_phase_space(sc.lattice, sc.background);
  Evolution ev(ps);
  Rng rng(19);
  CauchyData d = rng.real_data(16);
  const double t = 0.8, eps = 1e-5;
  CVec deriv =
      (ev(d, t + eps).phi0 - ev(d, t - eps).phi0) / (2.0 * eps);
  CVec want = sc.background.lapse.asDiagonal() * ev(d, t).phi1;
  CHECK((deriv - want).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("energy and symplectic form are conserved") {
  Scenario sc = make_shift16();
  auto ps = assemble_phase_space(sc.lattice, sc.background);
  Evolution ev(ps);
  Rng rng(23);
  CauchyData d = rng.real_data(16), dp = rng.real_data(16);
  const double e0 = energy(ps, d);
  const Complex s0 = symplectic_form(sc.lattice, d, dp);
  CHECK(e0 > 0.0);
  for (double t : {0.3, 4.4, 10.0}) {
    CHECK_THAT(energy(ps, ev(d, t)), WithinAbs(e0, 1e-9 * e0));
    Complex st = symplectic_form(sc.lattice, ev(d, t), ev(dp, t));
    CHECK(std::abs(st - s0) < 1e-9 * std::abs(s0));
  }
}

TEST_CASE("symplectic form is antisymmetric and bilinear") {
  Scenario sc = make_flat16();
  Rng rng(29);
  CauchyData d = rng.complex_data(16), dp = rng.complex_data(16);
  Complex s = symplectic_form(sc.lattice, d, dp);
  Complex sT = symplectic_form(sc.lattice, dp, d);
  CHECK(std::abs(s + sT) < 1e-13);
  CauchyData scaled(Complex(2, 1) * d.phi0, Complex(2, 1) * d.phi1);
  CHECK(std::abs(symplectic_form(sc.lattice, scaled, dp) -
                 Complex(2, 1) * s) < 1e-12);
}

TEST_CASE("frequency split reconstructs the field component") {
  Scenario sc = make_lapse16();
  auto C = assemble_C(sc.lattice, sc.background);
  Rng rng(31);
  CauchyData d = rng.real_data(16);
  auto fs = frequency_split(C, sc.background, d);
  CHECK((fs.f_plus + fs.f_minus - d.phi0).cwiseAbs().maxCoeff() < 1e-12);

  // data built as (-iXg, g) is purely negative frequency
  Vec sqN = sc.background.lapse.array().sqrt();
  CVec g = rng.complex_vector(16);
  CVec x = C.apply(fns::inv_sqrt().eval, (sqN.asDiagonal() * g).eval());
  CauchyData neg(Complex(0, -1) * (sqN.asDiagonal() * x).eval(), g);
  auto fs2 = frequency_split(C, sc.background, neg);
  CHECK(fs2.f_plus.cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(
      frequency_split(C, make_shift16().background, d), InvariantError);
}

TEST_CASE("commutator kernel") {
  Scenario sc = make_lapse16();
  auto C = assemble_C(sc.lattice, sc.background);

  SECTION("vanishes at equal time") {
    CHECK(commutator_kernel(C, sc.background, 0.0)
              .matrix.cwiseAbs()
              .maxCoeff() < 1e-14);
  }
  SECTION("time derivative at zero is the lapse-weighted delta") {
    const double eps = 1e-6;
    Mat diff = (commutator_kernel(C, sc.background, -eps).matrix -
                commutator_kernel(C, sc.background, eps).matrix) /
               (2.0 * eps);
    Mat want = Mat::Zero(16, 16);
    for (int i = 0; i < 16; ++i)
      want(i, i) = sc.background.lapse[i] / sc.lattice.vol_weight[i];
    CHECK((diff - want).cwiseAbs().maxCoeff() < 1e-4 * want.norm());
  }
  SECTION("antisymmetric in dt") {
    Mat a = commutator_kernel(C, sc.background, 0.9).matrix;
    Mat b = commutator_kernel(C, sc.background, -0.9).matrix;
    CHECK((a + b).cwiseAbs().maxCoeff() < 1e-13);
  }
}
