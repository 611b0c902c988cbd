#include <catch2/catch_amalgamated.hpp>
#include <algorithm>
#include <cmath>

#include "kmslab/acceptance.hpp"
#include "kmslab/euclid.hpp"
#include "kmslab/thermal.hpp"

using namespace kmslab;
using Catch::Matchers::WithinAbs;

TEST_CASE("cylinder lattice invariants") {
  Scenario sc = make_flat16();
  CHECK_THROWS_AS(CylinderLattice::make(-1.0, 8, sc.lattice),
                  InvariantError);
  CHECK_THROWS_AS(CylinderLattice::make(1.0, 7, sc.lattice), InvariantError);
  auto cyl = CylinderLattice::make(1.0, 8, sc.lattice);
  CHECK(cyl.total_sites() == 128);
  CHECK_THAT(cyl.spacing_tau, WithinAbs(2 * M_PI / 8, 1e-15));
}

TEST_CASE("euclidean operator spectrum is the tensor sum") {
  // small dense instance: n=8 spatial sites, n_tau=4
  auto lat = SurfaceLattice::make(8, 2 * M_PI, Topology::periodic,
                                  Vec::Ones(8));
  auto bg = Background::make(lat, Vec::Ones(8), Vec::Zero(8), Vec::Ones(8));
  auto C = assemble_C(lat, bg);
  auto cyl = CylinderLattice::make(1.0, 4, lat);
  Mat K = Mat(assemble_euclidean(cyl, bg, C));

  // symmetrize in the cylinder weights and solve densely
  Vec w2(cyl.total_sites());
  for (int t = 0; t < 4; ++t)
    for (int i = 0; i < 8; ++i)
      w2[cyl.index(t, i)] = lat.vol_weight[i] * cyl.spacing_tau;
  auto op = WeightedOperator::make(w2, K.cast<Complex>());

  // oracle: eigenvalues of the periodic second difference in tau plus
  // eigenvalues of C, all combinations
  std::vector<double> expect;
  const double dt = cyl.spacing_tau;
  for (int m = 0; m < 4; ++m) {
    const double lam_tau =
        std::pow(2.0 / dt * std::sin(M_PI * m / 4.0), 2);
    for (int k = 0; k < 8; ++k) expect.push_back(lam_tau + C.eigenvalues[k]);
  }
  std::sort(expect.begin(), expect.end());
  for (int j = 0; j < cyl.total_sites(); ++j)
    CHECK_THAT(op.eigenvalues[j], WithinAbs(expect[j], 1e-9));
}

TEST_CASE("euclidean sector rejects stationary backgrounds") {
  Scenario sc = make_shift16();
  auto C = assemble_C(sc.lattice, sc.background);
  auto cyl = CylinderLattice::make(1.0, 8, sc.lattice);
  CHECK_THROWS_AS(assemble_euclidean(cyl, sc.background, C), InvariantError);
  CHECK_THROWS_AS(wick_rotate(sc.background, C, 1.0), InvariantError);
}

TEST_CASE("closed-form kernel: KMS periodicity and reflection") {
  Scenario sc = make_lapse16();
  auto C = assemble_C(sc.lattice, sc.background);
  const double R = 0.7;
  auto g = green_closed_form(R, sc.background, C);
  for (double dtau : {0.3, 1.1, 2.0}) {
    Mat a = g.kernel(dtau);
    Mat b = g.kernel(2 * M_PI * R - dtau);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
    Mat c = g.kernel(dtau + 2 * M_PI * R);  // periodic extension
    CHECK((a - c).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("euclidean kernel at coincidence equals the equal-time KMS kernel") {
  for (auto maker : {make_flat16, make_lapse16}) {
    Scenario sc = maker();
    auto C = assemble_C(sc.lattice, sc.background);
    const double R = 0.5;
    auto g = green_closed_form(R, sc.background, C);
    auto kms = kms_state_closed(sc.lattice, sc.background, C, 2 * M_PI * R);
    CMat w00 = kms.blocks(0.0).w00;
    CHECK((g.kernel(0.0).cast<Complex>() - w00).cwiseAbs().maxCoeff() <
          1e-10);
  }
}

TEST_CASE("analytic continuation restricts back to the euclidean kernel") {
  Scenario sc = make_flat16();
  auto C = assemble_C(sc.lattice, sc.background);
  const double R = 1.0;
  auto g = green_closed_form(R, sc.background, C);
  for (double dtau : {0.0, 0.9, 4.0}) {
    CMat cont = green_continued(R, sc.background, C, Complex(0, -dtau));
    CHECK((cont - g.kernel(dtau).cast<Complex>()).cwiseAbs().maxCoeff() <
          1e-10);
  }
}

TEST_CASE("direct solve agrees with the closed form and refines") {
  Scenario sc = make_flat16();
  auto C = assemble_C(sc.lattice, sc.background);
  const double R = 1.0;
  auto closed = green_closed_form(R, sc.background, C);
  auto cyl = CylinderLattice::make(R, 64, sc.lattice);
  auto direct = green_direct(cyl, sc.background, C);
  const double dtau = M_PI / 2;
  const double err64 =
      (direct.kernel(dtau) - closed.kernel(dtau)).cwiseAbs().maxCoeff();
  CHECK(err64 < 1e-2);
  auto direct2 = green_direct(CylinderLattice::make(R, 128, sc.lattice),
                              sc.background, C);
  const double err128 =
      (direct2.kernel(dtau) - closed.kernel(dtau)).cwiseAbs().maxCoeff();
  CHECK(err64 / err128 > 3.0);
  CHECK(err64 / err128 < 5.0);
  CHECK_THROWS_AS(direct.kernel(0.123), InvariantError);  // off-grid
}

TEST_CASE("matsubara mode sum converges at rate 1/n_max") {
  Scenario sc = make_flat16();
  auto C = assemble_C(sc.lattice, sc.background);
  const double R = 1.0;
  auto closed = green_closed_form(R, sc.background, C);
  auto e = [&](int nm) {
    auto g = green_mode_sum(R, sc.background, C, nm);
    return (g.kernel(0.0) - closed.kernel(0.0)).cwiseAbs().maxCoeff();
  };
  const double e1 = e(200), e2 = e(2000);
  CHECK(e1 / e2 > 8.0);
  CHECK(e1 / e2 < 12.0);
  CHECK_THROWS_AS(green_mode_sum(R, sc.background, C, 0), InvariantError);
}

TEST_CASE("wick rotation identities") {
  Scenario sc = make_lapse16();
  auto C = assemble_C(sc.lattice, sc.background);
  const double R = 1.0;
  auto wk = wick_rotate(sc.background, C, R);

  SECTION("supports of the fundamental solutions") {
    CHECK(wk.E_plus(-0.4).cwiseAbs().maxCoeff() == 0.0);
    CHECK(wk.E_minus(0.4).cwiseAbs().maxCoeff() == 0.0);
    CHECK(wk.E_plus(0.4).cwiseAbs().maxCoeff() > 0.0);
  }
  SECTION("difference is the commutator kernel") {
    for (double dt : {-0.8, 0.0, 1.3}) {
      Mat comm = commutator_kernel(C, sc.background, dt).matrix;
      CHECK((wk.E_minus(dt) - wk.E_plus(dt) - comm).cwiseAbs().maxCoeff() <
            1e-12);
    }
  }
  SECTION("reconstructed thermal kernel matches the KMS state") {
    auto kms = kms_state_closed(sc.lattice, sc.background, C, 2 * M_PI * R);
    for (double dt : {-0.6, 0.0, 1.2}) {
      CMat lhs = wk.omega_beta(dt);
      CMat rhs = time_dependent_kernel(kms, dt);
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
  SECTION("E^pm do not depend on the rotation radius") {
    auto wk2 = wick_rotate(sc.background, C, 3.3);
    for (double dt : {-0.7, 0.5})
      CHECK((wk.E_plus(dt) - wk2.E_plus(dt)).cwiseAbs().maxCoeff() +
                (wk.E_minus(dt) - wk2.E_minus(dt)).cwiseAbs().maxCoeff() <
            1e-12);
  }
  SECTION("feynman kernel is symmetric in dt") {
    CHECK((wk.E_feynman(0.9) - wk.E_feynman(-0.9)).cwiseAbs().maxCoeff() <
          1e-13);
  }
}
