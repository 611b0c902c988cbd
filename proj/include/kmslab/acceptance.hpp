#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "kmslab/classical.hpp"
#include "kmslab/euclid.hpp"
#include "kmslab/gibbs.hpp"
#include "kmslab/lattice.hpp"
#include "kmslab/spectral.hpp"
#include "kmslab/thermal.hpp"

namespace kmslab {

// --- canonical desk-scale instances -------------------------------------

inline Scenario make_flat16() {
  auto lat = SurfaceLattice::make(16, 2 * M_PI, Topology::periodic,
                                  Vec::Ones(16));
  auto bg = Background::make(lat, Vec::Ones(16), Vec::Zero(16), Vec::Ones(16));
  return Scenario{std::move(lat), std::move(bg), RunParams{}};
}

inline Scenario make_lapse16() {
  auto lat = SurfaceLattice::make(16, 2 * M_PI, Topology::periodic,
                                  Vec::Ones(16));
  Vec v(16);
  for (int i = 0; i < 16; ++i) v[i] = 2.0 + std::cos(lat.site_x(i));
  auto bg = Background::make(lat, std::move(v), Vec::Zero(16), Vec::Ones(16));
  return Scenario{std::move(lat), std::move(bg), RunParams{}};
}

inline Scenario make_shift16() {
  auto lat = SurfaceLattice::make(16, 2 * M_PI, Topology::periodic,
                                  Vec::Ones(16));
  auto bg = Background::make(lat, Vec::Ones(16), Vec::Constant(16, 0.5),
                             Vec::Ones(16));
  return Scenario{std::move(lat), std::move(bg), RunParams{}};
}

struct CriterionResult {
  int id = 0;
  std::string name;
  double value = 0.0;      // worst residual / decisive metric
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

namespace acceptance_detail {

inline std::string fmt_sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

inline CriterionResult criterion_ccr() {
  CriterionResult r{1, "ccr_closure", 0.0, 1e-10, false, ""};
  for (auto maker : {make_flat16, make_lapse16, make_shift16}) {
    Scenario sc = maker();
    std::vector<TwoPointState> states;
    if (sc.background.is_static) {
      auto C = assemble_C(sc.lattice, sc.background);
      states.push_back(ground_state_closed(sc.lattice, sc.background, C));
      states.push_back(kms_state_closed(sc.lattice, sc.background, C, 1.0));
    } else {
      auto ps = assemble_phase_space(sc.lattice, sc.background);
      states.push_back(ground_state_spectral(sc.lattice, sc.background, ps));
      states.push_back(kms_state_spectral(sc.lattice, sc.background, ps, 1.0));
    }
    Rng rng(20260823);
    for (const auto& st : states) {
      for (int trial = 0; trial < 50; ++trial) {
        CauchyData f = rng.real_data(sc.lattice.n_sites);
        CauchyData g = rng.real_data(sc.lattice.n_sites);
        Complex comm = st.smear(f, g, 0.0) - st.smear(g, f, 0.0);
        Complex want = Complex(0, 1) * symplectic_form(sc.lattice, f, g);
        r.value = std::max(r.value, std::abs(comm - want));
      }
    }
  }
  r.pass = r.value <= r.tolerance;
  r.detail = "max |<p(f),p(g)> - <p(g),p(f)> - i sigma(f,g)| over 3 "
             "instances x {ground, kms(1)} x 50 seeded pairs";
  return r;
}

inline CriterionResult criterion_kms_boundary() {
  CriterionResult r{2, "kms_boundary", 0.0, 1e-9, false, ""};
  double neg_control = 0.0;
  for (auto maker : {make_flat16, make_lapse16}) {
    Scenario sc = maker();
    auto C = assemble_C(sc.lattice, sc.background);
    auto ps = assemble_phase_space(sc.lattice, sc.background);
    Evolution ev(ps);
    Rng rng(7);
    CauchyData f = rng.real_data(sc.lattice.n_sites);
    CauchyData g = rng.real_data(sc.lattice.n_sites);
    for (double beta : {0.5, 1.0, 2 * M_PI}) {
      auto st = kms_state_closed(sc.lattice, sc.background, C, beta);
      for (double t : {0.0, 0.7, 2.3}) {
        auto res = kms_verify(st, ev, f, g, t);
        r.value = std::max(r.value, res.one_particle);
      }
      if (beta == 1.0) {
        auto bad = st.corrupted(1.01);
        neg_control = std::max(
            neg_control, kms_verify(bad, ev, f, g, 0.7).one_particle);
      }
    }
  }
  r.pass = r.value <= r.tolerance && neg_control > 1e-3;
  r.detail = "max residual over {FLAT16,LAPSE16} x beta {0.5,1,2pi} x t "
             "{0,0.7,2.3}; corrupted-state control residual " +
             fmt_sci(neg_control);
  return r;
}

inline CriterionResult criterion_gibbs_equivalence() {
  CriterionResult r{3, "gibbs_vs_kms", 0.0, 0.0, false, ""};
  Scenario sc = make_flat16();
  auto C = assemble_C(sc.lattice, sc.background);
  auto ground = ground_state_closed(sc.lattice, sc.background, C);
  auto kms = kms_state_closed(sc.lattice, sc.background, C, 1.0);
  auto ft = build_fock(ground, 3, 25, 1.0);

  Rng rng(99);
  double worst = 0.0, worst_quartic = 0.0, leak = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    Vec f0 = Vec::Zero(16), f1 = Vec::Zero(16);
    for (int k = 0; k < 3; ++k) {
      f0 += rng.symmetric() * C.eigenvectors.col(k).real();
      f1 += rng.symmetric() * C.eigenvectors.col(k).real();
    }
    CauchyData f(f0.cast<Complex>(), f1.cast<Complex>());
    auto ge = gibbs_weyl_expectation(ft, f);
    Complex ref = weyl_expectation(kms, f);
    worst = std::max(worst,
                     std::abs(ge.value - ref) - ge.discarded_weight);
    leak = std::max(leak, ge.discarded_weight);
    worst_quartic = std::max(worst_quartic, quartic_cumulant(ft, f));
  }
  r.value = std::max(worst, worst_quartic);
  r.tolerance = 1e-6;
  r.pass = worst <= 1e-6 && worst_quartic <= 1e-6;
  r.detail = "3 modes, n_max=25, beta=1; max |gibbs - kms| beyond leakage " +
             fmt_sci(worst) + ", quartic cumulant " + fmt_sci(worst_quartic) +
             ", discarded weight " + fmt_sci(leak);
  return r;
}

inline CriterionResult criterion_wick() {
  CriterionResult r{4, "wick_rotation", 0.0, 1e-10, false, ""};
  double r_indep = 0.0;
  for (auto maker : {make_flat16, make_lapse16}) {
    Scenario sc = maker();
    auto C = assemble_C(sc.lattice, sc.background);
    const double R = 1.0;
    auto wk = wick_rotate(sc.background, C, R);
    auto kms = kms_state_closed(sc.lattice, sc.background, C, 2 * M_PI * R);
    for (double dt : {0.0, 0.5, 1.7}) {
      CMat lhs = wk.omega_beta(dt);
      CMat rhs = time_dependent_kernel(kms, dt);
      r.value = std::max(r.value, (lhs - rhs).cwiseAbs().maxCoeff());
      Mat comm = commutator_kernel(C, sc.background, dt).matrix;
      Mat diff = wk.E_minus(dt) - wk.E_plus(dt) - comm;
      r.value = std::max(r.value, diff.cwiseAbs().maxCoeff());
    }
    auto wk2 = wick_rotate(sc.background, C, 2.0);
    for (double dt : {-1.1, 0.4, 2.2}) {
      r_indep = std::max(
          r_indep, (wk.E_plus(dt) - wk2.E_plus(dt)).cwiseAbs().maxCoeff());
      r_indep = std::max(
          r_indep, (wk.E_minus(dt) - wk2.E_minus(dt)).cwiseAbs().maxCoeff());
    }
  }
  r.pass = r.value <= r.tolerance && r_indep <= 1e-12;
  r.detail = "omega_beta vs kms kernel and E^- - E^+ vs commutator on "
             "{FLAT16,LAPSE16}; R-independence of E^+- " + fmt_sci(r_indep);
  return r;
}

inline CriterionResult criterion_euclid_convergence() {
  CriterionResult r{5, "euclid_three_way", 0.0, 0.0, false, ""};
  Scenario sc = make_flat16();
  auto C = assemble_C(sc.lattice, sc.background);
  const double R = 1.0;
  auto closed = green_closed_form(R, sc.background, C);

  // direct route: second order in dtau
  std::vector<double> errs;
  for (int nt : {128, 256, 512}) {
    auto cyl = CylinderLattice::make(R, nt, sc.lattice);
    auto direct = green_direct(cyl, sc.background, C);
    double e = 0.0;
    for (double dtau : {M_PI / 2, M_PI, 3 * M_PI / 2}) {
      e = std::max(e, (direct.kernel(dtau) - closed.kernel(dtau))
                          .cwiseAbs()
                          .maxCoeff());
    }
    errs.push_back(e);
  }
  const double ratio1 = errs[0] / errs[1];
  const double ratio2 = errs[1] / errs[2];
  bool direct_ok = ratio1 >= 3.0 && ratio1 <= 5.0 && ratio2 >= 3.0 &&
                   ratio2 <= 5.0;

  // Matsubara route: O(1/n_max) tail
  std::vector<double> merrs;
  for (int nm : {100, 1000, 10000}) {
    auto ms = green_mode_sum(R, sc.background, C, nm);
    merrs.push_back(
        (ms.kernel(0.0) - closed.kernel(0.0)).cwiseAbs().maxCoeff());
  }
  const double mr1 = merrs[0] / merrs[1];
  const double mr2 = merrs[1] / merrs[2];
  bool mode_ok = std::abs(mr1 - 10.0) <= 2.0 && std::abs(mr2 - 10.0) <= 2.0;

  r.value = errs[2];
  r.pass = direct_ok && mode_ok;
  r.detail = "direct error ratios " + fmt_sci(ratio1) + ", " +
             fmt_sci(ratio2) + " (want [3,5]); mode-sum ratios " +
             fmt_sci(mr1) + ", " + fmt_sci(mr2) + " (want 10 +- 20%)";
  return r;
}

inline CriterionResult criterion_beta_limit() {
  CriterionResult r{6, "beta_to_infinity", 0.0, 0.0, false, ""};
  Scenario sc = make_flat16();
  auto C = assemble_C(sc.lattice, sc.background);
  auto ground = ground_state_closed(sc.lattice, sc.background, C);
  auto gb = ground.blocks(0.0);
  const double omega_min = std::sqrt(C.eigenvalues.minCoeff());
  double w0max = 0.0;
  for (const CMat* m : {&gb.w00, &gb.w01, &gb.w10, &gb.w11})
    w0max = std::max(w0max, m->cwiseAbs().maxCoeff());
  bool ok = true;
  double worst_margin = 0.0;
  std::string detail;
  for (double beta : {10.0, 20.0, 40.0}) {
    auto kms = kms_state_closed(sc.lattice, sc.background, C, beta);
    auto kb = kms.blocks(0.0);
    double diff = 0.0;
    diff = std::max(diff, (kb.w00 - gb.w00).cwiseAbs().maxCoeff());
    diff = std::max(diff, (kb.w01 - gb.w01).cwiseAbs().maxCoeff());
    diff = std::max(diff, (kb.w10 - gb.w10).cwiseAbs().maxCoeff());
    diff = std::max(diff, (kb.w11 - gb.w11).cwiseAbs().maxCoeff());
    const double bound = 2.0 * std::exp(-beta * omega_min) * w0max;
    ok = ok && diff <= bound;
    worst_margin = std::max(worst_margin, diff / bound);
    detail += "beta=" + fmt_sci(beta) + ": " + fmt_sci(diff) + "<=" +
              fmt_sci(bound) + "; ";
  }
  r.value = worst_margin;  // <= 1 means inside the bound
  r.tolerance = 1.0;
  r.pass = ok;
  r.detail = detail + "(value = worst diff/bound)";
  return r;
}

inline CriterionResult criterion_mass_gap() {
  CriterionResult r{7, "mass_gap", 0.0, 0.0, false, ""};
  Scenario sc = make_shift16();
  // site-wise VN and N^{-1}v^2 both >= 0.5 on SHIFT16
  double eps = 1e300;
  for (int i = 0; i < sc.lattice.n_sites; ++i) {
    eps = std::min(eps, sc.background.potential[i] * sc.background.lapse[i]);
    eps = std::min(eps, sc.background.v[i] * sc.background.v[i] /
                            sc.background.lapse[i]);
  }
  auto ps = assemble_phase_space(sc.lattice, sc.background);
  r.value = ps.min_abs_He();
  r.tolerance = 0.5 - 1e-9;
  r.pass = eps >= 0.5 && r.value >= 0.5 - 1e-9;
  r.detail = "SHIFT16: min site-wise bound " + fmt_sci(eps) +
             ", min |spec(H_e)| " + fmt_sci(r.value) + " (want >= 0.5)";
  return r;
}

inline CriterionResult criterion_conservation() {
  CriterionResult r{8, "energy_symplectic_conservation", 0.0, 1e-9, false,
                    ""};
  for (auto maker : {make_flat16, make_lapse16, make_shift16}) {
    Scenario sc = maker();
    auto ps = assemble_phase_space(sc.lattice, sc.background);
    Evolution ev(ps);
    Rng rng(13);
    CauchyData d = rng.real_data(sc.lattice.n_sites);
    CauchyData dp = rng.real_data(sc.lattice.n_sites);
    const double e0 = energy(ps, d);
    const Complex s0 = symplectic_form(sc.lattice, d, dp);
    for (double t : {1.3, 2.7, 5.0, 7.9, 10.0}) {
      CauchyData dt_ = ev(d, t);
      CauchyData dpt = ev(dp, t);
      r.value = std::max(r.value, std::abs(energy(ps, dt_) - e0) /
                                      std::abs(e0));
      r.value = std::max(
          r.value,
          std::abs(symplectic_form(sc.lattice, dt_, dpt) - s0) /
              std::abs(s0));
    }
  }
  r.pass = r.value <= r.tolerance;
  r.detail = "relative energy and symplectic-form drift, t in [0,10], "
             "3 instances";
  return r;
}

inline CriterionResult criterion_uniqueness() {
  CriterionResult r{9, "construction_uniqueness", 0.0, 1e-9, false, ""};
  for (auto maker : {make_flat16, make_lapse16}) {
    Scenario sc = maker();
    auto C = assemble_C(sc.lattice, sc.background);
    auto ps = assemble_phase_space(sc.lattice, sc.background);
    std::vector<std::pair<TwoPointState, TwoPointState>> pairs;
    pairs.emplace_back(ground_state_closed(sc.lattice, sc.background, C),
                       ground_state_spectral(sc.lattice, sc.background, ps));
    pairs.emplace_back(
        kms_state_closed(sc.lattice, sc.background, C, 1.0),
        kms_state_spectral(sc.lattice, sc.background, ps, 1.0));
    for (const auto& [a, b] : pairs) {
      for (double dt : {0.0, 0.6}) {
        auto ba = a.blocks(dt), bb = b.blocks(dt);
        r.value = std::max(r.value,
                           (ba.w00 - bb.w00).cwiseAbs().maxCoeff());
        r.value = std::max(r.value,
                           (ba.w01 - bb.w01).cwiseAbs().maxCoeff());
        r.value = std::max(r.value,
                           (ba.w10 - bb.w10).cwiseAbs().maxCoeff());
        r.value = std::max(r.value,
                           (ba.w11 - bb.w11).cwiseAbs().maxCoeff());
      }
    }
  }
  r.pass = r.value <= r.tolerance;
  r.detail = "closed-form vs H_e-spectral block kernels, ground and "
             "kms(1), dt in {0, 0.6}, FLAT16 and LAPSE16";
  return r;
}

inline CriterionResult criterion_ground_purity() {
  CriterionResult r{10, "ground_frequency_purity", 0.0, 1e-12, false, ""};
  Scenario sc = make_flat16();
  auto C = assemble_C(sc.lattice, sc.background);
  auto ground = ground_state_closed(sc.lattice, sc.background, C);
  Vec sqN = sc.background.lapse.array().sqrt();
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    CVec g = rng.complex_vector(16);
    // negative-frequency datum: phi0 = -i X phi1, X = N^{1/2}C^{-1/2}N^{1/2}
    CVec x = C.apply(fns::inv_sqrt().eval, (sqN.asDiagonal() * g).eval());
    CauchyData d(Complex(0, -1) * (sqN.asDiagonal() * x).eval(), g);
    r.value = std::max(r.value, std::abs(ground.smear(d, d, 0.0)));
  }
  r.pass = r.value <= r.tolerance;
  r.detail = "ground two-point on 10 constructed negative-frequency data";
  return r;
}

inline CriterionResult criterion_thermal_observables() {
  CriterionResult r{11, "thermal_observables", 0.0, 1e-10, false, ""};
  Scenario sc = make_flat16();
  const int n = 16;
  const double dx = 2 * M_PI / n;
  for (double beta : {1.0, 2.0}) {
    auto obs = thermal_observables(sc.lattice, sc.background, beta);
    // analytic Bose-Einstein mode sum with the lattice dispersion
    double expect = 0.0;
    for (int k = 0; k < n; ++k) {
      const double om = std::sqrt(
          1.0 + std::pow(2.0 / dx * std::sin(M_PI * k / n), 2));
      expect += (1.0 / (2 * M_PI)) / (om * std::expm1(beta * om));
    }
    for (int i = 0; i < n; ++i)
      r.value = std::max(r.value, std::abs(obs.phi2[i] - expect));
  }
  r.pass = r.value <= r.tolerance;
  r.detail = "per-site <:phi^2:> vs analytic dispersion mode sum, FLAT16, "
             "beta in {1,2}";
  return r;
}

}  // namespace acceptance_detail

inline std::vector<CriterionResult> run_acceptance() {
  using namespace acceptance_detail;
  return {criterion_ccr(),
          criterion_kms_boundary(),
          criterion_gibbs_equivalence(),
          criterion_wick(),
          criterion_euclid_convergence(),
          criterion_beta_limit(),
          criterion_mass_gap(),
          criterion_conservation(),
          criterion_uniqueness(),
          criterion_ground_purity(),
          criterion_thermal_observables()};
}

}  // namespace kmslab
