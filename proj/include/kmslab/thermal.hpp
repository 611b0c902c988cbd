#pragma once

#include <cmath>
#include <limits>

#include "kmslab/classical.hpp"
#include "kmslab/lattice.hpp"
#include "kmslab/spectral.hpp"

namespace kmslab {

/// Quasi-free ground or beta-KMS state, represented by its one-particle
/// map expressed in an orthonormal eigenbasis of the one-particle
/// Hamiltonian: row m of `P` maps stacked Cauchy data to the coefficient
/// along the m-th eigenvector, with eigenvalue `h[m]`, and
/// p(T_t d) = e^{-ith} p(d).
///
/// The smeared two-point function at Killing-time separation dt is
///   w2(conj(d), d'; dt) = d^T M(dt) d',  M(dt) = P^H e^{-i dt h} P,
/// and the 2x2 block kernels W_ij (i,j counting normal derivatives) are
/// read off from the complementary sectors of M through the symplectic
/// pairing between data and field observables.
///
/// Sign conventions (fixed once, validated by the CCR and KMS tests):
///   - CCR: <p(conj f), p(f')> - <p(conj f'), p(f)> = +i sigma(f, f').
///   - Equal-time blocks: W_10 = -(i/2) delta, W_01 = +(i/2) delta.
///   - Heisenberg evolution acts on data by T_{-t}.
struct TwoPointState {
  enum class Kind { ground, kms };
  enum class Construction { static_closed_form, stationary_spectral };

  Kind kind = Kind::ground;
  Construction construction = Construction::static_closed_form;
  double beta = std::numeric_limits<double>::infinity();
  int n = 0;
  Vec weights;
  CMat P;  // K_dim x 2n
  Vec h;   // K_dim

  int k_dim() const { return static_cast<int>(h.size()); }

  CVec one_particle(const CauchyData& d) const { return P * d.stacked(); }

  CMat M(double dt) const {
    CVec ph(k_dim());
    for (int m = 0; m < k_dim(); ++m)
      ph[m] = std::exp(Complex(0, -dt * h[m]));
    return P.adjoint() * ph.asDiagonal() * P;
  }

  /// w2(conj(d), d'; dt); pass real data for the usual real smearing.
  Complex smear(const CauchyData& d, const CauchyData& dp, double dt) const {
    CVec a = P * d.conj().stacked();
    CVec b = P * dp.stacked();
    Complex acc = 0.0;
    for (int m = 0; m < k_dim(); ++m) {
      acc += std::conj(a[m]) * b[m] * std::exp(Complex(0, -dt * h[m]));
    }
    return acc;
  }

  struct Blocks {
    CMat w00, w01, w10, w11;  // density-stripped kernels
  };

  Blocks blocks(double dt) const {
    CMat m = M(dt);
    Vec winv = weights.cwiseInverse();
    auto strip = [&](const CMat& s) -> CMat {
      return winv.asDiagonal() * s * winv.asDiagonal();
    };
    Blocks b;
    b.w00 = strip(m.bottomRightCorner(n, n));
    b.w01 = -strip(m.bottomLeftCorner(n, n));
    b.w10 = -strip(m.topRightCorner(n, n));
    b.w11 = strip(m.topLeftCorner(n, n));
    return b;
  }

  /// Copy with the positive-frequency block rows scaled; breaks the KMS
  /// balance and serves as the negative control in verification tests.
  TwoPointState corrupted(double factor) const {
    TwoPointState s = *this;
    for (int m = 0; m < k_dim(); ++m)
      if (h[m] > 0) s.P.row(m) *= factor;
    return s;
  }
};

namespace detail {

// Closed-form one-particle rows on a static background:
//   q(f0, f1) = rho_fac * (C^{1/4}N^{-1/2}f0 + i s C^{-1/4}N^{1/2}f1)/sqrt(2)
// expressed in the eigenbasis of C; s = +1 for the forward block, -1 for
// the conjugate block of the KMS doubling.
inline CMat closed_form_rows(const WeightedOperator& C, const Background& bg,
                             const Vec& rho_fac, double s) {
  const int n = C.dim;
  Vec sqN = bg.lapse.array().sqrt();
  Vec isqN = sqN.cwiseInverse();
  CMat UHW = C.eigenvectors.adjoint() *
             C.weights.asDiagonal().toDenseMatrix().cast<Complex>();
  CMat rows(n, 2 * n);
  for (int k = 0; k < n; ++k) {
    const double om = std::sqrt(C.eigenvalues[k]);
    rows.block(k, 0, 1, n) =
        (rho_fac[k] * std::sqrt(om) / std::sqrt(2.0)) *
        (UHW.row(k) * isqN.asDiagonal());
    rows.block(k, n, 1, n) =
        (Complex(0, s) * rho_fac[k] / (std::sqrt(2.0) * std::sqrt(om))) *
        (UHW.row(k) * sqN.asDiagonal());
  }
  return rows;
}

inline void check_positive_spectrum(const WeightedOperator& C) {
  if (C.eigenvalues.minCoeff() <= 0)
    throw InvariantError("operator C not strictly positive (min eigenvalue " +
                         std::to_string(C.eigenvalues.minCoeff()) + ")");
}

}  // namespace detail

/// Ground state, static closed form: p(d) in the eigenbasis of C with
/// one-particle energies omega_k = sqrt(lambda_k).
inline TwoPointState ground_state_closed(const SurfaceLattice& lat,
                                         const Background& bg,
                                         const WeightedOperator& C) {
  if (!bg.is_static)
    throw InvariantError("static closed form requires w == 0");
  detail::check_positive_spectrum(C);
  TwoPointState s;
  s.kind = TwoPointState::Kind::ground;
  s.construction = TwoPointState::Construction::static_closed_form;
  s.n = lat.n_sites;
  s.weights = lat.vol_weight;
  s.P = detail::closed_form_rows(C, bg, Vec::Ones(C.dim), +1.0);
  s.h = C.eigenvalues.array().sqrt();
  return s;
}

/// Beta-KMS state, static closed form: doubled eigenbasis of C with
/// thermal weights (1-e^{-beta omega})^{-1/2} and e^{-beta omega/2} on the
/// conjugate block; one-particle energies (+omega, -omega).
inline TwoPointState kms_state_closed(const SurfaceLattice& lat,
                                      const Background& bg,
                                      const WeightedOperator& C,
                                      double beta) {
  if (!bg.is_static)
    throw InvariantError("static closed form requires w == 0");
  if (!(beta > 0)) throw InvariantError("kms_state: beta must be > 0");
  detail::check_positive_spectrum(C);
  const int n = lat.n_sites;
  Vec rho_p(n), rho_m(n), h(2 * n);
  for (int k = 0; k < n; ++k) {
    const double om = std::sqrt(C.eigenvalues[k]);
    const double rho = std::sqrt(-1.0 / std::expm1(-beta * om));
    rho_p[k] = rho;
    rho_m[k] = std::exp(-0.5 * beta * om) * rho;
    h[k] = om;
    h[n + k] = -om;
  }
  TwoPointState s;
  s.kind = TwoPointState::Kind::kms;
  s.construction = TwoPointState::Construction::static_closed_form;
  s.beta = beta;
  s.n = n;
  s.weights = lat.vol_weight;
  s.P.resize(2 * n, 2 * n);
  s.P.topRows(n) = detail::closed_form_rows(C, bg, rho_p, +1.0);
  s.P.bottomRows(n) = detail::closed_form_rows(C, bg, rho_m, -1.0);
  s.h = h;
  return s;
}

/// Ground state from the spectral data of H_e (works on any stationary
/// background): p(d) = sqrt(2) |H_e|^{-1/2} Pi_- sqrt(A) d, rows indexed by
/// the negative part of spec(H_e), one-particle energy |lambda|.
inline TwoPointState ground_state_spectral(const SurfaceLattice& lat,
                                           const Background& bg,
                                           const PhaseSpaceOperator& ps) {
  const int n = lat.n_sites;
  TwoPointState s;
  s.kind = TwoPointState::Kind::ground;
  s.construction = TwoPointState::Construction::stationary_spectral;
  s.n = n;
  s.weights = lat.vol_weight;
  CMat EHW = ps.He.eigenvectors.adjoint() *
             ps.weights2.asDiagonal().toDenseMatrix().cast<Complex>();
  std::vector<int> neg;
  for (int m = 0; m < 2 * n; ++m)
    if (ps.He.eigenvalues[m] < 0) neg.push_back(m);
  s.P.resize(static_cast<int>(neg.size()), 2 * n);
  s.h.resize(static_cast<int>(neg.size()));
  for (std::size_t r = 0; r < neg.size(); ++r) {
    const int m = neg[r];
    const double lam = ps.He.eigenvalues[m];
    s.P.row(static_cast<int>(r)) =
        std::sqrt(2.0 / std::abs(lam)) * (EHW.row(m) * ps.sqrtA);
    s.h[static_cast<int>(r)] = -lam;
  }
  return s;
}

/// Beta-KMS state from the spectral data of H_e:
///   p(d) = sqrt(2)|H_e|^{-1/2}(1-e^{-beta|H_e|})^{-1/2} Pi_- sqrt(A) d
///     (+) sqrt(2)|H_e|^{-1/2} e^{-beta|H_e|/2}(1-e^{-beta|H_e|})^{-1/2}
///                                             Pi_+ sqrt(A) d,
/// with one-particle energy |lambda| on the first block, -|lambda| on the
/// second.
inline TwoPointState kms_state_spectral(const SurfaceLattice& lat,
                                        const Background& bg,
                                        const PhaseSpaceOperator& ps,
                                        double beta) {
  if (!(beta > 0)) throw InvariantError("kms_state: beta must be > 0");
  const int n = lat.n_sites;
  TwoPointState s;
  s.kind = TwoPointState::Kind::kms;
  s.construction = TwoPointState::Construction::stationary_spectral;
  s.beta = beta;
  s.n = n;
  s.weights = lat.vol_weight;
  CMat EHW = ps.He.eigenvectors.adjoint() *
             ps.weights2.asDiagonal().toDenseMatrix().cast<Complex>();
  s.P.resize(2 * n, 2 * n);
  s.h.resize(2 * n);
  int r_neg = 0, r_pos = n;
  for (int m = 0; m < 2 * n; ++m) {
    const double lam = ps.He.eigenvalues[m];
    const double a = std::abs(lam);
    const double rho = std::sqrt(-1.0 / std::expm1(-beta * a));
    if (lam < 0) {
      s.P.row(r_neg) = std::sqrt(2.0 / a) * rho * (EHW.row(m) * ps.sqrtA);
      s.h[r_neg++] = a;
    } else {
      s.P.row(r_pos) = std::sqrt(2.0 / a) * std::exp(-0.5 * beta * a) * rho *
                       (EHW.row(m) * ps.sqrtA);
      s.h[r_pos++] = -a;
    }
  }
  if (r_neg != n || r_pos != 2 * n)
    throw InvariantError("spec(H_e) not symmetric: " + std::to_string(r_neg) +
                         " negative eigenvalues of " + std::to_string(2 * n));
  return s;
}

/// Convenience constructors choosing the construction path automatically.
inline TwoPointState ground_state(const SurfaceLattice& lat,
                                  const Background& bg) {
  if (bg.is_static) return ground_state_closed(lat, bg, assemble_C(lat, bg));
  return ground_state_spectral(lat, bg, assemble_phase_space(lat, bg));
}

inline TwoPointState kms_state(const SurfaceLattice& lat, const Background& bg,
                               double beta) {
  if (bg.is_static) return kms_state_closed(lat, bg, assemble_C(lat, bg), beta);
  return kms_state_spectral(lat, bg, assemble_phase_space(lat, bg), beta);
}

/// Field-field two-point kernel at real Killing-time separation dt.
inline CMat time_dependent_kernel(const TwoPointState& s, double dt) {
  return s.blocks(dt).w00;
}

/// Quasi-free Weyl expectation omega(W(f)) = exp(-w2(f,f)/2), f real.
inline Complex weyl_expectation(const TwoPointState& s, const CauchyData& f) {
  const double imag_norm = f.phi0.imag().norm() + f.phi1.imag().norm();
  if (imag_norm > 1e-14 * (1.0 + f.phi0.norm() + f.phi1.norm()))
    throw InvariantError("weyl_expectation: test data must be real-valued");
  return std::exp(-0.5 * s.smear(f, f, 0.0));
}

/// Gauge transformation of the second kind: W(f) |-> e^{i mu(f)} W(f) with
/// mu a real-linear functional contracted with the integration weights.
struct GaugeFunctional {
  Vec mu0, mu1;

  double operator()(const SurfaceLattice& lat, const CauchyData& f) const {
    double acc = 0.0;
    for (int i = 0; i < lat.n_sites; ++i)
      acc += lat.vol_weight[i] *
             (mu0[i] * f.phi0[i].real() + mu1[i] * f.phi1[i].real());
    return acc;
  }
};

struct GaugedState {
  const TwoPointState* state;
  const SurfaceLattice* lattice;
  GaugeFunctional mu;

  Complex weyl(const CauchyData& f) const {
    return std::exp(Complex(0, mu(*lattice, f))) * weyl_expectation(*state, f);
  }
  double one_point(const CauchyData& f) const { return mu(*lattice, f); }
};

inline GaugedState gauge_transform(const TwoPointState& s,
                                   const SurfaceLattice& lat,
                                   GaugeFunctional mu) {
  return GaugedState{&s, &lat, std::move(mu)};
}

/// KMS boundary-identity residuals.  The correlation function
///   F(z) = sum_m a_m e^{iz h_m},  a_m = conj((P conj f)_m) (P f')_m,
/// restricts on the real axis to omega(Phi(f) alpha_t(Phi(f'))) and is
/// holomorphic on the strip Im z in (0, beta).  Its upper boundary value
/// F(t + i beta) must equal omega(alpha_t(Phi(f')) Phi(f)), which is
/// computed independently by evolving f' with the classical dynamics
/// (alpha_t acts on data by T_{-t}) and smearing at equal time.
struct KmsResidual {
  double one_particle = 0.0;
  double weyl = 0.0;
};

inline KmsResidual kms_verify(const TwoPointState& s, const Evolution& ev,
                              const CauchyData& f, const CauchyData& fp,
                              double t) {
  if (s.kind != TwoPointState::Kind::kms)
    throw InvariantError("kms_verify requires a KMS state (finite beta)");
  const double beta = s.beta;
  CVec a1 = s.P * f.conj().stacked();
  CVec a2 = s.P * fp.stacked();
  Complex F_bound = 0.0;
  for (int m = 0; m < s.k_dim(); ++m)
    F_bound += std::conj(a1[m]) * a2[m] *
               std::exp(Complex(0, t * s.h[m]) - beta * s.h[m]);

  CauchyData fp_t = ev(fp, -t);
  Complex boundary = s.smear(fp_t, f, 0.0);

  const double scale =
      std::max(1e-300, std::sqrt(std::abs(s.smear(f, f, 0.0)) *
                                 std::abs(s.smear(fp, fp, 0.0))));
  KmsResidual r;
  r.one_particle = std::abs(F_bound - boundary) / scale;

  // Weyl level: omega(W(f) alpha_t(W(f'))) =
  //   omega(W(f)) omega(W(f')) exp(-w2(f, T_{-t} f')), and the KMS
  // boundary value continues the exponent.
  Complex wf = std::exp(-0.5 * s.smear(f, f, 0.0));
  Complex wfp = std::exp(-0.5 * s.smear(fp, fp, 0.0));
  Complex lhs = wf * wfp * std::exp(-F_bound);
  Complex rhs = wf * wfp * std::exp(-boundary);
  r.weyl = std::abs(lhs - rhs);
  return r;
}

/// Normal-ordered thermal observables on a static background: per-site
/// <:phi^2:>_beta and the point-split energy density, both computed from
/// the smooth difference of the beta-KMS and ground two-point kernels.
struct ThermalObservables {
  Vec phi2;
  Vec energy_density;
};

inline ThermalObservables thermal_observables(const SurfaceLattice& lat,
                                              const Background& bg,
                                              double beta) {
  if (!bg.is_static)
    throw InvariantError("thermal_observables requires a static background");
  WeightedOperator C = assemble_C(lat, bg);
  detail::check_positive_spectrum(C);
  const int n = lat.n_sites;
  Vec sqN = bg.lapse.array().sqrt();
  Vec isqN = sqN.cwiseInverse();

  // Bose-Einstein weighted difference kernels:
  //   (W^beta - W^0)_00 = N^{1/2} C^{-1/2} (e^{beta sqrt(C)}-1)^{-1} N^{1/2}
  //   (W^beta - W^0)_11 = N^{-1/2} C^{1/2} (e^{beta sqrt(C)}-1)^{-1} N^{-1/2}
  CMat d00 = C.fn_kernel([beta](double lam) -> Complex {
    const double om = std::sqrt(lam);
    return 1.0 / (om * std::expm1(beta * om));
  });
  CMat d11 = C.fn_kernel([beta](double lam) -> Complex {
    const double om = std::sqrt(lam);
    return om / std::expm1(beta * om);
  });
  Mat D00 = (sqN.asDiagonal() * d00.real() * sqN.asDiagonal());
  Mat D11 = (isqN.asDiagonal() * d11.real() * isqN.asDiagonal());

  ThermalObservables obs;
  obs.phi2 = D00.diagonal();

  // Point-split energy density:
  //   1/2 [ dW_11 + N h^{xx} d_x d_x' dW_00 + V N dW_00 ] at coincidence,
  // with the mixed derivative evaluated on faces and averaged back.
  Mat D = gradient_matrix(lat);
  Mat faces = D * D00 * D.transpose();
  obs.energy_density.resize(n);
  const int n_faces = static_cast<int>(D.rows());
  for (int i = 0; i < n; ++i) {
    // adjacent faces of site i (gradient_matrix row indexing)
    int f_lo, f_hi;
    if (lat.topology == Topology::periodic) {
      f_lo = (i - 1 + n_faces) % n_faces;
      f_hi = i;
    } else {
      f_lo = i;
      f_hi = i + 1;
    }
    const double grad2 = 0.5 * (faces(f_lo, f_lo) + faces(f_hi, f_hi));
    obs.energy_density[i] =
        0.5 * (D11(i, i) + bg.lapse[i] / lat.h_xx[i] * grad2 +
               bg.potential[i] * bg.lapse[i] * D00(i, i));
  }
  return obs;
}

}  // namespace kmslab
