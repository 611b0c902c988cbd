#pragma once

#include <cmath>

#include "kmslab/lattice.hpp"
#include "kmslab/spectral.hpp"

namespace kmslab {

/// Killing-time evolution T_t = sqrt(A)^{-1} e^{itH_e} sqrt(A) by exact
/// spectral exponential.
class Evolution {
 public:
  explicit Evolution(const PhaseSpaceOperator& ps) : ps_(&ps) {}

  CauchyData operator()(const CauchyData& d, double t) const {
    const PhaseSpaceOperator& ps = *ps_;
    CVec v = ps.sqrtA * d.stacked();
    CVec c = ps.He.mode_coefficients(v);
    for (int k = 0; k < ps.He.dim; ++k)
      c[k] *= std::exp(Complex(0, t * ps.He.eigenvalues[k]));
    return CauchyData::from_stacked(ps.inv_sqrtA * (ps.He.eigenvectors * c));
  }

  const PhaseSpaceOperator& phase_space() const { return *ps_; }

 private:
  const PhaseSpaceOperator* ps_;
};

inline CauchyData evolve(const Evolution& ev, const CauchyData& d, double t) {
  return ev(d, t);
}

/// Conserved energy <d, A d>_w.
inline double energy(const PhaseSpaceOperator& ps, const CauchyData& d) {
  CVec v = d.stacked();
  Complex e = v.adjoint() * (ps.weights2.asDiagonal() * (ps.A.matrix * v));
  return e.real();
}

/// Symplectic form sigma(d,d') = sum_i w_i (phi0_i phi1'_i - phi1_i phi0'_i)
/// (bilinear, no conjugation).
inline Complex symplectic_form(const SurfaceLattice& lat, const CauchyData& d,
                               const CauchyData& dp) {
  Complex acc = 0.0;
  for (int i = 0; i < lat.n_sites; ++i)
    acc += lat.vol_weight[i] *
           (d.phi0[i] * dp.phi1[i] - d.phi1[i] * dp.phi0[i]);
  return acc;
}

/// Positive/negative frequency split on a static background:
/// f_pm = (phi0 +- i X phi1)/2 with X = N^{1/2} C^{-1/2} N^{1/2}.
/// Data with f_+ = 0 span the kernel of the ground one-particle map.
struct FrequencySplit {
  CVec f_plus;
  CVec f_minus;
};

inline FrequencySplit frequency_split(const WeightedOperator& C,
                                      const Background& bg,
                                      const CauchyData& d) {
  if (!bg.is_static)
    throw InvariantError("frequency_split requires a static background");
  Vec sqN = bg.lapse.array().sqrt();
  CVec x = C.apply(fns::inv_sqrt().eval,
                   (sqN.asDiagonal() * d.phi1).eval());
  CVec Xphi1 = sqN.asDiagonal() * x;
  FrequencySplit out;
  out.f_plus = 0.5 * (d.phi0 + Complex(0, 1) * Xphi1);
  out.f_minus = 0.5 * (d.phi0 - Complex(0, 1) * Xphi1);
  return out;
}

/// Kernel of the commutator function E at Killing-time separation dt:
/// E(dt) = -N^{1/2} C^{-1/2} sin(dt sqrt(C)) N^{1/2} as a density-stripped
/// kernel matrix (value of E(x, x') with integration weights removed).
/// [E(-eps) - E(eps)]/(2 eps) -> diag(N_i / w_i), the lapse-weighted
/// discrete delta of the equal-time canonical commutator.
struct CommutatorKernel {
  double dt = 0.0;
  Mat matrix;
};

inline CommutatorKernel commutator_kernel(const WeightedOperator& C,
                                          const Background& bg, double dt) {
  Vec sqN = bg.lapse.array().sqrt();
  CMat k = C.fn_kernel([dt](double lam) -> Complex {
    fns::require(lam > 0, "commutator_kernel", lam);
    return -std::sin(dt * std::sqrt(lam)) / std::sqrt(lam);
  });
  CommutatorKernel out;
  out.dt = dt;
  out.matrix = sqN.asDiagonal() * k.real() * sqN.asDiagonal();
  return out;
}

/// Independent RK4 integrator oracle for d/dt d = i H_cl d (tests only).
inline CauchyData evolve_rk4(const PhaseSpaceOperator& ps, const CauchyData& d,
                             double t, int steps) {
  CVec y = d.stacked();
  const double h = t / steps;
  auto rhs = [&](const CVec& v) { return (Complex(0, 1) * (ps.H_cl * v)).eval(); };
  for (int s = 0; s < steps; ++s) {
    CVec k1 = rhs(y);
    CVec k2 = rhs(y + 0.5 * h * k1);
    CVec k3 = rhs(y + 0.5 * h * k2);
    CVec k4 = rhs(y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return CauchyData::from_stacked(y);
}

}  // namespace kmslab
