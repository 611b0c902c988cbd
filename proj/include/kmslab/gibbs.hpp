#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "kmslab/lattice.hpp"
#include "kmslab/thermal.hpp"

namespace kmslab {

/// Truncated Fock space over the lowest modes of the ground one-particle
/// space.  The per-mode factors commute and the occupation cutoff is
/// per-mode, so every trace factorizes exactly over modes; all operations
/// work with (n_max+1)-dimensional per-mode matrices.  A dense full-space
/// route (Kronecker products) is available for small dimensions as an
/// independent cross-check.
struct FockTruncation {
  std::vector<int> mode_ids;  // indices into the ground one-particle basis
  Vec omegas;                 // energies of the selected modes
  int n_max = 0;
  double beta = 0.0;
  CMat ground_P;              // full ground one-particle map (rows = modes)
  Vec ground_h;               // all one-particle energies

  int m() const { return static_cast<int>(mode_ids.size()); }
  double dim() const { return std::pow(n_max + 1.0, m()); }
  double omega_min() const { return omegas.minCoeff(); }

  /// Truncation bound recorded alongside every result.
  double leakage_bound() const {
    return std::exp(-beta * omega_min() * n_max);
  }

  /// Truncated annihilation operator; its adjoint annihilates the top rung.
  Mat annihilator() const {
    Mat a = Mat::Zero(n_max + 1, n_max + 1);
    for (int k = 1; k <= n_max; ++k) a(k - 1, k) = std::sqrt(double(k));
    return a;
  }

  /// h_k = omega_k a^* a, exactly diagonal.
  Vec mode_energies(int mode) const {
    Vec e(n_max + 1);
    for (int k = 0; k <= n_max; ++k) e[k] = omegas[mode] * k;
    return e;
  }

  /// One-particle coefficients of f along the selected modes, plus the
  /// discarded weight ||(1 - P_modes) p_0(f)||.
  struct Projection {
    CVec c;           // size m
    double discarded; // norm of the unselected components
  };

  Projection project(const CauchyData& f) const {
    CVec full = ground_P * f.stacked();
    Projection pr;
    pr.c.resize(m());
    double kept = 0.0;
    for (int j = 0; j < m(); ++j) {
      pr.c[j] = full[mode_ids[j]];
      kept += std::norm(pr.c[j]);
    }
    pr.discarded = std::sqrt(std::max(0.0, full.squaredNorm() - kept));
    return pr;
  }
};

/// Selects the m lowest-energy modes of a ground state (which stores its
/// one-particle map in the energy eigenbasis, ascending).
inline FockTruncation build_fock(const TwoPointState& ground, int m, int n_max,
                                 double beta, double dim_cap = 20000.0) {
  if (ground.kind != TwoPointState::Kind::ground)
    throw InvariantError("build_fock expects a ground state");
  if (!(beta > 0)) throw InvariantError("build_fock: beta must be > 0");
  if (m < 1 || m > ground.k_dim())
    throw InvariantError("build_fock: invalid mode count");
  FockTruncation ft;
  ft.n_max = n_max;
  ft.beta = beta;
  ft.ground_P = ground.P;
  ft.ground_h = ground.h;
  ft.omegas.resize(m);
  for (int j = 0; j < m; ++j) {
    ft.mode_ids.push_back(j);  // ground eigenvalues are ascending
    ft.omegas[j] = ground.h[j];
    if (!(ft.omegas[j] > 0))
      throw InvariantError("build_fock: nonpositive mode energy");
  }
  if (ft.dim() > dim_cap)
    throw InvariantError("build_fock: truncated dimension " +
                         std::to_string(ft.dim()) + " exceeds cap " +
                         std::to_string(dim_cap));
  return ft;
}

/// Tr e^{-beta h} over the truncated space (product of finite geometric
/// sums) and its untruncated closed form prod_k (1-e^{-beta omega_k})^{-1}.
inline double partition_function(const FockTruncation& ft) {
  double z = 1.0;
  for (int j = 0; j < ft.m(); ++j) {
    double zj = 0.0;
    for (int k = 0; k <= ft.n_max; ++k)
      zj += std::exp(-ft.beta * ft.omegas[j] * k);
    z *= zj;
  }
  return z;
}

inline double partition_function_closed(const FockTruncation& ft) {
  double z = 1.0;
  for (int j = 0; j < ft.m(); ++j)
    z *= -1.0 / std::expm1(-ft.beta * ft.omegas[j]);
  return z;
}

/// <a^* a> in the truncated Gibbs state of a single mode.
inline double gibbs_occupation(const FockTruncation& ft, int mode) {
  double num = 0.0, den = 0.0;
  for (int k = 0; k <= ft.n_max; ++k) {
    const double w = std::exp(-ft.beta * ft.omegas[mode] * k);
    num += k * w;
    den += w;
  }
  return num / den;
}

namespace detail {

// Per-mode field operator Phi_j = c a^* + conj(c) a on the truncated rung.
inline CMat mode_field(const FockTruncation& ft, Complex c) {
  Mat a = ft.annihilator();
  return c * a.transpose().cast<Complex>() + std::conj(c) * a.cast<Complex>();
}

// exp(i Phi) through the Hermitian eigendecomposition of Phi.
inline CMat unitary_exp(const CMat& phi) {
  Eigen::SelfAdjointEigenSolver<CMat> es(phi);
  CVec ph(phi.rows());
  for (int k = 0; k < phi.rows(); ++k)
    ph[k] = std::exp(Complex(0, es.eigenvalues()[k]));
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace detail

struct GibbsExpectation {
  Complex value;
  double discarded_weight;  // ||(1 - P_modes) p_0(f)||
};

/// Tr(e^{-beta h} W(f)) / Z with W(f) = exp(i Phi(f)),
/// Phi(f) = a^*(p_0(f)) + a(p_0(conj f)) projected onto the kept modes.
inline GibbsExpectation gibbs_weyl_expectation(const FockTruncation& ft,
                                               const CauchyData& f) {
  auto pr = ft.project(f);
  Complex val = 1.0;
  for (int j = 0; j < ft.m(); ++j) {
    CMat w = detail::unitary_exp(detail::mode_field(ft, pr.c[j]));
    Complex num = 0.0;
    double den = 0.0;
    for (int k = 0; k <= ft.n_max; ++k) {
      const double g = std::exp(-ft.beta * ft.omegas[j] * k);
      num += g * w(k, k);
      den += g;
    }
    val *= num / den;
  }
  return {val, pr.discarded};
}

/// Gibbs two-point <Phi(f) Phi(f')> by exact per-mode traces.
inline GibbsExpectation gibbs_two_point(const FockTruncation& ft,
                                        const CauchyData& f,
                                        const CauchyData& fp) {
  auto pf = ft.project(f);
  auto pfp = ft.project(fp);
  Complex val = 0.0;
  for (int j = 0; j < ft.m(); ++j) {
    CMat phi1 = detail::mode_field(ft, pf.c[j]);
    CMat phi2 = detail::mode_field(ft, pfp.c[j]);
    CMat prod = phi1 * phi2;
    Complex num = 0.0;
    double den = 0.0;
    for (int k = 0; k <= ft.n_max; ++k) {
      const double g = std::exp(-ft.beta * ft.omegas[j] * k);
      num += g * prod(k, k);
      den += g;
    }
    val += num / den;
  }
  return {val, std::max(pf.discarded, pfp.discarded)};
}

/// KMS trace identity residual |F(t + i beta) - G(t)| with
///   F(z) = Tr(e^{-bh} W(f) e^{izh} W(f') e^{-izh}) / Z,
///   G(t) = Tr(e^{-bh} e^{ith} W(f') e^{-ith} W(f)) / Z,
/// exact at any finite truncation by cyclicity of the trace; an optional
/// perturbation of the strip width serves as the negative control.
inline double gibbs_kms_check(const FockTruncation& ft, const CauchyData& f,
                              const CauchyData& fp, double t,
                              double beta_shift_factor = 1.0) {
  auto pf = ft.project(f);
  auto pfp = ft.project(fp);
  Complex lhs = 1.0, rhs = 1.0;
  for (int j = 0; j < ft.m(); ++j) {
    const double om = ft.omegas[j];
    CMat w1 = detail::unitary_exp(detail::mode_field(ft, pf.c[j]));
    CMat w2 = detail::unitary_exp(detail::mode_field(ft, pfp.c[j]));
    CVec gibbs(ft.n_max + 1), ut(ft.n_max + 1), uz(ft.n_max + 1);
    const Complex z(t, beta_shift_factor * ft.beta);
    for (int k = 0; k <= ft.n_max; ++k) {
      gibbs[k] = std::exp(-ft.beta * om * k);
      ut[k] = std::exp(Complex(0, t * om * k));
      uz[k] = std::exp(Complex(0, 1) * z * (om * k));
    }
    CMat w2_t = ut.asDiagonal() * w2 * ut.asDiagonal().inverse();
    CMat w2_z = uz.asDiagonal() * w2 * uz.asDiagonal().inverse();
    lhs *= (gibbs.asDiagonal() * w1 * w2_z).trace() / gibbs.sum();
    rhs *= (gibbs.asDiagonal() * w2_t * w1).trace() / gibbs.sum();
  }
  return std::abs(lhs - rhs);
}

/// Least-squares fit of log Tr(rho W(sf)) to a s^2 + b s^4 on a fixed
/// sample of scaling factors; |b| is the quartic-cumulant proxy (zero for
/// an exactly quasi-free state).
inline double quartic_cumulant(const FockTruncation& ft, const CauchyData& f,
                               const std::vector<double>& scales = {0.5, 1.0,
                                                                    1.5,
                                                                    2.0}) {
  Eigen::MatrixXd X(scales.size(), 2);
  Eigen::VectorXd y(scales.size());
  for (std::size_t r = 0; r < scales.size(); ++r) {
    const double s = scales[r];
    CauchyData sf(s * f.phi0, s * f.phi1);
    Complex v = gibbs_weyl_expectation(ft, sf).value;
    y[static_cast<int>(r)] = std::log(std::abs(v));
    X(static_cast<int>(r), 0) = s * s;
    X(static_cast<int>(r), 1) = s * s * s * s;
  }
  Eigen::Vector2d coef = X.colPivHouseholderQr().solve(y);
  return std::abs(coef[1]);
}

// --- dense full-space route (tests only, small dimensions) --------------

namespace detail {

inline CMat kron(const CMat& A, const CMat& B) {
  CMat out(A.rows() * B.rows(), A.cols() * B.cols());
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

}  // namespace detail

/// Full-space Phi(f) as a Kronecker-product matrix; for cross-checking the
/// factorized traces at small (n_max+1)^m.
inline CMat full_field_operator(const FockTruncation& ft,
                                const CauchyData& f) {
  auto pr = ft.project(f);
  const int d = ft.n_max + 1;
  CMat total = CMat::Zero(static_cast<int>(ft.dim()),
                          static_cast<int>(ft.dim()));
  for (int j = 0; j < ft.m(); ++j) {
    CMat op = CMat::Identity(1, 1);
    for (int l = 0; l < ft.m(); ++l) {
      CMat factor = (l == j) ? detail::mode_field(ft, pr.c[j])
                             : CMat::Identity(d, d);
      op = detail::kron(op, factor);
    }
    total += op;
  }
  return total;
}

/// Full-space h as a diagonal vector in the occupation basis.
inline Vec full_hamiltonian_diagonal(const FockTruncation& ft) {
  const int d = ft.n_max + 1;
  const int dim = static_cast<int>(ft.dim());
  Vec h = Vec::Zero(dim);
  // occupation digits: idx = ((n_0 d + n_1) d + n_2) ... with mode 0 most
  // significant, matching the kron ordering of full_field_operator.
  for (int idx = 0; idx < dim; ++idx) {
    int rem = idx;
    double acc = 0.0;
    for (int j = ft.m() - 1; j >= 0; --j) {
      acc += ft.omegas[j] * (rem % d);
      rem /= d;
    }
    h[idx] = acc;
  }
  return h;
}

}  // namespace kmslab
