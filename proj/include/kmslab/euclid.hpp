#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <cmath>
#include <functional>
#include <memory>

#include "kmslab/classical.hpp"
#include "kmslab/lattice.hpp"
#include "kmslab/spectral.hpp"

namespace kmslab {

/// Imaginary-time cylinder: periodic tau circle of radius R (beta = 2 pi R)
/// times the spatial surface lattice.
struct CylinderLattice {
  double R = 1.0;
  int n_tau = 0;
  const SurfaceLattice* surface = nullptr;
  double spacing_tau = 0.0;

  static CylinderLattice make(double R, int n_tau, const SurfaceLattice& lat) {
    if (!(R > 0)) throw InvariantError("cylinder: R must be > 0");
    if (n_tau < 2 || n_tau % 2 != 0)
      throw InvariantError("cylinder: n_tau must be a positive even integer");
    CylinderLattice c;
    c.R = R;
    c.n_tau = n_tau;
    c.surface = &lat;
    c.spacing_tau = 2.0 * M_PI * R / n_tau;
    return c;
  }

  int total_sites() const { return n_tau * surface->n_sites; }
  int index(int t, int i) const { return t * surface->n_sites + i; }
};

/// Euclidean operator on the cylinder in the lapse-transformed frame:
/// (-d^2/dtau^2 (x) I) + (I (x) C), periodic second difference in tau,
/// with the identical spatial stencil as the Lorentzian operator C.
/// Symmetric w.r.t. the cylinder weights w_i * dtau and strictly positive.
inline Eigen::SparseMatrix<double> assemble_euclidean(
    const CylinderLattice& cyl, const Background& bg,
    const WeightedOperator& C) {
  if (!bg.is_static)
    throw InvariantError(
        "euclidean sector requires a static background (no Wick rotation "
        "with a nonzero shift)");
  const int n = cyl.surface->n_sites;
  const int nt = cyl.n_tau;
  const double inv_dt2 = 1.0 / (cyl.spacing_tau * cyl.spacing_tau);
  Mat Cr = C.matrix.real();

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(nt) * (n * n + 3 * n));
  for (int t = 0; t < nt; ++t) {
    const int tm = (t - 1 + nt) % nt, tp = (t + 1) % nt;
    for (int i = 0; i < n; ++i) {
      trip.emplace_back(cyl.index(t, i), cyl.index(t, i), 2.0 * inv_dt2);
      trip.emplace_back(cyl.index(t, i), cyl.index(tm, i), -inv_dt2);
      trip.emplace_back(cyl.index(t, i), cyl.index(tp, i), -inv_dt2);
      for (int j = 0; j < n; ++j)
        if (Cr(i, j) != 0.0)
          trip.emplace_back(cyl.index(t, i), cyl.index(t, j), Cr(i, j));
    }
  }
  Eigen::SparseMatrix<double> K(cyl.total_sites(), cyl.total_sites());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

/// Euclidean Green's function, one of three representations.  kernel(dtau)
/// returns the n x n field-field correlator kernel at imaginary-time
/// separation dtau (density-stripped, with the N^{1/2} surface-density
/// sandwich matching the Lorentzian two-point kernels).
struct EuclideanGreen {
  enum class Repr { direct, mode_sum, closed_form };
  Repr repr = Repr::closed_form;
  int n_max = 0;  // mode_sum only
  std::function<Mat(double)> kernel;
};

/// Direct route: sparse Cholesky solve of the full cylinder operator
/// against lattice-delta columns at one tau slice.
inline EuclideanGreen green_direct(const CylinderLattice& cyl,
                                   const Background& bg,
                                   const WeightedOperator& C) {
  const int n = cyl.surface->n_sites;
  const int nt = cyl.n_tau;
  Eigen::SparseMatrix<double> K = assemble_euclidean(cyl, bg, C);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  solver.compute(K);
  if (solver.info() != Eigen::Success)
    throw InvariantError("euclidean direct solve: factorization failed");

  Vec sqN = bg.lapse.array().sqrt();
  auto G = std::make_shared<Mat>(cyl.total_sites(), n);
  for (int j = 0; j < n; ++j) {
    Vec rhs = Vec::Zero(cyl.total_sites());
    rhs[cyl.index(0, j)] =
        sqN[j] / (cyl.surface->vol_weight[j] * cyl.spacing_tau);
    Vec g = solver.solve(rhs);
    if (solver.info() != Eigen::Success)
      throw InvariantError("euclidean direct solve failed for column " +
                           std::to_string(j));
    G->col(j) = g;
  }
  const double dtau_step = cyl.spacing_tau;
  EuclideanGreen eg;
  eg.repr = EuclideanGreen::Repr::direct;
  eg.kernel = [G, sqN, n, nt, dtau_step](double dtau) -> Mat {
    double steps = dtau / dtau_step;
    int t = static_cast<int>(std::llround(steps));
    if (std::abs(steps - t) > 1e-9)
      throw InvariantError("direct green: dtau not on the tau grid");
    t = ((t % nt) + nt) % nt;
    Mat out(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        out(i, j) = sqN[i] * (*G)(t * n + i, j);
    return out;
  };
  return eg;
}

/// Matsubara route: truncated mode sum over discrete frequencies m/R,
/// kernel = N^{1/2} sum_{|m|<=n_max} e^{im dtau/R}/(2 pi R (C + m^2/R^2))
/// N^{1/2}.  Tail decays as O(1/n_max).
inline EuclideanGreen green_mode_sum(double R, const Background& bg,
                                     const WeightedOperator& C, int n_max) {
  if (n_max < 1) throw InvariantError("green_mode_sum: n_max must be >= 1");
  Vec sqN = bg.lapse.array().sqrt();
  EuclideanGreen eg;
  eg.repr = EuclideanGreen::Repr::mode_sum;
  eg.n_max = n_max;
  eg.kernel = [R, sqN, C, n_max](double dtau) -> Mat {
    CMat k = C.fn_kernel([R, n_max, dtau](double lam) -> Complex {
      fns::require(lam > 0, "green_mode_sum", lam);
      double acc = 1.0 / lam;
      for (int m = 1; m <= n_max; ++m)
        acc += 2.0 * std::cos(m * dtau / R) / (lam + m * m / (R * R));
      return acc / (2.0 * M_PI * R);
    });
    return sqN.asDiagonal() * k.real() * sqN.asDiagonal();
  };
  return eg;
}

namespace detail {

// cosh(p)/ (2 omega sinh(q)) with |p| <= q, overflow-safe.
inline double cosh_over_sinh(double p, double q) {
  return (std::exp(p - q) + std::exp(-p - q)) / (1.0 - std::exp(-2.0 * q));
}

}  // namespace detail

/// Spectral closed form: kernel(dtau) =
/// N^{1/2} C^{-1/2} cosh((pi R - dtau) sqrt(C)) / (2 sinh(pi R sqrt(C)))
/// N^{1/2} for dtau in [0, 2 pi R], extended periodically.
inline EuclideanGreen green_closed_form(double R, const Background& bg,
                                        const WeightedOperator& C) {
  Vec sqN = bg.lapse.array().sqrt();
  EuclideanGreen eg;
  eg.repr = EuclideanGreen::Repr::closed_form;
  eg.kernel = [R, sqN, C](double dtau) -> Mat {
    const double period = 2.0 * M_PI * R;
    double d = std::fmod(dtau, period);
    if (d < 0) d += period;
    CMat k = C.fn_kernel([R, d, period](double lam) -> Complex {
      fns::require(lam > 0, "green_closed_form", lam);
      const double om = std::sqrt(lam);
      return detail::cosh_over_sinh((M_PI * R - d) * om, M_PI * R * om) /
             (2.0 * om);
    });
    return sqN.asDiagonal() * k.real() * sqN.asDiagonal();
  };
  return eg;
}

/// Analytic continuation G^c_R(dz) =
/// N^{1/2} C^{-1/2} cos((dz + i pi R) sqrt(C)) / (2 sinh(pi R sqrt(C)))
/// N^{1/2}, defined for Im(dz) in [-2 pi R, 0] and extended by
/// 2 pi i R periodicity.  Restriction dz = -i dtau reproduces the Euclidean
/// kernel; real dz feeds the Wick rotation.
inline CMat green_continued(double R, const Background& bg,
                            const WeightedOperator& C, Complex dz) {
  // map Im(dz) into [-2 pi R, 0]
  const double period = 2.0 * M_PI * R;
  double im = std::fmod(dz.imag(), period);
  if (im > 0) im -= period;
  const Complex z(dz.real(), im);
  Vec sqN = bg.lapse.array().sqrt();
  CMat k = C.fn_kernel([R, z](double lam) -> Complex {
    fns::require(lam > 0, "green_continued", lam);
    const double om = std::sqrt(lam);
    // cos((z + i pi R) om) / (2 om sinh(pi R om)), overflow-safe:
    // with z = a + ib, b in [-2 pi R, 0]:
    //   cos((a + i(b + pi R)) om) = cos(a om)cosh((b + pi R) om)
    //                             - i sin(a om)sinh((b + pi R) om)
    // and |b + pi R| <= pi R.
    const double a = z.real() * om, b = (z.imag() + M_PI * R) * om;
    const double q = M_PI * R * om;
    const double ch = detail::cosh_over_sinh(b, q);   // cosh(b)/sinh(q)
    const double sh = (std::exp(b - q) - std::exp(-b - q)) /
                      (1.0 - std::exp(-2.0 * q));     // sinh(b)/sinh(q)
    return Complex(std::cos(a) * ch, -std::sin(a) * sh) / (2.0 * om);
  });
  return sqN.asDiagonal() * k * sqN.asDiagonal();
}

/// Wick rotation output: advanced/retarded fundamental solutions, the
/// Feynman propagator at radius R, and the reconstructed thermal two-point
/// kernel, all as functions of real Killing-time separation.
struct WickKernels {
  std::function<Mat(double)> E_plus;      // retarded: supported on dt >= 0
  std::function<Mat(double)> E_minus;     // advanced: supported on dt <= 0
  std::function<CMat(double)> E_feynman;  // i G^c(|dt|), R-dependent
  std::function<CMat(double)> omega_beta; // -i (E^F_R - E^-), beta = 2 pi R
};

inline WickKernels wick_rotate(const Background& bg, const WeightedOperator& C,
                               double R) {
  if (!bg.is_static)
    throw InvariantError("wick_rotate requires a static background");
  Vec sqN = bg.lapse.array().sqrt();
  auto commutator = [sqN, C](double dt) -> Mat {
    CMat k = C.fn_kernel([dt](double lam) -> Complex {
      fns::require(lam > 0, "wick_rotate", lam);
      return -std::sin(dt * std::sqrt(lam)) / std::sqrt(lam);
    });
    return sqN.asDiagonal() * k.real() * sqN.asDiagonal();
  };
  const int n = C.dim;
  auto theta = [](double x) { return x > 0 ? 1.0 : (x < 0 ? 0.0 : 0.5); };

  WickKernels wk;
  wk.E_minus = [commutator, theta, n](double dt) -> Mat {
    const double th = theta(-dt);
    if (th == 0.0) return Mat::Zero(n, n);
    return th * commutator(dt);
  };
  wk.E_plus = [commutator, theta, n](double dt) -> Mat {
    const double th = theta(dt);
    if (th == 0.0) return Mat::Zero(n, n);
    return -th * commutator(dt);
  };
  wk.E_feynman = [R, bg, C](double dt) -> CMat {
    return Complex(0, 1) * green_continued(R, bg, C, std::abs(dt));
  };
  auto e_minus = wk.E_minus;
  auto e_feyn = wk.E_feynman;
  wk.omega_beta = [e_minus, e_feyn](double dt) -> CMat {
    return Complex(0, -1) * (e_feyn(dt) - e_minus(dt).cast<Complex>());
  };
  return wk;
}

}  // namespace kmslab
