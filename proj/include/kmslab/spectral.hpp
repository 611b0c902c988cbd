#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>

#include "kmslab/errors.hpp"
#include "kmslab/lattice.hpp"

namespace kmslab {

/// Symmetric (Hermitian) operator in a weighted inner product, stored with
/// its full eigendecomposition.  Eigenvectors are columns of `eigenvectors`
/// and are orthonormal in <f,g>_w = sum_i w_i conj(f_i) g_i.
class WeightedOperator {
 public:
  int dim = 0;
  Vec weights;
  CMat matrix;
  Vec eigenvalues;   // ascending
  CMat eigenvectors; // U with U^H diag(w) U = I

  static WeightedOperator make(Vec weights, CMat matrix) {
    WeightedOperator op;
    op.dim = static_cast<int>(weights.size());
    if (matrix.rows() != op.dim || matrix.cols() != op.dim)
      throw InvariantError("weighted operator: matrix/weight size mismatch");
    op.weights = std::move(weights);
    op.matrix = std::move(matrix);

    // Similarity transform B = W^{1/2} M W^{-1/2} is Hermitian when M is
    // symmetric in the weighted inner product; solve the standard problem
    // and transform eigenvectors back.
    Vec sqw = op.weights.array().sqrt();
    CMat B(op.dim, op.dim);
    for (int i = 0; i < op.dim; ++i)
      for (int j = 0; j < op.dim; ++j)
        B(i, j) = sqw[i] * op.matrix(i, j) / sqw[j];
    // Symmetrize away roundoff before solving.
    B = Complex(0.5) * (B + B.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<CMat> es(B);
    if (es.info() != Eigen::Success)
      throw InvariantError("eigensolver failed to converge (dim " +
                           std::to_string(op.dim) + ", |M| " +
                           std::to_string(op.matrix.norm()) + ")");
    op.eigenvalues = es.eigenvalues();
    op.eigenvectors = es.eigenvectors();
    for (int i = 0; i < op.dim; ++i)
      op.eigenvectors.row(i) /= sqw[i];
    return op;
  }

  /// <u_k, f>_w for all k at once.
  CVec mode_coefficients(const CVec& f) const {
    return eigenvectors.adjoint() * (weights.asDiagonal() * f);
  }

  /// fn(op) f = sum_k fn(lambda_k) u_k <u_k, f>_w.
  CVec apply(const std::function<Complex(double)>& fn, const CVec& f) const {
    CVec c = mode_coefficients(f);
    for (int k = 0; k < dim; ++k) c[k] *= fn(eigenvalues[k]);
    return eigenvectors * c;
  }

  /// Matrix of fn(op) in the site basis: U fn(Lambda) U^H W.
  CMat fn_matrix(const std::function<Complex(double)>& fn) const {
    CVec d(dim);
    for (int k = 0; k < dim; ++k) d[k] = fn(eigenvalues[k]);
    return eigenvectors * d.asDiagonal() * eigenvectors.adjoint() *
           weights.asDiagonal().toDenseMatrix().cast<Complex>();
  }

  /// Density-stripped kernel of fn(op): U fn(Lambda) U^H.  Entry (i,j) is
  /// the kernel value fn(op)(x_i, x_j) with both integration weights removed.
  CMat fn_kernel(const std::function<Complex(double)>& fn) const {
    CVec d(dim);
    for (int k = 0; k < dim; ++k) d[k] = fn(eigenvalues[k]);
    return eigenvectors * d.asDiagonal() * eigenvectors.adjoint();
  }
};

// --- scalar function tags for spectral calculus ------------------------

struct ScalarFn {
  std::string name;
  std::function<Complex(double)> eval;
};

namespace fns {

inline void require(bool ok, const std::string& name, double lambda) {
  if (!ok)
    throw DomainError("spectral function '" + name +
                      "' undefined at eigenvalue " + std::to_string(lambda));
}

inline ScalarFn power(double p) {
  return {"power", [p](double x) -> Complex {
            if (p != std::floor(p)) require(x >= 0, "power", x);
            return std::pow(x, p);
          }};
}

inline ScalarFn sqrt() {
  return {"sqrt", [](double x) -> Complex {
            require(x >= 0, "sqrt", x);
            return std::sqrt(x);
          }};
}

inline ScalarFn inv_sqrt() {
  return {"inv_sqrt", [](double x) -> Complex {
            require(x > 0, "inv_sqrt", x);
            return 1.0 / std::sqrt(x);
          }};
}

inline ScalarFn exp_scaled(double t) {  // exp(-t x)
  return {"exp", [t](double x) -> Complex { return std::exp(-t * x); }};
}

inline ScalarFn cos_sqrt(Complex z) {  // cos(z sqrt(x))
  return {"cos_sqrt", [z](double x) -> Complex {
            require(x >= 0, "cos_sqrt", x);
            return std::cos(z * std::sqrt(x));
          }};
}

inline ScalarFn sin_sqrt(double t) {  // sin(t sqrt(x))
  return {"sin_sqrt", [t](double x) -> Complex {
            require(x >= 0, "sin_sqrt", x);
            return std::sin(t * std::sqrt(x));
          }};
}

// coth(a sqrt(x)), evaluated through expm1 so large arguments do not
// overflow: coth(y) = 1 + 2/(e^{2y} - 1).
inline double coth(double y) { return 1.0 + 2.0 / std::expm1(2.0 * y); }

inline ScalarFn coth_sqrt(double a) {
  return {"coth_sqrt", [a](double x) -> Complex {
            require(x > 0, "coth_sqrt", x);
            return coth(a * std::sqrt(x));
          }};
}

// cosh(a sqrt(x)) / sinh(b sqrt(x)) with a <= b, overflow-safe.
inline ScalarFn cosh_sinh_ratio(double a, double b) {
  return {"cosh_sinh_ratio", [a, b](double x) -> Complex {
            require(x > 0, "cosh_sinh_ratio", x);
            const double y = std::sqrt(x);
            const double p = a * y, q = b * y;
            return (std::exp(p - q) + std::exp(-p - q)) /
                   (1.0 - std::exp(-2.0 * q));
          }};
}

inline ScalarFn bose(double beta) {  // 1/(e^{beta sqrt(x)} - 1)
  return {"bose", [beta](double x) -> Complex {
            require(x > 0, "bose", x);
            return 1.0 / std::expm1(beta * std::sqrt(x));
          }};
}

}  // namespace fns

inline CVec spectral_fn(const WeightedOperator& op, const ScalarFn& fn,
                        const CVec& f) {
  if (f.size() != op.dim)
    throw InvariantError("spectral_fn: vector length mismatch");
  return op.apply(fn.eval, f);
}

// --- operator assembly --------------------------------------------------

namespace detail {

// Arithmetic face averages of a per-site coefficient.  Faces follow the
// rows of gradient_matrix: periodic face i sits between sites i and i+1
// (mod n); dirichlet face i sits between sites i-1 and i, with one-sided
// values at the two boundary faces.
inline Vec face_average(const SurfaceLattice& lat, const Vec& c) {
  const int n = lat.n_sites;
  if (lat.topology == Topology::periodic) {
    Vec f(n);
    for (int i = 0; i < n; ++i) f[i] = 0.5 * (c[i] + c[(i + 1) % n]);
    return f;
  }
  Vec f(n + 1);
  f[0] = c[0];
  f[n] = c[n - 1];
  for (int i = 1; i < n; ++i) f[i] = 0.5 * (c[i - 1] + c[i]);
  return f;
}

// Flux-form elliptic term: g |-> (1/w) D^T diag(face_avg(coeff) dx) D g,
// the discretization of -div(coeff/sqrt(h) grad .) symmetric in <,>_w.
inline Mat flux_laplacian(const SurfaceLattice& lat, const Vec& coeff) {
  Mat D = gradient_matrix(lat);
  Vec face = face_average(lat, coeff) * lat.spacing;
  Mat L = D.transpose() * face.asDiagonal() * D;
  for (int i = 0; i < lat.n_sites; ++i) L.row(i) /= lat.vol_weight[i];
  return L;
}

// Advection Q = N^x d/dx with face-averaged transport coefficient
// a = sqrt(h) N^x:  (Qg)_i = (1/w_i) (1/2)[a_{i+1/2}(g_{i+1}-g_i)
//                                        + a_{i-1/2}(g_i-g_{i-1})].
inline Mat advection(const SurfaceLattice& lat, const Vec& a_site) {
  const int n = lat.n_sites;
  Mat Q = Mat::Zero(n, n);
  auto face = [&](int i) {  // face between site i and i+1
    if (lat.topology == Topology::periodic)
      return 0.5 * (a_site[i % n < 0 ? i % n + n : i % n] +
                    a_site[(i + 1) % n]);
    if (i < 0) return a_site[0];
    if (i >= n - 1) return a_site[n - 1];
    return 0.5 * (a_site[i] + a_site[i + 1]);
  };
  for (int i = 0; i < n; ++i) {
    const double ap = face(i), am = face(i - 1);
    const double inv_w = 1.0 / lat.vol_weight[i];
    auto add = [&](int j, double val) {
      if (lat.topology == Topology::periodic)
        Q(i, (j % n + n) % n) += val;
      else if (j >= 0 && j < n)
        Q(i, j) += val;
    };
    add(i + 1, 0.5 * ap * inv_w);
    add(i, 0.5 * (am - ap) * inv_w);
    add(i - 1, -0.5 * am * inv_w);
  }
  return Q;
}

// Divergence P = d/dx (N^x .) via centered face fluxes with the same face
// coefficient as advection; exactly the weighted negative adjoint of Q.
inline Mat divergence(const SurfaceLattice& lat, const Vec& a_site) {
  const int n = lat.n_sites;
  Mat P = Mat::Zero(n, n);
  auto face = [&](int i) {
    if (lat.topology == Topology::periodic)
      return 0.5 * (a_site[(i % n + n) % n] + a_site[(i + 1) % n]);
    if (i < 0) return a_site[0];
    if (i >= n - 1) return a_site[n - 1];
    return 0.5 * (a_site[i] + a_site[i + 1]);
  };
  for (int i = 0; i < n; ++i) {
    const double ap = face(i), am = face(i - 1);
    const double inv_w = 1.0 / lat.vol_weight[i];
    auto add = [&](int j, double val) {
      if (lat.topology == Topology::periodic)
        P(i, (j % n + n) % n) += val;
      else if (j >= 0 && j < n)
        P(i, j) += val;
    };
    // F_{i+1/2} = ap (g_i + g_{i+1})/2, (Pg)_i = (F_{i+1/2} - F_{i-1/2})/w_i
    add(i + 1, 0.5 * ap * inv_w);
    add(i, 0.5 * (ap - am) * inv_w);
    add(i - 1, -0.5 * am * inv_w);
  }
  return P;
}

}  // namespace detail

/// C = sqrt(N)(-div N grad)sqrt(N) + V N^2, flux-form, symmetric and
/// strictly positive in the weighted inner product.
inline WeightedOperator assemble_C(const SurfaceLattice& lat,
                                   const Background& bg) {
  const int n = lat.n_sites;
  Vec coeff(n);  // N h^{xx} sqrt(h) at sites
  for (int i = 0; i < n; ++i)
    coeff[i] = bg.lapse[i] / lat.h_xx[i] * std::sqrt(lat.h_xx[i]);
  Mat L = detail::flux_laplacian(lat, coeff);
  Vec sqN = bg.lapse.array().sqrt();
  Mat C = sqN.asDiagonal() * L * sqN.asDiagonal();
  for (int i = 0; i < n; ++i)
    C(i, i) += bg.potential[i] * bg.lapse[i] * bg.lapse[i];
  return WeightedOperator::make(lat.vol_weight, C.cast<Complex>());
}

/// Phase-space (doubled) operators on Cauchy data: the classical
/// Hamiltonian H_cl, the energy operator A = (i/2) sigma H_cl, its square
/// root factors, and the Hermitian generator H_e = 2i sqrt(A) sigma sqrt(A).
struct PhaseSpaceOperator {
  int n = 0;
  Vec weights2;        // doubled weights
  CMat H_cl;           // 2n x 2n, not symmetric
  WeightedOperator A;  // energy operator, Hermitian >= 0, invertible
  CMat sqrtA, inv_sqrtA;
  WeightedOperator He; // Hermitian; spectrum symmetric about 0
  Mat alpha;           // -div N grad + VN  (n x n block)
  Mat Q, P;            // advection / divergence blocks

  /// sigma applied to stacked data: (phi0, phi1) -> (-phi1, phi0).
  static CVec apply_sigma(const CVec& d) {
    const auto n = d.size() / 2;
    CVec out(2 * n);
    out.head(n) = -d.tail(n);
    out.tail(n) = d.head(n);
    return out;
  }

  double min_abs_He() const {
    return He.eigenvalues.array().abs().minCoeff();
  }
};

inline PhaseSpaceOperator assemble_phase_space(const SurfaceLattice& lat,
                                               const Background& bg) {
  const int n = lat.n_sites;
  PhaseSpaceOperator ps;
  ps.n = n;
  ps.weights2.resize(2 * n);
  ps.weights2 << lat.vol_weight, lat.vol_weight;

  Vec coeffN(n), a_site(n);
  for (int i = 0; i < n; ++i) {
    coeffN[i] = bg.lapse[i] / lat.h_xx[i] * std::sqrt(lat.h_xx[i]);
    a_site[i] = std::sqrt(lat.h_xx[i]) * bg.shift_vec[i];
  }
  ps.alpha = detail::flux_laplacian(lat, coeffN);
  for (int i = 0; i < n; ++i)
    ps.alpha(i, i) += bg.potential[i] * bg.lapse[i];
  ps.Q = detail::advection(lat, a_site);
  ps.P = detail::divergence(lat, a_site);

  // H_cl = -i [[Q, N], [-alpha, P]] so that d/dt (phi0,phi1) = iH_cl d.
  CMat Hcl = CMat::Zero(2 * n, 2 * n);
  Hcl.topLeftCorner(n, n) = ps.Q.cast<Complex>();
  Hcl.topRightCorner(n, n) =
      Mat(bg.lapse.asDiagonal()).cast<Complex>();
  Hcl.bottomLeftCorner(n, n) = -ps.alpha.cast<Complex>();
  Hcl.bottomRightCorner(n, n) = ps.P.cast<Complex>();
  Hcl *= Complex(0, -1);
  ps.H_cl = Hcl;

  // A = (1/2) [[alpha, -P], [Q, N]]; Hermitian because Q^dag = -P in <,>_w.
  CMat Amat = CMat::Zero(2 * n, 2 * n);
  Amat.topLeftCorner(n, n) = ps.alpha.cast<Complex>();
  Amat.topRightCorner(n, n) = -ps.P.cast<Complex>();
  Amat.bottomLeftCorner(n, n) = ps.Q.cast<Complex>();
  Amat.bottomRightCorner(n, n) =
      Mat(bg.lapse.asDiagonal()).cast<Complex>();
  Amat *= 0.5;

  // A = (i/2) sigma H_cl must hold exactly (shared blocks); keep the check
  // as a guard against block-wiring mistakes.
  CMat sigmaH = CMat::Zero(2 * n, 2 * n);
  sigmaH.topRows(n) = -Hcl.bottomRows(n);
  sigmaH.bottomRows(n) = Hcl.topRows(n);
  if ((Amat - Complex(0, 0.5) * sigmaH).norm() > 1e-10 * Amat.norm())
    throw InvariantError("phase space: A != (i/2) sigma H_cl");

  ps.A = WeightedOperator::make(ps.weights2, Amat);
  const double amin = ps.A.eigenvalues.minCoeff();
  if (amin <= 0)
    throw InvariantError("energy operator A not strictly positive: min "
                         "eigenvalue " + std::to_string(amin));
  ps.sqrtA = ps.A.fn_matrix(fns::sqrt().eval);
  ps.inv_sqrtA = ps.A.fn_matrix(fns::inv_sqrt().eval);

  CMat sig_sqrtA(2 * n, 2 * n);
  sig_sqrtA.topRows(n) = -ps.sqrtA.bottomRows(n);
  sig_sqrtA.bottomRows(n) = ps.sqrtA.topRows(n);
  CMat He = Complex(0, 2) * ps.sqrtA * sig_sqrtA;
  ps.He = WeightedOperator::make(ps.weights2, He);
  if (ps.He.eigenvalues.array().abs().minCoeff() <= 0)
    throw InvariantError("H_e has a kernel");
  return ps;
}

}  // namespace kmslab
