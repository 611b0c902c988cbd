#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kmslab/errors.hpp"

namespace kmslab {

using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Complex = std::complex<double>;

enum class Topology { periodic, dirichlet };

/// Discretized 1-D Cauchy surface with metric and midpoint quadrature
/// weights.  Site coordinates are x_i = i*dx (periodic) or (i+1)*dx
/// (dirichlet); vol_weight_i = sqrt(h_xx_i)*dx.
struct SurfaceLattice {
  int n_sites = 0;
  double length = 0.0;
  Topology topology = Topology::periodic;
  Vec h_xx;        // spatial metric component, per site
  double spacing = 0.0;
  Vec vol_weight;  // sqrt(h_xx)*spacing, per site

  double site_x(int i) const {
    return topology == Topology::periodic ? i * spacing : (i + 1) * spacing;
  }

  double total_volume() const { return vol_weight.sum(); }

  static SurfaceLattice make(int n, double length, Topology topo, Vec h_xx) {
    if (n < 2) throw InvariantError("lattice: n_sites must be >= 2");
    if (!(length > 0)) throw InvariantError("lattice: length must be > 0");
    if (h_xx.size() != n) throw InvariantError("lattice: h_xx has wrong length");
    SurfaceLattice lat;
    lat.n_sites = n;
    lat.length = length;
    lat.topology = topo;
    lat.spacing = topo == Topology::periodic ? length / n : length / (n + 1);
    lat.h_xx = std::move(h_xx);
    lat.vol_weight.resize(n);
    for (int i = 0; i < n; ++i) {
      if (!(lat.h_xx[i] > 0))
        throw InvariantError("lattice: h_xx <= 0 at site " + std::to_string(i));
      lat.vol_weight[i] = std::sqrt(lat.h_xx[i]) * lat.spacing;
    }
    return lat;
  }
};

/// Stationary background data (v, w, V) with derived lapse and shift.
/// (v, w) are fundamental; N = sqrt(v^2 + h^{xx} w^2), N^x = h^{xx} w.
struct Background {
  Vec v;          // stationary data function, > 0
  Vec w;          // shift one-form component w_x
  Vec potential;  // V, > 0
  Vec lapse;      // derived N
  Vec shift_vec;  // derived N^x

  bool is_static = false;

  static Background make(const SurfaceLattice& lat, Vec v, Vec w, Vec V) {
    const int n = lat.n_sites;
    if (v.size() != n || w.size() != n || V.size() != n)
      throw InvariantError("background: field length mismatch");
    Background bg;
    bg.v = std::move(v);
    bg.w = std::move(w);
    bg.potential = std::move(V);
    bg.lapse.resize(n);
    bg.shift_vec.resize(n);
    bg.is_static = true;
    for (int i = 0; i < n; ++i) {
      if (!(bg.v[i] > 0))
        throw InvariantError("background: v <= 0 at site " + std::to_string(i));
      if (!(bg.potential[i] > 0))
        throw InvariantError("background: V <= 0 at site " + std::to_string(i));
      const double hup = 1.0 / lat.h_xx[i];
      if (hup * bg.w[i] * bg.w[i] >= bg.v[i] * bg.v[i])
        throw InvariantError("shift bound violated: h^{xx}w^2 >= v^2 at site " +
                             std::to_string(i));
      bg.shift_vec[i] = hup * bg.w[i];
      if (bg.w[i] != 0.0) {
        bg.is_static = false;
        bg.lapse[i] = std::sqrt(bg.v[i] * bg.v[i] + hup * bg.w[i] * bg.w[i]);
      } else {
        bg.lapse[i] = bg.v[i];  // static: N = v bit-for-bit
      }
    }
    return bg;
  }
};

/// Cauchy data (phi|_Sigma, n^a nabla_a phi|_Sigma).
struct CauchyData {
  CVec phi0;
  CVec phi1;

  CauchyData() = default;
  CauchyData(CVec p0, CVec p1) : phi0(std::move(p0)), phi1(std::move(p1)) {
    if (phi0.size() != phi1.size())
      throw InvariantError("cauchy data: component length mismatch");
  }

  int size() const { return static_cast<int>(phi0.size()); }

  static CauchyData zero(int n) {
    return CauchyData(CVec::Zero(n), CVec::Zero(n));
  }

  CVec stacked() const {
    CVec d(2 * phi0.size());
    d << phi0, phi1;
    return d;
  }

  static CauchyData from_stacked(const CVec& d) {
    const auto n = d.size() / 2;
    return CauchyData(d.head(n), d.tail(n));
  }

  CauchyData conj() const {
    return CauchyData(phi0.conjugate(), phi1.conjugate());
  }
};

struct RunParams {
  double beta = 1.0;        // inverse temperature; infinity() for ground
  double radius = 0.0;      // imaginary-time radius R (0 = unset)
  std::vector<double> times;
  double tolerance = 1e-9;
  std::uint64_t seed = 0;
  std::string output_dir = ".";

  bool beta_is_inf() const { return std::isinf(beta); }
};

/// Weighted L^2(Sigma) inner product, antilinear in the first slot.
inline Complex inner_product(const SurfaceLattice& lat, const CVec& f,
                             const CVec& g) {
  if (f.size() != lat.n_sites || g.size() != lat.n_sites)
    throw InvariantError("inner_product: length mismatch");
  Complex acc = 0.0;
  for (int i = 0; i < lat.n_sites; ++i)
    acc += lat.vol_weight[i] * std::conj(f[i]) * g[i];
  return acc;
}

/// Forward-difference operator used in flux-form assembly.  Rows index
/// faces: n faces for periodic topology, n+1 for dirichlet (the boundary
/// faces difference against zero).
inline Mat gradient_matrix(const SurfaceLattice& lat) {
  const int n = lat.n_sites;
  const double inv_s = 1.0 / lat.spacing;
  if (lat.topology == Topology::periodic) {
    Mat D = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      D(i, i) = -inv_s;
      D(i, (i + 1) % n) = inv_s;
    }
    return D;
  }
  Mat D = Mat::Zero(n + 1, n);
  for (int i = 0; i <= n; ++i) {
    if (i > 0) D(i, i - 1) = -inv_s;
    if (i < n) D(i, i) = inv_s;
  }
  return D;
}

// --- configuration ingestion -------------------------------------------

namespace detail {

inline Vec eval_field(const nlohmann::json& j, const SurfaceLattice& lat,
                      const std::string& name) {
  const int n = lat.n_sites;
  Vec out(n);
  if (j.is_array()) {
    if (static_cast<int>(j.size()) != n)
      throw ConfigError("field '" + name + "': array length " +
                        std::to_string(j.size()) + " != n_sites " +
                        std::to_string(n));
    for (int i = 0; i < n; ++i) out[i] = j[i].get<double>();
    return out;
  }
  if (j.is_number()) {
    out.setConstant(j.get<double>());
    return out;
  }
  if (!j.is_object() || !j.contains("expr"))
    throw ConfigError("field '" + name + "': expected array, number or {expr,params}");
  const std::string expr = j["expr"].get<std::string>();
  const auto params = j.value("params", nlohmann::json::object());
  if (expr == "const") {
    out.setConstant(params.value("value", 0.0));
  } else if (expr == "cos") {
    for (int i = 0; i < n; ++i) out[i] = std::cos(lat.site_x(i));
  } else if (expr == "shifted_cos") {
    const double a = params.value("a", 0.0);
    const double b = params.value("b", 1.0);
    const double k = params.value("k", 1.0);
    for (int i = 0; i < n; ++i) out[i] = a + b * std::cos(k * lat.site_x(i));
  } else {
    throw ConfigError("field '" + name + "': unknown expression '" + expr + "'");
  }
  return out;
}

}  // namespace detail

struct Scenario {
  SurfaceLattice lattice;
  Background background;
  RunParams run;
};

inline Scenario load_config_json(const nlohmann::json& cfg) {
  if (!cfg.contains("lattice"))
    throw ConfigError("missing top-level object 'lattice'");
  const auto& jl = cfg["lattice"];
  if (!jl.contains("n") || !jl.contains("length"))
    throw ConfigError("lattice: 'n' and 'length' are required");
  const int n = jl["n"].get<int>();
  const double length = jl["length"].get<double>();
  const std::string topo_s = jl.value("topology", std::string("periodic"));
  Topology topo;
  if (topo_s == "periodic")
    topo = Topology::periodic;
  else if (topo_s == "dirichlet")
    topo = Topology::dirichlet;
  else
    throw ConfigError("lattice: unknown topology '" + topo_s + "'");

  // Provisional lattice with unit metric to get site coordinates for
  // expression evaluation of h_xx itself.
  SurfaceLattice proto = SurfaceLattice::make(n, length, topo, Vec::Ones(n));
  Vec h = jl.contains("h_xx") ? detail::eval_field(jl["h_xx"], proto, "h_xx")
                              : Vec::Ones(n);
  SurfaceLattice lat = SurfaceLattice::make(n, length, topo, std::move(h));

  if (!cfg.contains("background"))
    throw ConfigError("missing top-level object 'background'");
  const auto& jb = cfg["background"];
  Vec v = jb.contains("v") ? detail::eval_field(jb["v"], lat, "v") : Vec::Ones(n);
  Vec w = jb.contains("w") ? detail::eval_field(jb["w"], lat, "w") : Vec::Zero(n);
  Vec V = jb.contains("potential")
              ? detail::eval_field(jb["potential"], lat, "potential")
              : Vec::Ones(n);
  Background bg = Background::make(lat, std::move(v), std::move(w), std::move(V));

  RunParams run;
  if (cfg.contains("run")) {
    const auto& jr = cfg["run"];
    if (jr.contains("beta")) {
      if (jr["beta"].is_string()) {
        if (jr["beta"].get<std::string>() != "inf")
          throw ConfigError("run.beta: expected number or \"inf\"");
        run.beta = std::numeric_limits<double>::infinity();
      } else {
        run.beta = jr["beta"].get<double>();
        if (!(run.beta > 0)) throw ConfigError("run.beta must be > 0");
      }
    }
    if (jr.contains("R")) {
      run.radius = jr["R"].get<double>();
      if (!(run.radius > 0)) throw ConfigError("run.R must be > 0");
    }
    if (jr.contains("beta") && jr.contains("R") && !run.beta_is_inf()) {
      const double b2 = 2.0 * M_PI * run.radius;
      if (std::abs(run.beta - b2) > 1e-12 * run.beta)
        throw ConfigError("run: beta and R inconsistent (beta != 2*pi*R)");
    } else if (jr.contains("R") && !jr.contains("beta")) {
      run.beta = 2.0 * M_PI * run.radius;
    } else if (jr.contains("beta") && !jr.contains("R") && !run.beta_is_inf()) {
      run.radius = run.beta / (2.0 * M_PI);
    }
    run.times = jr.value("times", std::vector<double>{});
    run.tolerance = jr.value("tolerance", 1e-9);
    if (!(run.tolerance > 0)) throw ConfigError("run.tolerance must be > 0");
    run.seed = jr.value("seed", std::uint64_t{0});
    run.output_dir = jr.value("output_dir", std::string("."));
  }

  return Scenario{std::move(lat), std::move(bg), std::move(run)};
}

inline Scenario load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json cfg;
  try {
    in >> cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse failure: ") + e.what());
  }
  try {
    return load_config_json(cfg);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config schema error: ") + e.what());
  }
}

// --- deterministic random vectors for property tests -------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  // splitmix64; stable across platforms, unlike std distributions.
  double uniform() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z = z ^ (z >> 31);
    return static_cast<double>(z >> 11) * 0x1.0p-53;
  }

  double symmetric() { return 2.0 * uniform() - 1.0; }

  Vec real_vector(int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = symmetric();
    return v;
  }

  CVec complex_vector(int n) {
    CVec v(n);
    for (int i = 0; i < n; ++i) v[i] = Complex(symmetric(), symmetric());
    return v;
  }

  CauchyData real_data(int n) {
    return CauchyData(real_vector(n).cast<Complex>(),
                      real_vector(n).cast<Complex>());
  }
  CauchyData complex_data(int n) {
    return CauchyData(complex_vector(n), complex_vector(n));
  }

 private:
  std::uint64_t state_;
};

}  // namespace kmslab
