#pragma once

// Regular grids over the Larmor-frequency band, sampled spin profiles, and
// the discrete calculus (derivative, quadrature, norms) behind the Lyapunov
// functional.
//
// Nodes are 0-based in code: node(i) = omega_lo + i * step(), i = 0..n_cells.
// Node i here is node i+1 in the usual 1-based {omega_1, ..., omega_{N+1}}.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bloch/error.hpp"
#include "bloch/geometry.hpp"

namespace bloch {

class OmegaGrid {
 public:
  OmegaGrid() = default;

  OmegaGrid(double omega_lo, double omega_hi, int n_cells)
      : lo_(omega_lo), hi_(omega_hi), n_cells_(n_cells) {
    if (!(omega_lo < omega_hi) || !std::isfinite(omega_lo) || !std::isfinite(omega_hi)) {
      throw config_error("grid: omega_lo must be < omega_hi");
    }
    if (n_cells < 1) throw config_error("grid: n_cells must be >= 1");
    step_ = (hi_ - lo_) / n_cells_;
    nodes_.resize(static_cast<std::size_t>(n_cells_) + 1);
    for (int i = 0; i <= n_cells_; ++i) nodes_[i] = lo_ + i * step_;
  }

  double omega_lo() const { return lo_; }
  double omega_hi() const { return hi_; }
  int n_cells() const { return n_cells_; }
  std::size_t size() const { return nodes_.size(); }
  double step() const { return step_; }
  double width() const { return hi_ - lo_; }
  double node(std::size_t i) const { return nodes_[i]; }
  std::span<const double> nodes() const { return nodes_; }

  /// Quadrature weight of node i: the cell ](i-1/2)step, (i+1/2)step[ clipped
  /// to the band, so step/2 at both ends.
  double weight(std::size_t i) const {
    return (i == 0 || i + 1 == nodes_.size()) ? 0.5 * step_ : step_;
  }

  friend bool operator==(const OmegaGrid& a, const OmegaGrid& b) {
    return a.lo_ == b.lo_ && a.hi_ == b.hi_ && a.n_cells_ == b.n_cells_;
  }

 private:
  double lo_ = 0.0;
  double hi_ = 1.0;
  int n_cells_ = 0;
  double step_ = 0.0;
  std::vector<double> nodes_;
};

struct SpinProfile {
  OmegaGrid grid;
  std::vector<Vec3> values;

  std::size_t size() const { return values.size(); }
  const Vec3& operator[](std::size_t i) const { return values[i]; }
  Vec3& operator[](std::size_t i) { return values[i]; }
};

template <class F>
SpinProfile sample_profile(const OmegaGrid& grid, F&& fn) {
  SpinProfile p{grid, {}};
  p.values.reserve(grid.size());
  for (double w : grid.nodes()) p.values.push_back(fn(w));
  return p;
}

inline SpinProfile constant_profile(const OmegaGrid& grid, const Vec3& v) {
  return SpinProfile{grid, std::vector<Vec3>(grid.size(), v)};
}

/// Largest | |v_i| - 1 | over the profile.
inline double sphere_defect(const SpinProfile& p) {
  double out = 0.0;
  for (const Vec3& v : p.values) out = std::max(out, std::abs(norm(v) - 1.0));
  return out;
}

inline bool on_sphere(const SpinProfile& p, double tol = 1e-9) { return sphere_defect(p) <= tol; }

inline void require_same_grid(const OmegaGrid& a, const OmegaGrid& b, const char* who) {
  if (!(a == b)) throw config_error(std::string(who) + ": grid mismatch");
}

/// d/domega of sampled data. Central differences at interior nodes,
/// first-order one-sided differences at the two end nodes. Works for any
/// value type with +, - and scaling by double (Vec3, Mat3, double).
template <class T>
std::vector<T> finite_difference(const OmegaGrid& grid, std::span<const T> values) {
  const std::size_t n = values.size();
  if (n != grid.size()) throw config_error("derivative: sample count does not match grid");
  if (n < 3) throw config_error("derivative: need at least 3 nodes");
  const double h = grid.step();
  std::vector<T> out(n);
  out[0] = (values[1] - values[0]) * (1.0 / h);
  for (std::size_t k = 1; k + 1 < n; ++k) out[k] = (values[k + 1] - values[k - 1]) * (1.0 / (2.0 * h));
  out[n - 1] = (values[n - 1] - values[n - 2]) * (1.0 / h);
  return out;
}

inline std::vector<Vec3> derivative(const SpinProfile& p) {
  return finite_difference<Vec3>(p.grid, p.values);
}

/// Midpoint-cell quadrature: sum of weight(i) * samples[i].
inline double integrate(std::span<const double> samples, const OmegaGrid& grid) {
  if (samples.size() != grid.size()) throw config_error("integrate: sample count does not match grid");
  double acc = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) acc += grid.weight(i) * samples[i];
  return acc;
}

/// Lyapunov functional ∫ ( |N'|²/2 + 1 + <N, e3> ) dω, i.e. |N + e3|²_{H¹}/2
/// for unit-norm N.
inline double lyapunov(const SpinProfile& n_prof) {
  const std::vector<Vec3> dn = derivative(n_prof);
  std::vector<double> integrand(n_prof.size());
  for (std::size_t i = 0; i < integrand.size(); ++i) {
    integrand[i] = 0.5 * dot(dn[i], dn[i]) + 1.0 + n_prof[i].z;
  }
  return integrate(integrand, n_prof.grid);
}

struct ProfileNorms {
  double l2 = 0.0;
  double h1 = 0.0;
  double linf = 0.0;
};

/// Discrete L², H¹ and node-wise max distances between two profiles.
inline ProfileNorms norms(const SpinProfile& p, const SpinProfile& target) {
  require_same_grid(p.grid, target.grid, "norms");
  std::vector<Vec3> diff(p.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = p[i] - target[i];
  const std::vector<Vec3> ddiff = finite_difference<Vec3>(p.grid, diff);

  std::vector<double> sq(diff.size());
  std::vector<double> dsq(diff.size());
  ProfileNorms out;
  for (std::size_t i = 0; i < diff.size(); ++i) {
    sq[i] = dot(diff[i], diff[i]);
    dsq[i] = dot(ddiff[i], ddiff[i]);
    out.linf = std::max(out.linf, std::sqrt(sq[i]));
  }
  const double l2sq = integrate(sq, p.grid);
  out.l2 = std::sqrt(l2sq);
  out.h1 = std::sqrt(l2sq + integrate(dsq, p.grid));
  return out;
}

/// Node-wise max distance over the nodes two grids share. `fine` must refine
/// `coarse` by an integer factor over the same band.
inline double linf_on_shared_nodes(const SpinProfile& coarse, const SpinProfile& fine) {
  const OmegaGrid& gc = coarse.grid;
  const OmegaGrid& gf = fine.grid;
  if (gc.omega_lo() != gf.omega_lo() || gc.omega_hi() != gf.omega_hi() || gf.n_cells() % gc.n_cells() != 0) {
    throw config_error("linf_on_shared_nodes: grids are not nested");
  }
  const std::size_t ratio = static_cast<std::size_t>(gf.n_cells() / gc.n_cells());
  double out = 0.0;
  for (std::size_t i = 0; i < coarse.size(); ++i) out = std::max(out, norm(coarse[i] - fine[i * ratio]));
  return out;
}

}  // namespace bloch
