#pragma once

// omega-dependent rotations R(omega) with R(omega) M_f(omega) = -e3.
//
// Two constructions are provided. build_sweep walks the grid and builds an
// orthonormal frame per node, seeding each frame from the previous one so the
// field stays continuous. build_ode integrates dR/domega = R hat(M_f' ∧ M_f),
// whose solution keeps R M_f constant.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bloch/error.hpp"
#include "bloch/geometry.hpp"
#include "bloch/omega_grid.hpp"

namespace bloch {

struct RotationField {
  OmegaGrid grid;
  std::vector<Mat3> mats;
  /// omega-derivative R'(omega_i); required by the moving frame.
  std::optional<std::vector<Mat3>> dmats;

  std::size_t size() const { return mats.size(); }
};

enum class RotationMethod { sweep, ode };

inline std::vector<Mat3> derivative_field(const RotationField& r) {
  return finite_difference<Mat3>(r.grid, r.mats);
}

/// Returns r with dmats filled in by derivative_field.
inline RotationField with_derivative(RotationField r) {
  r.dmats = derivative_field(r);
  return r;
}

inline RotationField constant_field(const OmegaGrid& grid, const Mat3& m) {
  return RotationField{grid, std::vector<Mat3>(grid.size(), m), std::vector<Mat3>(grid.size(), Mat3::zero())};
}

namespace detail {

inline void require_on_sphere(const SpinProfile& p, const char* who) {
  constexpr double tol = 1e-9;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (std::abs(norm(p[i]) - 1.0) > tol) {
      throw config_error(std::string(who) + ": target profile is off the unit sphere at node " +
                         std::to_string(i));
    }
  }
}

/// Frame whose third row is -m_f, second row normalize(seed ∧ r3), first row
/// r2 ∧ r3. Rows are the frame vectors, i.e. the transpose of the column frame.
inline Mat3 frame_from_seed(const Vec3& seed, const Vec3& m_f, std::size_t node) {
  const Vec3 r3 = -m_f;
  const Vec3 c = wedge(seed, r3);
  const double len = norm(c);
  if (len < 1e-8) {
    throw numeric_error("rotation sweep: seed axis nearly parallel to target at node " + std::to_string(node));
  }
  const Vec3 r2 = c / len;
  const Vec3 r1 = wedge(r2, r3);
  return Mat3::from_rows(r1, r2, r3);
}

/// Canonical basis vector least aligned with v (first one on ties).
inline Vec3 least_aligned_axis(const Vec3& v) {
  const std::array<Vec3, 3> axes{e1, e2, e3};
  std::size_t best = 0;
  for (std::size_t k = 1; k < 3; ++k) {
    if (std::abs(dot(axes[k], v)) < std::abs(dot(axes[best], v))) best = k;
  }
  return axes[best];
}

/// Fourth-order derivative of sampled data (5-point stencils, one-sided near
/// the ends), written in difference form so constant data gives exact zeros.
inline std::vector<Vec3> derivative_4th(const OmegaGrid& grid, std::span<const Vec3> f) {
  const std::size_t n = f.size();
  if (n < 5) return finite_difference<Vec3>(grid, f);
  const double s = 1.0 / (12.0 * grid.step());
  std::vector<Vec3> out(n);
  out[0] = s * (48.0 * (f[1] - f[0]) - 36.0 * (f[2] - f[0]) + 16.0 * (f[3] - f[0]) - 3.0 * (f[4] - f[0]));
  out[1] = s * (-3.0 * (f[0] - f[1]) + 18.0 * (f[2] - f[1]) - 6.0 * (f[3] - f[1]) + (f[4] - f[1]));
  for (std::size_t k = 2; k + 2 < n; ++k) out[k] = s * (8.0 * (f[k + 1] - f[k - 1]) - (f[k + 2] - f[k - 2]));
  const std::size_t a = n - 1, b = n - 2;
  out[a] = -s * (48.0 * (f[a - 1] - f[a]) - 36.0 * (f[a - 2] - f[a]) + 16.0 * (f[a - 3] - f[a]) -
                 3.0 * (f[a - 4] - f[a]));
  out[b] = -s * (-3.0 * (f[b + 1] - f[b]) + 18.0 * (f[b - 1] - f[b]) - 6.0 * (f[b - 2] - f[b]) + (f[b - 3] - f[b]));
  return out;
}

}  // namespace detail

/// Node-by-node frame sweep. The first frame is seeded with the canonical axis
/// least aligned with M_f(omega_*); every later frame with -r1 of its
/// predecessor. dmats is filled by finite differences.
inline RotationField build_sweep(const SpinProfile& m_f) {
  detail::require_on_sphere(m_f, "build_sweep");
  RotationField out{m_f.grid, {}, std::nullopt};
  out.mats.reserve(m_f.size());
  Vec3 seed = detail::least_aligned_axis(m_f[0]);
  for (std::size_t i = 0; i < m_f.size(); ++i) {
    const Mat3 r = detail::frame_from_seed(seed, m_f[i], i);
    out.mats.push_back(r);
    seed = -r.row(0);
  }
  return with_derivative(std::move(out));
}

/// Integrates dR/domega = R hat(f), f = M_f' ∧ M_f, across each cell with
/// classical RK4, projecting back onto SO(3) after every cell. M_f' comes from
/// fourth-order finite differences; cell midpoints use cubic Hermite
/// interpolation. R(omega_*) is the sweep's first frame.
inline RotationField build_ode(const SpinProfile& m_f) {
  detail::require_on_sphere(m_f, "build_ode");
  const OmegaGrid& grid = m_f.grid;
  const double h = grid.step();
  const std::vector<Vec3> dm = detail::derivative_4th(grid, m_f.values);
  std::vector<Mat3> gen(m_f.size());
  for (std::size_t i = 0; i < gen.size(); ++i) gen[i] = hat(wedge(dm[i], m_f[i]));

  RotationField out{grid, {}, std::nullopt};
  out.mats.reserve(m_f.size());
  Mat3 r = detail::frame_from_seed(detail::least_aligned_axis(m_f[0]), m_f[0], 0);
  out.mats.push_back(r);

  for (std::size_t i = 0; i + 1 < m_f.size(); ++i) {
    const Vec3 mid = 0.5 * (m_f[i] + m_f[i + 1]) + (h / 8.0) * (dm[i] - dm[i + 1]);
    const Vec3 dmid = (1.5 / h) * (m_f[i + 1] - m_f[i]) - 0.25 * (dm[i] + dm[i + 1]);
    const Mat3& a0 = gen[i];
    const Mat3 am = hat(wedge(dmid, mid));
    const Mat3& a1 = gen[i + 1];
    const Mat3 k1 = r * a0;
    const Mat3 k2 = (r + (0.5 * h) * k1) * am;
    const Mat3 k3 = (r + (0.5 * h) * k2) * am;
    const Mat3 k4 = (r + h * k3) * a1;
    r = r + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    r = project_to_rotation(r);
    out.mats.push_back(r);
  }
  return with_derivative(std::move(out));
}

inline RotationField build_rotation_field(const SpinProfile& m_f, RotationMethod method) {
  return method == RotationMethod::sweep ? build_sweep(m_f) : build_ode(m_f);
}

struct RotationReport {
  double max_residual = 0.0;             ///< max_i |R_i M_f(omega_i) + e3|
  double max_orthogonality_defect = 0.0;  ///< max_i max|R_iᵀR_i − I|
  double max_det_defect = 0.0;            ///< max_i |det R_i − 1|
  double max_frame_jump = 0.0;            ///< max_i |R_{i+1} − R_i|_F
  double h1_rotation = 0.0;               ///< discrete H¹ norm of R (Frobenius)
  double h1_target = 0.0;                 ///< discrete H¹ norm of M_f

  double h1_ratio() const { return h1_target > 0.0 ? h1_rotation / h1_target : 0.0; }
};

inline RotationReport validate(const RotationField& r, const SpinProfile& m_f) {
  require_same_grid(r.grid, m_f.grid, "validate");
  RotationReport rep;
  for (std::size_t i = 0; i < r.size(); ++i) {
    rep.max_residual = std::max(rep.max_residual, norm(r.mats[i] * m_f[i] + e3));
    rep.max_orthogonality_defect = std::max(rep.max_orthogonality_defect, orthogonality_defect(r.mats[i]));
    rep.max_det_defect = std::max(rep.max_det_defect, det_defect(r.mats[i]));
    if (i + 1 < r.size()) rep.max_frame_jump = std::max(rep.max_frame_jump, frobenius(r.mats[i + 1] - r.mats[i]));
  }

  const std::vector<Mat3> dr = derivative_field(r);
  const std::vector<Vec3> dm = derivative(m_f);
  std::vector<double> r_sq(r.size()), m_sq(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double fr = frobenius(r.mats[i]);
    const double fdr = frobenius(dr[i]);
    r_sq[i] = fr * fr + fdr * fdr;
    m_sq[i] = dot(m_f[i], m_f[i]) + dot(dm[i], dm[i]);
  }
  rep.h1_rotation = std::sqrt(integrate(r_sq, r.grid));
  rep.h1_target = std::sqrt(integrate(m_sq, m_f.grid));
  return rep;
}

}  // namespace bloch
