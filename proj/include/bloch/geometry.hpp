#pragma once

// 3-vectors and 3x3 matrices for magnetization profiles and SO(3) frames.
//
// Mat3 is stored row-major: m(r, c) is the entry in row r, column c, and
// entries[3 * r + c] is the same value. "The matrix with columns a, b, c"
// therefore has rows (a.x, b.x, c.x), ...; its transpose has rows a, b, c.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace bloch {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Vec3& operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }

  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
constexpr Vec3 operator/(const Vec3& a, double s) { return {a.x / s, a.y / s, a.z / s}; }

inline constexpr Vec3 e1{1.0, 0.0, 0.0};
inline constexpr Vec3 e2{0.0, 1.0, 0.0};
inline constexpr Vec3 e3{0.0, 0.0, 1.0};

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

/// Cross product a ∧ b.
constexpr Vec3 wedge(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

/// Thrown when a state vector collapses to zero length; the step size is far
/// too large for the dynamics.
class DegenerateState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Vec3 renormalize(const Vec3& v) {
  const double n = norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw DegenerateState("cannot renormalize a zero or non-finite vector");
  }
  return v / n;
}

struct Mat3 {
  std::array<double, 9> entries{};

  constexpr double& operator()(int r, int c) { return entries[3 * r + c]; }
  constexpr double operator()(int r, int c) const { return entries[3 * r + c]; }

  constexpr Vec3 row(int r) const { return {entries[3 * r], entries[3 * r + 1], entries[3 * r + 2]}; }
  constexpr Vec3 col(int c) const { return {entries[c], entries[3 + c], entries[6 + c]}; }

  static constexpr Mat3 identity() { return Mat3{{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }
  static constexpr Mat3 zero() { return Mat3{}; }
  static constexpr Mat3 from_rows(const Vec3& a, const Vec3& b, const Vec3& c) {
    return Mat3{{a.x, a.y, a.z, b.x, b.y, b.z, c.x, c.y, c.z}};
  }
  static constexpr Mat3 from_cols(const Vec3& a, const Vec3& b, const Vec3& c) {
    return Mat3{{a.x, b.x, c.x, a.y, b.y, c.y, a.z, b.z, c.z}};
  }

  constexpr Mat3& operator+=(const Mat3& o) {
    for (int i = 0; i < 9; ++i) entries[i] += o.entries[i];
    return *this;
  }
  constexpr Mat3& operator-=(const Mat3& o) {
    for (int i = 0; i < 9; ++i) entries[i] -= o.entries[i];
    return *this;
  }
  constexpr Mat3& operator*=(double s) {
    for (double& v : entries) v *= s;
    return *this;
  }

  friend constexpr bool operator==(const Mat3&, const Mat3&) = default;
};

constexpr Mat3 operator+(Mat3 a, const Mat3& b) { return a += b; }
constexpr Mat3 operator-(Mat3 a, const Mat3& b) { return a -= b; }
constexpr Mat3 operator*(double s, Mat3 a) { return a *= s; }
constexpr Mat3 operator*(Mat3 a, double s) { return a *= s; }

constexpr Vec3 operator*(const Mat3& m, const Vec3& v) {
  return {m(0, 0) * v.x + m(0, 1) * v.y + m(0, 2) * v.z,
          m(1, 0) * v.x + m(1, 1) * v.y + m(1, 2) * v.z,
          m(2, 0) * v.x + m(2, 1) * v.y + m(2, 2) * v.z};
}

constexpr Mat3 operator*(const Mat3& a, const Mat3& b) {
  Mat3 out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      out(r, c) = a(r, 0) * b(0, c) + a(r, 1) * b(1, c) + a(r, 2) * b(2, c);
    }
  }
  return out;
}

constexpr Mat3 transpose(const Mat3& m) {
  return Mat3{{m(0, 0), m(1, 0), m(2, 0), m(0, 1), m(1, 1), m(2, 1), m(0, 2), m(1, 2), m(2, 2)}};
}

constexpr double det(const Mat3& m) { return dot(m.row(0), wedge(m.row(1), m.row(2))); }

/// Largest absolute entry.
inline double max_abs(const Mat3& m) {
  double out = 0.0;
  for (double v : m.entries) out = std::max(out, std::abs(v));
  return out;
}

inline double frobenius(const Mat3& m) {
  double s = 0.0;
  for (double v : m.entries) s += v * v;
  return std::sqrt(s);
}

/// Skew operator of f: hat(f) * v == wedge(f, v).
constexpr Mat3 hat(const Vec3& f) { return Mat3{{0.0, -f.z, f.y, f.z, 0.0, -f.x, -f.y, f.x, 0.0}}; }

/// max |(RᵀR − I)_{rc}|
inline double orthogonality_defect(const Mat3& m) { return max_abs(transpose(m) * m - Mat3::identity()); }

inline double det_defect(const Mat3& m) { return std::abs(det(m) - 1.0); }

inline bool is_rotation(const Mat3& m, double tol = 1e-12) {
  return orthogonality_defect(m) <= tol && det_defect(m) <= tol;
}

/// Rotation by alpha about e1; an impulse of area alpha on the first control
/// applies this matrix instantaneously.
inline Mat3 rot_about_e1(double alpha) {
  const double c = std::cos(alpha);
  const double s = std::sin(alpha);
  return Mat3{{1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c}};
}

/// The generator S = [[0,1,0],[-1,0,0],[0,0,0]] of the free-precession frame.
inline constexpr Mat3 precession_generator{{0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0}};

/// Closed form of exp(theta * S): a rotation by -theta about e3.
inline Mat3 exp_sigma_omega_S(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return Mat3{{c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0}};
}

/// Nearest rotation (orthogonal polar factor) by Newton-Schulz iteration.
/// Input must already be close to SO(3); matrices whose defect is at
/// round-off level are returned unchanged.
inline Mat3 project_to_rotation(const Mat3& m, double tol = 1e-15, int max_iter = 20) {
  Mat3 x = m;
  for (int it = 0; it < max_iter; ++it) {
    const Mat3 gram = transpose(x) * x;
    if (max_abs(gram - Mat3::identity()) <= tol) break;
    x = 0.5 * (x * (3.0 * Mat3::identity() - gram));
  }
  return x;
}

}  // namespace bloch
