#pragma once

#include <array>
#include <cmath>

#include "flatcs/numeric.hpp"

namespace flatcs {

/// Point on the flat torus [0, 2pi)^n, n <= 4. Coordinates are kept as plain
/// reals on R^n; twisted fields are genuinely non-periodic functions of them.
struct Pt {
  int n = 3;
  std::array<double, 4> x{0, 0, 0, 0};

  double operator[](int i) const { return x[static_cast<size_t>(i)]; }
  double& operator[](int i) { return x[static_cast<size_t>(i)]; }
};

inline Pt make_pt(int n, double a = 0, double b = 0, double c = 0, double d = 0) {
  Pt p;
  p.n = n;
  p.x = {a, b, c, d};
  return p;
}

/// Order-2 jet of a real function on T^n: value, gradient, Hessian.
/// Propagated analytically through all arithmetic; never finite-differenced.
struct Jet2 {
  int n = 3;
  double v = 0.0;
  std::array<double, 4> g{0, 0, 0, 0};
  std::array<std::array<double, 4>, 4> h{};

  static Jet2 constant(int n, double value) {
    Jet2 j;
    j.n = n;
    j.v = value;
    return j;
  }

  static Jet2 coordinate(int n, int axis, double value) {
    Jet2 j = constant(n, value);
    j.g[static_cast<size_t>(axis)] = 1.0;
    return j;
  }
};

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
  Jet2 r = a;
  r.v += b.v;
  for (int i = 0; i < a.n; ++i) {
    r.g[i] += b.g[i];
    for (int j = 0; j < a.n; ++j) r.h[i][j] += b.h[i][j];
  }
  return r;
}

inline Jet2 operator-(const Jet2& a, const Jet2& b) {
  Jet2 r = a;
  r.v -= b.v;
  for (int i = 0; i < a.n; ++i) {
    r.g[i] -= b.g[i];
    for (int j = 0; j < a.n; ++j) r.h[i][j] -= b.h[i][j];
  }
  return r;
}

inline Jet2 operator-(const Jet2& a) {
  Jet2 r = a;
  r.v = -r.v;
  for (int i = 0; i < a.n; ++i) {
    r.g[i] = -r.g[i];
    for (int j = 0; j < a.n; ++j) r.h[i][j] = -r.h[i][j];
  }
  return r;
}

inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  Jet2 r = Jet2::constant(a.n, a.v * b.v);
  for (int i = 0; i < a.n; ++i) {
    r.g[i] = a.g[i] * b.v + a.v * b.g[i];
    for (int j = 0; j < a.n; ++j)
      r.h[i][j] = a.h[i][j] * b.v + a.g[i] * b.g[j] + a.g[j] * b.g[i] + a.v * b.h[i][j];
  }
  return r;
}

inline Jet2 operator*(double s, const Jet2& a) {
  Jet2 r = a;
  r.v *= s;
  for (int i = 0; i < a.n; ++i) {
    r.g[i] *= s;
    for (int j = 0; j < a.n; ++j) r.h[i][j] *= s;
  }
  return r;
}

inline Jet2 operator*(const Jet2& a, double s) { return s * a; }

inline Jet2 operator+(const Jet2& a, double s) {
  Jet2 r = a;
  r.v += s;
  return r;
}

inline Jet2 operator-(const Jet2& a, double s) { return a + (-s); }

/// Chain rule through a scalar analytic map given f(v), f'(v), f''(v).
inline Jet2 apply_analytic(const Jet2& a, double f0, double f1, double f2) {
  Jet2 r = Jet2::constant(a.n, f0);
  for (int i = 0; i < a.n; ++i) {
    r.g[i] = f1 * a.g[i];
    for (int j = 0; j < a.n; ++j) r.h[i][j] = f1 * a.h[i][j] + f2 * a.g[i] * a.g[j];
  }
  return r;
}

inline Jet2 sin(const Jet2& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return apply_analytic(a, s, c, -s);
}

inline Jet2 cos(const Jet2& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return apply_analytic(a, c, -s, -c);
}

inline Jet2 exp(const Jet2& a) {
  const double e = std::exp(a.v);
  return apply_analytic(a, e, e, e);
}

inline Jet2 sqrt(const Jet2& a) {
  const double s = std::sqrt(a.v);
  return apply_analytic(a, s, 0.5 / s, -0.25 / (s * a.v));
}

inline Jet2 recip(const Jet2& a) {
  const double w = 1.0 / a.v;
  return apply_analytic(a, w, -w * w, 2.0 * w * w * w);
}

inline Jet2 operator/(const Jet2& a, const Jet2& b) { return a * recip(b); }

inline Jet2 pow_int(const Jet2& a, int k) {
  if (k == 0) return Jet2::constant(a.n, 1.0);
  Jet2 base = k < 0 ? recip(a) : a;
  int e = std::abs(k);
  Jet2 r = base;
  for (int i = 1; i < e; ++i) r = r * base;
  return r;
}

/// First-derivative slice: the jet of (d_axis f), valid to order 1.
inline Jet2 jet_shift(const Jet2& a, int axis) {
  Jet2 r = Jet2::constant(a.n, a.g[static_cast<size_t>(axis)]);
  for (int i = 0; i < a.n; ++i) r.g[i] = a.h[static_cast<size_t>(axis)][i];
  return r;
}

// ---------------------------------------------------------------------------
// Radial cutoff profile.
//
// bump(t; r0, r1) is identically 1 on (-inf, r0], identically 0 on [r1, inf)
// and a ninth-degree smoothstep in between. The plateau makes compositions
// with the (non-smooth at 0) radial distance well defined at the center, and
// the C^4 junctions keep torus quadrature of bump-built maps accurate at
// moderate grids.

inline void bump_profile(double t, double r0, double r1, double& b0, double& b1,
                         double& b2) {
  if (t <= r0) {
    b0 = 1.0;
    b1 = 0.0;
    b2 = 0.0;
    return;
  }
  if (t >= r1) {
    b0 = 0.0;
    b1 = 0.0;
    b2 = 0.0;
    return;
  }
  const double w = r1 - r0;
  const double u = (t - r0) / w;
  const double u2 = u * u, u3 = u2 * u, u4 = u3 * u;
  // s(u) = 126 u^5 - 420 u^6 + 540 u^7 - 315 u^8 + 70 u^9
  const double s = u4 * u * (126.0 + u * (-420.0 + u * (540.0 + u * (-315.0 + u * 70.0))));
  const double ds = u4 * (630.0 + u * (-2520.0 + u * (3780.0 + u * (-2520.0 + u * 630.0))));
  const double dds = u3 * (2520.0 + u * (-12600.0 + u * (22680.0 + u * (-17640.0 + u * 5040.0))));
  b0 = 1.0 - s;
  b1 = -ds / w;
  b2 = -dds / (w * w);
}

inline double bump_value(double t, double r0, double r1) {
  double b0, b1, b2;
  bump_profile(t, r0, r1, b0, b1, b2);
  return b0;
}

inline Jet2 bump(const Jet2& a, double r0, double r1) {
  // Plateau branches return exact constants without touching the argument's
  // derivatives, so bump(r, ...) is clean even where r itself is singular.
  if (a.v <= r0) return Jet2::constant(a.n, 1.0);
  if (a.v >= r1) return Jet2::constant(a.n, 0.0);
  double b0, b1, b2;
  bump_profile(a.v, r0, r1, b0, b1, b2);
  return apply_analytic(a, b0, b1, b2);
}

}  // namespace flatcs
