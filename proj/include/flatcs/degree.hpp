#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "flatcs/group_field.hpp"
#include "flatcs/lie.hpp"
#include "flatcs/numeric.hpp"

namespace flatcs {

inline void require_normalized_scales(const LieAlgebraSpec& spec) {
  if (!spec.is_normalized())
    throw error("degree requires the normalized inner-product scale per su(2) factor");
}

/// Degree of a strictly periodic u: T^3 -> G as the integral of the pullback
/// of the normalized canonical 3-form. Twisted fields are rejected; they
/// belong to the flat-bundle variant.
inline double degree_trivial(const GroupField& u, const SpecPtr& spec, int grid,
                             int threads = 1) {
  require_same_algebra(u->spec(), spec);
  require_normalized_scales(*spec);
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    for (int t = 0; t < 9; ++t) {
      Pt p = make_pt(3);
      p[(k + 1) % 3] = kTwoPi * (t % 3) / 3.0 + 0.37;
      p[(k + 2) % 3] = kTwoPi * (t / 3) / 3.0 + 0.11;
      Pt q = p;
      q[k] += kTwoPi;
      worst = std::max(worst, max_coord_distance(group_value(u, p), group_value(u, q)));
    }
  }
  if (worst > 1e-8)
    throw error("field is not strictly periodic; use the flat-bundle degree");
  return integrate(mc_three_form(u, spec, 3), grid, threads);
}

struct DegreeOracleOptions {
  int seed_grid = 12;
  int max_newton_iters = 60;
  double newton_tol = 1e-12;
  double dedupe_distance = 1e-4;
  double min_jacobian = 1e-6;
};

namespace detail {

inline double torus_distance(const Pt& a, const Pt& b) {
  double m = 0.0;
  for (int i = 0; i < a.n; ++i) {
    double d = std::fmod(std::abs(a[i] - b[i]), kTwoPi);
    d = std::min(d, kTwoPi - d);
    m = std::max(m, d);
  }
  return m;
}

inline Pt wrap_to_domain(Pt p) {
  for (int i = 0; i < p.n; ++i) {
    p[i] = std::fmod(p[i], kTwoPi);
    if (p[i] < 0) p[i] += kTwoPi;
  }
  return p;
}

/// Chart residual f(x) = pure part of q^-1 u(x) and its 3x3 Jacobian.
/// f = 0 with positive real part exactly at u(x) = q.
inline void oracle_chart(const GroupField& u, const std::array<double, 4>& qinv, const Pt& p,
                         std::array<double, 3>& f, std::array<std::array<double, 3>, 3>& jac,
                         double& realpart) {
  const GroupJet g = u->eval(p);
  const qj::Quad uq = group_jet_factor(g, 0);
  Jet2 m[4];
  // qinv * u with constant qinv
  m[0] = qinv[0] * uq[0] - qinv[1] * uq[1] - qinv[2] * uq[2] - qinv[3] * uq[3];
  m[1] = qinv[0] * uq[1] + qinv[1] * uq[0] + qinv[2] * uq[3] - qinv[3] * uq[2];
  m[2] = qinv[0] * uq[2] - qinv[1] * uq[3] + qinv[2] * uq[0] + qinv[3] * uq[1];
  m[3] = qinv[0] * uq[3] + qinv[1] * uq[2] - qinv[2] * uq[1] + qinv[3] * uq[0];
  realpart = m[0].v;
  for (int i = 0; i < 3; ++i) {
    f[static_cast<size_t>(i)] = m[i + 1].v;
    for (int a = 0; a < 3; ++a)
      jac[static_cast<size_t>(i)][static_cast<size_t>(a)] = m[i + 1].g[a];
  }
}

inline bool solve3(const std::array<std::array<double, 3>, 3>& m,
                   const std::array<double, 3>& rhs, std::array<double, 3>& out) {
  double a[3][4];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) a[i][j] = m[static_cast<size_t>(i)][static_cast<size_t>(j)];
    a[i][3] = rhs[static_cast<size_t>(i)];
  }
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int rsearch = c + 1; rsearch < 3; ++rsearch)
      if (std::abs(a[rsearch][c]) > std::abs(a[piv][c])) piv = rsearch;
    if (std::abs(a[piv][c]) < 1e-300) return false;
    std::swap(a[c], a[piv]);
    for (int relim = 0; relim < 3; ++relim) {
      if (relim == c) continue;
      const double fct = a[relim][c] / a[c][c];
      for (int j = c; j < 4; ++j) a[relim][j] -= fct * a[c][j];
    }
  }
  for (int i = 0; i < 3; ++i) out[static_cast<size_t>(i)] = a[i][3] / a[i][i];
  return true;
}

inline double det3(const std::array<std::array<double, 3>, 3>& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

/// Orientation of a preimage: the pullback of the canonical 3-form on the
/// coordinate frame. Positive where u preserves the orientation in which the
/// 3-form is a positive volume form.
inline double theta_frame_sign(const GroupField& u, const Pt& p) {
  const GroupJet g = u->eval(p);
  const qj::Quad q = group_jet_factor(g, 0);
  std::array<double, 4> qv{q[0].v, q[1].v, q[2].v, q[3].v};
  std::array<double, 4> qi{qv[0], -qv[1], -qv[2], -qv[3]};
  std::array<std::array<double, 4>, 3> du;
  for (int a = 0; a < 3; ++a)
    du[static_cast<size_t>(a)] = {q[0].g[a], q[1].g[a], q[2].g[a], q[3].g[a]};
  std::array<double, 4> x, y, z;
  quat_mul(qi.data(), du[0].data(), x.data());
  quat_mul(qi.data(), du[1].data(), y.data());
  quat_mul(qi.data(), du[2].data(), z.data());
  const double det = x[1] * (y[2] * z[3] - y[3] * z[2]) - x[2] * (y[1] * z[3] - y[3] * z[1]) +
                     x[3] * (y[1] * z[2] - y[2] * z[1]);
  return -det;  // sign of the 3-form on (e1, e2, e3)
}

}  // namespace detail

/// Preimage-counting degree for u: T^3 -> SU(2) at a regular value:
/// Newton searches seeded on a dense grid, deduplicated roots, one sign per
/// preimage from the pulled-back 3-form. Entirely independent of the
/// quadrature path.
inline int brouwer_degree_oracle(const GroupField& u, const GroupElement& regular_value,
                                 const DegreeOracleOptions& opts = {}) {
  const SpecPtr spec = u->spec();
  if (spec->factors.size() != 1 || spec->factors[0] != Factor::Su2)
    throw error("degree oracle handles maps into a single SU(2) factor");
  const std::array<double, 4> q{regular_value.c[0], regular_value.c[1], regular_value.c[2],
                                regular_value.c[3]};
  const std::array<double, 4> qinv{q[0], -q[1], -q[2], -q[3]};

  std::vector<Pt> roots;
  bool suspicious = false;
  const int N = opts.seed_grid;
  for (int i0 = 0; i0 < N; ++i0) {
    for (int i1 = 0; i1 < N; ++i1) {
      for (int i2 = 0; i2 < N; ++i2) {
        Pt p = make_pt(3, kTwoPi * i0 / N, kTwoPi * i1 / N, kTwoPi * i2 / N);
        std::array<double, 3> f;
        std::array<std::array<double, 3>, 3> jac;
        double re;
        bool converged = false;
        for (int it = 0; it < opts.max_newton_iters; ++it) {
          detail::oracle_chart(u, qinv, p, f, jac, re);
          const double fn = std::sqrt(f[0] * f[0] + f[1] * f[1] + f[2] * f[2]);
          if (fn < opts.newton_tol) {
            converged = true;
            break;
          }
          std::array<double, 3> step;
          if (!detail::solve3(jac, f, step)) break;
          // keep iterates from running away; the torus wraps anyway
          double sn = std::sqrt(step[0] * step[0] + step[1] * step[1] + step[2] * step[2]);
          const double cap = 0.8;
          const double sc = sn > cap ? cap / sn : 1.0;
          for (int d = 0; d < 3; ++d) p[d] -= sc * step[static_cast<size_t>(d)];
        }
        if (!converged) {
          detail::oracle_chart(u, qinv, p, f, jac, re);
          const double fn = std::sqrt(f[0] * f[0] + f[1] * f[1] + f[2] * f[2]);
          if (fn < 1e-6 && re > 0.0) suspicious = true;  // stalled next to a root
          continue;
        }
        if (re <= 0.0) continue;  // antipodal sheet, u = -q
        p = detail::wrap_to_domain(p);
        bool dup = false;
        for (const Pt& rt : roots)
          if (detail::torus_distance(rt, p) < opts.dedupe_distance) {
            dup = true;
            break;
          }
        if (!dup) roots.push_back(p);
      }
    }
  }
  if (suspicious) throw error("pick another regular value");

  int degree = 0;
  for (const Pt& rt : roots) {
    std::array<double, 3> f;
    std::array<std::array<double, 3>, 3> jac;
    double re;
    detail::oracle_chart(u, qinv, rt, f, jac, re);
    if (std::abs(detail::det3(jac)) < opts.min_jacobian)
      throw error("pick another regular value");
    degree += detail::theta_frame_sign(u, rt) > 0.0 ? 1 : -1;
  }
  return degree;
}

}  // namespace flatcs
