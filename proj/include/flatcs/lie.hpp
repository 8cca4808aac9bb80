#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "flatcs/numeric.hpp"

namespace flatcs {

enum class Factor { U1, Su2 };

/// Product of U(1) and SU(2) factors with one positive inner-product scale
/// per factor. The base inner product is Euclidean in the coordinates below;
/// scales multiply it blockwise, which exhausts the Ad-invariant choices.
///
/// Coordinates:
///   u(1)  algebra: one real t (angle rate);     group: unit complex (re, im)
///   su(2) algebra: (x_i, x_j, x_k) pure part;   group: unit quaternion (w, x_i, x_j, x_k)
struct LieAlgebraSpec {
  std::vector<Factor> factors;
  std::vector<double> scales;

  LieAlgebraSpec() = default;
  LieAlgebraSpec(std::vector<Factor> f, std::vector<double> s)
      : factors(std::move(f)), scales(std::move(s)) {
    if (factors.size() != scales.size()) throw error("factor/scale count mismatch");
    for (double s_f : scales)
      if (!(s_f > 0.0)) throw error("inner-product scale must be positive");
  }

  /// Scale making the integral of the canonical 3-form over SU(2) equal -1.
  /// Derived numerically by the sphere quadrature; asserted in tests.
  static constexpr double normalized_su2_scale = 1.0 / (4.0 * kPi * kPi);

  static std::shared_ptr<const LieAlgebraSpec> make(std::vector<Factor> f,
                                                    std::vector<double> s) {
    return std::make_shared<const LieAlgebraSpec>(std::move(f), std::move(s));
  }

  static std::shared_ptr<const LieAlgebraSpec> su2(double scale = 1.0) {
    return make({Factor::Su2}, {scale});
  }

  static std::shared_ptr<const LieAlgebraSpec> u1(double scale = 1.0) {
    return make({Factor::U1}, {scale});
  }

  static std::shared_ptr<const LieAlgebraSpec> normalized(std::vector<Factor> f) {
    std::vector<double> s;
    for (Factor fk : f) s.push_back(fk == Factor::Su2 ? normalized_su2_scale : 1.0);
    return make(std::move(f), std::move(s));
  }

  int algebra_dim() const {
    int d = 0;
    for (Factor f : factors) d += f == Factor::Su2 ? 3 : 1;
    return d;
  }

  int group_dim() const {
    int d = 0;
    for (Factor f : factors) d += f == Factor::Su2 ? 4 : 2;
    return d;
  }

  int algebra_offset(size_t factor) const {
    int d = 0;
    for (size_t i = 0; i < factor; ++i) d += factors[i] == Factor::Su2 ? 3 : 1;
    return d;
  }

  int group_offset(size_t factor) const {
    int d = 0;
    for (size_t i = 0; i < factor; ++i) d += factors[i] == Factor::Su2 ? 4 : 2;
    return d;
  }

  bool same_factors(const LieAlgebraSpec& o) const { return factors == o.factors; }

  bool is_normalized() const {
    for (size_t f = 0; f < factors.size(); ++f)
      if (factors[f] == Factor::Su2 &&
          std::abs(scales[f] - normalized_su2_scale) > 1e-15)
        return false;
    return true;
  }
};

using SpecPtr = std::shared_ptr<const LieAlgebraSpec>;

inline void require_same_algebra(const SpecPtr& a, const SpecPtr& b) {
  if (!a || !b || !a->same_factors(*b)) throw error("algebra mismatch");
}

struct AlgebraElement {
  SpecPtr spec;
  std::vector<double> c;

  AlgebraElement() = default;
  explicit AlgebraElement(SpecPtr s)
      : spec(std::move(s)), c(static_cast<size_t>(spec->algebra_dim()), 0.0) {}
  AlgebraElement(SpecPtr s, std::vector<double> coords)
      : spec(std::move(s)), c(std::move(coords)) {
    if (static_cast<int>(c.size()) != spec->algebra_dim())
      throw error("algebra coordinate count mismatch");
  }
};

struct GroupElement {
  SpecPtr spec;
  std::vector<double> c;

  GroupElement() = default;
  explicit GroupElement(SpecPtr s)
      : spec(std::move(s)), c(static_cast<size_t>(spec->group_dim()), 0.0) {
    size_t off = 0;
    for (Factor f : spec->factors) {
      c[off] = 1.0;  // identity: re / w component
      off += f == Factor::Su2 ? 4 : 2;
    }
  }
  GroupElement(SpecPtr s, std::vector<double> coords)
      : spec(std::move(s)), c(std::move(coords)) {
    if (static_cast<int>(c.size()) != spec->group_dim())
      throw error("group coordinate count mismatch");
  }
};

// --- quaternion helpers on raw coordinate quadruples -----------------------

inline void quat_mul(const double* a, const double* b, double* r) {
  r[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3];
  r[1] = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2];
  r[2] = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1];
  r[3] = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0];
}

inline void quat_conj(const double* a, double* r) {
  r[0] = a[0];
  r[1] = -a[1];
  r[2] = -a[2];
  r[3] = -a[3];
}

// --- group/algebra operations ----------------------------------------------

inline AlgebraElement operator+(const AlgebraElement& a, const AlgebraElement& b) {
  require_same_algebra(a.spec, b.spec);
  AlgebraElement r = a;
  for (size_t i = 0; i < r.c.size(); ++i) r.c[i] += b.c[i];
  return r;
}

inline AlgebraElement operator-(const AlgebraElement& a, const AlgebraElement& b) {
  require_same_algebra(a.spec, b.spec);
  AlgebraElement r = a;
  for (size_t i = 0; i < r.c.size(); ++i) r.c[i] -= b.c[i];
  return r;
}

inline AlgebraElement operator*(double s, const AlgebraElement& a) {
  AlgebraElement r = a;
  for (double& x : r.c) x *= s;
  return r;
}

/// [X, Y] = XY - YX in the quaternion model: twice the cross product on each
/// su(2) block, zero on u(1) blocks.
inline AlgebraElement bracket(const AlgebraElement& x, const AlgebraElement& y) {
  require_same_algebra(x.spec, y.spec);
  AlgebraElement r(x.spec);
  for (size_t f = 0; f < x.spec->factors.size(); ++f) {
    if (x.spec->factors[f] != Factor::Su2) continue;
    const int o = x.spec->algebra_offset(f);
    const double* a = &x.c[static_cast<size_t>(o)];
    const double* b = &y.c[static_cast<size_t>(o)];
    double* out = &r.c[static_cast<size_t>(o)];
    out[0] = 2.0 * (a[1] * b[2] - a[2] * b[1]);
    out[1] = 2.0 * (a[2] * b[0] - a[0] * b[2]);
    out[2] = 2.0 * (a[0] * b[1] - a[1] * b[0]);
  }
  return r;
}

/// Ad_g X = g X g^-1.
inline AlgebraElement adjoint(const GroupElement& g, const AlgebraElement& x) {
  require_same_algebra(g.spec, x.spec);
  AlgebraElement r = x;
  for (size_t f = 0; f < g.spec->factors.size(); ++f) {
    if (g.spec->factors[f] != Factor::Su2) continue;
    const int go = g.spec->group_offset(f);
    const int ao = g.spec->algebra_offset(f);
    const double* q = &g.c[static_cast<size_t>(go)];
    double p[4] = {0.0, x.c[static_cast<size_t>(ao)], x.c[static_cast<size_t>(ao) + 1],
                   x.c[static_cast<size_t>(ao) + 2]};
    double qi[4], t[4], s[4];
    quat_conj(q, qi);
    quat_mul(q, p, t);
    quat_mul(t, qi, s);
    r.c[static_cast<size_t>(ao)] = s[1];
    r.c[static_cast<size_t>(ao) + 1] = s[2];
    r.c[static_cast<size_t>(ao) + 2] = s[3];
  }
  return r;
}

inline double inner(const AlgebraElement& x, const AlgebraElement& y,
                    const LieAlgebraSpec& spec) {
  if (!x.spec->same_factors(spec) || !y.spec->same_factors(spec))
    throw error("algebra mismatch");
  double acc = 0.0;
  for (size_t f = 0; f < spec.factors.size(); ++f) {
    const int o = spec.algebra_offset(f);
    const int d = spec.factors[f] == Factor::Su2 ? 3 : 1;
    double block = 0.0;
    for (int i = 0; i < d; ++i)
      block += x.c[static_cast<size_t>(o + i)] * y.c[static_cast<size_t>(o + i)];
    acc += spec.scales[f] * block;
  }
  return acc;
}

inline GroupElement renormalized(const GroupElement& g) {
  GroupElement r = g;
  for (size_t f = 0; f < g.spec->factors.size(); ++f) {
    const int o = g.spec->group_offset(f);
    const int d = g.spec->factors[f] == Factor::Su2 ? 4 : 2;
    double norm2 = 0.0;
    for (int i = 0; i < d; ++i)
      norm2 += g.c[static_cast<size_t>(o + i)] * g.c[static_cast<size_t>(o + i)];
    const double inv = 1.0 / std::sqrt(norm2);
    for (int i = 0; i < d; ++i) r.c[static_cast<size_t>(o + i)] *= inv;
  }
  return r;
}

inline GroupElement operator*(const GroupElement& a, const GroupElement& b) {
  require_same_algebra(a.spec, b.spec);
  GroupElement r(a.spec);
  for (size_t f = 0; f < a.spec->factors.size(); ++f) {
    const int o = a.spec->group_offset(f);
    if (a.spec->factors[f] == Factor::Su2) {
      quat_mul(&a.c[static_cast<size_t>(o)], &b.c[static_cast<size_t>(o)],
               &r.c[static_cast<size_t>(o)]);
    } else {
      const double ar = a.c[static_cast<size_t>(o)], ai = a.c[static_cast<size_t>(o) + 1];
      const double br = b.c[static_cast<size_t>(o)], bi = b.c[static_cast<size_t>(o) + 1];
      r.c[static_cast<size_t>(o)] = ar * br - ai * bi;
      r.c[static_cast<size_t>(o) + 1] = ar * bi + ai * br;
    }
  }
  return renormalized(r);
}

inline GroupElement inverse(const GroupElement& g) {
  GroupElement r = g;
  for (size_t f = 0; f < g.spec->factors.size(); ++f) {
    const int o = g.spec->group_offset(f);
    if (g.spec->factors[f] == Factor::Su2) {
      r.c[static_cast<size_t>(o) + 1] = -r.c[static_cast<size_t>(o) + 1];
      r.c[static_cast<size_t>(o) + 2] = -r.c[static_cast<size_t>(o) + 2];
      r.c[static_cast<size_t>(o) + 3] = -r.c[static_cast<size_t>(o) + 3];
    } else {
      r.c[static_cast<size_t>(o) + 1] = -r.c[static_cast<size_t>(o) + 1];
    }
  }
  return r;
}

inline double max_coord_distance(const GroupElement& a, const GroupElement& b) {
  require_same_algebra(a.spec, b.spec);
  double m = 0.0;
  for (size_t i = 0; i < a.c.size(); ++i) m = std::max(m, std::abs(a.c[i] - b.c[i]));
  return m;
}

/// Componentwise |gh - hg| in the ambient coordinates, maximized over factors.
inline double commutator_residual(const GroupElement& g, const GroupElement& h) {
  return max_coord_distance(g * h, h * g);
}

inline GroupElement exp_map(const AlgebraElement& x) {
  GroupElement r(x.spec);
  for (size_t f = 0; f < x.spec->factors.size(); ++f) {
    const int ao = x.spec->algebra_offset(f);
    const int go = x.spec->group_offset(f);
    if (x.spec->factors[f] == Factor::Su2) {
      const double a = x.c[static_cast<size_t>(ao)];
      const double b = x.c[static_cast<size_t>(ao) + 1];
      const double c = x.c[static_cast<size_t>(ao) + 2];
      const double th = std::sqrt(a * a + b * b + c * c);
      double s;  // sin(th)/th, series near zero
      if (th < 1e-6) {
        const double q = th * th;
        s = 1.0 - q / 6.0 + q * q / 120.0;
      } else {
        s = std::sin(th) / th;
      }
      r.c[static_cast<size_t>(go)] = std::cos(th);
      r.c[static_cast<size_t>(go) + 1] = s * a;
      r.c[static_cast<size_t>(go) + 2] = s * b;
      r.c[static_cast<size_t>(go) + 3] = s * c;
    } else {
      const double t = x.c[static_cast<size_t>(ao)];
      r.c[static_cast<size_t>(go)] = std::cos(t);
      r.c[static_cast<size_t>(go) + 1] = std::sin(t);
    }
  }
  return r;
}

/// Principal branch, |log| <= pi per factor. The antipode of the identity in
/// an su(2) factor has no preferred direction and is rejected.
inline AlgebraElement log_map(const GroupElement& g) {
  AlgebraElement r(g.spec);
  for (size_t f = 0; f < g.spec->factors.size(); ++f) {
    const int ao = g.spec->algebra_offset(f);
    const int go = g.spec->group_offset(f);
    if (g.spec->factors[f] == Factor::Su2) {
      const double w = g.c[static_cast<size_t>(go)];
      const double a = g.c[static_cast<size_t>(go) + 1];
      const double b = g.c[static_cast<size_t>(go) + 2];
      const double c = g.c[static_cast<size_t>(go) + 3];
      const double vn = std::sqrt(a * a + b * b + c * c);
      if (vn < 1e-12) {
        if (w < 0.0) throw error("cut-locus");
        r.c[static_cast<size_t>(ao)] = a;
        r.c[static_cast<size_t>(ao) + 1] = b;
        r.c[static_cast<size_t>(ao) + 2] = c;
      } else {
        const double th = std::atan2(vn, w);
        const double k = th / vn;
        r.c[static_cast<size_t>(ao)] = k * a;
        r.c[static_cast<size_t>(ao) + 1] = k * b;
        r.c[static_cast<size_t>(ao) + 2] = k * c;
      }
    } else {
      r.c[static_cast<size_t>(ao)] =
          std::atan2(g.c[static_cast<size_t>(go) + 1], g.c[static_cast<size_t>(go)]);
    }
  }
  return r;
}

// Convenience basis constructors for a single-su(2)-bearing spec.

inline AlgebraElement basis_element(const SpecPtr& spec, size_t factor, int axis,
                                    double value = 1.0) {
  AlgebraElement x(spec);
  x.c[static_cast<size_t>(spec->algebra_offset(factor) + axis)] = value;
  return x;
}

}  // namespace flatcs
