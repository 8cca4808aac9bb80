#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "flatcs/jet.hpp"
#include "flatcs/lie.hpp"
#include "flatcs/numeric.hpp"
#include "flatcs/scalar_field.hpp"

namespace flatcs {

enum class ValueSpace { Real, Lie, LieTensor };

inline int channel_count(ValueSpace v, const SpecPtr& spec) {
  switch (v) {
    case ValueSpace::Real: return 1;
    case ValueSpace::Lie: return spec->algebra_dim();
    case ValueSpace::LieTensor: return spec->algebra_dim() * spec->algebra_dim();
  }
  return 1;
}

/// Strictly increasing multi-indices I subset {0..n-1}, |I| = k, in
/// lexicographic order. Antisymmetry of components is structural.
inline const std::vector<std::array<int, 4>>& multi_indices(int n, int k) {
  struct Tables {
    std::vector<std::array<int, 4>> t[5][5];
    Tables() {
      for (int nn = 0; nn <= 4; ++nn) {
        for (int kk = 0; kk <= nn; ++kk) {
          auto& tab = t[nn][kk];
          std::array<int, 4> idx{0, 0, 0, 0};
          std::function<void(int, int)> rec = [&](int start, int depth) {
            if (depth == kk) {
              tab.push_back(idx);
              return;
            }
            for (int a = start; a < nn; ++a) {
              idx[static_cast<size_t>(depth)] = a;
              rec(a + 1, depth + 1);
            }
          };
          rec(0, 0);
        }
      }
    }
  };
  static const Tables tables;
  return tables.t[n][k];
}

inline int multi_index_rank(int n, int k, const std::array<int, 4>& idx) {
  const auto& tab = multi_indices(n, k);
  for (size_t r = 0; r < tab.size(); ++r) {
    bool same = true;
    for (int i = 0; i < k; ++i)
      if (tab[r][static_cast<size_t>(i)] != idx[static_cast<size_t>(i)]) {
        same = false;
        break;
      }
    if (same) return static_cast<int>(r);
  }
  throw error("multi-index not found");
}

/// All components of a form at one point: comps[multi-index rank][channel].
using FormValue = std::vector<std::vector<Jet2>>;

/// Differential form on T^n with values in R, the Lie algebra, or its tensor
/// square. Evaluation produces every component jointly so compound
/// expressions share subterm evaluations per point.
struct VForm {
  int n = 3;
  int degree = 0;
  ValueSpace val = ValueSpace::Real;
  int jet_order = 2;  // how many derivative orders of the components are valid
  SpecPtr spec;       // channel layout and inner-product scales
  std::function<FormValue(const Pt&)> fn;

  int channels() const { return channel_count(val, spec); }
  int comps() const {
    return degree > n ? 0 : static_cast<int>(multi_indices(n, degree).size());
  }

  FormValue eval(const Pt& p) const {
    if (p.n != n) throw error("point dimension mismatch");
    return fn(p);
  }
};

inline VForm zero_form(int n, int degree, ValueSpace val, SpecPtr spec) {
  VForm f;
  f.n = n;
  f.degree = degree;
  f.val = val;
  f.spec = std::move(spec);
  f.jet_order = 2;
  const int nc = f.comps();
  const int ch = f.channels();
  f.fn = [nc, ch](const Pt& p) {
    return FormValue(static_cast<size_t>(nc),
                     std::vector<Jet2>(static_cast<size_t>(ch), Jet2::constant(p.n, 0.0)));
  };
  return f;
}

/// Form from scalar component fields, comps[multi-index rank][channel].
inline VForm form_from_components(int n, int degree, ValueSpace val, SpecPtr spec,
                                  std::vector<std::vector<ScalarField>> comps) {
  VForm f;
  f.n = n;
  f.degree = degree;
  f.val = val;
  f.spec = std::move(spec);
  f.jet_order = 2;
  if (static_cast<int>(comps.size()) != f.comps())
    throw error("component count mismatch");
  const int ch = f.channels();
  for (auto& c : comps)
    if (static_cast<int>(c.size()) != ch) throw error("channel count mismatch");
  f.fn = [comps = std::move(comps)](const Pt& p) {
    FormValue out(comps.size());
    for (size_t i = 0; i < comps.size(); ++i) {
      out[i].reserve(comps[i].size());
      for (const auto& sf : comps[i]) out[i].push_back(sf->eval(p));
    }
    return out;
  };
  return f;
}

// --- linear structure -------------------------------------------------------

inline VForm operator+(const VForm& a, const VForm& b) {
  if (a.n != b.n || a.degree != b.degree || a.val != b.val)
    throw error("form shape mismatch in +");
  require_same_algebra(a.spec, b.spec);
  VForm r = a;
  r.jet_order = std::min(a.jet_order, b.jet_order);
  r.fn = [fa = a.fn, fb = b.fn](const Pt& p) {
    FormValue x = fa(p), y = fb(p);
    for (size_t i = 0; i < x.size(); ++i)
      for (size_t c = 0; c < x[i].size(); ++c) x[i][c] = x[i][c] + y[i][c];
    return x;
  };
  return r;
}

inline VForm operator-(const VForm& a, const VForm& b) {
  if (a.n != b.n || a.degree != b.degree || a.val != b.val)
    throw error("form shape mismatch in -");
  require_same_algebra(a.spec, b.spec);
  VForm r = a;
  r.jet_order = std::min(a.jet_order, b.jet_order);
  r.fn = [fa = a.fn, fb = b.fn](const Pt& p) {
    FormValue x = fa(p), y = fb(p);
    for (size_t i = 0; i < x.size(); ++i)
      for (size_t c = 0; c < x[i].size(); ++c) x[i][c] = x[i][c] - y[i][c];
    return x;
  };
  return r;
}

inline VForm operator*(double s, const VForm& a) {
  VForm r = a;
  r.fn = [s, fa = a.fn](const Pt& p) {
    FormValue x = fa(p);
    for (auto& comp : x)
      for (auto& c : comp) c = s * c;
    return x;
  };
  return r;
}

inline VForm operator-(const VForm& a) { return -1.0 * a; }

// --- pairings ----------------------------------------------------------------

enum class Pairing { Scalar, Inner, Bracket, Tensor };

namespace detail {

inline ValueSpace pairing_result(Pairing pr, ValueSpace a, ValueSpace b) {
  switch (pr) {
    case Pairing::Scalar:
      if (a == ValueSpace::Real) return b;
      if (b == ValueSpace::Real) return a;
      throw error("pairing/value-space mismatch: scalar pairing needs a real side");
    case Pairing::Inner:
      if (a == ValueSpace::Lie && b == ValueSpace::Lie) return ValueSpace::Real;
      throw error("pairing/value-space mismatch: inner needs two algebra-valued forms");
    case Pairing::Bracket:
      if (a == ValueSpace::Lie && b == ValueSpace::Lie) return ValueSpace::Lie;
      throw error("pairing/value-space mismatch: bracket needs two algebra-valued forms");
    case Pairing::Tensor:
      if (a == ValueSpace::Lie && b == ValueSpace::Lie) return ValueSpace::LieTensor;
      throw error("pairing/value-space mismatch: tensor needs two algebra-valued forms");
  }
  throw error("unknown pairing");
}

/// out += sign * P(a, b) on channel vectors.
inline void pair_accumulate(Pairing pr, const LieAlgebraSpec& spec, double sign,
                            const std::vector<Jet2>& a, const std::vector<Jet2>& b,
                            std::vector<Jet2>& out) {
  switch (pr) {
    case Pairing::Scalar: {
      if (a.size() == 1) {
        for (size_t c = 0; c < b.size(); ++c) out[c] = out[c] + sign * (a[0] * b[c]);
      } else {
        for (size_t c = 0; c < a.size(); ++c) out[c] = out[c] + sign * (a[c] * b[0]);
      }
      return;
    }
    case Pairing::Inner: {
      for (size_t f = 0; f < spec.factors.size(); ++f) {
        const int o = spec.algebra_offset(f);
        const int d = spec.factors[f] == Factor::Su2 ? 3 : 1;
        for (int i = 0; i < d; ++i)
          out[0] = out[0] + (sign * spec.scales[f]) *
                                (a[static_cast<size_t>(o + i)] * b[static_cast<size_t>(o + i)]);
      }
      return;
    }
    case Pairing::Bracket: {
      for (size_t f = 0; f < spec.factors.size(); ++f) {
        if (spec.factors[f] != Factor::Su2) continue;
        const size_t o = static_cast<size_t>(spec.algebra_offset(f));
        out[o + 0] = out[o + 0] + (2.0 * sign) * (a[o + 1] * b[o + 2] - a[o + 2] * b[o + 1]);
        out[o + 1] = out[o + 1] + (2.0 * sign) * (a[o + 2] * b[o + 0] - a[o + 0] * b[o + 2]);
        out[o + 2] = out[o + 2] + (2.0 * sign) * (a[o + 0] * b[o + 1] - a[o + 1] * b[o + 0]);
      }
      return;
    }
    case Pairing::Tensor: {
      const size_t g = a.size();
      for (size_t c1 = 0; c1 < g; ++c1)
        for (size_t c2 = 0; c2 < g; ++c2)
          out[c1 * g + c2] = out[c1 * g + c2] + sign * (a[c1] * b[c2]);
      return;
    }
  }
}

struct Split {
  int ia;     // rank of the alpha multi-index
  int ib;     // rank of the beta multi-index
  double sign;
};

/// (p,q)-shuffle decompositions of each degree-(p+q) multi-index, with the
/// shuffle sign. No factorial normalization: for 1-forms this is
/// P(a(X), b(Y)) - P(a(Y), b(X)).
inline const std::vector<std::vector<Split>>& wedge_table(int n, int p, int q) {
  struct Tables {
    std::vector<std::vector<Split>> t[5][5][5];
    Tables() {
      for (int nn = 1; nn <= 4; ++nn) {
        for (int pp = 0; pp <= nn; ++pp) {
          for (int qq = 0; qq + pp <= nn; ++qq) {
            auto& tab = t[nn][pp][qq];
            const auto& ks = multi_indices(nn, pp + qq);
            tab.resize(ks.size());
            for (size_t kr = 0; kr < ks.size(); ++kr) {
              const auto& K = ks[kr];
              const int total = pp + qq;
              for (int mask = 0; mask < (1 << total); ++mask) {
                if (__builtin_popcount(static_cast<unsigned>(mask)) != pp) continue;
                std::array<int, 4> I{0, 0, 0, 0}, J{0, 0, 0, 0};
                int ni = 0, nj = 0, inv = 0;
                for (int s = 0; s < total; ++s) {
                  if (mask & (1 << s)) {
                    I[static_cast<size_t>(ni++)] = K[static_cast<size_t>(s)];
                  } else {
                    // members of I after this position each contribute an inversion
                    for (int u = s + 1; u < total; ++u)
                      if (mask & (1 << u)) ++inv;
                    J[static_cast<size_t>(nj++)] = K[static_cast<size_t>(s)];
                  }
                }
                Split sp;
                sp.ia = multi_index_rank(nn, pp, I);
                sp.ib = multi_index_rank(nn, qq, J);
                sp.sign = (inv % 2 == 0) ? 1.0 : -1.0;
                tab[kr].push_back(sp);
              }
            }
          }
        }
      }
    }
  };
  static const Tables tables;
  return tables.t[n][p][q];
}

}  // namespace detail

/// Wedge product through a bilinear pairing on the values.
inline VForm wedge(Pairing pr, const VForm& a, const VForm& b) {
  if (a.n != b.n) throw error("form dimension mismatch");
  require_same_algebra(a.spec, b.spec);
  VForm r;
  r.n = a.n;
  r.degree = a.degree + b.degree;
  r.val = detail::pairing_result(pr, a.val, b.val);
  r.spec = a.spec;
  r.jet_order = std::min(a.jet_order, b.jet_order);
  if (r.degree > r.n) return zero_form(r.n, r.degree, r.val, r.spec);
  const int n = a.n, p = a.degree, q = b.degree;
  const int ch = r.channels();
  r.fn = [n, p, q, ch, pr, fa = a.fn, fb = b.fn, spec = a.spec](const Pt& pt) {
    const FormValue av = fa(pt);
    const FormValue bv = fb(pt);
    const auto& tab = detail::wedge_table(n, p, q);
    FormValue out(tab.size(),
                  std::vector<Jet2>(static_cast<size_t>(ch), Jet2::constant(pt.n, 0.0)));
    for (size_t kr = 0; kr < tab.size(); ++kr)
      for (const auto& sp : tab[kr])
        detail::pair_accumulate(pr, *spec, sp.sign, av[static_cast<size_t>(sp.ia)],
                                bv[static_cast<size_t>(sp.ib)], out[kr]);
    return out;
  };
  return r;
}

inline VForm wedge_inner(const VForm& a, const VForm& b) { return wedge(Pairing::Inner, a, b); }
inline VForm wedge_bracket(const VForm& a, const VForm& b) { return wedge(Pairing::Bracket, a, b); }
inline VForm wedge_tensor(const VForm& a, const VForm& b) { return wedge(Pairing::Tensor, a, b); }
inline VForm wedge_scalar(const VForm& a, const VForm& b) { return wedge(Pairing::Scalar, a, b); }

/// Apply the inner product, seen as a linear map on the tensor square, to a
/// tensor-valued form: the weighted trace of the coefficient matrix.
inline VForm inner_contract(const VForm& t) {
  if (t.val != ValueSpace::LieTensor) throw error("inner_contract needs a tensor-valued form");
  VForm r = t;
  r.val = ValueSpace::Real;
  const int g = t.spec->algebra_dim();
  r.fn = [g, ft = t.fn, spec = t.spec](const Pt& p) {
    const FormValue tv = ft(p);
    FormValue out(tv.size(), std::vector<Jet2>(1, Jet2::constant(p.n, 0.0)));
    for (size_t i = 0; i < tv.size(); ++i) {
      for (size_t f = 0; f < spec->factors.size(); ++f) {
        const int o = spec->algebra_offset(f);
        const int d = spec->factors[f] == Factor::Su2 ? 3 : 1;
        for (int c = o; c < o + d; ++c)
          out[i][0] = out[i][0] +
                      spec->scales[f] * tv[i][static_cast<size_t>(c * g + c)];
      }
    }
    return out;
  };
  return r;
}

/// Exterior derivative; consumes one jet order. Applying it to a top form
/// yields the zero (n+1)-form object.
inline VForm exterior_derivative(const VForm& a) {
  if (a.degree >= a.n) return zero_form(a.n, a.degree + 1, a.val, a.spec);
  if (a.jet_order < 1) throw error("form has no derivative data left");
  VForm r;
  r.n = a.n;
  r.degree = a.degree + 1;
  r.val = a.val;
  r.spec = a.spec;
  r.jet_order = a.jet_order - 1;
  const int n = a.n, k = a.degree;
  const int ch = a.channels();
  r.fn = [n, k, ch, fa = a.fn](const Pt& p) {
    const FormValue av = fa(p);
    const auto& ks = multi_indices(n, k + 1);
    FormValue out(ks.size(),
                  std::vector<Jet2>(static_cast<size_t>(ch), Jet2::constant(p.n, 0.0)));
    for (size_t kr = 0; kr < ks.size(); ++kr) {
      const auto& K = ks[kr];
      for (int t = 0; t <= k; ++t) {
        std::array<int, 4> rest{0, 0, 0, 0};
        int m = 0;
        for (int s = 0; s <= k; ++s)
          if (s != t) rest[static_cast<size_t>(m++)] = K[static_cast<size_t>(s)];
        const int ra = multi_index_rank(n, k, rest);
        const double sign = (t % 2 == 0) ? 1.0 : -1.0;
        const int axis = K[static_cast<size_t>(t)];
        for (int c = 0; c < ch; ++c) {
          const Jet2 d = jet_shift(av[static_cast<size_t>(ra)][static_cast<size_t>(c)], axis);
          out[kr][static_cast<size_t>(c)] = out[kr][static_cast<size_t>(c)] + sign * d;
        }
      }
    }
    return out;
  };
  return r;
}

/// d_A = d + [A ^ .] in the fixed gauge; reduces to d when A vanishes.
inline VForm twisted_derivative(const VForm& A, const VForm& a) {
  if (a.val != ValueSpace::Lie) throw error("twisted derivative needs an algebra-valued form");
  if (a.degree >= a.n) return zero_form(a.n, a.degree + 1, a.val, a.spec);
  return exterior_derivative(a) + wedge_bracket(A, a);
}

/// Evaluate on k tangent vectors; multilinear and alternating.
inline std::vector<double> evaluate(const VForm& a, const Pt& p,
                                    const std::vector<std::array<double, 4>>& vectors) {
  if (static_cast<int>(vectors.size()) != a.degree)
    throw error("vector count must equal the form degree");
  const FormValue av = a.eval(p);
  const auto& ks = multi_indices(a.n, a.degree);
  const int k = a.degree;
  std::vector<double> out(static_cast<size_t>(a.channels()), 0.0);
  for (size_t kr = 0; kr < ks.size(); ++kr) {
    // det of the k x k minor rows K, columns = vectors
    double det = 1.0;
    if (k > 0) {
      double m[4][4];
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
          m[i][j] = vectors[static_cast<size_t>(j)][static_cast<size_t>(
              ks[kr][static_cast<size_t>(i)])];
      // direct expansion, k <= 4
      if (k == 1) det = m[0][0];
      else if (k == 2) det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
      else if (k == 3)
        det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
              m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
              m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
      else {
        det = 0.0;
        for (int c = 0; c < 4; ++c) {
          double sub[3][3];
          for (int i = 1; i < 4; ++i) {
            int jj = 0;
            for (int j = 0; j < 4; ++j) {
              if (j == c) continue;
              sub[i - 1][jj++] = m[i][j];
            }
          }
          const double d3 = sub[0][0] * (sub[1][1] * sub[2][2] - sub[1][2] * sub[2][1]) -
                            sub[0][1] * (sub[1][0] * sub[2][2] - sub[1][2] * sub[2][0]) +
                            sub[0][2] * (sub[1][0] * sub[2][1] - sub[1][1] * sub[2][0]);
          det += ((c % 2 == 0) ? 1.0 : -1.0) * m[0][c] * d3;
        }
      }
    }
    for (size_t c = 0; c < out.size(); ++c) out[c] += av[kr][c].v * det;
  }
  return out;
}

/// Integral of a real top-degree form, orientation dx1^...^dxn positive.
inline double integrate(const VForm& w, int grid, int threads = 1) {
  if (w.degree != w.n) throw error("integrate needs a top-degree form");
  if (w.val != ValueSpace::Real) throw error("integrate needs a real-valued form");
  return grid_sum(w.n, grid, threads, [&](const Pt& p) { return w.fn(p)[0][0].v; });
}

// --- sampling and residuals --------------------------------------------------

/// Lattice points of an N^n grid plus uniform random points; deterministic.
inline std::vector<Pt> sample_points(int n, int grid, int n_random, std::uint32_t seed) {
  std::vector<Pt> pts;
  const double step = kTwoPi / grid;
  long total = 1;
  for (int d = 0; d < n; ++d) total *= grid;
  for (long flat = 0; flat < total; ++flat) {
    long rem = flat;
    Pt p = make_pt(n);
    for (int d = n - 1; d >= 0; --d) {
      p[d] = step * static_cast<double>(rem % grid);
      rem /= grid;
    }
    pts.push_back(p);
  }
  Rng rng(seed);
  for (int i = 0; i < n_random; ++i) {
    Pt p = make_pt(n);
    for (int d = 0; d < n; ++d) p[d] = rng.uniform(0.0, kTwoPi);
    pts.push_back(p);
  }
  return pts;
}

/// max_x max_{component, channel} |a - b| over the given sample points,
/// i.e. the two sides compared on every strictly increasing coordinate frame.
inline double max_pointwise_residual(const VForm& a, const VForm& b,
                                     const std::vector<Pt>& pts) {
  if (a.n != b.n || a.degree != b.degree || a.val != b.val)
    throw error("form shape mismatch in residual");
  double m = 0.0;
  for (const Pt& p : pts) {
    const FormValue x = a.eval(p);
    const FormValue y = b.eval(p);
    for (size_t i = 0; i < x.size(); ++i)
      for (size_t c = 0; c < x[i].size(); ++c)
        m = std::max(m, std::abs(x[i][c].v - y[i][c].v));
  }
  return m;
}

inline double max_pointwise_norm(const VForm& a, const std::vector<Pt>& pts) {
  double m = 0.0;
  for (const Pt& p : pts) {
    const FormValue x = a.eval(p);
    for (const auto& comp : x)
      for (const auto& c : comp) m = std::max(m, std::abs(c.v));
  }
  return m;
}

}  // namespace flatcs
