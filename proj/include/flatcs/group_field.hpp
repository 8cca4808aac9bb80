#pragma once

#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "flatcs/forms.hpp"
#include "flatcs/jet.hpp"
#include "flatcs/lie.hpp"
#include "flatcs/scalar_field.hpp"

namespace flatcs {

/// Group value with first and second derivatives at a point, stored as jets
/// of the ambient coordinates (unit complex per U(1) factor, unit quaternion
/// per SU(2) factor).
struct GroupJet {
  SpecPtr spec;
  std::vector<Jet2> c;
};

namespace qj {

using Quad = std::array<Jet2, 4>;

inline Quad mul(const Quad& a, const Quad& b) {
  Quad r;
  r[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3];
  r[1] = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2];
  r[2] = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1];
  r[3] = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0];
  return r;
}

inline Quad conj(const Quad& a) { return {a[0], -a[1], -a[2], -a[3]}; }

inline Quad normalize(const Quad& a) {
  Jet2 n2 = a[0] * a[0] + a[1] * a[1] + a[2] * a[2] + a[3] * a[3];
  const Jet2 inv = recip(sqrt(n2));
  return {a[0] * inv, a[1] * inv, a[2] * inv, a[3] * inv};
}

}  // namespace qj

inline qj::Quad group_jet_factor(const GroupJet& g, size_t f) {
  const int o = g.spec->group_offset(f);
  if (g.spec->factors[f] == Factor::Su2)
    return {g.c[static_cast<size_t>(o)], g.c[static_cast<size_t>(o) + 1],
            g.c[static_cast<size_t>(o) + 2], g.c[static_cast<size_t>(o) + 3]};
  const Jet2 zero = Jet2::constant(g.c[static_cast<size_t>(o)].n, 0.0);
  return {g.c[static_cast<size_t>(o)], g.c[static_cast<size_t>(o) + 1], zero, zero};
}

/// Map u: T^n -> G evaluable with two derivative orders. Immutable DAG.
class GroupExpr {
public:
  explicit GroupExpr(SpecPtr spec) : spec_(std::move(spec)) {}
  virtual ~GroupExpr() = default;
  const SpecPtr& spec() const { return spec_; }
  virtual GroupJet eval(const Pt& p) const = 0;
  virtual void print(std::ostream& os) const = 0;

private:
  SpecPtr spec_;
};

using GroupField = std::shared_ptr<const GroupExpr>;

namespace detail {

class GConst final : public GroupExpr {
public:
  explicit GConst(GroupElement g) : GroupExpr(g.spec), g_(std::move(g)) {}
  GroupJet eval(const Pt& p) const override {
    GroupJet r;
    r.spec = spec();
    r.c.reserve(g_.c.size());
    for (double v : g_.c) r.c.push_back(Jet2::constant(p.n, v));
    return r;
  }
  void print(std::ostream& os) const override {
    os << "const(";
    for (size_t f = 0; f < spec()->factors.size(); ++f) {
      const int o = spec()->group_offset(f);
      const int d = spec()->factors[f] == Factor::Su2 ? 4 : 2;
      os << "[";
      for (int i = 0; i < d; ++i) {
        std::ostringstream t;
        t.precision(17);
        t << g_.c[static_cast<size_t>(o + i)];
        os << (i ? "," : "") << t.str();
      }
      os << "]";
    }
    os << ")";
  }

private:
  GroupElement g_;
};

/// Pointwise exponential of an algebra-valued scalar field per factor.
/// su(2) blocks go through cos(sqrt q) and sinc(sqrt q) as entire functions
/// of q = |X|^2, so the jet is smooth through X = 0.
class GQExp final : public GroupExpr {
public:
  GQExp(SpecPtr spec, VForm field, std::vector<ScalarField> printable)
      : GroupExpr(std::move(spec)), field_(std::move(field)), printable_(std::move(printable)) {
    if (field_.degree != 0 || field_.val != ValueSpace::Lie)
      throw error("qexp needs an algebra-valued 0-form");
    require_same_algebra(field_.spec, this->spec());
  }

  GroupJet eval(const Pt& p) const override {
    const FormValue fv = field_.eval(p);
    const std::vector<Jet2>& ch = fv[0];
    GroupJet r;
    r.spec = spec();
    r.c.assign(static_cast<size_t>(spec()->group_dim()), Jet2::constant(p.n, 0.0));
    for (size_t f = 0; f < spec()->factors.size(); ++f) {
      const int ao = spec()->algebra_offset(f);
      const int go = spec()->group_offset(f);
      if (spec()->factors[f] == Factor::Su2) {
        const Jet2& a = ch[static_cast<size_t>(ao)];
        const Jet2& b = ch[static_cast<size_t>(ao) + 1];
        const Jet2& c = ch[static_cast<size_t>(ao) + 2];
        const Jet2 q = a * a + b * b + c * c;
        double c0, c1, c2, s0, s1, s2;
        cos_sinc_of_square(q.v, c0, c1, c2, s0, s1, s2);
        const Jet2 C = apply_analytic(q, c0, c1, c2);
        const Jet2 S = apply_analytic(q, s0, s1, s2);
        r.c[static_cast<size_t>(go)] = C;
        r.c[static_cast<size_t>(go) + 1] = S * a;
        r.c[static_cast<size_t>(go) + 2] = S * b;
        r.c[static_cast<size_t>(go) + 3] = S * c;
      } else {
        const Jet2& t = ch[static_cast<size_t>(ao)];
        r.c[static_cast<size_t>(go)] = cos(t);
        r.c[static_cast<size_t>(go) + 1] = sin(t);
      }
    }
    return r;
  }

  void print(std::ostream& os) const override {
    os << "qexp(";
    if (printable_.empty()) {
      os << "<field>";
    } else {
      size_t c = 0;
      for (size_t f = 0; f < spec()->factors.size(); ++f) {
        const int d = spec()->factors[f] == Factor::Su2 ? 3 : 1;
        os << "[";
        for (int i = 0; i < d; ++i) {
          if (i) os << ", ";
          printable_[c++]->print(os);
        }
        os << "]";
      }
    }
    os << ")";
  }

private:
  // cos(sqrt q), sinc(sqrt q) and their first two q-derivatives.
  static void cos_sinc_of_square(double q, double& c0, double& c1, double& c2,
                                 double& s0, double& s1, double& s2) {
    if (q < 1e-3) {
      c0 = 1.0 + q * (-0.5 + q * (1.0 / 24.0 + q * (-1.0 / 720.0 + q / 40320.0)));
      c1 = -0.5 + q * (1.0 / 12.0 + q * (-1.0 / 240.0 + q / 10080.0));
      c2 = 1.0 / 12.0 + q * (-1.0 / 120.0 + q / 3360.0);
      s0 = 1.0 + q * (-1.0 / 6.0 + q * (1.0 / 120.0 + q * (-1.0 / 5040.0 + q / 362880.0)));
      s1 = -1.0 / 6.0 + q * (1.0 / 60.0 + q * (-1.0 / 1680.0 + q / 90720.0));
      s2 = 1.0 / 60.0 + q * (-1.0 / 840.0 + q / 30240.0);
      return;
    }
    const double r = std::sqrt(q);
    c0 = std::cos(r);
    s0 = std::sin(r) / r;
    c1 = -0.5 * s0;
    s1 = (c0 - s0) / (2.0 * q);
    c2 = -0.5 * s1;
    s2 = (c1 - s1) / (2.0 * q) - (c0 - s0) / (2.0 * q * q);
  }

  VForm field_;
  std::vector<ScalarField> printable_;
};

class GMul final : public GroupExpr {
public:
  GMul(GroupField a, GroupField b) : GroupExpr(a->spec()), a_(std::move(a)), b_(std::move(b)) {
    require_same_algebra(a_->spec(), b_->spec());
  }
  GroupJet eval(const Pt& p) const override {
    const GroupJet x = a_->eval(p);
    const GroupJet y = b_->eval(p);
    GroupJet r;
    r.spec = spec();
    r.c.assign(static_cast<size_t>(spec()->group_dim()), Jet2::constant(p.n, 0.0));
    for (size_t f = 0; f < spec()->factors.size(); ++f) {
      const int o = spec()->group_offset(f);
      if (spec()->factors[f] == Factor::Su2) {
        const qj::Quad m = qj::normalize(qj::mul(group_jet_factor(x, f), group_jet_factor(y, f)));
        for (int i = 0; i < 4; ++i) r.c[static_cast<size_t>(o + i)] = m[static_cast<size_t>(i)];
      } else {
        const Jet2& ar = x.c[static_cast<size_t>(o)];
        const Jet2& ai = x.c[static_cast<size_t>(o) + 1];
        const Jet2& br = y.c[static_cast<size_t>(o)];
        const Jet2& bi = y.c[static_cast<size_t>(o) + 1];
        r.c[static_cast<size_t>(o)] = ar * br - ai * bi;
        r.c[static_cast<size_t>(o) + 1] = ar * bi + ai * br;
      }
    }
    return r;
  }
  void print(std::ostream& os) const override {
    a_->print(os);
    os << "*";
    b_->print(os);
  }

private:
  GroupField a_, b_;
};

class GInverse final : public GroupExpr {
public:
  explicit GInverse(GroupField a) : GroupExpr(a->spec()), a_(std::move(a)) {}
  GroupJet eval(const Pt& p) const override {
    GroupJet r = a_->eval(p);
    for (size_t f = 0; f < spec()->factors.size(); ++f) {
      const int o = spec()->group_offset(f);
      if (spec()->factors[f] == Factor::Su2) {
        for (int i = 1; i < 4; ++i)
          r.c[static_cast<size_t>(o + i)] = -r.c[static_cast<size_t>(o + i)];
      } else {
        r.c[static_cast<size_t>(o) + 1] = -r.c[static_cast<size_t>(o) + 1];
      }
    }
    return r;
  }
  void print(std::ostream& os) const override {
    os << "pow(";
    a_->print(os);
    os << ", -1)";
  }

private:
  GroupField a_;
};

/// Degree-one collapse map of T^3 onto the first SU(2) factor: identity far
/// from the domain center, the antipode at the center, rotating by
/// pi*bump(r) about the radial axis in between. Constant plateaus make the
/// jet exact at the center and through the boundary faces.
class GBumpMap final : public GroupExpr {
public:
  GBumpMap(SpecPtr spec, double r0, double r1, int factor)
      : GroupExpr(std::move(spec)), r0_(r0), r1_(r1) {
    if (!(0.0 < r0 && r0 < r1 && r1 < kPi))
      throw error("bumpmap needs 0 < r0 < r1 < pi");
    if (factor >= 0) {
      factor_ = static_cast<size_t>(factor);
      if (factor_ >= this->spec()->factors.size() ||
          this->spec()->factors[factor_] != Factor::Su2)
        throw error("bumpmap factor must name an su(2) factor");
    } else {
      factor_ = this->spec()->factors.size();
      for (size_t f = 0; f < this->spec()->factors.size(); ++f)
        if (this->spec()->factors[f] == Factor::Su2) {
          factor_ = f;
          break;
        }
      if (factor_ == this->spec()->factors.size())
        throw error("bumpmap needs an su(2) factor");
    }
  }

  GroupJet eval(const Pt& p) const override {
    if (p.n < 3) throw error("bumpmap needs at least three coordinates");
    GroupJet r;
    r.spec = spec();
    r.c.assign(static_cast<size_t>(spec()->group_dim()), Jet2::constant(p.n, 0.0));
    for (size_t f = 0; f < spec()->factors.size(); ++f) {
      const int o = spec()->group_offset(f);
      r.c[static_cast<size_t>(o)] = Jet2::constant(p.n, 1.0);
    }
    const int o = spec()->group_offset(factor_);
    double rr = 0.0;
    for (int i = 0; i < 3; ++i) rr += (p[i] - kPi) * (p[i] - kPi);
    rr = std::sqrt(rr);
    if (rr <= r0_) {
      r.c[static_cast<size_t>(o)] = Jet2::constant(p.n, -1.0);
      return r;
    }
    if (rr >= r1_) return r;
    Jet2 q = Jet2::constant(p.n, 0.0);
    std::array<Jet2, 3> v;
    for (int i = 0; i < 3; ++i) {
      v[static_cast<size_t>(i)] = Jet2::coordinate(p.n, i, p[i]) - kPi;
      q = q + v[static_cast<size_t>(i)] * v[static_cast<size_t>(i)];
    }
    const Jet2 rad = sqrt(q);
    const Jet2 rho = kPi * bump(rad, r0_, r1_);
    const Jet2 s_over_r = sin(rho) / rad;
    r.c[static_cast<size_t>(o)] = cos(rho);
    for (int i = 0; i < 3; ++i)
      r.c[static_cast<size_t>(o + 1 + i)] = s_over_r * v[static_cast<size_t>(i)];
    return r;
  }

  void print(std::ostream& os) const override {
    std::ostringstream t0, t1;
    t0.precision(17);
    t1.precision(17);
    t0 << r0_;
    t1 << r1_;
    os << "bumpmap(" << t0.str() << ", " << t1.str() << ", " << factor_ << ")";
  }

private:
  double r0_, r1_;
  size_t factor_;
};

}  // namespace detail

inline GroupField gf_const(GroupElement g) {
  return std::make_shared<detail::GConst>(std::move(g));
}

inline GroupField gf_identity(const SpecPtr& spec) { return gf_const(GroupElement(spec)); }

inline GroupField gf_qexp(const SpecPtr& spec, VForm algebra_field,
                          std::vector<ScalarField> printable = {}) {
  return std::make_shared<detail::GQExp>(spec, std::move(algebra_field), std::move(printable));
}

inline GroupField gf_mul(GroupField a, GroupField b) {
  return std::make_shared<detail::GMul>(std::move(a), std::move(b));
}

inline GroupField gf_inverse(GroupField a) {
  return std::make_shared<detail::GInverse>(std::move(a));
}

/// conj(u, w) = w^-1 u w.
inline GroupField gf_conj(GroupField u, GroupField w) {
  return gf_mul(gf_mul(gf_inverse(w), std::move(u)), w);
}

inline GroupField gf_pow(GroupField u, int m) {
  if (m == 0) return gf_identity(u->spec());
  GroupField base = m < 0 ? gf_inverse(u) : u;
  GroupField r = base;
  for (int i = 1; i < std::abs(m); ++i) r = gf_mul(r, base);
  return r;
}

inline GroupField gf_bumpmap(const SpecPtr& spec, double r0, double r1, int factor = -1) {
  return std::make_shared<detail::GBumpMap>(spec, r0, r1, factor);
}

inline std::string to_text(const GroupField& u) {
  std::ostringstream os;
  u->print(os);
  return os.str();
}

inline GroupElement group_value(const GroupField& u, const Pt& p) {
  const GroupJet j = u->eval(p);
  std::vector<double> c;
  c.reserve(j.c.size());
  for (const Jet2& x : j.c) c.push_back(x.v);
  return renormalized(GroupElement(u->spec(), std::move(c)));
}

// ---------------------------------------------------------------------------
// Maurer-Cartan pullbacks.

/// u*theta = u^-1 du as an algebra-valued 1-form (valid to jet order 1).
inline VForm mc_pullback(const GroupField& u, int n) {
  VForm r;
  r.n = n;
  const SpecPtr spec = u->spec();
  r.val = ValueSpace::Lie;
  r.degree = 1;
  r.spec = spec;
  r.jet_order = 1;
  r.fn = [u, spec](const Pt& p) {
    const GroupJet g = u->eval(p);
    const int dim_g = spec->algebra_dim();
    FormValue out(static_cast<size_t>(p.n),
                  std::vector<Jet2>(static_cast<size_t>(dim_g), Jet2::constant(p.n, 0.0)));
    for (size_t f = 0; f < spec->factors.size(); ++f) {
      const int ao = spec->algebra_offset(f);
      const int go = spec->group_offset(f);
      if (spec->factors[f] == Factor::Su2) {
        const qj::Quad q = group_jet_factor(g, f);
        const qj::Quad qc = qj::conj(q);
        for (int a = 0; a < p.n; ++a) {
          qj::Quad dq;
          for (int i = 0; i < 4; ++i)
            dq[static_cast<size_t>(i)] = jet_shift(q[static_cast<size_t>(i)], a);
          const qj::Quad m = qj::mul(qc, dq);
          // |u| = 1 kills the real part; the pure part is the algebra value
          out[static_cast<size_t>(a)][static_cast<size_t>(ao)] = m[1];
          out[static_cast<size_t>(a)][static_cast<size_t>(ao) + 1] = m[2];
          out[static_cast<size_t>(a)][static_cast<size_t>(ao) + 2] = m[3];
        }
      } else {
        const Jet2& cr = g.c[static_cast<size_t>(go)];
        const Jet2& ci = g.c[static_cast<size_t>(go) + 1];
        for (int a = 0; a < p.n; ++a)
          out[static_cast<size_t>(a)][static_cast<size_t>(ao)] =
              cr * jet_shift(ci, a) - ci * jet_shift(cr, a);
      }
    }
    return out;
  };
  return r;
}

inline VForm mc_form(const GroupField& u, int n) { return mc_pullback(u, n); }

/// Pullback of the canonical closed 3-form: -(1/6) <u*theta ^ [u*theta ^ u*theta]>
/// with the inner product taken from `spec` (scales matter, factors must match).
inline VForm mc_three_form(const GroupField& u, const SpecPtr& spec, int n) {
  require_same_algebra(u->spec(), spec);
  VForm th = mc_form(u, n);
  th.spec = spec;
  return (-1.0 / 6.0) * wedge_inner(th, wedge_bracket(th, th));
}

/// Pointwise Ad_u or Ad_{u^-1} applied to an algebra-valued form.
inline VForm adjoint_transform(const GroupField& u, const VForm& a, bool by_inverse) {
  if (a.val != ValueSpace::Lie) throw error("adjoint transform needs an algebra-valued form");
  require_same_algebra(u->spec(), a.spec);
  VForm r = a;
  r.jet_order = std::min(a.jet_order, 2);
  r.fn = [u, fa = a.fn, spec = a.spec, by_inverse](const Pt& p) {
    FormValue x = fa(p);
    const GroupJet g = u->eval(p);
    for (size_t f = 0; f < spec->factors.size(); ++f) {
      if (spec->factors[f] != Factor::Su2) continue;
      const int ao = spec->algebra_offset(f);
      qj::Quad q = group_jet_factor(g, f);
      if (by_inverse) q = qj::conj(q);
      const qj::Quad qc = qj::conj(q);
      for (auto& comp : x) {
        const Jet2 zero = Jet2::constant(p.n, 0.0);
        qj::Quad v{zero, comp[static_cast<size_t>(ao)], comp[static_cast<size_t>(ao) + 1],
                   comp[static_cast<size_t>(ao) + 2]};
        const qj::Quad s = qj::mul(qj::mul(q, v), qc);
        comp[static_cast<size_t>(ao)] = s[1];
        comp[static_cast<size_t>(ao) + 1] = s[2];
        comp[static_cast<size_t>(ao) + 2] = s[3];
      }
    }
    return x;
  };
  return r;
}

}  // namespace flatcs
