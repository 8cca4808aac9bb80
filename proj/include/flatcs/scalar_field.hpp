#pragma once

#include <functional>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "flatcs/jet.hpp"
#include "flatcs/numeric.hpp"

namespace flatcs {

struct TorusSpec {
  int n = 3;

  explicit TorusSpec(int dim = 3) : n(dim) {
    if (n < 1 || n > 4) throw error("torus dimension must be 1..4");
  }
};

/// Immutable expression node for a smooth real function on T^n. Evaluation
/// yields an order-2 jet; derivatives are propagated, never differenced.
class ScalarExpr {
public:
  virtual ~ScalarExpr() = default;
  virtual Jet2 eval(const Pt& p) const = 0;
  virtual void print(std::ostream& os) const = 0;
  virtual int prec() const { return 100; }
};

using ScalarField = std::shared_ptr<const ScalarExpr>;

namespace detail {

inline void print_child(std::ostream& os, const ScalarField& e, int parent_prec) {
  if (e->prec() < parent_prec) {
    os << "(";
    e->print(os);
    os << ")";
  } else {
    e->print(os);
  }
}

class NumExpr final : public ScalarExpr {
public:
  explicit NumExpr(double v) : v_(v) {}
  double value() const { return v_; }
  Jet2 eval(const Pt& p) const override { return Jet2::constant(p.n, v_); }
  void print(std::ostream& os) const override {
    std::ostringstream tmp;
    tmp.precision(17);
    tmp << v_;
    std::string s = tmp.str();
    if (v_ < 0) os << "(" << s << ")";
    else os << s;
  }

private:
  double v_;
};

class PiExpr final : public ScalarExpr {
public:
  Jet2 eval(const Pt& p) const override { return Jet2::constant(p.n, kPi); }
  void print(std::ostream& os) const override { os << "pi"; }
};

class CoordExpr final : public ScalarExpr {
public:
  explicit CoordExpr(int axis) : axis_(axis) {}
  Jet2 eval(const Pt& p) const override {
    if (axis_ >= p.n) throw error("coordinate out of range for this torus dimension");
    return Jet2::coordinate(p.n, axis_, p[axis_]);
  }
  void print(std::ostream& os) const override {
    static const char* names[4] = {"x", "y", "z", "w"};
    os << names[axis_];
  }

private:
  int axis_;
};

/// |x - (pi,...,pi)|. Smooth away from the center; the center itself is only
/// reachable through the plateau of bump(), which never reads these
/// derivatives there.
class RadialExpr final : public ScalarExpr {
public:
  Jet2 eval(const Pt& p) const override {
    Jet2 q = Jet2::constant(p.n, 0.0);
    for (int i = 0; i < p.n; ++i) {
      const Jet2 d = Jet2::coordinate(p.n, i, p[i]) - kPi;
      q = q + d * d;
    }
    if (q.v == 0.0) {
      Jet2 r = Jet2::constant(p.n, 0.0);
      const double nan = std::nan("");
      for (int i = 0; i < p.n; ++i) {
        r.g[i] = nan;
        for (int j = 0; j < p.n; ++j) r.h[i][j] = nan;
      }
      return r;
    }
    return sqrt(q);
  }
  void print(std::ostream& os) const override { os << "r"; }
};

enum class BinOp { Add, Sub, Mul, Div };

class BinExpr final : public ScalarExpr {
public:
  BinExpr(BinOp op, ScalarField l, ScalarField r)
      : op_(op), l_(std::move(l)), r_(std::move(r)) {}
  Jet2 eval(const Pt& p) const override {
    const Jet2 a = l_->eval(p);
    const Jet2 b = r_->eval(p);
    switch (op_) {
      case BinOp::Add: return a + b;
      case BinOp::Sub: return a - b;
      case BinOp::Mul: return a * b;
      case BinOp::Div: return a / b;
    }
    return a;
  }
  int prec() const override {
    return (op_ == BinOp::Add || op_ == BinOp::Sub) ? 1 : 2;
  }
  void print(std::ostream& os) const override {
    const int p = prec();
    print_child(os, l_, p);
    switch (op_) {
      case BinOp::Add: os << " + "; break;
      case BinOp::Sub: os << " - "; break;
      case BinOp::Mul: os << "*"; break;
      case BinOp::Div: os << "/"; break;
    }
    print_child(os, r_, p + 1);
  }

private:
  BinOp op_;
  ScalarField l_, r_;
};

class NegExpr final : public ScalarExpr {
public:
  explicit NegExpr(ScalarField a) : a_(std::move(a)) {}
  Jet2 eval(const Pt& p) const override { return -a_->eval(p); }
  int prec() const override { return 3; }
  void print(std::ostream& os) const override {
    os << "-";
    print_child(os, a_, 4);
  }

private:
  ScalarField a_;
};

class PowExpr final : public ScalarExpr {
public:
  PowExpr(ScalarField b, int e) : b_(std::move(b)), e_(e) {}
  Jet2 eval(const Pt& p) const override { return pow_int(b_->eval(p), e_); }
  int prec() const override { return 4; }
  void print(std::ostream& os) const override {
    print_child(os, b_, 5);
    os << "^" << e_;
  }

private:
  ScalarField b_;
  int e_;
};

enum class Fn1 { Sin, Cos, Exp };

class Fn1Expr final : public ScalarExpr {
public:
  Fn1Expr(Fn1 fn, ScalarField a) : fn_(fn), a_(std::move(a)) {}
  Jet2 eval(const Pt& p) const override {
    const Jet2 a = a_->eval(p);
    switch (fn_) {
      case Fn1::Sin: return sin(a);
      case Fn1::Cos: return cos(a);
      case Fn1::Exp: return exp(a);
    }
    return a;
  }
  void print(std::ostream& os) const override {
    switch (fn_) {
      case Fn1::Sin: os << "sin"; break;
      case Fn1::Cos: os << "cos"; break;
      case Fn1::Exp: os << "exp"; break;
    }
    os << "(";
    a_->print(os);
    os << ")";
  }

private:
  Fn1 fn_;
  ScalarField a_;
};

class BumpExpr final : public ScalarExpr {
public:
  BumpExpr(ScalarField a, double r0, double r1)
      : a_(std::move(a)), r0_(r0), r1_(r1) {
    if (!(0.0 <= r0 && r0 < r1)) throw error("bump requires 0 <= r0 < r1");
  }
  Jet2 eval(const Pt& p) const override { return bump(a_->eval(p), r0_, r1_); }
  void print(std::ostream& os) const override {
    os << "bump(";
    a_->print(os);
    std::ostringstream t0, t1;
    t0.precision(17);
    t1.precision(17);
    t0 << r0_;
    t1 << r1_;
    os << ", " << t0.str() << ", " << t1.str() << ")";
  }

private:
  ScalarField a_;
  double r0_, r1_;
};

class CustomExpr final : public ScalarExpr {
public:
  CustomExpr(std::function<Jet2(const Pt&)> fn, std::string name)
      : fn_(std::move(fn)), name_(std::move(name)) {}
  Jet2 eval(const Pt& p) const override { return fn_(p); }
  void print(std::ostream& os) const override { os << "<" << name_ << ">"; }

private:
  std::function<Jet2(const Pt&)> fn_;
  std::string name_;
};

}  // namespace detail

inline ScalarField sf_num(double v) { return std::make_shared<detail::NumExpr>(v); }
inline ScalarField sf_pi() { return std::make_shared<detail::PiExpr>(); }
inline ScalarField sf_coord(int axis) { return std::make_shared<detail::CoordExpr>(axis); }
inline ScalarField sf_radial() { return std::make_shared<detail::RadialExpr>(); }

namespace detail {

inline const NumExpr* as_num(const ScalarField& f) {
  return dynamic_cast<const NumExpr*>(f.get());
}

inline bool is_const(const ScalarField& f, double v) {
  const NumExpr* n = as_num(f);
  return n != nullptr && n->value() == v;
}

}  // namespace detail

// Builders fold literal constants so parser-generated coefficient trees stay
// canonical: 0*x, 1*x, x+0 and friends collapse before printing.

inline ScalarField sf_add(ScalarField a, ScalarField b) {
  if (detail::is_const(a, 0.0)) return b;
  if (detail::is_const(b, 0.0)) return a;
  if (const auto* na = detail::as_num(a))
    if (const auto* nb = detail::as_num(b)) return sf_num(na->value() + nb->value());
  return std::make_shared<detail::BinExpr>(detail::BinOp::Add, std::move(a), std::move(b));
}
inline ScalarField sf_sub(ScalarField a, ScalarField b) {
  if (detail::is_const(b, 0.0)) return a;
  if (const auto* na = detail::as_num(a))
    if (const auto* nb = detail::as_num(b)) return sf_num(na->value() - nb->value());
  return std::make_shared<detail::BinExpr>(detail::BinOp::Sub, std::move(a), std::move(b));
}
inline ScalarField sf_mul(ScalarField a, ScalarField b) {
  if (detail::is_const(a, 0.0) || detail::is_const(b, 0.0)) return sf_num(0.0);
  if (detail::is_const(a, 1.0)) return b;
  if (detail::is_const(b, 1.0)) return a;
  if (const auto* na = detail::as_num(a))
    if (const auto* nb = detail::as_num(b)) return sf_num(na->value() * nb->value());
  return std::make_shared<detail::BinExpr>(detail::BinOp::Mul, std::move(a), std::move(b));
}
inline ScalarField sf_div(ScalarField a, ScalarField b) {
  if (detail::is_const(a, 0.0) && !detail::is_const(b, 0.0)) return sf_num(0.0);
  if (detail::is_const(b, 1.0)) return a;
  return std::make_shared<detail::BinExpr>(detail::BinOp::Div, std::move(a), std::move(b));
}
inline ScalarField sf_neg(ScalarField a) {
  if (const auto* na = detail::as_num(a)) return sf_num(-na->value());
  return std::make_shared<detail::NegExpr>(std::move(a));
}
inline ScalarField sf_pow(ScalarField b, int e) {
  return std::make_shared<detail::PowExpr>(std::move(b), e);
}
inline ScalarField sf_sin(ScalarField a) {
  return std::make_shared<detail::Fn1Expr>(detail::Fn1::Sin, std::move(a));
}
inline ScalarField sf_cos(ScalarField a) {
  return std::make_shared<detail::Fn1Expr>(detail::Fn1::Cos, std::move(a));
}
inline ScalarField sf_exp(ScalarField a) {
  return std::make_shared<detail::Fn1Expr>(detail::Fn1::Exp, std::move(a));
}
inline ScalarField sf_bump(ScalarField a, double r0, double r1) {
  return std::make_shared<detail::BumpExpr>(std::move(a), r0, r1);
}
inline ScalarField sf_custom(std::function<Jet2(const Pt&)> fn, std::string name) {
  return std::make_shared<detail::CustomExpr>(std::move(fn), std::move(name));
}

inline std::string to_text(const ScalarField& f) {
  std::ostringstream os;
  f->print(os);
  return os.str();
}

inline Jet2 eval_jet(const ScalarField& f, const Pt& p) { return f->eval(p); }

// ---------------------------------------------------------------------------
// Quadrature on the uniform periodic grid, nodes 2*pi*k/N, rectangle rule.
// Lexicographic traversal with Neumaier compensation; the slab decomposition
// over the first axis is fixed by N, so the result is independent of the
// thread count.

template <class F>
double grid_sum(int n, int grid, int threads, F&& f) {
  if (grid < 2) throw error("grid must be at least 2 per axis");
  const double step = kTwoPi / grid;
  std::vector<NeumaierSum> slabs(static_cast<size_t>(grid));
  for_slabs(grid, threads, [&](int i0) {
    NeumaierSum acc;
    Pt p = make_pt(n);
    p[0] = step * i0;
    std::array<int, 4> idx{0, 0, 0, 0};
    const long inner = [&] {
      long c = 1;
      for (int d = 1; d < n; ++d) c *= grid;
      return c;
    }();
    for (long flat = 0; flat < inner; ++flat) {
      long rem = flat;
      for (int d = n - 1; d >= 1; --d) {
        idx[d] = static_cast<int>(rem % grid);
        rem /= grid;
      }
      for (int d = 1; d < n; ++d) p[d] = step * idx[d];
      acc.add(f(p));
    }
    slabs[static_cast<size_t>(i0)] = acc;
  });
  NeumaierSum total;
  for (const NeumaierSum& s : slabs) total.add(s.value());
  double cell = 1.0;
  for (int d = 0; d < n; ++d) cell *= step;
  return total.value() * cell;
}

inline double quadrature(const ScalarField& f, const TorusSpec& torus, int grid,
                         int threads = 1) {
  return grid_sum(torus.n, grid, threads, [&](const Pt& p) { return f->eval(p).v; });
}

}  // namespace flatcs
