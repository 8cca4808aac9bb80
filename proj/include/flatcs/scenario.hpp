#pragma once

#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "flatcs/flat_bundle.hpp"
#include "flatcs/forms.hpp"
#include "flatcs/group_field.hpp"
#include "flatcs/lie.hpp"
#include "flatcs/scalar_field.hpp"

namespace flatcs {

using Json = nlohmann::ordered_json;

struct Diagnostic {
  int line = 1;
  int col = 1;
  std::string message;
  std::vector<std::string> expected;

  std::string str() const {
    std::ostringstream os;
    os << "line " << line << ", col " << col << ": " << message;
    if (!expected.empty()) {
      os << " (expected ";
      for (size_t i = 0; i < expected.size(); ++i) os << (i ? " | " : "") << expected[i];
      os << ")";
    }
    return os.str();
  }
};

/// A named field of a scenario; the expression grammar is typed and the kind
/// is inferred from the parse.
struct FieldEntry {
  enum class Kind { Scalar, Algebra, Group, Form } kind = Kind::Scalar;
  ScalarField scalar;                  // Kind::Scalar
  VForm form;                          // Kind::Algebra (degree 0) and Kind::Form
  GroupField group;                    // Kind::Group
  std::string source;                  // original expression text
  std::string canonical;               // pretty-printed canonical text
};

struct CheckRequest {
  std::string id;
  std::map<std::string, std::string> use;  // role -> field name
  std::optional<int> grid;
  std::optional<double> tol;
  std::optional<double> expect;
  std::optional<GroupElement> regular_value;
};

struct Scenario {
  std::string id;
  SpecPtr spec;
  int dim = 3;
  int grid = 16;
  std::optional<HolonomyData> holonomy;
  std::map<std::string, FieldEntry> fields;
  std::vector<CheckRequest> checks;
  std::vector<std::string> warnings;

  const FieldEntry& field(const std::string& name) const {
    auto it = fields.find(name);
    if (it == fields.end()) throw error("scenario has no field named '" + name + "'");
    return it->second;
  }
};

// ---------------------------------------------------------------------------
// Expression parser: recursive descent with precedence climbing over a typed
// value domain (scalar, algebra, group, form). Errors carry positions and
// the expected-token set; there is never a partially constructed result.

namespace parse_detail {

struct ParseError {
  Diagnostic diag;
};

[[noreturn]] inline void fail(int line, int col, std::string msg,
                              std::vector<std::string> expected = {}) {
  throw ParseError{Diagnostic{line, col, std::move(msg), std::move(expected)}};
}

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen,
                 LBracket, RBracket, Comma, End };

struct Token {
  Tok kind = Tok::End;
  double num = 0.0;
  std::string text;
  int line = 1, col = 1;
};

class Lexer {
public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

private:
  void advance() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (c == '\n') {
        ++line_;
        col_ = 1;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++col_;
        ++pos_;
      } else {
        break;
      }
    }
    tok_ = Token{};
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_.kind = Tok::End;
      return;
    }
    const char c = src_[pos_];
    auto single = [&](Tok k) {
      tok_.kind = k;
      tok_.text = std::string(1, c);
      ++pos_;
      ++col_;
    };
    switch (c) {
      case '+': single(Tok::Plus); return;
      case '-': single(Tok::Minus); return;
      case '*': single(Tok::Star); return;
      case '/': single(Tok::Slash); return;
      case '^': single(Tok::Caret); return;
      case '(': single(Tok::LParen); return;
      case ')': single(Tok::RParen); return;
      case '[': single(Tok::LBracket); return;
      case ']': single(Tok::RBracket); return;
      case ',': single(Tok::Comma); return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t end = pos_;
      while (end < src_.size() &&
             (std::isdigit(static_cast<unsigned char>(src_[end])) || src_[end] == '.' ||
              src_[end] == 'e' || src_[end] == 'E' ||
              ((src_[end] == '+' || src_[end] == '-') && end > pos_ &&
               (src_[end - 1] == 'e' || src_[end - 1] == 'E'))))
        ++end;
      const std::string text = src_.substr(pos_, end - pos_);
      try {
        tok_.num = std::stod(text);
      } catch (...) {
        fail(line_, col_, "malformed number '" + text + "'");
      }
      tok_.kind = Tok::Number;
      tok_.text = text;
      col_ += static_cast<int>(end - pos_);
      pos_ = end;
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t end = pos_;
      while (end < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_'))
        ++end;
      tok_.kind = Tok::Ident;
      tok_.text = src_.substr(pos_, end - pos_);
      col_ += static_cast<int>(end - pos_);
      pos_ = end;
      return;
    }
    fail(line_, col_, std::string("unexpected character '") + c + "'");
  }

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

/// Typed value during parsing.
struct Val {
  enum class Kind { Scalar, Algebra, Group, Form } kind = Kind::Scalar;
  ScalarField scalar;
  std::vector<ScalarField> algebra;                 // channel coefficients
  GroupField group;
  int form_degree = 0;
  bool form_lie = false;
  std::vector<std::vector<ScalarField>> form_comps; // [rank][channel]
};

class ExprParser {
public:
  ExprParser(const std::string& src, SpecPtr spec, int dim, std::vector<std::string>* warnings)
      : lex_(src), spec_(std::move(spec)), n_(dim), warnings_(warnings) {}

  Val parse_toplevel() {
    Val v = parse_expr(0);
    if (lex_.peek().kind != Tok::End)
      fail(lex_.peek().line, lex_.peek().col,
           "trailing input after expression: '" + lex_.peek().text + "'",
           {"end of expression", "+", "-", "*", "/", "^"});
    return v;
  }

private:
  // precedence: 1 additive, 2 multiplicative, 3 power/wedge
  Val parse_expr(int min_prec) {
    Val lhs = parse_unary();
    for (;;) {
      const Token& t = lex_.peek();
      int prec;
      if (t.kind == Tok::Plus || t.kind == Tok::Minus) prec = 1;
      else if (t.kind == Tok::Star || t.kind == Tok::Slash) prec = 2;
      else if (t.kind == Tok::Caret) prec = 3;
      else break;
      if (prec < min_prec) break;
      const Token op = lex_.take();
      Val rhs = parse_expr(prec + 1);
      lhs = apply(op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Val parse_unary() {
    if (lex_.peek().kind == Tok::Minus) {
      const Token op = lex_.take();
      Val v = parse_expr(3);
      return negate(op, std::move(v));
    }
    return parse_primary();
  }

  Val scalar_val(ScalarField f) {
    Val v;
    v.kind = Val::Kind::Scalar;
    v.scalar = std::move(f);
    return v;
  }

  Val parse_primary() {
    const Token t = lex_.take();
    switch (t.kind) {
      case Tok::Number:
        return scalar_val(sf_num(t.num));
      case Tok::LParen: {
        Val v = parse_expr(0);
        expect(Tok::RParen, ")");
        return v;
      }
      case Tok::LBracket:
        return parse_algebra_literal(t);
      case Tok::Ident:
        return parse_ident(t);
      default:
        fail(t.line, t.col, "unexpected token '" + t.text + "'",
             {"number", "identifier", "(", "["});
    }
  }

  void expect(Tok k, const std::string& what) {
    const Token& t = lex_.peek();
    if (t.kind != k)
      fail(t.line, t.col, "unexpected token '" + (t.kind == Tok::End ? "<end>" : t.text) + "'",
           {what});
    lex_.take();
  }

  double expect_number() {
    bool neg = false;
    if (lex_.peek().kind == Tok::Minus) {
      lex_.take();
      neg = true;
    }
    const Token& t = lex_.peek();
    if (t.kind != Tok::Number)
      fail(t.line, t.col, "unexpected token '" + t.text + "'", {"number"});
    const double v = lex_.take().num;
    return neg ? -v : v;
  }

  int expect_int() {
    const Token& t = lex_.peek();
    const double v = expect_number();
    if (v != std::round(v)) fail(t.line, t.col, "expected an integer, got " + t.text);
    return static_cast<int>(std::round(v));
  }

  int coordinate_axis(const std::string& name) const {
    static const std::map<std::string, int> names{
        {"x", 0}, {"y", 1}, {"z", 2}, {"w", 3},
        {"x1", 0}, {"x2", 1}, {"x3", 2}, {"x4", 3}};
    auto it = names.find(name);
    return it == names.end() ? -1 : it->second;
  }

  int dvar_axis(const std::string& name) const {
    static const std::map<std::string, int> names{
        {"dx", 0}, {"dy", 1}, {"dz", 2}, {"dw", 3},
        {"dx1", 0}, {"dx2", 1}, {"dx3", 2}, {"dx4", 3}};
    auto it = names.find(name);
    return it == names.end() ? -1 : it->second;
  }

  /// Channel index of the named basis symbol. i/j/k refer to the first su(2)
  /// factor; for a group without one, i is the first u(1) generator.
  int basis_channel(const Token& t) const {
    for (size_t f = 0; f < spec_->factors.size(); ++f) {
      if (spec_->factors[f] == Factor::Su2) {
        const int o = spec_->algebra_offset(f);
        if (t.text == "i") return o;
        if (t.text == "j") return o + 1;
        if (t.text == "k") return o + 2;
        return -1;
      }
    }
    if (t.text == "i") return spec_->algebra_offset(0);
    return -1;
  }

  Val parse_ident(const Token& t) {
    const std::string& s = t.text;
    if (s == "pi") return scalar_val(sf_pi());
    if (const int axis = coordinate_axis(s); axis >= 0) {
      if (axis >= n_)
        fail(t.line, t.col, "coordinate '" + s + "' is out of range for dimension " +
                                std::to_string(n_));
      return scalar_val(sf_coord(axis));
    }
    if (s == "r") {
      if (bump_arg_depth_ == 0 && warnings_)
        warnings_->push_back(
            "radial variable 'r' used outside bump(): the field is not smooth at the "
            "domain center");
      return scalar_val(sf_radial());
    }
    if (s == "sin" || s == "cos" || s == "exp") {
      expect(Tok::LParen, "(");
      Val a = parse_expr(0);
      expect(Tok::RParen, ")");
      require_scalar(a, t, "argument of " + s);
      if (s == "sin") return scalar_val(sf_sin(a.scalar));
      if (s == "cos") return scalar_val(sf_cos(a.scalar));
      return scalar_val(sf_exp(a.scalar));
    }
    if (s == "bump") {
      expect(Tok::LParen, "(");
      ++bump_arg_depth_;
      Val a = parse_expr(0);
      --bump_arg_depth_;
      require_scalar(a, t, "first argument of bump");
      expect(Tok::Comma, ",");
      const double r0 = expect_number();
      expect(Tok::Comma, ",");
      const double r1 = expect_number();
      expect(Tok::RParen, ")");
      if (!(0.0 <= r0 && r0 < r1))
        fail(t.line, t.col, "bump needs 0 <= r0 < r1");
      return scalar_val(sf_bump(a.scalar, r0, r1));
    }
    if (const int ch = basis_channel(t); s.size() == 1 && (s == "i" || s == "j" || s == "k")) {
      if (ch < 0)
        fail(t.line, t.col, "basis symbol '" + s + "' is not available for this group");
      Val v;
      v.kind = Val::Kind::Algebra;
      v.algebra.assign(static_cast<size_t>(spec_->algebra_dim()), sf_num(0.0));
      v.algebra[static_cast<size_t>(ch)] = sf_num(1.0);
      return v;
    }
    if (const int axis = dvar_axis(s); axis >= 0) {
      if (axis >= n_)
        fail(t.line, t.col, "'" + s + "' is out of range for dimension " + std::to_string(n_));
      Val v;
      v.kind = Val::Kind::Form;
      v.form_degree = 1;
      v.form_lie = false;
      v.form_comps.assign(static_cast<size_t>(n_), {sf_num(0.0)});
      v.form_comps[static_cast<size_t>(axis)][0] = sf_num(1.0);
      return v;
    }
    if (s == "qexp") {
      expect(Tok::LParen, "(");
      Val a = parse_expr(0);
      expect(Tok::RParen, ")");
      if (a.kind != Val::Kind::Algebra)
        fail(t.line, t.col, "qexp needs an algebra-valued argument");
      Val v;
      v.kind = Val::Kind::Group;
      v.group = gf_qexp(spec_, algebra_form(a.algebra), a.algebra);
      return v;
    }
    if (s == "conj") {
      expect(Tok::LParen, "(");
      Val u = parse_expr(0);
      expect(Tok::Comma, ",");
      Val w = parse_expr(0);
      expect(Tok::RParen, ")");
      if (u.kind != Val::Kind::Group || w.kind != Val::Kind::Group)
        fail(t.line, t.col, "conj needs two group-valued arguments");
      Val v;
      v.kind = Val::Kind::Group;
      v.group = gf_conj(u.group, w.group);
      return v;
    }
    if (s == "pow") {
      expect(Tok::LParen, "(");
      Val u = parse_expr(0);
      expect(Tok::Comma, ",");
      const int m = expect_int();
      expect(Tok::RParen, ")");
      if (u.kind != Val::Kind::Group)
        fail(t.line, t.col, "pow needs a group-valued first argument");
      Val v;
      v.kind = Val::Kind::Group;
      v.group = gf_pow(u.group, m);
      return v;
    }
    if (s == "bumpmap") {
      expect(Tok::LParen, "(");
      const double r0 = expect_number();
      expect(Tok::Comma, ",");
      const double r1 = expect_number();
      int factor = -1;
      if (lex_.peek().kind == Tok::Comma) {
        lex_.take();
        factor = expect_int();
      }
      expect(Tok::RParen, ")");
      if (n_ < 3) fail(t.line, t.col, "bumpmap needs at least three coordinates");
      Val v;
      v.kind = Val::Kind::Group;
      v.group = gf_bumpmap(spec_, r0, r1, factor);
      return v;
    }
    if (s == "id") {
      Val v;
      v.kind = Val::Kind::Group;
      v.group = gf_identity(spec_);
      return v;
    }
    if (s == "const") {
      expect(Tok::LParen, "(");
      std::vector<double> coords;
      for (size_t f = 0; f < spec_->factors.size(); ++f) {
        expect(Tok::LBracket, "[");
        const int d = spec_->factors[f] == Factor::Su2 ? 4 : 2;
        for (int c = 0; c < d; ++c) {
          if (c) expect(Tok::Comma, ",");
          coords.push_back(expect_number());
        }
        expect(Tok::RBracket, "]");
      }
      expect(Tok::RParen, ")");
      GroupElement g(spec_, coords);
      const GroupElement gn = renormalized(g);
      if (max_coord_distance(g, gn) > 1e-6)
        fail(t.line, t.col, "group constant is not normalized");
      Val v;
      v.kind = Val::Kind::Group;
      v.group = gf_const(gn);
      return v;
    }
    fail(t.line, t.col, "unknown identifier '" + s + "'",
         {"pi", "coordinate", "r", "i/j/k", "d<coordinate>", "sin", "cos", "exp", "bump",
          "qexp", "conj", "pow", "bumpmap", "id", "const"});
  }

  /// "[a,b,c]" tuples, one per factor, juxtaposed for product groups.
  Val parse_algebra_literal(const Token& open) {
    std::vector<ScalarField> ch(static_cast<size_t>(spec_->algebra_dim()), sf_num(0.0));
    for (size_t f = 0; f < spec_->factors.size(); ++f) {
      if (f > 0) expect(Tok::LBracket, "[");
      const int d = spec_->factors[f] == Factor::Su2 ? 3 : 1;
      const int o = spec_->algebra_offset(f);
      for (int c = 0; c < d; ++c) {
        if (c) expect(Tok::Comma, ",");
        Val e = parse_expr(0);
        require_scalar(e, open, "algebra tuple entry");
        ch[static_cast<size_t>(o + c)] = e.scalar;
      }
      expect(Tok::RBracket, "]");
    }
    Val v;
    v.kind = Val::Kind::Algebra;
    v.algebra = std::move(ch);
    return v;
  }

  void require_scalar(const Val& v, const Token& at, const std::string& what) {
    if (v.kind != Val::Kind::Scalar)
      fail(at.line, at.col, what + " must be scalar-valued");
  }

  VForm algebra_form(const std::vector<ScalarField>& ch) const {
    std::vector<std::vector<ScalarField>> comps{ch};
    return form_from_components(n_, 0, ValueSpace::Lie, spec_, std::move(comps));
  }

  Val negate(const Token& at, Val v) {
    switch (v.kind) {
      case Val::Kind::Scalar:
        v.scalar = sf_neg(v.scalar);
        return v;
      case Val::Kind::Algebra:
        for (auto& c : v.algebra) c = sf_neg(c);
        return v;
      case Val::Kind::Form:
        for (auto& comp : v.form_comps)
          for (auto& c : comp) c = sf_neg(c);
        return v;
      case Val::Kind::Group:
        fail(at.line, at.col, "group values cannot be negated; use pow(u, -1) for inverses");
    }
    return v;
  }

  static const char* kind_name(Val::Kind k) {
    switch (k) {
      case Val::Kind::Scalar: return "scalar";
      case Val::Kind::Algebra: return "algebra";
      case Val::Kind::Group: return "group";
      case Val::Kind::Form: return "form";
    }
    return "?";
  }

  Val apply(const Token& op, Val a, Val b) {
    using K = Val::Kind;
    switch (op.kind) {
      case Tok::Plus:
      case Tok::Minus: {
        const bool minus = op.kind == Tok::Minus;
        if (a.kind == K::Scalar && b.kind == K::Scalar) {
          a.scalar = minus ? sf_sub(a.scalar, b.scalar) : sf_add(a.scalar, b.scalar);
          return a;
        }
        if (a.kind == K::Algebra && b.kind == K::Algebra) {
          for (size_t c = 0; c < a.algebra.size(); ++c)
            a.algebra[c] = minus ? sf_sub(a.algebra[c], b.algebra[c])
                                 : sf_add(a.algebra[c], b.algebra[c]);
          return a;
        }
        if (a.kind == K::Form && b.kind == K::Form) {
          if (a.form_degree != b.form_degree)
            fail(op.line, op.col, "cannot add forms of different degree");
          if (a.form_lie != b.form_lie)
            fail(op.line, op.col,
                 "cannot add an algebra-valued form to a real-valued form");
          for (size_t i = 0; i < a.form_comps.size(); ++i)
            for (size_t c = 0; c < a.form_comps[i].size(); ++c)
              a.form_comps[i][c] = minus ? sf_sub(a.form_comps[i][c], b.form_comps[i][c])
                                         : sf_add(a.form_comps[i][c], b.form_comps[i][c]);
          return a;
        }
        fail(op.line, op.col,
             std::string("cannot ") + (minus ? "subtract " : "add ") + kind_name(b.kind) +
                 " and " + kind_name(a.kind));
      }
      case Tok::Star:
        return multiply(op, std::move(a), std::move(b));
      case Tok::Slash: {
        if (a.kind == K::Scalar && b.kind == K::Scalar) {
          a.scalar = sf_div(a.scalar, b.scalar);
          return a;
        }
        fail(op.line, op.col, "division is defined for scalars only");
      }
      case Tok::Caret: {
        if (a.kind == K::Scalar && b.kind == K::Scalar) {
          // the exponent must be a literal integer
          const auto* num = dynamic_cast<const detail::NumExpr*>(b.scalar.get());
          if (num == nullptr)
            fail(op.line, op.col, "exponent must be an integer literal");
          const Jet2 j = b.scalar->eval(make_pt(n_));
          if (j.v != std::round(j.v))
            fail(op.line, op.col, "exponent must be an integer literal");
          a.scalar = sf_pow(a.scalar, static_cast<int>(std::round(j.v)));
          return a;
        }
        if (a.kind == K::Form && b.kind == K::Form) {
          if (a.form_lie || b.form_lie)
            fail(op.line, op.col,
                 "wedge with '^' is defined for real-valued forms; multiply an algebra "
                 "coefficient instead");
          return wedge_real(op, std::move(a), std::move(b));
        }
        fail(op.line, op.col, "'^' needs scalar^int or form^form");
      }
      default:
        fail(op.line, op.col, "unsupported operator");
    }
  }

  Val multiply(const Token& op, Val a, Val b) {
    using K = Val::Kind;
    if (a.kind == K::Scalar && b.kind == K::Scalar) {
      a.scalar = sf_mul(a.scalar, b.scalar);
      return a;
    }
    if (a.kind == K::Group && b.kind == K::Group) {
      a.group = gf_mul(a.group, b.group);
      return a;
    }
    if (a.kind == K::Scalar && b.kind == K::Algebra) return multiply(op, std::move(b), std::move(a));
    if (a.kind == K::Algebra && b.kind == K::Scalar) {
      for (auto& c : a.algebra) c = sf_mul(c, b.scalar);
      return a;
    }
    if (a.kind == K::Scalar && b.kind == K::Form) return multiply(op, std::move(b), std::move(a));
    if (a.kind == K::Form && b.kind == K::Scalar) {
      for (auto& comp : a.form_comps)
        for (auto& c : comp) c = sf_mul(c, b.scalar);
      return a;
    }
    if (a.kind == K::Algebra && b.kind == K::Form) return multiply(op, std::move(b), std::move(a));
    if (a.kind == K::Form && b.kind == K::Algebra) {
      if (a.form_lie)
        fail(op.line, op.col, "form already carries algebra values");
      Val v;
      v.kind = K::Form;
      v.form_degree = a.form_degree;
      v.form_lie = true;
      const size_t g = static_cast<size_t>(spec_->algebra_dim());
      v.form_comps.assign(a.form_comps.size(), std::vector<ScalarField>(g, sf_num(0.0)));
      for (size_t idx = 0; idx < a.form_comps.size(); ++idx)
        for (size_t c = 0; c < g; ++c)
          v.form_comps[idx][c] = sf_mul(b.algebra[c], a.form_comps[idx][0]);
      return v;
    }
    fail(op.line, op.col, std::string("cannot multiply ") + kind_name(a.kind) + " by " +
                              kind_name(b.kind));
  }

  Val wedge_real(const Token& op, Val a, Val b) {
    const int p = a.form_degree, q = b.form_degree;
    if (p + q > n_) fail(op.line, op.col, "wedge exceeds the torus dimension");
    Val v;
    v.kind = Val::Kind::Form;
    v.form_degree = p + q;
    v.form_lie = false;
    const auto& tab = detail::wedge_table(n_, p, q);
    v.form_comps.assign(tab.size(), {sf_num(0.0)});
    for (size_t kr = 0; kr < tab.size(); ++kr) {
      ScalarField acc = sf_num(0.0);
      for (const auto& sp : tab[kr]) {
        ScalarField term = sf_mul(a.form_comps[static_cast<size_t>(sp.ia)][0],
                                  b.form_comps[static_cast<size_t>(sp.ib)][0]);
        acc = sp.sign > 0 ? sf_add(acc, term) : sf_sub(acc, term);
      }
      v.form_comps[kr][0] = acc;
    }
    return v;
  }

  Lexer lex_;
  SpecPtr spec_;
  int n_;
  std::vector<std::string>* warnings_;
  int bump_arg_depth_ = 0;
};

}  // namespace parse_detail

inline std::string print_form(const parse_detail::Val& v, const SpecPtr& spec, int dim);

/// Parse one field expression; diagnostics instead of partial results.
inline std::variant<FieldEntry, Diagnostic> parse_field_expression(
    const std::string& text, const SpecPtr& spec, int dim,
    std::vector<std::string>* warnings = nullptr) {
  try {
    parse_detail::ExprParser p(text, spec, dim, warnings);
    parse_detail::Val v = p.parse_toplevel();
    FieldEntry e;
    e.source = text;
    switch (v.kind) {
      case parse_detail::Val::Kind::Scalar:
        e.kind = FieldEntry::Kind::Scalar;
        e.scalar = v.scalar;
        e.canonical = to_text(v.scalar);
        break;
      case parse_detail::Val::Kind::Algebra: {
        e.kind = FieldEntry::Kind::Algebra;
        std::vector<std::vector<ScalarField>> comps{v.algebra};
        e.form = form_from_components(dim, 0, ValueSpace::Lie, spec, std::move(comps));
        std::ostringstream os;
        size_t c = 0;
        for (size_t f = 0; f < spec->factors.size(); ++f) {
          const int d = spec->factors[f] == Factor::Su2 ? 3 : 1;
          os << "[";
          for (int k = 0; k < d; ++k) {
            if (k) os << ", ";
            v.algebra[c++]->print(os);
          }
          os << "]";
        }
        e.canonical = os.str();
        break;
      }
      case parse_detail::Val::Kind::Group:
        e.kind = FieldEntry::Kind::Group;
        e.group = v.group;
        e.canonical = to_text(v.group);
        break;
      case parse_detail::Val::Kind::Form: {
        e.kind = FieldEntry::Kind::Form;
        const ValueSpace vs = v.form_lie ? ValueSpace::Lie : ValueSpace::Real;
        std::vector<std::vector<ScalarField>> comps = v.form_comps;
        e.form = form_from_components(dim, v.form_degree, vs, spec, std::move(comps));
        e.canonical = print_form(v, spec, dim);
        break;
      }
    }
    return e;
  } catch (const parse_detail::ParseError& pe) {
    return pe.diag;
  } catch (const error& err) {
    return Diagnostic{1, 1, err.what(), {}};
  }
}

namespace parse_detail {

inline bool is_zero_literal(const ScalarField& f) {
  const auto* num = dynamic_cast<const flatcs::detail::NumExpr*>(f.get());
  if (!num) return false;
  std::ostringstream os;
  num->print(os);
  return os.str() == "0";
}

}  // namespace parse_detail

/// Canonical text of a parsed form: one term per nonzero component/channel.
inline std::string print_form(const parse_detail::Val& v, const SpecPtr& spec, int dim) {
  static const char* dnames[4] = {"dx", "dy", "dz", "dw"};
  static const char* basis[3] = {"i", "j", "k"};
  const auto& ks = multi_indices(dim, v.form_degree);
  std::ostringstream os;
  bool first = true;
  for (size_t kr = 0; kr < ks.size(); ++kr) {
    for (size_t c = 0; c < v.form_comps[kr].size(); ++c) {
      const ScalarField& coef = v.form_comps[kr][c];
      if (parse_detail::is_zero_literal(coef)) continue;
      if (!first) os << " + ";
      first = false;
      if (v.form_lie) {
        // locate the channel inside its factor block
        int ch = static_cast<int>(c);
        for (size_t f = 0; f < spec->factors.size(); ++f) {
          const int o = spec->algebra_offset(f);
          const int d = spec->factors[f] == Factor::Su2 ? 3 : 1;
          if (ch >= o && ch < o + d) {
            os << basis[ch - o] << "*";
            break;
          }
        }
      }
      os << "(";
      coef->print(os);
      os << ")";
      for (int t = 0; t < v.form_degree; ++t)
        os << "*" << dnames[ks[kr][static_cast<size_t>(t)]];
    }
  }
  if (first) {
    // all components zero: canonical zero form of this degree
    os << "(0)";
    for (int t = 0; t < v.form_degree; ++t) os << "*" << dnames[t];
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Scenario JSON envelope.

namespace envelope_detail {

inline void reject_unknown_keys(const Json& obj, const std::vector<std::string>& known,
                                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const std::string& k : known)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw error("unknown key '" + it.key() + "' in " + where);
  }
}

inline GroupElement group_element_from_json(const Json& j, const SpecPtr& spec) {
  if (!j.is_array() || j.size() != spec->factors.size())
    throw error("group element must be an array with one coordinate list per factor");
  std::vector<double> coords;
  for (size_t f = 0; f < spec->factors.size(); ++f) {
    const Json& blk = j[f];
    const size_t d = spec->factors[f] == Factor::Su2 ? 4 : 2;
    if (!blk.is_array() || blk.size() != d)
      throw error("factor " + std::to_string(f) + " needs " + std::to_string(d) +
                  " group coordinates");
    for (const auto& x : blk) coords.push_back(x.get<double>());
  }
  GroupElement g(spec, coords);
  const GroupElement gn = renormalized(g);
  if (max_coord_distance(g, gn) > 1e-6) throw error("group element is not normalized");
  return gn;
}

inline Json group_element_to_json(const GroupElement& g) {
  Json out = Json::array();
  for (size_t f = 0; f < g.spec->factors.size(); ++f) {
    const int o = g.spec->group_offset(f);
    const int d = g.spec->factors[f] == Factor::Su2 ? 4 : 2;
    Json blk = Json::array();
    for (int c = 0; c < d; ++c) blk.push_back(g.c[static_cast<size_t>(o + c)]);
    out.push_back(blk);
  }
  return out;
}

inline Json algebra_element_to_json(const AlgebraElement& x) {
  Json out = Json::array();
  for (size_t f = 0; f < x.spec->factors.size(); ++f) {
    const int o = x.spec->algebra_offset(f);
    const int d = x.spec->factors[f] == Factor::Su2 ? 3 : 1;
    Json blk = Json::array();
    for (int c = 0; c < d; ++c) blk.push_back(x.c[static_cast<size_t>(o + c)]);
    out.push_back(blk);
  }
  return out;
}

}  // namespace envelope_detail

/// Parse the scenario envelope; either a complete Scenario or a Diagnostic.
inline std::variant<Scenario, Diagnostic> parse_scenario(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    // map the byte offset to line/column
    int line = 1, col = 1;
    for (size_t i = 0; i < std::min(text.size(), static_cast<size_t>(e.byte)); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    return Diagnostic{line, col, std::string("scenario envelope: ") + e.what(), {}};
  }

  try {
    if (!doc.is_object()) throw error("scenario envelope must be a JSON object");
    envelope_detail::reject_unknown_keys(
        doc, {"id", "group", "dim", "grid", "holonomy", "fields", "checks"}, "scenario");

    Scenario sc;
    sc.id = doc.at("id").get<std::string>();

    const Json& grp = doc.at("group");
    envelope_detail::reject_unknown_keys(grp, {"factors", "scales"}, "group");
    std::vector<Factor> factors;
    for (const auto& f : grp.at("factors")) {
      const std::string name = f.get<std::string>();
      if (name == "u1") factors.push_back(Factor::U1);
      else if (name == "su2") factors.push_back(Factor::Su2);
      else throw error("unknown factor '" + name + "' (use u1 or su2)");
    }
    if (grp.contains("scales") && grp["scales"].is_string()) {
      if (grp["scales"].get<std::string>() != "normalized")
        throw error("scales must be an array or the string \"normalized\"");
      sc.spec = LieAlgebraSpec::normalized(factors);
    } else if (grp.contains("scales")) {
      std::vector<double> scales;
      for (const auto& s : grp["scales"]) scales.push_back(s.get<double>());
      sc.spec = LieAlgebraSpec::make(factors, scales);
    } else {
      sc.spec = LieAlgebraSpec::make(factors, std::vector<double>(factors.size(), 1.0));
    }

    sc.dim = doc.value("dim", 3);
    if (sc.dim < 1 || sc.dim > 4) throw error("dim must be 1..4");
    sc.grid = doc.value("grid", 16);
    if (sc.grid < 2) throw error("grid must be at least 2");

    if (doc.contains("holonomy")) {
      const Json& hj = doc["holonomy"];
      if (!hj.is_array() || hj.size() != 3)
        throw error("holonomy needs exactly three generators");
      HolonomyData hd;
      for (const auto& g : hj)
        hd.h.push_back(envelope_detail::group_element_from_json(g, sc.spec));
      if (hd.max_commutator_residual() > 1e-12)
        throw error("holonomy generators do not commute");
      sc.holonomy = canonicalize_toral(hd);
    }

    if (doc.contains("fields")) {
      for (auto it = doc["fields"].begin(); it != doc["fields"].end(); ++it) {
        auto parsed = parse_field_expression(it.value().get<std::string>(), sc.spec, sc.dim,
                                             &sc.warnings);
        if (std::holds_alternative<Diagnostic>(parsed)) {
          Diagnostic d = std::get<Diagnostic>(parsed);
          d.message = "field '" + it.key() + "': " + d.message;
          return d;
        }
        sc.fields.emplace(it.key(), std::get<FieldEntry>(parsed));
      }
    }

    if (doc.contains("checks")) {
      for (const auto& cj : doc["checks"]) {
        envelope_detail::reject_unknown_keys(
            cj, {"check", "use", "grid", "tol", "expect", "regular_value"}, "check");
        CheckRequest cr;
        cr.id = cj.at("check").get<std::string>();
        if (cj.contains("use"))
          for (auto it = cj["use"].begin(); it != cj["use"].end(); ++it)
            cr.use[it.key()] = it.value().get<std::string>();
        if (cj.contains("grid")) cr.grid = cj["grid"].get<int>();
        if (cj.contains("tol")) cr.tol = cj["tol"].get<double>();
        if (cj.contains("expect")) cr.expect = cj["expect"].get<double>();
        if (cj.contains("regular_value"))
          cr.regular_value =
              envelope_detail::group_element_from_json(cj["regular_value"], sc.spec);
        for (const auto& [role, name] : cr.use)
          if (sc.fields.find(name) == sc.fields.end())
            throw error("check '" + cr.id + "' refers to unknown field '" + name + "'");
        sc.checks.push_back(std::move(cr));
      }
    }
    return sc;
  } catch (const error& e) {
    return Diagnostic{1, 1, e.what(), {}};
  } catch (const Json::exception& e) {
    return Diagnostic{1, 1, std::string("scenario envelope: ") + e.what(), {}};
  }
}

inline std::variant<Scenario, Diagnostic> parse_scenario_json(const Json& doc) {
  return parse_scenario(doc.dump());
}

// Element serialization: JSON arrays of per-factor coordinate lists.
// Algebra: u(1) [t] (angle rate), su(2) [x_i, x_j, x_k].
// Group:   u(1) [re, im],         su(2) [w, x_i, x_j, x_k].

inline Json to_json(const GroupElement& g) {
  return envelope_detail::group_element_to_json(g);
}

inline Json to_json(const AlgebraElement& x) {
  return envelope_detail::algebra_element_to_json(x);
}

inline GroupElement group_element_from_json(const Json& j, const SpecPtr& spec) {
  return envelope_detail::group_element_from_json(j, spec);
}

inline AlgebraElement algebra_element_from_json(const Json& j, const SpecPtr& spec) {
  if (!j.is_array() || j.size() != spec->factors.size())
    throw error("algebra element must be an array with one coordinate list per factor");
  std::vector<double> coords;
  for (size_t f = 0; f < spec->factors.size(); ++f) {
    const Json& blk = j[f];
    const size_t d = spec->factors[f] == Factor::Su2 ? 3 : 1;
    if (!blk.is_array() || blk.size() != d)
      throw error("factor " + std::to_string(f) + " needs " + std::to_string(d) +
                  " algebra coordinates");
    for (const auto& x : blk) coords.push_back(x.get<double>());
  }
  return AlgebraElement(spec, std::move(coords));
}

}  // namespace flatcs
