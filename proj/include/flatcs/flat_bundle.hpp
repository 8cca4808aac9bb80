#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "flatcs/degree.hpp"
#include "flatcs/gauge.hpp"
#include "flatcs/group_field.hpp"
#include "flatcs/lie.hpp"
#include "flatcs/scalar_field.hpp"

namespace flatcs {

// A flat bundle over T^3 is presented by three commuting holonomies. Fields
// live on R^3 and satisfy a twisting law across the period lattice:
//   algebra-valued:      a(x + 2 pi e_k) = Ad_{h_k^-1} a(x)
//   gauge transformation: u(x + 2 pi e_k) = h_k^-1 u(x) h_k
// The sign convention matches the quotient presentation
// (x + 2 pi e_k, g) ~ (x, h_k^-1 g).

struct HolonomyData {
  std::vector<GroupElement> h;  // one generator per cycle, all commuting

  double max_commutator_residual() const {
    double m = 0.0;
    for (size_t a = 0; a < h.size(); ++a)
      for (size_t b = a + 1; b < h.size(); ++b)
        m = std::max(m, commutator_residual(h[a], h[b]));
    return m;
  }

  const SpecPtr& spec() const { return h.at(0).spec; }
};

inline HolonomyData identity_holonomy(const SpecPtr& spec, int cycles = 3) {
  HolonomyData hd;
  for (int k = 0; k < cycles; ++k) hd.h.emplace_back(spec);
  return hd;
}

namespace detail {

/// Unit quaternion rotating the unit 3-vector v onto the first axis.
inline std::array<double, 4> align_to_first_axis(const std::array<double, 3>& v) {
  const double c = v[0];
  const double ax_j = v[2], ax_k = -v[1];  // v x e1
  const double s = std::sqrt(ax_j * ax_j + ax_k * ax_k);
  if (s < 1e-14) {
    if (c > 0.0) return {1, 0, 0, 0};
    return {0, 0, 1, 0};  // rotate by pi about the second axis
  }
  const double angle = std::atan2(s, c);
  const double ch = std::cos(angle / 2), sh = std::sin(angle / 2);
  return {ch, 0.0, sh * ax_j / s, sh * ax_k / s};
}

}  // namespace detail

/// Conjugates all generators into the distinguished maximal torus (the
/// i-circle of each su(2) factor). Commuting tuples in these groups always
/// admit this; anything else is rejected.
inline HolonomyData canonicalize_toral(const HolonomyData& in, double tol = 1e-9) {
  if (in.max_commutator_residual() > 1e-12) throw error("holonomies do not commute");
  const SpecPtr spec = in.spec();
  HolonomyData out = in;
  for (size_t f = 0; f < spec->factors.size(); ++f) {
    if (spec->factors[f] != Factor::Su2) continue;
    const int o = spec->group_offset(f);
    std::array<double, 4> w{1, 0, 0, 0};
    for (const GroupElement& g : in.h) {
      const double vx = g.c[static_cast<size_t>(o) + 1];
      const double vy = g.c[static_cast<size_t>(o) + 2];
      const double vz = g.c[static_cast<size_t>(o) + 3];
      const double vn = std::sqrt(vx * vx + vy * vy + vz * vz);
      if (vn > 1e-8) {
        w = detail::align_to_first_axis({vx / vn, vy / vn, vz / vn});
        break;
      }
    }
    const std::array<double, 4> wi{w[0], -w[1], -w[2], -w[3]};
    for (GroupElement& g : out.h) {
      double q[4] = {g.c[static_cast<size_t>(o)], g.c[static_cast<size_t>(o) + 1],
                     g.c[static_cast<size_t>(o) + 2], g.c[static_cast<size_t>(o) + 3]};
      double t[4], s[4];
      quat_mul(w.data(), q, t);
      quat_mul(t, wi.data(), s);
      if (std::abs(s[2]) > tol || std::abs(s[3]) > tol)
        throw error("holonomy not in a common maximal torus");
      g.c[static_cast<size_t>(o)] = s[0];
      g.c[static_cast<size_t>(o) + 1] = s[1];
      g.c[static_cast<size_t>(o) + 2] = 0.0;
      g.c[static_cast<size_t>(o) + 3] = 0.0;
      g = renormalized(g);
    }
  }
  return out;
}

/// Torus angle of generator k in factor f (canonical toral form assumed);
/// for su(2) this is the angle about the distinguished i-axis.
inline double toral_angle(const HolonomyData& hd, size_t factor, size_t k) {
  const int o = hd.spec()->group_offset(factor);
  const GroupElement& g = hd.h.at(k);
  return std::atan2(g.c[static_cast<size_t>(o) + 1], g.c[static_cast<size_t>(o)]);
}

/// Frequency shift of the off-torus (j,k) channel of factor f:
/// theta_k = -phi_k / pi reduced to (-1/2, 1/2].
inline std::array<double, 3> twist_shift(const HolonomyData& hd, size_t factor) {
  std::array<double, 3> th{0, 0, 0};
  for (size_t k = 0; k < hd.h.size(); ++k) {
    double t = -toral_angle(hd, factor, k) / kPi;
    t -= std::round(t);
    if (t <= -0.5) t += 1.0;
    th[k] = t;
  }
  return th;
}

struct TwistedGaugeField {
  VForm form;
  HolonomyData hol;
};

struct TwistedGroupField {
  GroupField u;
  HolonomyData hol;
};

struct TwistedAlgebraField {
  VForm form;  // degree 0
  HolonomyData hol;
};

// --- twisting-law validation -------------------------------------------------

namespace detail {

inline std::vector<Pt> face_points(int n, int axis, int grid, int n_random,
                                   std::uint32_t seed) {
  std::vector<Pt> pts;
  const double step = kTwoPi / grid;
  long total = 1;
  for (int d = 0; d < n - 1; ++d) total *= grid;
  for (long flat = 0; flat < total; ++flat) {
    long rem = flat;
    Pt p = make_pt(n);
    for (int d = n - 1; d >= 0; --d) {
      if (d == axis) continue;
      p[d] = step * static_cast<double>(rem % grid);
      rem /= grid;
    }
    p[axis] = 0.0;
    pts.push_back(p);
  }
  Rng rng(seed);
  for (int i = 0; i < n_random; ++i) {
    Pt p = make_pt(n);
    for (int d = 0; d < n; ++d) p[d] = d == axis ? 0.0 : rng.uniform(0.0, kTwoPi);
    pts.push_back(p);
  }
  return pts;
}

inline AlgebraElement channel_values(const SpecPtr& spec, const std::vector<Jet2>& ch) {
  std::vector<double> c;
  c.reserve(ch.size());
  for (const Jet2& j : ch) c.push_back(j.v);
  return AlgebraElement(spec, std::move(c));
}

}  // namespace detail

/// Max residual of a(x + 2 pi e_k) = Ad_{h_k^-1} a(x) over boundary samples.
inline double validate_twisting(const VForm& a, const HolonomyData& hol, int grid = 5,
                                int n_random = 8) {
  if (a.val != ValueSpace::Lie) throw error("twisting validation needs algebra values");
  double worst = 0.0;
  for (size_t k = 0; k < hol.h.size(); ++k) {
    const GroupElement hinv = inverse(hol.h[k]);
    for (const Pt& p : detail::face_points(a.n, static_cast<int>(k), grid, n_random,
                                           900 + static_cast<std::uint32_t>(k))) {
      Pt shifted = p;
      shifted[static_cast<int>(k)] += kTwoPi;
      const FormValue here = a.eval(p);
      const FormValue there = a.eval(shifted);
      for (size_t comp = 0; comp < here.size(); ++comp) {
        const AlgebraElement law =
            adjoint(hinv, detail::channel_values(a.spec, here[comp]));
        for (size_t c = 0; c < law.c.size(); ++c)
          worst = std::max(worst, std::abs(there[comp][c].v - law.c[c]));
      }
    }
  }
  return worst;
}

/// Max residual of u(x + 2 pi e_k) = h_k^-1 u(x) h_k over boundary samples.
inline double validate_twisting(const GroupField& u, const HolonomyData& hol, int grid = 5,
                                int n_random = 8) {
  double worst = 0.0;
  for (size_t k = 0; k < hol.h.size(); ++k) {
    const GroupElement hk = hol.h[k];
    const GroupElement hinv = inverse(hk);
    for (const Pt& p : detail::face_points(3, static_cast<int>(k), grid, n_random,
                                           910 + static_cast<std::uint32_t>(k))) {
      Pt shifted = p;
      shifted[static_cast<int>(k)] += kTwoPi;
      const GroupElement lhs = group_value(u, shifted);
      const GroupElement rhs = (hinv * group_value(u, p)) * hk;
      worst = std::max(worst, max_coord_distance(lhs, rhs));
    }
  }
  return worst;
}

/// Max boundary residual of strict periodicity of a real-valued form.
inline double validate_periodicity(const VForm& w, int grid = 5, int n_random = 8) {
  double worst = 0.0;
  for (int k = 0; k < w.n; ++k) {
    for (const Pt& p :
         detail::face_points(w.n, k, grid, n_random, 920 + static_cast<std::uint32_t>(k))) {
      Pt shifted = p;
      shifted[k] += kTwoPi;
      const FormValue here = w.eval(p);
      const FormValue there = w.eval(shifted);
      for (size_t comp = 0; comp < here.size(); ++comp)
        for (size_t c = 0; c < here[comp].size(); ++c)
          worst = std::max(worst, std::abs(here[comp][c].v - there[comp][c].v));
    }
  }
  return worst;
}

// --- twisted field constructors ----------------------------------------------

/// Random periodic trig polynomial as an expression tree; frequencies up to
/// max_freq per axis, `terms` summands.
inline ScalarField random_periodic_scalar(int n, Rng& rng, int max_freq, int terms,
                                          double amp) {
  ScalarField acc = sf_num(0.0);
  for (int t = 0; t < terms; ++t) {
    ScalarField arg = sf_num(0.0);
    for (int d = 0; d < n; ++d) {
      const int m = rng.index(2 * max_freq + 1) - max_freq;
      if (m != 0) arg = sf_add(arg, sf_mul(sf_num(static_cast<double>(m)), sf_coord(d)));
    }
    acc = sf_add(acc, sf_mul(sf_num(rng.uniform(-amp, amp)),
                             rng.index(2) == 0 ? sf_sin(arg) : sf_cos(arg)));
  }
  return acc;
}

struct TwistedFieldRecipe {
  std::uint32_t seed = 1;
  int max_freq = 1;
  int terms = 2;
  double amplitude = 0.4;
};

namespace detail {

inline ScalarField linear_phase(const std::array<double, 3>& th) {
  ScalarField arg = sf_num(0.0);
  for (int d = 0; d < 3; ++d)
    if (th[static_cast<size_t>(d)] != 0.0)
      arg = sf_add(arg, sf_mul(sf_num(th[static_cast<size_t>(d)]), sf_coord(d)));
  return arg;
}

/// (re, im) of e^{i theta.x} (pj + i pk): the twisted off-torus channel pair.
inline std::pair<ScalarField, ScalarField> twisted_pair(const std::array<double, 3>& th,
                                                        ScalarField pj, ScalarField pk) {
  const ScalarField arg = linear_phase(th);
  const ScalarField c = sf_cos(arg), s = sf_sin(arg);
  ScalarField re = sf_sub(sf_mul(c, pj), sf_mul(s, pk));
  ScalarField im = sf_add(sf_mul(s, pj), sf_mul(c, pk));
  return {std::move(re), std::move(im)};
}

/// Channel expressions of one twisted algebra value: periodic toral channels,
/// frequency-shifted off-torus channel pairs.
inline std::vector<ScalarField> twisted_channels(const SpecPtr& spec, const HolonomyData& hol,
                                                 Rng& rng, const TwistedFieldRecipe& rec) {
  std::vector<ScalarField> ch(static_cast<size_t>(spec->algebra_dim()));
  for (size_t f = 0; f < spec->factors.size(); ++f) {
    const int ao = spec->algebra_offset(f);
    if (spec->factors[f] == Factor::Su2) {
      const auto th = twist_shift(hol, f);
      ch[static_cast<size_t>(ao)] =
          random_periodic_scalar(3, rng, rec.max_freq, rec.terms, rec.amplitude);
      auto [re, im] = twisted_pair(
          th, random_periodic_scalar(3, rng, rec.max_freq, rec.terms, rec.amplitude),
          random_periodic_scalar(3, rng, rec.max_freq, rec.terms, rec.amplitude));
      ch[static_cast<size_t>(ao) + 1] = re;
      ch[static_cast<size_t>(ao) + 2] = im;
    } else {
      ch[static_cast<size_t>(ao)] =
          random_periodic_scalar(3, rng, rec.max_freq, rec.terms, rec.amplitude);
    }
  }
  return ch;
}

}  // namespace detail

/// Algebra-valued 0-form twisted for the given (toral) holonomy.
inline TwistedAlgebraField make_twisted_algebra_field(const SpecPtr& spec,
                                                      const HolonomyData& hol_in,
                                                      const TwistedFieldRecipe& rec = {}) {
  const HolonomyData hol = canonicalize_toral(hol_in);
  Rng rng(rec.seed);
  std::vector<std::vector<ScalarField>> comps{detail::twisted_channels(spec, hol, rng, rec)};
  VForm form = form_from_components(3, 0, ValueSpace::Lie, spec, std::move(comps));
  return TwistedAlgebraField{std::move(form), hol};
}

/// Twisted gauge field: one twisted algebra value per coordinate axis.
inline TwistedGaugeField make_twisted_gauge_field(const SpecPtr& spec,
                                                  const HolonomyData& hol_in,
                                                  const TwistedFieldRecipe& rec = {}) {
  const HolonomyData hol = canonicalize_toral(hol_in);
  Rng rng(rec.seed);
  std::vector<std::vector<ScalarField>> comps;
  for (int axis = 0; axis < 3; ++axis)
    comps.push_back(detail::twisted_channels(spec, hol, rng, rec));
  VForm form = form_from_components(3, 1, ValueSpace::Lie, spec, std::move(comps));
  return TwistedGaugeField{std::move(form), hol};
}

/// Constant connection along the distinguished torus: c * i dx_axis. Flat,
/// correctly twisted for any toral holonomy, and holonomy-shifting.
inline VForm toral_constant_gauge_field(const SpecPtr& spec, int axis, double c) {
  int target = -1;
  for (size_t f = 0; f < spec->factors.size(); ++f)
    if (spec->factors[f] == Factor::Su2) {
      target = spec->algebra_offset(f);
      break;
    }
  if (target < 0) throw error("toral constant field needs an su(2) factor");
  std::vector<std::vector<ScalarField>> comps(3);
  for (int a = 0; a < 3; ++a)
    for (int i = 0; i < spec->algebra_dim(); ++i)
      comps[static_cast<size_t>(a)].push_back(
          (a == axis && i == target) ? sf_num(c) : sf_num(0.0));
  return form_from_components(3, 1, ValueSpace::Lie, spec, std::move(comps));
}

// --- flat context and the twisted degree --------------------------------------

struct FlatContext {
  SpecPtr spec;            // normalized scales for degree statements
  HolonomyData hol;        // canonical toral presentation
  VForm flat_reference;    // a flat connection in the twisted gauge; zero by default
  int grid = 32;
  int threads = 1;

  FlatContext(SpecPtr s, HolonomyData h, int g = 32, int th = 1)
      : spec(std::move(s)), hol(canonicalize_toral(h)),
        flat_reference(zero_form(3, 1, ValueSpace::Lie, spec)), grid(g), threads(th) {}

  FlatContext(SpecPtr s, HolonomyData h, VForm reference, int g = 32, int th = 1)
      : spec(std::move(s)), hol(canonicalize_toral(h)), flat_reference(std::move(reference)),
        grid(g), threads(th) {
    const std::vector<Pt> pts = sample_points(3, 4, 20, 31);
    if (max_pointwise_norm(curvature(flat_reference), pts) > 1e-10)
      throw error("flat reference has curvature");
    if (validate_twisting(flat_reference, hol) > 1e-8)
      throw error("flat reference breaks the twisting law");
  }
};

/// Path-ordered transport of A around the coordinate cycle `axis` based at
/// the origin, times the clutching holonomy. Midpoint product with `steps`
/// factors; exact for the zero and constant toral connections.
inline GroupElement holonomy_around_cycle(const VForm& A, const HolonomyData& hol, int axis,
                                          int steps = 256) {
  const double dt = kTwoPi / steps;
  GroupElement transport(A.spec);
  for (int s = steps - 1; s >= 0; --s) {
    Pt p = make_pt(A.n);
    p[axis] = dt * (s + 0.5);
    const FormValue v = A.eval(p);
    // rank of the singleton multi-index {axis} is axis itself
    AlgebraElement x = detail::channel_values(A.spec, v[static_cast<size_t>(axis)]);
    transport = transport * exp_map((-dt) * x);
  }
  return hol.h.at(static_cast<size_t>(axis)) * transport;
}

/// Integrand of the twisted degree: the pullback of the canonical 3-form
/// through the reference flat structure. With a zero reference this is the
/// plain pullback u*Theta; a nonzero flat reference shifts the structure
/// form by Ad_{u^-1} A' - A' before the cubic contraction.
inline VForm twisted_degree_form(const TwistedGroupField& u, const FlatContext& ctx) {
  VForm beta = mc_form(u.u, 3);
  beta.spec = ctx.spec;
  const bool zero_ref = [&] {
    const std::vector<Pt> probe = sample_points(3, 2, 4, 32);
    return max_pointwise_norm(ctx.flat_reference, probe) == 0.0;
  }();
  if (!zero_ref) {
    VForm ref = ctx.flat_reference;
    ref.spec = ctx.spec;
    beta = beta + (adjoint_transform(u.u, ref, true) - ref);
  }
  return (-1.0 / 6.0) * wedge_inner(beta, wedge_bracket(beta, beta));
}

/// Degree of a twisted gauge transformation. The integrand is strictly
/// periodic although u itself is only twisted-periodic; this is validated
/// numerically along with the twisting law of u.
inline double degree_flat(const TwistedGroupField& u, const FlatContext& ctx) {
  require_normalized_scales(*ctx.spec);
  if (validate_twisting(u.u, ctx.hol) > 1e-8) throw error("twisting mismatch");
  const VForm w = twisted_degree_form(u, ctx);
  if (validate_periodicity(w) > 1e-9)
    throw error("degree integrand failed the periodicity check");
  return integrate(w, ctx.grid, ctx.threads);
}

/// Both sides of the functional-change statement on a flat bundle, plus the
/// pointwise residual of the underlying 3-form identity.
struct DegreeComparison {
  double cs_change;
  double degree;
  double difference;
  double identity_residual;
};

inline DegreeComparison cs_change_vs_degree(const TwistedGaugeField& A,
                                            const TwistedGroupField& u,
                                            const FlatContext& ctx) {
  if (validate_twisting(A.form, ctx.hol) > 1e-8) throw error("twisting mismatch");
  CSContext cs_ctx(ctx.spec, 3, ctx.grid, ctx.threads);
  VForm Af = A.form;
  Af.spec = ctx.spec;
  const double change =
      cs_functional(gauge_act(u.u, Af), cs_ctx) - cs_functional(Af, cs_ctx);
  FlatContext zero_ref(ctx.spec, ctx.hol, ctx.grid, ctx.threads);
  const double deg = degree_flat(u, zero_ref);
  const std::vector<Pt> pts = sample_points(3, 4, 40, 33);
  const double ident = residual_gauge_change(Af, u.u, ctx.spec, pts);
  return DegreeComparison{change, deg, std::abs(change - deg), ident};
}

}  // namespace flatcs
