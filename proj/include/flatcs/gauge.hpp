#pragma once

#include <vector>

#include "flatcs/forms.hpp"
#include "flatcs/group_field.hpp"
#include "flatcs/numeric.hpp"

namespace flatcs {

/// Connection data in a fixed (possibly holonomy-twisted) gauge: an
/// algebra-valued 1-form. Tangent directions to the space of connections are
/// the same kind of object.
using GaugeField = VForm;

struct CSContext {
  SpecPtr spec;
  int n = 3;
  GaugeField reference;  // A0
  int grid = 16;
  int threads = 1;

  CSContext(SpecPtr s, int dim, int g = 16, int th = 1)
      : spec(std::move(s)), n(dim), reference(zero_form(dim, 1, ValueSpace::Lie, spec)),
        grid(g), threads(th) {}

  CSContext(SpecPtr s, GaugeField a0, int g = 16, int th = 1)
      : spec(std::move(s)), n(a0.n), reference(std::move(a0)), grid(g), threads(th) {}
};

/// F = dA + (1/2)[A ^ A]; on an abelian block this is just dA.
inline VForm curvature(const GaugeField& A) {
  if (A.val != ValueSpace::Lie || A.degree != 1)
    throw error("curvature needs an algebra-valued 1-form");
  return exterior_derivative(A) + 0.5 * wedge_bracket(A, A);
}

/// Right action of a gauge transformation: u . A = Ad_{u^-1} A + u*theta.
inline GaugeField gauge_act(const GroupField& u, const GaugeField& A) {
  require_same_algebra(u->spec(), A.spec);
  return adjoint_transform(u, A, true) + mc_form(u, A.n);
}

/// cs(A) = <(F_A + F_A0) ^ (A - A0)> - (1/6) <(A - A0) ^ [(A - A0) ^ (A - A0)]>.
inline VForm cs_form(const GaugeField& A, const CSContext& ctx) {
  const VForm delta = A - ctx.reference;
  const VForm fsum = curvature(A) + curvature(ctx.reference);
  return wedge_inner(fsum, delta) -
         (1.0 / 6.0) * wedge_inner(delta, wedge_bracket(delta, delta));
}

/// Same 3-form through the path integral 2 int_0^1 <(A-A0) ^ F_{A0+t(A-A0)}> dt,
/// Gauss-Legendre in t. Cross-check route for cs_form; the integrand is
/// quadratic in t so any node count >= 2 is exact.
inline VForm cs_form_path_quadrature(const GaugeField& A, const CSContext& ctx,
                                     int t_nodes = 8) {
  const VForm delta = A - ctx.reference;
  std::vector<double> x, w;
  gauss_legendre(t_nodes, x, w);
  VForm acc = zero_form(A.n, 3, ValueSpace::Real, A.spec);
  for (int i = 0; i < t_nodes; ++i) {
    const double t = 0.5 * (x[static_cast<size_t>(i)] + 1.0);
    const double wt = 0.5 * w[static_cast<size_t>(i)];
    const VForm At = ctx.reference + t * delta;
    acc = acc + (2.0 * wt) * wedge_inner(delta, curvature(At));
  }
  return acc;
}

inline double cs_functional(const GaugeField& A, const CSContext& ctx) {
  if (ctx.n != 3 || A.n != 3) throw error("the functional is defined on T^3");
  return integrate(cs_form(A, ctx), ctx.grid, ctx.threads);
}

/// Directional derivative pairing 2 int <F_A ^ a>.
inline double cs_gradient_pairing(const GaugeField& A, const GaugeField& a,
                                  const CSContext& ctx) {
  if (ctx.n != 3) throw error("the functional is defined on T^3");
  return 2.0 * integrate(wedge_inner(curvature(A), a), ctx.grid, ctx.threads);
}

/// Central finite difference of the functional along a; the independent
/// oracle for the pairing.
inline double cs_directional_fd(const GaugeField& A, const GaugeField& a,
                                const CSContext& ctx, double t = 1e-4) {
  const double up = cs_functional(A + t * a, ctx);
  const double dn = cs_functional(A + (-t) * a, ctx);
  return (up - dn) / (2.0 * t);
}

/// <F ^ F> on T^4.
inline VForm chern_weil_4form(const GaugeField& A, const CSContext& ctx) {
  if (ctx.n != 4 || A.n != 4) throw error("the 4-form lives on T^4");
  const VForm F = curvature(A);
  return wedge_inner(F, F);
}

// ---------------------------------------------------------------------------
// Identity residuals. Each evaluates both sides on the sample set, on every
// strictly increasing coordinate frame, and returns max |LHS - RHS|.

inline double residual_bianchi(const GaugeField& A, const std::vector<Pt>& pts) {
  return max_pointwise_norm(twisted_derivative(A, curvature(A)), pts);
}

/// d(<A ^ F> - (1/6)<A ^ [A ^ A]>) = <F ^ F> on T^4.
inline double residual_cs3_exactness(const GaugeField& A, const std::vector<Pt>& pts) {
  if (A.n != 4) throw error("this identity is checked on T^4");
  const VForm F = curvature(A);
  const VForm alpha =
      wedge_inner(A, F) - (1.0 / 6.0) * wedge_inner(A, wedge_bracket(A, A));
  return max_pointwise_residual(exterior_derivative(alpha), wedge_inner(F, F), pts);
}

/// d cs(A) = <F_A ^ F_A> - <F_A0 ^ F_A0> on T^4.
inline double residual_transgression(const GaugeField& A, const CSContext& ctx,
                                     const std::vector<Pt>& pts) {
  if (A.n != 4) throw error("this identity is checked on T^4");
  const VForm F = curvature(A);
  const VForm F0 = curvature(ctx.reference);
  return max_pointwise_residual(exterior_derivative(cs_form(A, ctx)),
                                wedge_inner(F, F) - wedge_inner(F0, F0), pts);
}

/// cs(u.A) - cs(A) - u*Theta = d <Ad_{u^-1} A ^ u*theta>, with a flat zero
/// reference. Holds verbatim for twisted fields as well.
inline double residual_gauge_change(const GaugeField& A, const GroupField& u,
                                    const SpecPtr& spec, const std::vector<Pt>& pts) {
  CSContext flat_ref(spec, A.n);
  const VForm lhs = cs_form(gauge_act(u, A), flat_ref) - cs_form(A, flat_ref) -
                    mc_three_form(u, spec, A.n);
  const VForm rhs = exterior_derivative(
      wedge_inner(adjoint_transform(u, A, true), mc_form(u, A.n)));
  return max_pointwise_residual(lhs, rhs, pts);
}

/// Curvature transforms by conjugation under the gauge action.
inline double residual_curvature_equivariance(const GaugeField& A, const GroupField& u,
                                              const std::vector<Pt>& pts) {
  return max_pointwise_residual(curvature(gauge_act(u, A)),
                                adjoint_transform(u, curvature(A), true), pts);
}

/// F_{A+a} = F_A + d_A a + (1/2)[a ^ a].
inline double residual_variation(const GaugeField& A, const GaugeField& a,
                                 const std::vector<Pt>& pts) {
  const VForm lhs = curvature(A + a);
  const VForm rhs = curvature(A) + twisted_derivative(A, a) + 0.5 * wedge_bracket(a, a);
  return max_pointwise_residual(lhs, rhs, pts);
}

/// d/dt|_0 (exp(tX))*theta = dX, by central finite difference in t.
inline double residual_mc_velocity(const VForm& X, const std::vector<Pt>& pts,
                                   double t = 1e-5) {
  if (X.degree != 0 || X.val != ValueSpace::Lie)
    throw error("velocity check needs an algebra-valued 0-form");
  const GroupField up = gf_qexp(X.spec, t * X);
  const GroupField dn = gf_qexp(X.spec, (-t) * X);
  const VForm fd = (1.0 / (2.0 * t)) * (mc_form(up, X.n) - mc_form(dn, X.n));
  return max_pointwise_residual(fd, exterior_derivative(X), pts);
}

/// (u v)*theta = Ad_{v^-1}(u*theta) + v*theta.
inline double residual_cocycle(const GroupField& u, const GroupField& v, int n,
                               const std::vector<Pt>& pts) {
  const VForm lhs = mc_form(gf_mul(u, v), n);
  const VForm rhs = adjoint_transform(v, mc_form(u, n), true) + mc_form(v, n);
  return max_pointwise_residual(lhs, rhs, pts);
}

inline double residual_cw_closed(const GaugeField& A, const CSContext& ctx,
                                 const std::vector<Pt>& pts) {
  return max_pointwise_norm(exterior_derivative(chern_weil_4form(A, ctx)), pts);
}

inline double residual_cw_gauge_invariance(const GaugeField& A, const GroupField& u,
                                           const CSContext& ctx,
                                           const std::vector<Pt>& pts) {
  return max_pointwise_residual(chern_weil_4form(A, ctx),
                                chern_weil_4form(gauge_act(u, A), ctx), pts);
}

}  // namespace flatcs
