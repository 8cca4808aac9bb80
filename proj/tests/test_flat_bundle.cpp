#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "flatcs/flat_bundle.hpp"
#include "test_util.hpp"

using namespace flatcs;
using namespace flatcs_test;

namespace {

const auto su2n = LieAlgebraSpec::normalized({Factor::Su2});

HolonomyData toral_holonomy(const SpecPtr& spec, double p1, double p2 = 0.0, double p3 = 0.0) {
  HolonomyData hd;
  hd.h.push_back(exp_map(basis_element(spec, 0, 0, p1)));
  hd.h.push_back(exp_map(basis_element(spec, 0, 0, p2)));
  hd.h.push_back(exp_map(basis_element(spec, 0, 0, p3)));
  return hd;
}

}  // namespace

TEST_CASE("holonomy canonicalization") {
  // rotate a toral tuple off-axis, canonicalize back
  const GroupElement w = exp_map(basis_element(su2n, 0, 1, 0.6));
  HolonomyData rotated;
  for (double phi : {0.7, -0.2, 1.1}) {
    const GroupElement t = exp_map(basis_element(su2n, 0, 0, phi));
    rotated.h.push_back((w * t) * inverse(w));
  }
  CHECK(rotated.max_commutator_residual() < 1e-14);
  const HolonomyData canon = canonicalize_toral(rotated);
  const double phis[3] = {0.7, -0.2, 1.1};
  for (size_t k = 0; k < 3; ++k) {
    CHECK(std::abs(canon.h[k].c[2]) < 1e-12);
    CHECK(std::abs(canon.h[k].c[3]) < 1e-12);
    CHECK(std::abs(std::abs(toral_angle(canon, 0, k)) - std::abs(phis[k])) < 1e-12);
  }

  HolonomyData bad;
  bad.h.push_back(exp_map(basis_element(su2n, 0, 0, 0.4)));
  bad.h.push_back(exp_map(basis_element(su2n, 0, 1, 0.4)));
  bad.h.push_back(GroupElement(su2n));
  CHECK_THROWS_WITH(canonicalize_toral(bad), "holonomies do not commute");
}

TEST_CASE("twist shifts") {
  const HolonomyData hd = toral_holonomy(su2n, kPi / 2.0);
  // -phi/pi = -1/2 lands on the boundary of the reduction interval (-1/2, 1/2]
  const auto th = twist_shift(hd, 0);
  CHECK(th[0] == Catch::Approx(0.5));
  CHECK(th[1] == 0.0);
  CHECK(th[2] == 0.0);
}

TEST_CASE("adjoint of a toral holonomy rotates the off-torus plane by twice the angle") {
  const double phi = 0.77;
  const GroupElement h = exp_map(basis_element(su2n, 0, 0, phi));
  const AlgebraElement j = basis_element(su2n, 0, 1);
  const AlgebraElement adj = adjoint(h, j);
  CHECK(adj.c[1] == Catch::Approx(std::cos(2 * phi)).margin(1e-14));
  CHECK(adj.c[2] == Catch::Approx(std::sin(2 * phi)).margin(1e-14));
}

TEST_CASE("twisting-law validation") {
  // strictly periodic field against the trivial holonomy
  const HolonomyData triv = identity_holonomy(su2n);
  Rng rng(81);
  const VForm periodic = random_lie_form(su2n, 3, 0, rng);
  CHECK(validate_twisting(periodic, triv) < 1e-12);

  // constructed twisted field against its own holonomy
  const HolonomyData hd = toral_holonomy(su2n, kPi / 2.0, 0.8);
  const TwistedAlgebraField a = make_twisted_algebra_field(su2n, hd, {5, 1, 2, 0.5});
  CHECK(validate_twisting(a.form, hd) < 1e-10);

  // the exponential inherits the conjugation law
  const GroupField u = gf_qexp(su2n, a.form);
  CHECK(validate_twisting(u, hd) < 1e-10);

  // antiperiodicity of the off-torus channels across the first cycle
  Pt p = make_pt(3, 0.0, 1.3, 2.1);
  Pt q = p;
  q[0] += kTwoPi;
  const FormValue fp = a.form.eval(p);
  const FormValue fq = a.form.eval(q);
  CHECK(fq[0][1].v == Catch::Approx(-fp[0][1].v).margin(1e-12));
  CHECK(fq[0][2].v == Catch::Approx(-fp[0][2].v).margin(1e-12));
  CHECK(fq[0][0].v == Catch::Approx(fp[0][0].v).margin(1e-12));

  // deliberately broken: same field judged against the wrong holonomy
  CHECK(validate_twisting(a.form, triv) > 1e-2);
}

TEST_CASE("derivative of a twisted form is twisted") {
  const HolonomyData hd = toral_holonomy(su2n, kPi / 2.0, -0.4, 0.9);
  const TwistedGaugeField A = make_twisted_gauge_field(su2n, hd, {6, 1, 2, 0.4});
  CHECK(validate_twisting(A.form, hd) < 1e-10);
  CHECK(validate_twisting(exterior_derivative(A.form), hd) < 1e-9);
  CHECK(validate_twisting(curvature(A.form), hd) < 1e-9);
}

TEST_CASE("cycle holonomy of reference connections") {
  const HolonomyData hd = toral_holonomy(su2n, 1.2, 0.0, -0.5);
  const VForm zero = zero_form(3, 1, ValueSpace::Lie, su2n);
  for (int k = 0; k < 3; ++k) {
    const GroupElement g = holonomy_around_cycle(zero, hd, k, 256);
    CHECK(max_coord_distance(g, hd.h[static_cast<size_t>(k)]) < 1e-6);
  }

  // constant toral connection shifts the first-cycle holonomy by exp(-2 pi c i)
  const double c = 0.35;
  const VForm Ac = toral_constant_gauge_field(su2n, 0, c);
  const GroupElement g1 = holonomy_around_cycle(Ac, hd, 0, 256);
  const GroupElement expect =
      hd.h[0] * exp_map(basis_element(su2n, 0, 0, -kTwoPi * c));
  CHECK(max_coord_distance(g1, expect) < 1e-6);
}

TEST_CASE("flat context validation") {
  const HolonomyData hd = toral_holonomy(su2n, kPi / 2.0);
  CHECK_NOTHROW(FlatContext(su2n, hd, toral_constant_gauge_field(su2n, 0, 0.35), 24, 2));

  Rng rng(82);
  const VForm curved = random_lie_form(su2n, 3, 1, rng, 0.5);
  CHECK_THROWS_WITH(FlatContext(su2n, hd, curved, 24, 2),
                    "flat reference has curvature");
}

TEST_CASE("twisted degree reduces to the periodic one for trivial holonomy") {
  const HolonomyData triv = identity_holonomy(su2n);
  FlatContext ctx(su2n, triv, 32, 2);
  const GroupField bump = gf_bumpmap(su2n, 1.0, 3.0);
  const double dflat = degree_flat({bump, triv}, ctx);
  const double dtriv = degree_trivial(bump, su2n, 32, 2);
  CHECK(std::abs(dflat - dtriv) < 1e-12);
  CHECK(std::abs(dflat - 1.0) < 1e-6);
}

TEST_CASE("twisted degree basics") {
  const HolonomyData hd = toral_holonomy(su2n, kPi / 2.0, 0.0, 0.8);
  FlatContext ctx(su2n, hd, 24, 2);

  // constants in the centralizer of the holonomy are twisted fields of degree 0
  const GroupField c = gf_const(exp_map(basis_element(su2n, 0, 0, 0.9)));
  CHECK(std::abs(degree_flat({c, hd}, ctx)) < 1e-12);

  // exponentials of twisted fields are null-homotopic: degree 0, integral form
  const TwistedAlgebraField a = make_twisted_algebra_field(su2n, hd, {7, 1, 2, 0.5});
  const GroupField u = gf_qexp(su2n, a.form);
  const double d0 = degree_flat({u, hd}, ctx);
  CHECK(std::abs(d0) < 1e-6);

  // gluing a bump on top shifts the degree by one
  const GroupField u1 = gf_mul(gf_bumpmap(su2n, 1.0, 3.0), u);
  FlatContext ctx48(su2n, hd, 48, 2);
  const double d1 = degree_flat({u1, hd}, ctx48);
  CHECK(std::abs(d1 - 1.0) < 1e-6);

  // wrong holonomy context is rejected
  FlatContext wrong(su2n, identity_holonomy(su2n), 24, 2);
  CHECK_THROWS_WITH(degree_flat({u, hd}, wrong), "twisting mismatch");
}

TEST_CASE("twisted degree additivity and conjugation invariance") {
  const HolonomyData hd = toral_holonomy(su2n, kPi / 2.0);
  const TwistedAlgebraField a = make_twisted_algebra_field(su2n, hd, {21, 1, 2, 0.5});
  const TwistedAlgebraField b = make_twisted_algebra_field(su2n, hd, {22, 1, 2, 0.4});
  const GroupField u = gf_mul(gf_bumpmap(su2n, 1.0, 3.0), gf_qexp(su2n, a.form));
  const GroupField v = gf_qexp(su2n, b.form);
  FlatContext ctx(su2n, hd, 48, 4);

  const double du = degree_flat({u, hd}, ctx);
  const double dv = degree_flat({v, hd}, ctx);
  const double duv = degree_flat({gf_mul(u, v), hd}, ctx);
  CHECK(std::abs(duv - du - dv) < 1e-6);

  // conjugation by another twisted transformation
  const double dconj = degree_flat({gf_conj(u, v), hd}, ctx);
  CHECK(std::abs(dconj - du) < 1e-6);
}

TEST_CASE("degree is independent of the reference flat connection") {
  const HolonomyData hd = toral_holonomy(su2n, kPi / 2.0);
  const TwistedAlgebraField a = make_twisted_algebra_field(su2n, hd, {8, 1, 2, 0.5});
  const GroupField u = gf_mul(gf_bumpmap(su2n, 1.0, 3.0), gf_qexp(su2n, a.form));

  FlatContext zero_ref(su2n, hd, 48, 2);
  FlatContext toral_ref(su2n, hd, toral_constant_gauge_field(su2n, 0, 0.35), 48, 2);
  const double d0 = degree_flat({u, hd}, zero_ref);
  const double d1 = degree_flat({u, hd}, toral_ref);
  CHECK(std::abs(d0 - d1) < 1e-8);
  CHECK(std::abs(d0 - std::round(d0)) < 1e-6);
}

TEST_CASE("functional change equals the degree on the trivial bundle") {
  const HolonomyData triv = identity_holonomy(su2n);
  Rng rng(83);
  const VForm A = random_lie_form(su2n, 3, 1, rng, 0.5);
  const GroupField u = gf_bumpmap(su2n, 1.0, 3.0);
  FlatContext ctx(su2n, triv, 48, 4);
  const DegreeComparison cmp = cs_change_vs_degree({A, triv}, {u, triv}, ctx);
  CHECK(cmp.difference < 1e-6);
  CHECK(cmp.identity_residual < 1e-8);
  CHECK(std::abs(cmp.degree - 1.0) < 1e-6);
}

TEST_CASE("functional change equals the degree on a twisted bundle") {
  const HolonomyData hd = toral_holonomy(su2n, kPi / 2.0);
  const TwistedGaugeField A = make_twisted_gauge_field(su2n, hd, {9, 1, 2, 0.4});
  const TwistedAlgebraField x = make_twisted_algebra_field(su2n, hd, {10, 1, 2, 0.5});
  const TwistedGroupField u{gf_qexp(su2n, x.form), hd};
  FlatContext ctx(su2n, hd, 24, 4);
  const DegreeComparison cmp = cs_change_vs_degree(A, u, ctx);
  CHECK(cmp.difference < 1e-6);
  CHECK(cmp.identity_residual < 1e-8);
  CHECK(std::abs(cmp.degree) < 1e-6);

  // same check with a degree-carrying twisted transformation
  const TwistedGroupField u1{gf_mul(gf_bumpmap(su2n, 1.0, 3.0), u.u), hd};
  FlatContext ctx48(su2n, hd, 48, 4);
  const DegreeComparison cmp1 = cs_change_vs_degree(A, u1, ctx48);
  CHECK(cmp1.difference < 1e-6);
  CHECK(std::abs(cmp1.degree - 1.0) < 1e-6);
}
