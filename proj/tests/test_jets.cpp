#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "flatcs/scalar_field.hpp"

using namespace flatcs;

namespace {

// Central finite differences, the independent oracle for jet propagation.
double fd_grad(const ScalarField& f, Pt p, int axis, double h = 1e-5) {
  Pt a = p, b = p;
  a[axis] += h;
  b[axis] -= h;
  return (f->eval(a).v - f->eval(b).v) / (2.0 * h);
}

double fd_hess(const ScalarField& f, Pt p, int ax1, int ax2, double h = 1e-4) {
  Pt pp = p, pm = p, mp = p, mm = p;
  pp[ax1] += h; pp[ax2] += h;
  pm[ax1] += h; pm[ax2] -= h;
  mp[ax1] -= h; mp[ax2] += h;
  mm[ax1] -= h; mm[ax2] -= h;
  return (f->eval(pp).v - f->eval(pm).v - f->eval(mp).v + f->eval(mm).v) / (4.0 * h * h);
}

}  // namespace

TEST_CASE("jets of basic expressions") {
  const ScalarField f = sf_sin(sf_coord(0));
  const Jet2 j = eval_jet(f, make_pt(3, 0.0, 0.0, 0.0));
  CHECK(j.v == 0.0);
  CHECK(j.g[0] == 1.0);
  CHECK(j.g[1] == 0.0);
  CHECK(j.h[0][0] == 0.0);

  const Jet2 c = eval_jet(sf_num(2.5), make_pt(3, 1.0, 2.0, 3.0));
  CHECK(c.v == 2.5);
  for (int i = 0; i < 3; ++i) {
    CHECK(c.g[i] == 0.0);
    for (int k = 0; k < 3; ++k) CHECK(c.h[i][k] == 0.0);
  }
}

TEST_CASE("jet derivatives match finite differences") {
  // f = sin(x) cos(y) + exp(sin(z)) * x^2 / (2 + cos(x))
  const ScalarField f = sf_add(
      sf_mul(sf_sin(sf_coord(0)), sf_cos(sf_coord(1))),
      sf_div(sf_mul(sf_exp(sf_sin(sf_coord(2))), sf_pow(sf_coord(0), 2)),
             sf_add(sf_num(2.0), sf_cos(sf_coord(0)))));
  Rng rng(7);
  for (int t = 0; t < 30; ++t) {
    Pt p = make_pt(3, rng.uniform(0, kTwoPi), rng.uniform(0, kTwoPi), rng.uniform(0, kTwoPi));
    const Jet2 j = eval_jet(f, p);
    for (int a = 0; a < 3; ++a)
      REQUIRE(j.g[a] == Catch::Approx(fd_grad(f, p, a)).margin(1e-8));
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        REQUIRE(j.h[a][b] == Catch::Approx(fd_hess(f, p, a, b)).margin(2e-5));
  }
}

TEST_CASE("product and chain rule against hand expansion") {
  // d/dx [ sin(x^2 + y) ] = 2x cos(x^2 + y), hand expansion
  const ScalarField f = sf_sin(sf_add(sf_pow(sf_coord(0), 2), sf_coord(1)));
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    const double x = rng.uniform(0, kTwoPi), y = rng.uniform(0, kTwoPi);
    const Jet2 j = eval_jet(f, make_pt(2, x, y));
    REQUIRE(j.g[0] == Catch::Approx(2.0 * x * std::cos(x * x + y)).margin(1e-13));
    REQUIRE(j.g[1] == Catch::Approx(std::cos(x * x + y)).margin(1e-13));
    REQUIRE(j.h[0][1] == Catch::Approx(-2.0 * x * std::sin(x * x + y)).margin(1e-13));
    // hessian symmetry is structural
    REQUIRE(j.h[0][1] == j.h[1][0]);
  }
}

TEST_CASE("dimension mismatch is an error") {
  const ScalarField f = sf_sin(sf_coord(2));
  CHECK_THROWS_AS(eval_jet(f, make_pt(2, 0.1, 0.2)), error);
}

TEST_CASE("quadrature exact values") {
  TorusSpec t3(3);
  const double vol = kTwoPi * kTwoPi * kTwoPi;

  CHECK(quadrature(sf_num(1.0), t3, 4) == Catch::Approx(vol).margin(1e-10));
  CHECK(std::abs(quadrature(sf_sin(sf_coord(0)), t3, 8)) < 1e-14);

  // closed-form antiderivative: int cos^2 = 4 pi^3
  const ScalarField c2 = sf_pow(sf_cos(sf_coord(0)), 2);
  CHECK(quadrature(c2, t3, 16) == Catch::Approx(4.0 * kPi * kPi * kPi).margin(1e-11));
}

TEST_CASE("quadrature of a coordinate derivative vanishes") {
  TorusSpec t3(3);
  // d/dx of sin(x)cos(2y), written out
  const ScalarField df =
      sf_mul(sf_cos(sf_coord(0)), sf_cos(sf_mul(sf_num(2.0), sf_coord(1))));
  CHECK(std::abs(quadrature(df, t3, 12)) < 1e-12);
}

TEST_CASE("band-limited quadrature is grid independent") {
  TorusSpec t3(3);
  const ScalarField f = sf_add(sf_pow(sf_cos(sf_coord(0)), 2),
                               sf_mul(sf_sin(sf_mul(sf_num(3.0), sf_coord(1))),
                                      sf_cos(sf_coord(2))));
  const double q8 = quadrature(f, t3, 8);
  const double q16 = quadrature(f, t3, 16);
  CHECK(std::abs(q8 - q16) < 1e-13);
}

TEST_CASE("quadrature is independent of the thread count") {
  TorusSpec t3(3);
  const ScalarField f = sf_add(sf_mul(sf_sin(sf_coord(0)), sf_cos(sf_coord(1))),
                               sf_exp(sf_mul(sf_num(0.1), sf_cos(sf_coord(2)))));
  const double q1 = quadrature(f, t3, 24, 1);
  const double q4 = quadrature(f, t3, 24, 4);
  const double q3 = quadrature(f, t3, 24, 3);
  CHECK(q1 == q4);
  CHECK(q1 == q3);
}

TEST_CASE("bump plateau and junction smoothness") {
  // plateau at the center: no derivative garbage even though r is singular there
  const ScalarField b = sf_bump(sf_radial(), 1.0, 3.0);
  const Jet2 at_center = eval_jet(b, make_pt(3, kPi, kPi, kPi));
  CHECK(at_center.v == 1.0);
  for (int i = 0; i < 3; ++i) {
    CHECK(at_center.g[i] == 0.0);
    for (int k = 0; k < 3; ++k) CHECK(at_center.h[i][k] == 0.0);
  }

  // value, gradient and hessian continuous across both junctions
  const double d = 1e-8;
  for (double knot : {1.0, 3.0}) {
    const Pt lo = make_pt(3, kPi + knot - d, kPi, kPi);
    const Pt hi = make_pt(3, kPi + knot + d, kPi, kPi);
    const Jet2 jl = eval_jet(b, lo);
    const Jet2 jh = eval_jet(b, hi);
    CHECK(std::abs(jl.v - jh.v) < 1e-9);
    CHECK(std::abs(jl.g[0] - jh.g[0]) < 1e-6);
    CHECK(std::abs(jl.h[0][0] - jh.h[0][0]) < 1e-4);
  }

  // off-plateau values match the profile polynomial evaluated directly
  const Jet2 mid = eval_jet(b, make_pt(3, kPi + 2.0, kPi, kPi));
  CHECK(mid.v == Catch::Approx(bump_value(2.0, 1.0, 3.0)).margin(1e-15));
}

TEST_CASE("expression text round trip") {
  const ScalarField f = sf_add(
      sf_mul(sf_sin(sf_coord(0)), sf_cos(sf_coord(1))),
      sf_mul(sf_pi(), sf_bump(sf_radial(), 1.0, 3.0)));
  CHECK(to_text(f) == "sin(x)*cos(y) + pi*bump(r, 1, 3)");
}
