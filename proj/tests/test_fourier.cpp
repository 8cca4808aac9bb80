#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "flatcs/fourier.hpp"
#include "test_util.hpp"

using namespace flatcs;
using namespace flatcs_test;

namespace {

const auto su2n = LieAlgebraSpec::normalized({Factor::Su2});

HolonomyData quarter_turn_holonomy() {
  HolonomyData hd;
  hd.h.push_back(exp_map(basis_element(su2n, 0, 0, kPi / 2)));
  hd.h.push_back(GroupElement(su2n));
  hd.h.push_back(GroupElement(su2n));
  return hd;
}

}  // namespace

TEST_CASE("spectral fields evaluate with exact jets and twisting") {
  const HolonomyData hd = quarter_turn_holonomy();
  SpectralGaugeField A(su2n, hd, 3);
  A.blocks[0].toral[0].at(1, 0, 0) = Cplx(0.2, -0.1);
  A.blocks[0].toral[0].at(-1, 0, 0) = Cplx(0.2, 0.1);
  A.blocks[0].offplane[1].at(0, 1, -1) = Cplx(0.15, 0.3);
  const VForm Af = spectral_to_form(A);

  CHECK(validate_twisting(Af, hd) < 1e-12);

  // jets match finite differences of the series
  const Pt p = make_pt(3, 0.7, 1.9, 4.1);
  const FormValue v = Af.eval(p);
  const double h = 1e-6;
  for (int axis = 0; axis < 3; ++axis) {
    Pt pp = p, pm = p;
    pp[axis] += h;
    pm[axis] -= h;
    const FormValue vp = Af.eval(pp), vm = Af.eval(pm);
    for (size_t comp = 0; comp < v.size(); ++comp)
      for (size_t c = 0; c < v[comp].size(); ++c)
        REQUIRE(v[comp][c].g[axis] ==
                Catch::Approx((vp[comp][c].v - vm[comp][c].v) / (2 * h)).margin(1e-7));
  }
}

TEST_CASE("projection inverts evaluation for band-limited fields") {
  const HolonomyData hd = quarter_turn_holonomy();
  SpectralGaugeField A(su2n, hd, 3);
  Rng rng(90);
  A.blocks[0].toral[2].at(1, -2, 0) = Cplx(0.1, 0.05);
  A.blocks[0].toral[2].at(-1, 2, 0) = Cplx(0.1, -0.05);
  A.blocks[0].offplane[0].at(2, 0, 1) = Cplx(-0.2, 0.1);
  A.blocks[0].offplane[1].at(0, 0, 0) = Cplx(0.3, 0.0);

  const SpectralGaugeField back = project_to_spectral(spectral_to_form(A), hd, 3);
  double worst = 0.0;
  for (int a = 0; a < 3; ++a) {
    for (size_t i = 0; i < A.blocks[0].toral[static_cast<size_t>(a)].c.size(); ++i) {
      worst = std::max(worst, std::abs(A.blocks[0].toral[static_cast<size_t>(a)].c[i] -
                                       back.blocks[0].toral[static_cast<size_t>(a)].c[i]));
      worst = std::max(worst, std::abs(A.blocks[0].offplane[static_cast<size_t>(a)].c[i] -
                                       back.blocks[0].offplane[static_cast<size_t>(a)].c[i]));
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("spectral curvature matches the pointwise curvature") {
  const HolonomyData hd = quarter_turn_holonomy();
  SpectralGaugeField A(su2n, hd, 2);
  add_random_perturbation(A, 0.3, 91);
  // residual by Parseval vs quadrature of <F ^ *F> through the forms engine
  const VForm Af = spectral_to_form(A);
  const VForm F = curvature(Af);
  double q = 0.0;
  // sum over the three frame pairs of the pointwise squared norm
  const int N = 12;
  q = grid_sum(3, N, 2, [&](const Pt& p) {
    const FormValue fv = F.eval(p);
    double s = 0.0;
    for (size_t comp = 0; comp < fv.size(); ++comp)
      for (size_t c = 0; c < fv[comp].size(); ++c) s += fv[comp][c].v * fv[comp][c].v;
    return s;
  });
  q *= su2n->scales[0];
  CHECK(spectral::curvature_residual(A) == Catch::Approx(q).margin(1e-10));
}

TEST_CASE("flat start returns immediately") {
  const HolonomyData hd = quarter_turn_holonomy();
  SpectralGaugeField A(su2n, hd, 4);
  A.blocks[0].toral[0].at(0, 0, 0) = 0.2;  // constant toral field is flat
  const FlattenResult r = minimize_curvature(A);
  CHECK(r.converged);
  CHECK(r.iterations == 0);
  CHECK(r.residual < 1e-10);
}

TEST_CASE("perturbed flat field is flattened") {
  const HolonomyData hd = quarter_turn_holonomy();
  SpectralGaugeField A(su2n, hd, 3);
  A.blocks[0].toral[0].at(0, 0, 0) = 0.2;
  add_random_perturbation(A, 1e-2, 92);
  FlattenOptions opts;
  opts.tol = 1e-8;  // the acceptance run drives the full 1e-10 target
  int logged = 0;
  opts.log = [&](int, double, double) { ++logged; };
  const FlattenResult r = minimize_curvature(A, opts);
  CHECK(r.converged);
  CHECK(r.residual < 1e-8);
  CHECK(logged >= r.iterations);

  // result is still a valid twisted field and pointwise nearly flat
  const VForm Af = spectral_to_form(r.field);
  CHECK(validate_twisting(Af, hd) < 1e-10);
  const auto pts = sample_points(3, 3, 10, 93);
  CHECK(max_pointwise_norm(curvature(Af), pts) < 1e-4);
}

TEST_CASE("abelian fields flatten in a single exact step") {
  const auto u1 = LieAlgebraSpec::u1();
  SpectralGaugeField A(u1, identity_holonomy(u1), 4);
  add_random_perturbation(A, 0.5, 94);
  const FlattenResult r = minimize_curvature(A);
  CHECK(r.converged);
  CHECK(r.iterations == 1);
  CHECK(r.residual < 1e-12);
}

TEST_CASE("non-convergence is an error carrying the residual") {
  const HolonomyData hd = quarter_turn_holonomy();
  SpectralGaugeField A(su2n, hd, 2);
  add_random_perturbation(A, 0.5, 95);
  FlattenOptions opts;
  opts.tol = 1e-10;
  opts.max_iters = 3;
  CHECK_THROWS_AS(find_flat_connection(A, opts), error);
}
