#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "flatcs/forms.hpp"
#include "test_util.hpp"

using namespace flatcs;
using namespace flatcs_test;

namespace {

const auto su2 = LieAlgebraSpec::su2();

std::vector<Pt> pts() { return sample_points(3, 4, 40, 101); }

}  // namespace

TEST_CASE("wedge with inner product on basis forms") {
  // <(i dx) ^ (i dy)> = dx ^ dy
  const VForm a = basis_one_form(su2, 3, 0, 0, sf_num(1.0));
  const VForm b = basis_one_form(su2, 3, 1, 0, sf_num(1.0));
  const VForm w = wedge_inner(a, b);
  const Pt p = make_pt(3, 0.3, 1.1, 2.0);
  const auto v =
      evaluate(w, p, {std::array<double, 4>{1, 0, 0, 0}, std::array<double, 4>{0, 1, 0, 0}});
  CHECK(v[0] == Catch::Approx(1.0));
  const auto flipped =
      evaluate(w, p, {std::array<double, 4>{0, 1, 0, 0}, std::array<double, 4>{1, 0, 0, 0}});
  CHECK(flipped[0] == Catch::Approx(-1.0));
}

TEST_CASE("bracket wedge of basis forms") {
  // [(i dx) ^ (j dy)] evaluated on (e1, e2): [i, j] - [0, 0] = 2k
  const VForm a = basis_one_form(su2, 3, 0, 0, sf_num(1.0));
  const VForm b = basis_one_form(su2, 3, 1, 1, sf_num(1.0));
  const VForm w = wedge_bracket(a, b);
  const auto v = evaluate(w, make_pt(3, 0.5, 0.5, 0.5),
                          {std::array<double, 4>{1, 0, 0, 0}, std::array<double, 4>{0, 1, 0, 0}});
  CHECK(v[0] == Catch::Approx(0.0).margin(1e-15));
  CHECK(v[1] == Catch::Approx(0.0).margin(1e-15));
  CHECK(v[2] == Catch::Approx(2.0));
}

TEST_CASE("graded symmetry of pairings") {
  Rng rng(21);
  const auto sample = pts();
  for (auto [p, q] : {std::pair<int, int>{1, 1}, {1, 2}, {2, 1}}) {
    for (int t = 0; t < 20; ++t) {
      const VForm a = random_lie_form(su2, 3, p, rng);
      const VForm b = random_lie_form(su2, 3, q, rng);
      const double sgn = ((p * q) % 2 == 0) ? 1.0 : -1.0;
      CHECK(max_pointwise_residual(wedge_inner(a, b), sgn * wedge_inner(b, a), sample) < 1e-12);
      CHECK(max_pointwise_residual(wedge_bracket(a, b), (-sgn) * wedge_bracket(b, a), sample) <
            1e-12);
    }
  }
}

TEST_CASE("cyclic pairing identity from Ad-invariance") {
  // <a ^ [b ^ c]> = (-1)^{r(p+q)} <c ^ [a ^ b]>
  Rng rng(22);
  const auto sample = pts();
  struct Deg { int p, q, r; };
  for (const Deg d : {Deg{1, 1, 1}, Deg{1, 2, 0}, Deg{0, 1, 2}}) {
    for (int t = 0; t < 10; ++t) {
      const VForm a = random_lie_form(su2, 3, d.p, rng);
      const VForm b = random_lie_form(su2, 3, d.q, rng);
      const VForm c = random_lie_form(su2, 3, d.r, rng);
      const double sgn = ((d.r * (d.p + d.q)) % 2 == 0) ? 1.0 : -1.0;
      const VForm lhs = wedge_inner(a, wedge_bracket(b, c));
      const VForm rhs = sgn * wedge_inner(c, wedge_bracket(a, b));
      CHECK(max_pointwise_residual(lhs, rhs, sample) < 1e-12);
    }
  }
}

TEST_CASE("triple bracket of a 1-form with itself vanishes") {
  Rng rng(23);
  const auto sample = pts();
  for (int t = 0; t < 20; ++t) {
    const VForm a = random_lie_form(su2, 3, 1, rng);
    const VForm triple = wedge_bracket(a, wedge_bracket(a, a));
    CHECK(max_pointwise_norm(triple, sample) < 1e-12);
  }
}

TEST_CASE("exterior derivative basics") {
  // d(sin(x) dy) = cos(x) dx ^ dy
  const auto specr = su2;
  std::vector<std::vector<ScalarField>> comps(3);
  comps[0] = {sf_num(0.0)};
  comps[1] = {sf_sin(sf_coord(0))};
  comps[2] = {sf_num(0.0)};
  const VForm a = form_from_components(3, 1, ValueSpace::Real, specr, comps);
  const VForm da = exterior_derivative(a);
  const Pt p = make_pt(3, 0.7, 0.2, 0.9);
  const auto v = evaluate(da, p,
                          {std::array<double, 4>{1, 0, 0, 0}, std::array<double, 4>{0, 1, 0, 0}});
  CHECK(v[0] == Catch::Approx(std::cos(0.7)).margin(1e-14));

  // d of a constant 1-form vanishes
  std::vector<std::vector<ScalarField>> cc(3, std::vector<ScalarField>{sf_num(0.0)});
  cc[0][0] = sf_num(1.7);
  const VForm c = form_from_components(3, 1, ValueSpace::Real, specr, cc);
  CHECK(max_pointwise_norm(exterior_derivative(c), pts()) == 0.0);
}

TEST_CASE("d compose d vanishes") {
  Rng rng(24);
  const auto sample = pts();
  for (int t = 0; t < 20; ++t) {
    const VForm f = random_real_form(su2, 3, 0, rng);
    CHECK(max_pointwise_norm(exterior_derivative(exterior_derivative(f)), sample) < 1e-12);
    const VForm a = random_lie_form(su2, 3, 1, rng);
    CHECK(max_pointwise_norm(exterior_derivative(exterior_derivative(a)), sample) < 1e-12);
  }
}

TEST_CASE("Leibniz rule for the inner pairing") {
  Rng rng(25);
  const auto sample = pts();
  for (int p = 0; p <= 1; ++p) {
    for (int t = 0; t < 10; ++t) {
      const VForm a = random_lie_form(su2, 3, p, rng);
      const VForm b = random_lie_form(su2, 3, 1, rng);
      const VForm lhs = exterior_derivative(wedge_inner(a, b));
      const double sgn = (p % 2 == 0) ? 1.0 : -1.0;
      const VForm rhs = wedge_inner(exterior_derivative(a), b) +
                        sgn * wedge_inner(a, exterior_derivative(b));
      CHECK(max_pointwise_residual(lhs, rhs, sample) < 1e-11);
    }
  }
}

TEST_CASE("twisted derivative") {
  const auto sample = pts();
  Rng rng(26);

  // A = 0 reduces to d
  const VForm zero = zero_form(3, 1, ValueSpace::Lie, su2);
  const VForm a = random_lie_form(su2, 3, 1, rng);
  CHECK(max_pointwise_residual(twisted_derivative(zero, a), exterior_derivative(a), sample) ==
        0.0);

  // (A = i dx, alpha = j dy): d(j dy) + [i dx ^ j dy] = 2k dx^dy
  const VForm A = basis_one_form(su2, 3, 0, 0, sf_num(1.0));
  const VForm al = basis_one_form(su2, 3, 1, 1, sf_num(1.0));
  const auto v = evaluate(twisted_derivative(A, al), make_pt(3, 1.0, 2.0, 3.0),
                          {std::array<double, 4>{1, 0, 0, 0}, std::array<double, 4>{0, 1, 0, 0}});
  CHECK(v[0] == Catch::Approx(0.0).margin(1e-15));
  CHECK(v[2] == Catch::Approx(2.0));
}

TEST_CASE("alternating evaluation") {
  Rng rng(27);
  const VForm a = random_real_form(su2, 3, 2, rng);
  const std::array<double, 4> v{0.3, -1.0, 0.7, 0.0};
  const auto same = evaluate(a, make_pt(3, 1, 2, 3), {v, v});
  CHECK(std::abs(same[0]) < 1e-15);
}

TEST_CASE("integration of top forms") {
  const double vol = std::pow(kTwoPi, 3);

  std::vector<std::vector<ScalarField>> one(1, std::vector<ScalarField>{sf_num(1.0)});
  const VForm volume = form_from_components(3, 3, ValueSpace::Real, su2, one);
  CHECK(integrate(volume, 4) == Catch::Approx(vol).margin(1e-9));

  std::vector<std::vector<ScalarField>> c2(
      1, std::vector<ScalarField>{sf_pow(sf_cos(sf_coord(0)), 2)});
  const VForm cos2 = form_from_components(3, 3, ValueSpace::Real, su2, c2);
  CHECK(integrate(cos2, 16) == Catch::Approx(4.0 * std::pow(kPi, 3)).margin(1e-10));

  // exact forms integrate to zero
  Rng rng(28);
  for (int t = 0; t < 5; ++t) {
    const VForm b = random_real_form(su2, 3, 2, rng);
    CHECK(std::abs(integrate(exterior_derivative(b), 32)) < 1e-11);
  }
}

TEST_CASE("tensor wedge contracts to the inner pairing") {
  Rng rng(29);
  const auto sample = pts();
  for (int t = 0; t < 10; ++t) {
    const VForm a = random_lie_form(su2, 3, 1, rng);
    const VForm b = random_lie_form(su2, 3, 1, rng);
    const VForm via_tensor = inner_contract(wedge_tensor(a, b));
    CHECK(max_pointwise_residual(via_tensor, wedge_inner(a, b), sample) < 1e-13);
  }
}

TEST_CASE("degree above the dimension is the zero object") {
  Rng rng(30);
  const VForm a = random_lie_form(su2, 3, 2, rng);
  const VForm b = random_lie_form(su2, 3, 2, rng);
  const VForm w = wedge_bracket(a, b);
  CHECK(w.degree == 4);
  CHECK(w.comps() == 0);
  const VForm top = random_real_form(su2, 3, 3, rng);
  const VForm dtop = exterior_derivative(top);
  CHECK(dtop.comps() == 0);
}

TEST_CASE("pairing type errors") {
  Rng rng(31);
  const VForm a = random_lie_form(su2, 3, 1, rng);
  const VForm r = random_real_form(su2, 3, 1, rng);
  CHECK_THROWS_AS(wedge_inner(a, r), error);
  CHECK_THROWS_AS(wedge_bracket(r, r), error);
  CHECK_THROWS_AS(integrate(a, 8), error);
  CHECK_THROWS_AS(evaluate(a, make_pt(3), {}), error);
}
