// Acceptance suite: every quantitative obligation of the library, one line
// per criterion. Exits nonzero if any line fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "flatcs/flatcs.hpp"
#include "test_util.hpp"

using namespace flatcs;
using namespace flatcs_test;

namespace {

int g_failures = 0;

void report_line(int criterion, const std::string& what, bool pass,
                 const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion,
              what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3e", x);
  return buf;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string scenario_dir() {
#ifdef FLATCS_SCENARIO_DIR
  return FLATCS_SCENARIO_DIR;
#else
  return "examples/scenarios";
#endif
}

Scenario load_scenario(const std::string& name) {
  std::ifstream in(scenario_dir() + "/" + name);
  std::ostringstream os;
  os << in.rdbuf();
  auto r = parse_scenario(os.str());
  if (std::holds_alternative<Diagnostic>(r))
    throw error(name + ": " + std::get<Diagnostic>(r).str());
  return std::get<Scenario>(r);
}

const SpecPtr su2 = LieAlgebraSpec::su2();
const SpecPtr su2n = LieAlgebraSpec::normalized({Factor::Su2});
constexpr int kThreads = 4;

GroupField random_group_field(const SpecPtr& spec, Rng& rng, int n = 3, double amp = 0.5) {
  std::vector<ScalarField> ch;
  for (int i = 0; i < spec->algebra_dim(); ++i)
    ch.push_back(random_trig_scalar(n, rng, 2, 2, amp));
  std::vector<std::vector<ScalarField>> comps{std::move(ch)};
  return gf_qexp(spec, form_from_components(n, 0, ValueSpace::Lie, spec, std::move(comps)));
}

HolonomyData quarter_turn() {
  HolonomyData hd;
  hd.h.push_back(exp_map(basis_element(su2n, 0, 0, kPi / 2)));
  hd.h.push_back(GroupElement(su2n));
  hd.h.push_back(GroupElement(su2n));
  return hd;
}

// --- criteria ---------------------------------------------------------------

void criterion_1() {
  // the canonical 3-form on the standard frame, through the full pipeline
  auto axis_field = [&](int axis, int channel) {
    std::vector<ScalarField> ch(3, sf_num(0.0));
    ch[static_cast<size_t>(channel)] = sf_coord(axis);
    std::vector<std::vector<ScalarField>> comps{ch};
    return gf_qexp(su2, form_from_components(3, 0, ValueSpace::Lie, su2, std::move(comps)));
  };
  const GroupField u =
      gf_mul(gf_mul(axis_field(0, 0), axis_field(1, 1)), axis_field(2, 2));
  const VForm w = mc_three_form(u, su2, 3);
  const auto v = evaluate(w, make_pt(3, 0, 0, 0),
                          {std::array<double, 4>{1, 0, 0, 0}, std::array<double, 4>{0, 1, 0, 0},
                           std::array<double, 4>{0, 0, 1, 0}});
  const double resid = std::abs(v[0] + 2.0);
  report_line(1, "canonical 3-form on the (i,j,k) frame equals -2", resid < 1e-14,
              "value " + fmt(v[0]) + ", residual " + fmt(resid));
}

void criterion_2() {
  const auto t0 = std::chrono::steady_clock::now();
  const NormalizationData d = derive_su2_normalization(64);
  const double r_vol = std::abs(d.volume - 2.0 * kPi * kPi);
  const double r_theta = std::abs(d.theta_integral + 4.0 * kPi * kPi);
  const double r_lambda = std::abs(d.lambda_star * (4.0 * kPi * kPi) - 1.0);
  const bool pass = r_vol < 1e-9 && r_theta < 1e-9 && r_lambda < 1e-9;
  report_line(2, "normalization derivation: vol, 3-form integral, scale", pass,
              "vol err " + fmt(r_vol) + ", integral err " + fmt(r_theta) + ", scale err " +
                  fmt(r_lambda) + ", " + fmt(elapsed_s(t0)) + "s");
}

void criterion_3() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_name = "none";
  auto track = [&](const std::string& name, double r) {
    if (r > worst) {
      worst = r;
      worst_name = name;
    }
  };

  const std::vector<Pt> pts3 = sample_points(3, 8, 100, 501);
  const std::vector<Pt> pts4 = sample_points(4, 8, 100, 502);

  for (int s = 0; s < 5; ++s) {
    Rng rng(1000 + static_cast<std::uint32_t>(s));

    // T^4: exactness of the 3-form potential and the transgression identity
    const VForm A4 = random_lie_form(su2, 4, 1, rng, 0.5);
    const VForm A04 = random_lie_form(su2, 4, 1, rng, 0.3);
    track("cs3_exact", residual_cs3_exactness(A4, pts4));
    track("transgression", residual_transgression(A4, CSContext(su2, A04), pts4));

    // T^3: gauge-change identity, trivial and twisted
    const VForm A3 = random_lie_form(su2, 3, 1, rng, 0.5);
    const GroupField u3 = random_group_field(su2, rng);
    track("gauge_change", residual_gauge_change(A3, u3, su2, pts3));

    const HolonomyData hd = quarter_turn();
    const TwistedGaugeField At =
        make_twisted_gauge_field(su2n, hd, {2000 + static_cast<std::uint32_t>(s), 1, 2, 0.4});
    const TwistedAlgebraField xt =
        make_twisted_algebra_field(su2n, hd, {2100 + static_cast<std::uint32_t>(s), 1, 2, 0.5});
    VForm At1 = At.form;
    At1.spec = su2;  // identities at unit scale
    track("gauge_change_twisted",
          residual_gauge_change(At1, gf_qexp(su2, xt.form), su2, pts3));

    // Bianchi and the cocycle rule
    track("bianchi", residual_bianchi(A3, pts3));
    const GroupField v3 = random_group_field(su2, rng);
    track("cocycle", residual_cocycle(u3, v3, 3, pts3));
  }
  track("bi_invariance", theta_bi_invariance_residual(1000, 503));

  report_line(3, "identity residual suite on 5 random fields each", worst < 1e-8,
              "max residual " + fmt(worst) + " (" + worst_name + "), " +
                  fmt(elapsed_s(t0)) + "s");
}

void criterion_4() {
  const auto t0 = std::chrono::steady_clock::now();
  CSContext ctx(su2, 3, 16, kThreads);
  double worst_pair = 0.0, worst_orbit = 0.0;
  Rng rng(600);
  for (int t = 0; t < 10; ++t) {
    const VForm A = random_lie_form(su2, 3, 1, rng, 0.5);
    const VForm a = random_lie_form(su2, 3, 1, rng, 0.5);
    worst_pair = std::max(
        worst_pair, std::abs(cs_gradient_pairing(A, a, ctx) - cs_directional_fd(A, a, ctx)));
    const VForm X = random_lie_form(su2, 3, 0, rng, 0.5);
    worst_orbit =
        std::max(worst_orbit, std::abs(cs_gradient_pairing(A, twisted_derivative(A, X), ctx)));
  }
  const bool pass = worst_pair < 1e-6 && worst_orbit < 1e-8;
  report_line(4, "gradient pairing vs finite differences, orbit directions annihilated",
              pass,
              "max |pairing-fd| " + fmt(worst_pair) + ", max |orbit pairing| " +
                  fmt(worst_orbit) + ", " + fmt(elapsed_s(t0)) + "s");
}

void criterion_5() {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario sc = load_scenario("u1_cs.json");
  RunOptions opt;
  opt.threads = kThreads;
  const Report rep = run_verify(sc, opt);
  double value = 0.0, resid = 0.0;
  bool pass = rep.all_pass();
  for (const CheckRecord& c : rep.checks)
    if (c.name == "cs_value") {
      value = *c.value;
      resid = c.residual;
    }
  pass = pass && resid < 1e-9;
  report_line(5, "scripted abelian scenario reproduces the closed-form functional", pass,
              "value " + fmt(value) + ", |value - 4 pi^3| " + fmt(resid) + ", " +
                  fmt(elapsed_s(t0)) + "s");
}

void criterion_6() {
  const auto t0 = std::chrono::steady_clock::now();
  const GroupField u = gf_bumpmap(su2n, 1.0, 3.0);
  const double base = degree_trivial(u, su2n, 32, kThreads);
  const int oracle = brouwer_degree_oracle(u, exp_map(basis_element(su2n, 0, 0, 0.9)));
  bool pass = std::abs(base - 1.0) < 1e-6 && oracle == 1 && std::abs(base - oracle) < 1e-6;
  std::string detail = "deg " + fmt(base) + " (N=32), oracle " + std::to_string(oracle);

  double worst_power = 0.0;
  for (int m = -2; m <= 3; ++m) {
    const int grid = std::abs(m) <= 1 ? 32 : (std::abs(m) == 2 ? 48 : 64);
    const double d = degree_trivial(gf_pow(u, m), su2n, grid, kThreads);
    worst_power = std::max(worst_power, std::abs(d - m));
  }
  const int oracle2 = brouwer_degree_oracle(gf_pow(u, 2),
                                            exp_map(basis_element(su2n, 0, 0, 0.9)));
  pass = pass && worst_power < 1e-6 && oracle2 == 2;
  detail += ", max power err " + fmt(worst_power) + " (m in -2..3), oracle(m=2) " +
            std::to_string(oracle2) + ", " + fmt(elapsed_s(t0)) + "s";
  report_line(6, "degree integrality and oracle agreement for the collapse map", pass, detail);
}

void criterion_7() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::ostringstream detail;

  // (a) trivial holonomy, bump transformation, two random fields
  {
    const HolonomyData triv = identity_holonomy(su2n);
    FlatContext ctx(su2n, triv, 48, kThreads);
    Rng rng(700);
    const VForm A1 = random_lie_form(su2n, 3, 1, rng, 0.5);
    const VForm A2 = random_lie_form(su2n, 3, 1, rng, 0.5);
    const GroupField u = gf_bumpmap(su2n, 1.0, 3.0);
    const DegreeComparison c1 = cs_change_vs_degree({A1, triv}, {u, triv}, ctx);
    const DegreeComparison c2 = cs_change_vs_degree({A2, triv}, {u, triv}, ctx);
    pass = pass && c1.difference < 1e-6 && c2.difference < 1e-6 &&
           std::abs(c1.cs_change - c2.cs_change) < 1e-6;
    detail << "trivial: diff " << fmt(std::max(c1.difference, c2.difference))
           << ", change spread " << fmt(std::abs(c1.cs_change - c2.cs_change));
  }

  // (b) quarter-turn holonomy, twisted transformation and fields
  {
    const HolonomyData hd = quarter_turn();
    FlatContext ctx(su2n, hd, 24, kThreads);
    const TwistedGaugeField A1 = make_twisted_gauge_field(su2n, hd, {701, 1, 2, 0.4});
    const TwistedGaugeField A2 = make_twisted_gauge_field(su2n, hd, {702, 1, 2, 0.4});
    const TwistedAlgebraField x = make_twisted_algebra_field(su2n, hd, {703, 1, 2, 0.5});
    const TwistedGroupField u{gf_qexp(su2n, x.form), hd};
    const DegreeComparison c1 = cs_change_vs_degree(A1, u, ctx);
    const DegreeComparison c2 = cs_change_vs_degree(A2, u, ctx);
    pass = pass && c1.difference < 1e-6 && c2.difference < 1e-6 &&
           c1.identity_residual < 1e-8 &&
           std::abs(c1.cs_change - c2.cs_change) < 1e-6;
    detail << "; twisted: diff " << fmt(std::max(c1.difference, c2.difference))
           << ", pointwise " << fmt(c1.identity_residual);

    // reference invariance of the degree, zero vs constant toral flat reference
    const TwistedGroupField u1{gf_mul(gf_bumpmap(su2n, 1.0, 3.0), u.u), hd};
    FlatContext zero_ref(su2n, hd, 64, kThreads);
    FlatContext toral_ref(su2n, hd, toral_constant_gauge_field(su2n, 0, 0.35), 64, kThreads);
    const double d0 = degree_flat(u1, zero_ref);
    const double d1 = degree_flat(u1, toral_ref);
    const double dsmooth0 = degree_flat(u, FlatContext(su2n, hd, 32, kThreads));
    const double dsmooth1 = degree_flat(
        u, FlatContext(su2n, hd, toral_constant_gauge_field(su2n, 0, 0.35), 32, kThreads));
    pass = pass && std::abs(d0 - d1) < 1e-8 && std::abs(dsmooth0 - dsmooth1) < 1e-8 &&
           distance_to_integer(d0) < 1e-6;
    detail << "; reference spread " << fmt(std::abs(d0 - d1)) << " (deg-1), "
           << fmt(std::abs(dsmooth0 - dsmooth1)) << " (deg-0)";
  }
  detail << ", " << fmt(elapsed_s(t0)) << "s";
  report_line(7, "functional change equals the degree on trivial and twisted bundles", pass,
              detail.str());
}

void criterion_8() {
  const auto t0 = std::chrono::steady_clock::now();
  const HolonomyData hd = quarter_turn();
  SpectralGaugeField A(su2n, hd, 4);
  A.blocks[0].toral[0].at(0, 0, 0) = 0.2;  // flat start: constant toral field
  add_random_perturbation(A, 1e-2, 42);
  const double r0 = spectral::curvature_residual(A);
  FlattenOptions opts;
  opts.tol = 1e-10;
  opts.max_iters = 10000;
  const FlattenResult r = minimize_curvature(A, opts);
  const bool pass = r.converged && r.residual < 1e-10 && r.iterations <= 10000;
  report_line(8, "flat-connection search from a 1e-2 perturbation at bandwidth 4", pass,
              "R0 " + fmt(r0) + " -> R " + fmt(r.residual) + " in " +
                  std::to_string(r.iterations) + " iterations, " + fmt(elapsed_s(t0)) + "s");
}

void criterion_9() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string which = "";
  for (const std::string name : {"su2_identities.json", "u1_cs.json", "twisted.json"}) {
    const Scenario sc = load_scenario(name);
    RunOptions o1, o2, o3;
    o1.threads = 1;
    o2.threads = 4;
    o3.threads = 3;
    const std::string j1 = run_verify(sc, o1).to_json().dump(2);
    const std::string j2 = run_verify(sc, o2).to_json().dump(2);
    const std::string j3 = run_verify(sc, o3).to_json().dump(2);
    if (j1 != j2 || j1 != j3) {
      pass = false;
      which += name + " ";
    }
  }
  report_line(9, "verify reports are byte-identical across thread counts", pass,
              (pass ? std::string("three corpus scenarios, threads 1/3/4")
                    : "mismatch in " + which) +
                  ", " + fmt(elapsed_s(t0)) + "s");
}

}  // namespace

int main() {
  try {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
  } catch (const std::exception& e) {
    std::printf("[FAIL] acceptance aborted: %s\n", e.what());
    return 1;
  }
  if (g_failures == 0) {
    std::printf("all acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", g_failures);
  return 1;
}
