#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "flatcs/degree.hpp"
#include "flatcs/flat_bundle.hpp"
#include "flatcs/fourier.hpp"
#include "flatcs/gauge.hpp"
#include "flatcs/scenario.hpp"
#include "flatcs/sphere.hpp"

namespace flatcs {

inline constexpr const char* kVersion = "flatcs 0.1.0";

struct CheckRecord {
  std::string name;
  std::string label;
  double residual = 0.0;
  std::optional<double> value;
  double tolerance = 0.0;
  bool pass = false;
};

struct Report {
  std::string scenario;
  int grid = 16;
  std::vector<std::string> warnings;
  std::vector<CheckRecord> checks;

  bool all_pass() const {
    for (const CheckRecord& c : checks)
      if (!c.pass) return false;
    return true;
  }

  Json to_json() const {
    Json j;
    j["version"] = kVersion;
    j["scenario"] = scenario;
    j["grid"] = grid;
    j["summation"] = "lexicographic-neumaier";
    if (!warnings.empty()) j["warnings"] = warnings;
    Json arr = Json::array();
    for (const CheckRecord& c : checks) {
      Json cj;
      cj["name"] = c.name;
      cj["label"] = c.label;
      if (c.value) cj["value"] = *c.value;
      cj["residual"] = c.residual;
      cj["tolerance"] = c.tolerance;
      cj["pass"] = c.pass;
      arr.push_back(cj);
    }
    j["checks"] = arr;
    j["pass"] = all_pass();
    return j;
  }
};

struct RunOptions {
  int threads = 1;
  std::optional<int> grid;
  std::optional<double> tol;
  bool oracle = false;
  std::optional<GroupElement> regular_value;
  std::string field = "A";
  std::string reference = "A0";
  std::string direction = "a";
  std::string transform = "u";
  int bandwidth = 4;
  int max_iters = 10000;
  double flatten_tol = 1e-10;
  std::function<void(int, double, double)> flatten_log;
};

namespace runner_detail {

/// Fixed registry: check id -> statement label and default tolerance. The
/// label is the verified statement itself and is emitted verbatim in reports.
struct CheckInfo {
  const char* label;
  double tol;
};

inline const std::map<std::string, CheckInfo>& check_registry() {
  static const std::map<std::string, CheckInfo> reg{
      {"mc_value", {"Theta(i,j,k) = -2 at unit scale", 1e-14}},
      {"normalization",
       {"vol(S3) = 2 pi^2, int_S3 Theta = -4 pi^2, lambda* = 1/(4 pi^2)", 1e-9}},
      {"bi_invariance", {"Theta is bi-invariant", 1e-12}},
      {"bianchi", {"d_A F_A = 0", 1e-10}},
      {"cocycle", {"(u v)*theta = Ad_{v^-1}(u*theta) + v*theta", 1e-10}},
      {"mc_closed", {"d(u*Theta) = 0", 1e-9}},
      {"cs3_exact", {"d(<A^F_A> - (1/6)<A^[A^A]>) = <F_A^F_A>", 1e-8}},
      {"transgression", {"d(cs(A)) = <F_A^F_A> - <F_A0^F_A0>", 1e-8}},
      {"gauge_change",
       {"cs(u.A) - cs(A) - u*Theta = d<Ad_{u^-1}A ^ u*theta>", 1e-8}},
      {"curvature_equivariance", {"F_{u.A} = Ad_{u^-1} F_A", 1e-10}},
      {"variation", {"F_{A+a} = F_A + d_A a + (1/2)[a^a]", 1e-10}},
      {"mc_velocity", {"d/dt|_0 (exp(tX))*theta = dX", 1e-6}},
      {"grad_pairing", {"dCS_A(a) = 2 int <F_A ^ a>", 1e-6}},
      {"grad_orbit", {"2 int <F_A ^ d_A X> = 0", 1e-8}},
      {"cw_closed", {"d<F_A ^ F_A> = 0", 1e-9}},
      {"cw_gauge_invariance", {"<F_{u.A} ^ F_{u.A}> = <F_A ^ F_A>", 1e-10}},
      {"cs_value", {"CS(A) = int cs(A)", 1e-9}},
      {"cs_change_constant", {"CS(u.A) - CS(A) does not depend on A", 1e-6}},
      {"reference_shift", {"CS_by_A0 - CS_by_A1 is constant in A", 1e-8}},
      {"cs_vs_degree", {"CS(u.A) - CS(A) = deg(u)", 1e-6}},
      {"degree_value", {"deg(u) = int of the normalized 3-form pullback", 1e-6}},
      {"degree_integer", {"deg(u) is an integer", 1e-6}},
      {"degree_oracle", {"quadrature degree = preimage-count degree", 1e-6}},
      {"degree_reference_invariance",
       {"deg(u) does not depend on the reference flat connection", 1e-8}},
      {"twisting", {"fields satisfy the declared twisting law", 1e-8}},
      {"flatten", {"curvature residual of the optimized field", 1e-10}},
  };
  return reg;
}

inline const FieldEntry& use_field(const Scenario& sc, const CheckRequest& cr,
                                   const std::string& role, const std::string& fallback = "") {
  auto it = cr.use.find(role);
  const std::string name =
      it != cr.use.end() ? it->second : (fallback.empty() ? role : fallback);
  return sc.field(name);
}

inline VForm gauge_from(const Scenario& sc, const CheckRequest& cr, const std::string& role) {
  const FieldEntry& e = use_field(sc, cr, role);
  if (e.kind != FieldEntry::Kind::Form || e.form.degree != 1 ||
      e.form.val != ValueSpace::Lie)
    throw error("role '" + role + "' needs an algebra-valued 1-form");
  VForm f = e.form;
  f.spec = sc.spec;
  return f;
}

inline VForm optional_gauge_from(const Scenario& sc, const CheckRequest& cr,
                                 const std::string& role) {
  auto it = cr.use.find(role);
  if (it == cr.use.end() && sc.fields.find(role) == sc.fields.end())
    return zero_form(sc.dim, 1, ValueSpace::Lie, sc.spec);
  return gauge_from(sc, cr, role);
}

inline GroupField group_from(const Scenario& sc, const CheckRequest& cr,
                             const std::string& role) {
  const FieldEntry& e = use_field(sc, cr, role);
  if (e.kind != FieldEntry::Kind::Group)
    throw error("role '" + role + "' needs a group-valued field");
  return e.group;
}

inline VForm algebra0_from(const Scenario& sc, const CheckRequest& cr,
                           const std::string& role) {
  const FieldEntry& e = use_field(sc, cr, role);
  if (e.kind != FieldEntry::Kind::Algebra)
    throw error("role '" + role + "' needs an algebra-valued 0-form");
  VForm f = e.form;
  f.spec = sc.spec;
  return f;
}

inline std::vector<Pt> check_samples(int n) { return sample_points(n, 8, 100, 2024); }

}  // namespace runner_detail

/// Execute one named check against a scenario.
inline CheckRecord run_check(const Scenario& sc, const CheckRequest& cr,
                             const RunOptions& opt) {
  using namespace runner_detail;
  const auto& reg = check_registry();
  auto rit = reg.find(cr.id);
  if (rit == reg.end()) throw error("unknown check '" + cr.id + "'");

  CheckRecord rec;
  rec.name = cr.id;
  rec.label = rit->second.label;
  rec.tolerance = cr.tol ? *cr.tol : rit->second.tol;
  const int grid = cr.grid ? *cr.grid : (opt.grid ? *opt.grid : sc.grid);
  const int threads = opt.threads;
  const std::vector<Pt> pts = check_samples(sc.dim);

  if (cr.id == "mc_value") {
    // frame map with derivative (i, j, k) at the origin
    auto axis_field = [&](int axis, int channel) {
      std::vector<ScalarField> ch(static_cast<size_t>(sc.spec->algebra_dim()), sf_num(0.0));
      ch[static_cast<size_t>(channel)] = sf_coord(axis);
      std::vector<std::vector<ScalarField>> comps{ch};
      return gf_qexp(sc.spec,
                     form_from_components(3, 0, ValueSpace::Lie, sc.spec, std::move(comps)));
    };
    int su2_off = -1;
    for (size_t f = 0; f < sc.spec->factors.size(); ++f)
      if (sc.spec->factors[f] == Factor::Su2) {
        su2_off = sc.spec->algebra_offset(f);
        break;
      }
    if (su2_off < 0) throw error("mc_value needs an su(2) factor");
    const GroupField u = gf_mul(gf_mul(axis_field(0, su2_off), axis_field(1, su2_off + 1)),
                                axis_field(2, su2_off + 2));
    auto unit = LieAlgebraSpec::make(sc.spec->factors,
                                     std::vector<double>(sc.spec->factors.size(), 1.0));
    const VForm w = mc_three_form(u, unit, 3);
    const auto v = evaluate(w, make_pt(3, 0, 0, 0),
                            {std::array<double, 4>{1, 0, 0, 0}, std::array<double, 4>{0, 1, 0, 0},
                             std::array<double, 4>{0, 0, 1, 0}});
    rec.value = v[0];
    rec.residual = std::abs(v[0] + 2.0);
  } else if (cr.id == "normalization") {
    const NormalizationData d = derive_su2_normalization(64);
    rec.value = d.lambda_star;
    rec.residual = std::max({std::abs(d.volume - 2.0 * kPi * kPi),
                             std::abs(d.theta_integral + 4.0 * kPi * kPi),
                             std::abs(d.lambda_star * 4.0 * kPi * kPi - 1.0)});
  } else if (cr.id == "bi_invariance") {
    rec.residual = theta_bi_invariance_residual(1000, 7);
  } else if (cr.id == "bianchi") {
    rec.residual = residual_bianchi(gauge_from(sc, cr, "A"), pts);
  } else if (cr.id == "cocycle") {
    rec.residual = residual_cocycle(group_from(sc, cr, "u"), group_from(sc, cr, "v"),
                                    sc.dim, pts);
  } else if (cr.id == "mc_closed") {
    rec.residual = max_pointwise_norm(
        exterior_derivative(mc_three_form(group_from(sc, cr, "u"), sc.spec, sc.dim)), pts);
  } else if (cr.id == "cs3_exact") {
    rec.residual = residual_cs3_exactness(gauge_from(sc, cr, "A"), pts);
  } else if (cr.id == "transgression") {
    CSContext ctx(sc.spec, optional_gauge_from(sc, cr, "A0"), grid, threads);
    rec.residual = residual_transgression(gauge_from(sc, cr, "A"), ctx, pts);
  } else if (cr.id == "gauge_change") {
    rec.residual =
        residual_gauge_change(gauge_from(sc, cr, "A"), group_from(sc, cr, "u"), sc.spec, pts);
  } else if (cr.id == "curvature_equivariance") {
    rec.residual =
        residual_curvature_equivariance(gauge_from(sc, cr, "A"), group_from(sc, cr, "u"), pts);
  } else if (cr.id == "variation") {
    rec.residual = residual_variation(gauge_from(sc, cr, "A"), gauge_from(sc, cr, "a"), pts);
  } else if (cr.id == "mc_velocity") {
    rec.residual = residual_mc_velocity(algebra0_from(sc, cr, "X"), pts);
  } else if (cr.id == "grad_pairing") {
    CSContext ctx(sc.spec, optional_gauge_from(sc, cr, "A0"), grid, threads);
    const VForm A = gauge_from(sc, cr, "A");
    const VForm a = gauge_from(sc, cr, "a");
    const double pairing = cs_gradient_pairing(A, a, ctx);
    rec.value = pairing;
    rec.residual = std::abs(pairing - cs_directional_fd(A, a, ctx));
  } else if (cr.id == "grad_orbit") {
    CSContext ctx(sc.spec, sc.dim, grid, threads);
    const VForm A = gauge_from(sc, cr, "A");
    const VForm orbit = twisted_derivative(A, algebra0_from(sc, cr, "X"));
    rec.value = cs_gradient_pairing(A, orbit, ctx);
    rec.residual = std::abs(*rec.value);
  } else if (cr.id == "cw_closed") {
    CSContext ctx(sc.spec, sc.dim, grid, threads);
    rec.residual = residual_cw_closed(gauge_from(sc, cr, "A"), ctx, pts);
  } else if (cr.id == "cw_gauge_invariance") {
    CSContext ctx(sc.spec, sc.dim, grid, threads);
    rec.residual =
        residual_cw_gauge_invariance(gauge_from(sc, cr, "A"), group_from(sc, cr, "u"), ctx, pts);
  } else if (cr.id == "cs_value") {
    CSContext ctx(sc.spec, optional_gauge_from(sc, cr, "A0"), grid, threads);
    const double cs = cs_functional(gauge_from(sc, cr, "A"), ctx);
    rec.value = cs;
    if (!cr.expect) throw error("cs_value needs an 'expect' entry");
    rec.residual = std::abs(cs - *cr.expect);
  } else if (cr.id == "cs_change_constant") {
    CSContext ctx(sc.spec, sc.dim, grid, threads);
    const GroupField u = group_from(sc, cr, "u");
    const VForm A1 = gauge_from(sc, cr, "A");
    const VForm A2 = gauge_from(sc, cr, "A2");
    const double d1 = cs_functional(gauge_act(u, A1), ctx) - cs_functional(A1, ctx);
    const double d2 = cs_functional(gauge_act(u, A2), ctx) - cs_functional(A2, ctx);
    rec.value = d1;
    rec.residual = std::abs(d1 - d2);
  } else if (cr.id == "reference_shift") {
    CSContext c0(sc.spec, gauge_from(sc, cr, "A0"), grid, threads);
    CSContext c1(sc.spec, gauge_from(sc, cr, "A1"), grid, threads);
    const VForm A1 = gauge_from(sc, cr, "A");
    const VForm A2 = gauge_from(sc, cr, "A2");
    const double d1 = cs_functional(A1, c0) - cs_functional(A1, c1);
    const double d2 = cs_functional(A2, c0) - cs_functional(A2, c1);
    rec.value = d1;
    rec.residual = std::abs(d1 - d2);
  } else if (cr.id == "cs_vs_degree") {
    const HolonomyData hol =
        sc.holonomy ? *sc.holonomy : identity_holonomy(sc.spec);
    FlatContext fctx(sc.spec, hol, grid, threads);
    const DegreeComparison cmp = cs_change_vs_degree(
        {gauge_from(sc, cr, "A"), hol}, {group_from(sc, cr, "u"), hol}, fctx);
    rec.value = cmp.degree;
    rec.residual = std::max(cmp.difference, cmp.identity_residual);
  } else if (cr.id == "degree_value" || cr.id == "degree_integer") {
    const GroupField u = group_from(sc, cr, "u");
    double deg;
    if (sc.holonomy) {
      FlatContext fctx(sc.spec, *sc.holonomy, grid, threads);
      deg = degree_flat({u, *sc.holonomy}, fctx);
    } else {
      deg = degree_trivial(u, sc.spec, grid, threads);
    }
    rec.value = deg;
    if (cr.id == "degree_integer")
      rec.residual = distance_to_integer(deg);
    else if (cr.expect)
      rec.residual = std::abs(deg - *cr.expect);
    else
      rec.residual = distance_to_integer(deg);
  } else if (cr.id == "degree_oracle") {
    const GroupField u = group_from(sc, cr, "u");
    const double deg = sc.holonomy
                           ? degree_flat({u, *sc.holonomy},
                                         FlatContext(sc.spec, *sc.holonomy, grid, threads))
                           : degree_trivial(u, sc.spec, grid, threads);
    GroupElement q = cr.regular_value
                         ? *cr.regular_value
                         : (opt.regular_value ? *opt.regular_value
                                              : exp_map(basis_element(sc.spec, 0, 0, 0.9)));
    const int oracle = brouwer_degree_oracle(u, q);
    rec.value = static_cast<double>(oracle);
    rec.residual = std::abs(deg - oracle);
  } else if (cr.id == "degree_reference_invariance") {
    if (!sc.holonomy) throw error("degree_reference_invariance needs a holonomy");
    const GroupField u = group_from(sc, cr, "u");
    FlatContext zero_ref(sc.spec, *sc.holonomy, grid, threads);
    FlatContext toral_ref(sc.spec, *sc.holonomy, toral_constant_gauge_field(sc.spec, 0, 0.35),
                          grid, threads);
    const double d0 = degree_flat({u, *sc.holonomy}, zero_ref);
    const double d1 = degree_flat({u, *sc.holonomy}, toral_ref);
    rec.value = d0;
    rec.residual = std::abs(d0 - d1);
  } else if (cr.id == "twisting") {
    const HolonomyData hol = sc.holonomy ? *sc.holonomy : identity_holonomy(sc.spec);
    double worst = 0.0;
    if (cr.use.empty()) {
      for (const auto& [name, entry] : sc.fields) {
        if (entry.kind == FieldEntry::Kind::Group)
          worst = std::max(worst, validate_twisting(entry.group, hol));
        else if (entry.kind != FieldEntry::Kind::Scalar &&
                 entry.form.val == ValueSpace::Lie) {
          VForm f = entry.form;
          f.spec = sc.spec;
          worst = std::max(worst, validate_twisting(f, hol));
        }
      }
    } else {
      for (const auto& [role, name] : cr.use) {
        const FieldEntry& entry = sc.field(name);
        if (entry.kind == FieldEntry::Kind::Group)
          worst = std::max(worst, validate_twisting(entry.group, hol));
        else {
          VForm f = entry.form;
          f.spec = sc.spec;
          worst = std::max(worst, validate_twisting(f, hol));
        }
      }
    }
    rec.residual = worst;
  } else {
    throw error("check '" + cr.id + "' is not runnable here");
  }

  rec.pass = rec.residual < rec.tolerance && std::isfinite(rec.residual);
  return rec;
}

/// `verify`: run every requested check of the scenario.
inline Report run_verify(const Scenario& sc, const RunOptions& opt) {
  Report rep;
  rep.scenario = sc.id;
  rep.grid = opt.grid ? *opt.grid : sc.grid;
  rep.warnings = sc.warnings;
  for (const CheckRequest& cr : sc.checks) rep.checks.push_back(run_check(sc, cr, opt));
  return rep;
}

inline Report run_cs(const Scenario& sc, const RunOptions& opt) {
  Report rep;
  rep.scenario = sc.id;
  rep.grid = opt.grid ? *opt.grid : sc.grid;
  rep.warnings = sc.warnings;
  CheckRequest cr;
  cr.id = "cs_value";
  cr.use["A"] = opt.field;
  if (sc.fields.count(opt.reference)) cr.use["A0"] = opt.reference;
  CSContext ctx(sc.spec,
                runner_detail::optional_gauge_from(sc, cr, "A0"), rep.grid, opt.threads);
  CheckRecord rec;
  rec.name = "cs_value";
  rec.label = runner_detail::check_registry().at("cs_value").label;
  rec.tolerance = opt.tol ? *opt.tol : 1e-9;
  rec.value = cs_functional(runner_detail::gauge_from(sc, cr, "A"), ctx);
  rec.residual = 0.0;
  rec.pass = std::isfinite(*rec.value);
  rep.checks.push_back(rec);
  return rep;
}

inline Report run_degree(const Scenario& sc, const RunOptions& opt) {
  Report rep;
  rep.scenario = sc.id;
  rep.grid = opt.grid ? *opt.grid : sc.grid;
  rep.warnings = sc.warnings;
  CheckRequest cr;
  cr.id = "degree_integer";
  cr.use["u"] = opt.transform;
  if (opt.tol) cr.tol = opt.tol;
  cr.grid = rep.grid;
  rep.checks.push_back(run_check(sc, cr, opt));
  if (opt.oracle) {
    CheckRequest co;
    co.id = "degree_oracle";
    co.use["u"] = opt.transform;
    co.grid = rep.grid;
    if (opt.regular_value) co.regular_value = opt.regular_value;
    rep.checks.push_back(run_check(sc, co, opt));
  }
  return rep;
}

inline Report run_grad(const Scenario& sc, const RunOptions& opt) {
  Report rep;
  rep.scenario = sc.id;
  rep.grid = opt.grid ? *opt.grid : sc.grid;
  rep.warnings = sc.warnings;
  CheckRequest cr;
  cr.id = "grad_pairing";
  cr.use["A"] = opt.field;
  cr.use["a"] = opt.direction;
  cr.grid = rep.grid;
  if (opt.tol) cr.tol = opt.tol;
  rep.checks.push_back(run_check(sc, cr, opt));
  return rep;
}

inline Report run_flatten(const Scenario& sc, const RunOptions& opt) {
  Report rep;
  rep.scenario = sc.id;
  rep.grid = opt.grid ? *opt.grid : sc.grid;
  rep.warnings = sc.warnings;
  const HolonomyData hol = sc.holonomy ? *sc.holonomy : identity_holonomy(sc.spec);
  CheckRequest cr;
  cr.use["A"] = opt.field;
  VForm A = runner_detail::gauge_from(sc, cr, "A");
  SpectralGaugeField S = project_to_spectral(A, hol, opt.bandwidth);
  FlattenOptions fo;
  fo.tol = opt.flatten_tol;
  fo.max_iters = opt.max_iters;
  fo.log = opt.flatten_log;
  const FlattenResult r = minimize_curvature(S, fo);
  CheckRecord rec;
  rec.name = "flatten";
  rec.label = runner_detail::check_registry().at("flatten").label;
  rec.tolerance = fo.tol;
  rec.value = static_cast<double>(r.iterations);
  rec.residual = r.residual;
  rec.pass = r.converged;
  rep.checks.push_back(rec);
  return rep;
}

inline Report run_normalize(const Scenario& sc, const RunOptions& opt) {
  (void)opt;
  Report rep;
  rep.scenario = sc.id;
  rep.grid = sc.grid;
  rep.warnings = sc.warnings;
  CheckRequest cr;
  cr.id = "normalization";
  rep.checks.push_back(run_check(sc, cr, RunOptions{}));
  return rep;
}

inline Report run_command(const std::string& cmd, const Scenario& sc, const RunOptions& opt) {
  if (cmd == "verify") return run_verify(sc, opt);
  if (cmd == "cs") return run_cs(sc, opt);
  if (cmd == "degree") return run_degree(sc, opt);
  if (cmd == "grad") return run_grad(sc, opt);
  if (cmd == "flatten") return run_flatten(sc, opt);
  if (cmd == "normalize") return run_normalize(sc, opt);
  throw error("unknown command '" + cmd + "'");
}

}  // namespace flatcs
