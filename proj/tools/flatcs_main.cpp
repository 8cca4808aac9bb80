// flatcs: scenario-driven checks for connections, curvature and degrees on
// flat tori. Commands: verify, cs, degree, grad, flatten, normalize.
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 usage/parse errors.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <variant>

#include <CLI11.hpp>

#include "flatcs/flatcs.hpp"

namespace {

int capped_threads(int requested) {
  int cap = 0;
  if (const char* env = std::getenv("FLATCS_THREADS")) {
    try {
      cap = std::stoi(env);
    } catch (...) {
      cap = 0;
    }
  }
  int t = requested > 0 ? requested : flatcs::resolve_threads(0);
  if (cap > 0) t = std::min(t, cap);
  return std::max(1, t);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw flatcs::error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void emit(const flatcs::Report& rep, const std::string& json_path) {
  const std::string text = rep.to_json().dump(2) + "\n";
  if (!json_path.empty()) {
    std::ofstream out(json_path, std::ios::binary);
    out << text;
  }
  std::cout << text;
  for (const flatcs::CheckRecord& c : rep.checks) {
    std::cerr << (c.pass ? "[PASS] " : "[FAIL] ") << c.name;
    if (c.value) std::cerr << "  value " << *c.value;
    std::cerr << "  residual " << c.residual << "  tol " << c.tolerance << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chern-simons machinery on flat tori"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string json_path;
  std::string csv_path;
  std::string regular_value_text;
  flatcs::RunOptions opt;
  int threads = 0;
  int grid = 0;
  double tol = 0.0;

  auto add_common = [&](CLI::App* cmd, bool scenario_required) {
    cmd->add_option("--scenario", scenario_path, "scenario file (JSON envelope)")
        ->required(scenario_required);
    cmd->add_option("--grid", grid, "quadrature resolution per axis");
    cmd->add_option("--json", json_path, "write the report to this path as well");
    cmd->add_option("--tol", tol, "tolerance override");
    cmd->add_option("--threads", threads, "worker threads (FLATCS_THREADS caps this)");
  };

  CLI::App* verify = app.add_subcommand("verify", "run every check in the scenario");
  add_common(verify, true);

  CLI::App* cs = app.add_subcommand("cs", "value of the functional for a field");
  add_common(cs, true);
  cs->add_option("--field", opt.field, "gauge field name (default A)");
  cs->add_option("--ref", opt.reference, "reference connection name (default A0 or zero)");

  CLI::App* degree = app.add_subcommand("degree", "degree of a gauge transformation");
  add_common(degree, true);
  degree->add_option("--transform", opt.transform, "group field name (default u)");
  degree->add_flag("--oracle", opt.oracle, "cross-check with the preimage-count oracle");
  degree->add_option("--regular-value", regular_value_text,
                     "regular value as JSON coordinates, e.g. [[0.62,0.78,0,0]]");

  CLI::App* grad = app.add_subcommand("grad", "directional pairing vs finite difference");
  add_common(grad, true);
  grad->add_option("--field", opt.field, "gauge field name (default A)");
  grad->add_option("--direction", opt.direction, "direction field name (default a)");

  CLI::App* flatten = app.add_subcommand("flatten", "search a flat connection");
  add_common(flatten, true);
  flatten->add_option("--field", opt.field, "seed gauge field name (default A)");
  flatten->add_option("--bandwidth", opt.bandwidth, "Fourier bandwidth (default 4)");
  flatten->add_option("--max-iters", opt.max_iters, "iteration budget (default 10000)");
  flatten->add_option("--flatten-tol", opt.flatten_tol,
                      "target curvature residual (default 1e-10)");
  flatten->add_option("--csv", csv_path, "write the iteration log as CSV");

  CLI::App* normalize = app.add_subcommand("normalize", "derive the normalization scale");
  add_common(normalize, false);

  CLI11_PARSE(app, argc, argv);

  try {
    opt.threads = capped_threads(threads);
    if (grid > 0) opt.grid = grid;
    if (tol > 0.0) opt.tol = tol;

    flatcs::Scenario sc;
    if (!scenario_path.empty()) {
      auto parsed = flatcs::parse_scenario(read_file(scenario_path));
      if (std::holds_alternative<flatcs::Diagnostic>(parsed)) {
        std::cerr << scenario_path << ": " << std::get<flatcs::Diagnostic>(parsed).str()
                  << "\n";
        return 2;
      }
      sc = std::get<flatcs::Scenario>(parsed);
      for (const std::string& w : sc.warnings) std::cerr << "warning: " << w << "\n";
    } else {
      sc.id = "normalize";
      sc.spec = flatcs::LieAlgebraSpec::su2();
    }

    if (!regular_value_text.empty()) {
      const flatcs::Json j = flatcs::Json::parse(regular_value_text);
      opt.regular_value = flatcs::envelope_detail::group_element_from_json(j, sc.spec);
    }

    std::ofstream csv;
    if (!csv_path.empty()) {
      csv.open(csv_path, std::ios::binary);
      csv << "iteration,residual,step\n";
      opt.flatten_log = [&csv](int it, double r, double s) {
        csv << it << "," << r << "," << s << "\n";
      };
    }

    std::string cmd;
    for (CLI::App* sub : {verify, cs, degree, grad, flatten, normalize})
      if (sub->parsed()) cmd = sub->get_name();

    const flatcs::Report rep = flatcs::run_command(cmd, sc, opt);
    emit(rep, json_path);
    return rep.all_pass() ? 0 : 1;
  } catch (const flatcs::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
