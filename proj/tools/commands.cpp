#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

namespace abdsde::cli {
namespace {

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void header_block(std::ostream& out, const std::string& command, const ScenarioFile& file) {
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << file.hash;
  out << "# abdsde " << command << '\n';
  out << "# scenario_hash: " << hash.str() << '\n';
  out << "# resolved: " << file.resolved << '\n';
  out << "# backend: " << file.backend.describe() << '\n';
}

struct Stat {
  double mean = 0.0;
  double stderr_ = 0.0;
};

Stat stat(const std::vector<double>& v) {
  Stat s;
  const double n = static_cast<double>(v.size());
  for (double x : v) s.mean += x;
  s.mean /= n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.stderr_ = std::sqrt(ss / (n - 1.0) / n);
  }
  return s;
}

ExitStatus run_solve(const ScenarioFile& file, std::ostream& out) {
  const PathEnsemble paths = file.make_paths();
  const SolutionProcess sol = solve_backward_sweep(file.scenario, paths, file.backend);
  const TimeGrid& grid = file.scenario.grid();
  header_block(out, "solve", file);
  out << "# paths: " << paths.size() << '\n';
  out << "# fit_stderr: " << num(sol.fit_stderr) << '\n';
  out << "# energy_Y: " << num(sol.energy_Y) << '\n';
  out << "# energy_Z: " << num(sol.energy_Z) << '\n';
  out << "t,mean_Y,stderr_Y,mean_absZ,stderr_absZ\n";
  std::vector<double> y(paths.size()), z(paths.size());
  for (int k = 0; k <= grid.n_end; ++k) {
    for (std::size_t p = 0; p < paths.size(); ++p) {
      y[p] = sol.Y.at(p, k)[0];
      double zz = 0.0;
      for (double v : sol.Z.at(p, k)) zz += v * v;
      z[p] = std::sqrt(zz);
    }
    const Stat sy = stat(y);
    const Stat sz = stat(z);
    out << num(grid.t(k)) << ',' << num(sy.mean) << ',' << num(sy.stderr_) << ','
        << num(sz.mean) << ',' << num(sz.stderr_) << '\n';
  }
  return ExitStatus::kPass;
}

ExitStatus run_compare(const ScenarioFile& file, std::ostream& out) {
  if (!file.compare) throw Error(ErrorKind::kInvalidArgument, "scenario has no compare section");
  const PathEnsemble paths = file.make_paths();
  const ComparisonReport report =
      run_comparison(file.scenario, *file.compare, paths, file.backend, file.compare_epsilon);
  const double v = report.violation_fraction(report.epsilon);
  header_block(out, "compare", file);
  out << "# paths: " << paths.size() << '\n';
  out << "# fit_stderr: " << num(report.fit_stderr) << '\n';
  out << "# refinement_delta: " << num(report.refinement_delta) << '\n';
  out << "# epsilon: " << num(report.epsilon) << '\n';
  out << "# violation_fraction: " << num(v) << '\n';
  out << "# result: " << (v == 0.0 ? "PASS" : "FAIL") << '\n';
  out << "t,mean_margin,min_margin,violation_fraction_eps\n";
  const std::vector<double> by_node = report.violation_fraction_by_node(report.epsilon);
  for (int k = 0; k < report.grid.nodes(); ++k) {
    out << num(report.grid.t(k)) << ',' << num(report.mean_margin[k]) << ','
        << num(report.min_margin[k]) << ',' << num(by_node[k]) << '\n';
  }
  return v == 0.0 ? ExitStatus::kPass : ExitStatus::kFail;
}

ExitStatus run_duality(const ScenarioFile& file, std::ostream& out) {
  if (!file.duality) throw Error(ErrorKind::kInvalidArgument, "scenario has no duality section");
  const DualitySettings& ds = *file.duality;
  const PathEnsemble paths =
      file.backend.is_exact()
          ? file.make_paths()
          : nested_paths(file.scenario.grid(), ds.outer_paths, ds.inner_paths, file.seed);
  const std::size_t inner = file.backend.is_exact() ? 1 : ds.inner_paths;
  const DualityReport report = duality_check(ds.coeffs, paths, inner, file.backend, ds.levels);
  header_block(out, "duality", file);
  out << "# outer_paths: " << report.residual.size() << '\n';
  out << "# inner_paths: " << inner << '\n';
  for (const DualityLevel& level : report.ladder) {
    out << "# ladder: h=" << num(level.h) << " mean_signed_residual="
        << num(level.mean_signed_residual) << '\n';
  }
  out << "# calibrated: " << (report.calibrated ? "yes" : "no") << '\n';
  out << "# C_est: " << num(report.C_est) << '\n';
  out << "# mean_abs_residual: " << num(report.mean_abs_residual) << " tol_mean: "
      << num(report.tol_mean) << '\n';
  out << "# max_abs_residual: " << num(report.max_abs_residual) << " tol_max: "
      << num(report.tol_max) << '\n';
  out << "# result: " << (report.pass ? "PASS" : "FAIL") << '\n';
  out << "outer_path,residual\n";
  for (std::size_t o = 0; o < report.residual.size(); ++o) {
    out << o << ',' << num(std::abs(report.residual[o])) << '\n';
  }
  out << "summary," << num(report.mean_abs_residual) << '\n';
  return report.pass ? ExitStatus::kPass : ExitStatus::kFail;
}

ExitStatus run_oracle_check(const ScenarioFile& file, std::ostream& out) {
  const Scenario& scenario = file.scenario;
  const OracleSolution oracle = oracle_solve(scenario);
  const PathEnsemble tree = oracle.tree.ensemble(scenario.grid());
  const SolutionProcess sol = solve_backward_sweep(scenario, tree, CondExpBackend::exact());
  const OracleDiff diff = compare_to_oracle(oracle, sol);
  const bool pass = diff.max_Y <= 1e-10 && diff.max_Z <= 1e-10;
  header_block(out, "oracle-check", file);
  out << "# atoms: " << oracle.tree.atoms() << '\n';
  out << "# max_abs_diff_Y: " << num(diff.max_Y) << '\n';
  out << "# max_abs_diff_Z: " << num(diff.max_Z) << '\n';
  out << "# result: " << (pass ? "PASS" : "FAIL") << '\n';
  out << "t,max_abs_diff_Y,max_abs_diff_Z\n";
  for (int k = 0; k < scenario.grid().nodes(); ++k) {
    out << num(scenario.grid().t(k)) << ',' << num(diff.max_abs_diff_Y[k]) << ','
        << num(diff.max_abs_diff_Z[k]) << '\n';
  }
  return pass ? ExitStatus::kPass : ExitStatus::kFail;
}

ExitStatus run_segment(const ScenarioFile& file, std::ostream& out) {
  if (!file.scenario.delay()) {
    throw Error(ErrorKind::kInvalidArgument, "segment needs a delay section");
  }
  const Segmentation seg = segment_interval(file.scenario.delay()->spec, file.scenario.grid());
  header_block(out, "segment", file);
  out << "# N: " << seg.N << '\n';
  out << "i,t_i\n";
  for (std::size_t i = 0; i < seg.points.size(); ++i) out << i << ',' << num(seg.points[i]) << '\n';
  return ExitStatus::kPass;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"solve", "compare", "duality", "oracle-check",
                                                 "segment"};
  return names;
}

ExitStatus run_command(const std::string& command, const ScenarioFile& file, std::ostream& csv) {
  if (command == "solve") return run_solve(file, csv);
  if (command == "compare") return run_compare(file, csv);
  if (command == "duality") return run_duality(file, csv);
  if (command == "oracle-check") return run_oracle_check(file, csv);
  if (command == "segment") return run_segment(file, csv);
  throw Error(ErrorKind::kUnknownName, "unknown command '" + command + "'");
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Solver and numerical checks for anticipated backward doubly stochastic DEs"};
  std::string command;
  std::string scenario_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<double> grid_h;
  app.add_option("command", command, "solve | compare | duality | oracle-check | segment")
      ->required()
      ->check(CLI::IsMember(command_names()));
  app.add_option("scenario", scenario_path, "scenario file (JSON)")->required();
  app.add_option("--out", out_path, "CSV output path")->required();
  app.add_option("--seed", seed, "override the scenario seed");
  app.add_option("--paths", paths, "override the path count");
  app.add_option("--grid-h", grid_h, "override the grid step");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ExitStatus::kError);
  }

  try {
    const ScenarioFile file = load_scenario(scenario_path, Overrides{seed, paths, grid_h});
    std::ostringstream csv;
    const ExitStatus status = run_command(command, file, csv);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw Error(ErrorKind::kInvalidArgument, "cannot write '" + out_path + "'");
    out << csv.str();
    if (!out.flush()) throw Error(ErrorKind::kInvalidArgument, "write to '" + out_path + "' failed");
    if (status == ExitStatus::kFail) std::cerr << command << ": FAIL (see " << out_path << ")\n";
    return static_cast<int>(status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitStatus::kError);
  }
}

}  // namespace abdsde::cli
