#include "abdsde/comparison_harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include "abdsde/error.hpp"

namespace abdsde {

double ComparisonReport::violation_fraction(double eps) const {
  std::size_t bad = 0;
  for (double v : margin.data()) bad += v < -eps ? 1 : 0;
  return margin.data().empty() ? 0.0
                               : static_cast<double>(bad) / static_cast<double>(margin.data().size());
}

std::vector<double> ComparisonReport::violation_fraction_by_node(double eps) const {
  std::vector<double> out(margin.nodes(), 0.0);
  for (int k = 0; k < margin.nodes(); ++k) {
    std::size_t bad = 0;
    for (double v : margin.node(k)) bad += v < -eps ? 1 : 0;
    out[k] = static_cast<double>(bad) / static_cast<double>(margin.paths());
  }
  return out;
}

double ComparisonReport::worst_margin() const {
  return margin.data().empty() ? 0.0 : *std::min_element(margin.data().begin(), margin.data().end());
}

TerminalSpec shifted_terminal(const TerminalSpec& base, double shift) {
  return TerminalSpec(
      base.name() + "+shift",
      [base, shift](const TimeGrid& grid, int k, const PathView& path, std::span<double> xi,
                    std::span<double> eta) {
        base.evaluate(grid, k, path, xi, eta);
        for (double& x : xi) x += shift;
      },
      base.deterministic());
}

namespace {

std::vector<double> node_means(const PathProcess& Y) {
  std::vector<double> out(Y.nodes(), 0.0);
  for (int k = 0; k < Y.nodes(); ++k) {
    double s = 0.0;
    for (double v : Y.node(k)) s += v;
    out[k] = s / static_cast<double>(Y.node(k).size());
  }
  return out;
}

double refinement_delta(const Scenario& scenario, const SolutionProcess& fine,
                        const PathEnsemble& coarse_paths, const CondExpBackend& backend) {
  const Scenario coarse = scenario.with_grid(2.0 * scenario.grid().h);
  const SolutionProcess sol = solve_backward_sweep(coarse, coarse_paths, backend);
  const std::vector<double> mf = node_means(fine.Y);
  const std::vector<double> mc = node_means(sol.Y);
  double delta = 0.0;
  for (std::size_t k = 0; k < mc.size(); ++k) delta = std::max(delta, std::abs(mf[2 * k] - mc[k]));
  return delta;
}

}  // namespace

ComparisonReport run_comparison(const Scenario& first, const Scenario& second,
                                const PathEnsemble& paths, const CondExpBackend& backend,
                                std::optional<double> epsilon) {
  if (!(first.grid() == second.grid()) || first.dims() != second.dims()) {
    throw Error(ErrorKind::kShapeMismatch, "compared scenarios must share grid and dimensions");
  }
  if (first.dims().m != 1) {
    throw Error(ErrorKind::kShapeMismatch, "comparison is defined for m = 1");
  }
  const TerminalData t1 = first.terminal().materialize(paths, first.dims());
  const TerminalData t2 = second.terminal().materialize(paths, second.dims());
  for (std::size_t i = 0; i < t1.xi.data().size(); ++i) {
    if (t1.xi.data()[i] < t2.xi.data()[i]) {
      throw Error(ErrorKind::kTerminalOrderViolated,
                  "xi1 < xi2 on terminal sample " + std::to_string(i));
    }
  }

  const SolutionProcess s1 = solve_backward_sweep(first, paths, backend);
  const SolutionProcess s2 = solve_backward_sweep(second, paths, backend);

  ComparisonReport report;
  report.grid = first.grid();
  report.margin = PathProcess(paths.size(), report.grid.nodes(), 1, 1);
  for (std::size_t i = 0; i < s1.Y.data().size(); ++i) {
    report.margin.data()[i] = s1.Y.data()[i] - s2.Y.data()[i];
  }
  report.mean_margin = node_means(report.margin);
  report.min_margin.resize(report.grid.nodes());
  for (int k = 0; k < report.grid.nodes(); ++k) {
    const auto node = report.margin.node(k);
    report.min_margin[k] = *std::min_element(node.begin(), node.end());
  }

  // Only the Y-valued fits bound the error in Y; the Z target is far noisier.
  report.fit_stderr = std::max(s1.fit_stderr_Y, s2.fit_stderr_Y);
  const TimeGrid& g = report.grid;
  if (!backend.is_exact() && g.n_T % 2 == 0 && g.n_end % 2 == 0) {
    const PathEnsemble coarse = paths.coarsen(2);
    report.refinement_delta = std::max(refinement_delta(first, s1, coarse, backend),
                                       refinement_delta(second, s2, coarse, backend));
  }
  report.tolerance = report.fit_stderr + report.refinement_delta;
  report.epsilon = epsilon ? *epsilon : std::max(3.0 * report.tolerance, 1e-10);
  return report;
}

MonotoneChainReport check_monotone_chain(const GeneratorSpec& f1, const GeneratorSpec& ftilde,
                                         const GeneratorSpec& f2, std::size_t samples,
                                         std::uint64_t seed) {
  for (const GeneratorSpec* g : {&f1, &ftilde, &f2}) {
    if (g->dims() != Dims{1, 1, 1}) {
      throw Error(ErrorKind::kShapeMismatch, "monotone chain check needs scalar generators");
    }
  }
  constexpr std::array<double, 3> kScales = {0.1, 1.0, 10.0};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  auto close_below = [](double a, double b) { return a < b - 1e-12 * (1.0 + std::abs(b)); };
  auto f_at = [](const GeneratorSpec& g, double t, double y, double z, double yf, double zf) {
    return g.evaluate_at_point(t, {&y, 1}, {&z, 1}, {&yf, 1}, {&zf, 1}).f[0];
  };

  MonotoneChainReport report;
  report.samples = samples;
  for (std::size_t s = 0; s < samples; ++s) {
    const double scale = kScales[s % kScales.size()];
    const double t = uniform(rng);
    const double y = scale * normal(rng);
    const double z = scale * normal(rng);
    const double yf = scale * normal(rng);
    const double zf = scale * normal(rng);
    const double yf_hi = yf + scale * std::abs(normal(rng));

    const double a = f_at(f1, t, y, z, yf, zf);
    const double b = f_at(ftilde, t, y, z, yf, zf);
    const double c = f_at(f2, t, y, z, yf, zf);
    const bool order_bad = close_below(a, b) || close_below(b, c);
    const double b_hi = f_at(ftilde, t, y, z, yf_hi, zf);
    const bool mono_bad = close_below(b_hi, b);
    report.order_violations += order_bad ? 1 : 0;
    report.monotonicity_violations += mono_bad ? 1 : 0;
    if ((order_bad || mono_bad) && report.first_counterexample.empty()) {
      std::ostringstream os;
      os.precision(17);
      os << (order_bad ? "order" : "monotonicity") << " at t=" << t << " y=" << y << " z=" << z
         << " y'=" << yf << " y'_hi=" << yf_hi << " z'=" << zf;
      report.first_counterexample = os.str();
    }
  }
  report.pass = report.order_violations == 0 && report.monotonicity_violations == 0;
  return report;
}

}  // namespace abdsde
