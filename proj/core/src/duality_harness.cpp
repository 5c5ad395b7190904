#include "abdsde/duality_harness.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "abdsde/error.hpp"

namespace abdsde {
namespace {

int steps_of(double value, double h, const char* what) {
  const double ratio = value / h;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) > 1e-9 * std::max(1.0, ratio)) {
    throw Error(ErrorKind::kNonCommensurate,
                std::string(what) + " is not a multiple of h=" + std::to_string(h));
  }
  return static_cast<int>(nearest);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

void LinearDualityCoeffs::validate(double h) const {
  for (double v : {mu, mu_bar, sigma, sigma_bar, kappa, rho, delta, T, t0, xi, xi_slope, eta}) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kInvalidArgument, "non-finite coefficient");
  }
  if (!(delta > 0.0) || !(t0 >= delta) || !(t0 < T)) {
    throw Error(ErrorKind::kInvalidArgument, "duality needs 0 < delta <= t0 < T");
  }
  steps_of(delta, h, "delta");
  steps_of(t0, h, "t0");
  steps_of(T, h, "T");
}

GeneratorSpec LinearDualityCoeffs::generator() const {
  return builtin_generator("duality_linear",
                           Params{{"mu", mu},
                                  {"mu_bar", mu_bar},
                                  {"sigma", sigma},
                                  {"sigma_bar", sigma_bar},
                                  {"kappa", kappa},
                                  {"rho", rho}},
                           Dims{1, 1, 1});
}

TerminalSpec LinearDualityCoeffs::terminal() const {
  return builtin_terminal("linear_in_time",
                          Params{{"value", xi}, {"slope", xi_slope}, {"eta", eta}}, Dims{1, 1, 1});
}

Scenario LinearDualityCoeffs::scenario(double h) const {
  validate(h);
  return Scenario(make_grid(T, delta, h), DelaySpec::uniform(DelayForm::constant(delta)),
                  generator(), terminal());
}

DelayedPaths solve_delayed_dsde(const LinearDualityCoeffs& coeffs, const PathEnsemble& paths,
                                int start) {
  const TimeGrid& grid = paths.grid();
  coeffs.validate(grid.h);
  if (paths.dim_w() != 1 || paths.dim_b() != 1) {
    throw Error(ErrorKind::kShapeMismatch, "delayed DSDE is scalar (d = l = 1)");
  }
  const int D = steps_of(coeffs.delta, grid.h, "delta");
  if (start - D < 0 || start >= grid.n_T) {
    throw Error(ErrorKind::kInvalidArgument, "start node must satisfy delta <= t < T");
  }
  DelayedPaths out;
  out.first = start - D;
  out.start = start;
  out.X = PathProcess(paths.size(), grid.n_T - out.first + 1, 1, 1);
  const double h = grid.h;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    out.X.at(p, start - out.first)[0] = 1.0;
    for (int j = start; j < grid.n_T; ++j) {
      const double x = out.X.at(p, j - out.first)[0];
      const double lag = out.X.at(p, j - D - out.first)[0];
      const double num = x + (coeffs.mu * x + coeffs.mu_bar * lag) * h +
                         (coeffs.sigma * x + coeffs.sigma_bar * lag) * paths.dW(p, j)[0];
      const double next = num / (1.0 - coeffs.kappa * paths.dB(p, j)[0]);
      if (!std::isfinite(next)) {
        throw Error(ErrorKind::kNonFinite, "delayed DSDE blew up at node " + std::to_string(j));
      }
      out.X.at(p, j + 1 - out.first)[0] = next;
    }
  }
  return out;
}

std::vector<double> duality_rhs_samples(const LinearDualityCoeffs& coeffs,
                                        const PathEnsemble& paths, int start) {
  const DelayedPaths X = solve_delayed_dsde(coeffs, paths, start);
  const TimeGrid& grid = paths.grid();
  const int D = start - X.first;
  const int nT = grid.n_T;
  const double h = grid.h;
  auto xi_at = [&](int k) { return coeffs.xi + coeffs.xi_slope * (grid.t(k) - grid.T()); };

  std::vector<double> out(paths.size());
  for (std::size_t p = 0; p < paths.size(); ++p) {
    double r = X.at(p, nT) * coeffs.xi;
    double source = 0.0;
    for (int j = start; j <= nT; ++j) {
      const double w = (j == start || j == nT) ? 0.5 : 1.0;
      source += w * coeffs.rho * X.at(p, j);
    }
    double tail = 0.0;
    for (int s = nT; s <= nT + D; ++s) {
      const double w = (s == nT || s == nT + D) ? 0.5 : 1.0;
      const int lag = s - D;
      const double x = lag < start ? 0.0 : X.at(p, lag);
      tail += w * (coeffs.mu_bar * xi_at(s) + coeffs.sigma_bar * coeffs.eta) * x;
    }
    r += (source + tail) * h;
    out[p] = r;
  }
  return out;
}

PathEnsemble nested_paths(const TimeGrid& grid, std::size_t outer, std::size_t inner,
                          std::uint64_t seed) {
  if (outer < 1 || inner < 1) {
    throw Error(ErrorKind::kInvalidArgument, "nested_paths needs outer, inner >= 1");
  }
  const std::size_t steps = static_cast<std::size_t>(grid.n_end);
  std::vector<double> dW(outer * inner * steps);
  std::vector<double> dB(outer * inner * steps);
  std::vector<double> b(steps);
  for (std::size_t o = 0; o < outer; ++o) {
    gaussian_fill(substream_seed(seed, 2 * o + 1), grid.h, b);
    const std::uint64_t w_master = substream_seed(seed, 2 * o);
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t p = o * inner + i;
      gaussian_fill(substream_seed(w_master, i), grid.h, {dW.data() + p * steps, steps});
      std::copy(b.begin(), b.end(), dB.begin() + static_cast<std::ptrdiff_t>(p * steps));
    }
  }
  return PathEnsemble(grid, 1, 1, std::move(dW), std::move(dB), seed);
}

DualityReport duality_check(const LinearDualityCoeffs& coeffs, const PathEnsemble& paths,
                            std::size_t inner, const CondExpBackend& backend, int levels) {
  if (inner < 1 || paths.size() % inner != 0 || levels < 1) {
    throw Error(ErrorKind::kInvalidArgument, "paths must be outer x inner and levels >= 1");
  }
  const std::size_t outer = paths.size() / inner;
  const double h0 = paths.grid().h;
  DualityReport report;
  report.calibrated = true;

  for (int level = 0; level < levels; ++level) {
    const int factor = 1 << level;
    const double h = h0 * factor;
    PathEnsemble ens = paths;
    try {
      coeffs.validate(h);
      if (level > 0) ens = paths.coarsen(factor);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNonCommensurate) throw;
      report.calibrated = false;
      break;
    }
    const int start = steps_of(coeffs.t0, h, "t0");
    const SolutionProcess sol = solve_backward_sweep(coeffs.scenario(h), ens, backend);
    const std::vector<double> rhs = duality_rhs_samples(coeffs, ens, start);

    std::vector<double> residual(outer), stderr_o(outer);
    for (std::size_t o = 0; o < outer; ++o) {
      double sum = 0.0;
      for (std::size_t i = 0; i < inner; ++i) {
        const std::size_t p = o * inner + i;
        sum += sol.Y.at(p, start)[0] - rhs[p];
      }
      const double mean = sum / static_cast<double>(inner);
      double ss = 0.0;
      for (std::size_t i = 0; i < inner; ++i) {
        const std::size_t p = o * inner + i;
        const double dev = sol.Y.at(p, start)[0] - rhs[p] - mean;
        ss += dev * dev;
      }
      residual[o] = mean;
      stderr_o[o] = inner > 1 ? std::sqrt(ss / static_cast<double>(inner - 1) /
                                          static_cast<double>(inner))
                              : 0.0;
    }
    report.ladder.push_back({h, mean_of(residual)});
    if (level == 0) {
      report.residual = std::move(residual);
      report.residual_stderr = std::move(stderr_o);
    }
  }

  for (std::size_t i = 1; i < report.ladder.size(); ++i) {
    const double diff = std::abs(report.ladder[i].mean_signed_residual -
                                 report.ladder[i - 1].mean_signed_residual);
    report.C_est = std::max(report.C_est, diff / report.ladder[i - 1].h);
  }
  double mean_se = 0.0;
  double max_se = 0.0;
  for (std::size_t o = 0; o < outer; ++o) {
    const double a = std::abs(report.residual[o]);
    report.mean_abs_residual += a / static_cast<double>(outer);
    report.max_abs_residual = std::max(report.max_abs_residual, a);
    mean_se += report.residual_stderr[o] / static_cast<double>(outer);
    max_se = std::max(max_se, report.residual_stderr[o]);
  }
  // Floors at the round-off level of the two computations.
  report.tol_mean = std::max(3.0 * (mean_se + report.C_est * h0), 1e-12);
  report.tol_max = std::max(4.0 * max_se + 3.0 * report.C_est * h0, 1e-12);
  report.pass = report.calibrated && report.mean_abs_residual <= report.tol_mean &&
                report.max_abs_residual <= report.tol_max;
  return report;
}

Prop51Report prop51_check(const LinearDualityCoeffs& coeffs, const PathEnsemble& paths,
                          const CondExpBackend& backend, double tol_meas) {
  const TimeGrid& grid = paths.grid();
  const Scenario scenario = coeffs.scenario(grid.h);
  const SolutionProcess sol = solve_backward_sweep(scenario, paths, backend);
  const int start = steps_of(coeffs.t0, grid.h, "t0");
  const std::size_t P = paths.size();

  Prop51Report report;
  report.tol_meas = tol_meas;
  double zz = 0.0;
  for (int k = start; k < grid.n_T; ++k) {
    for (double z : sol.Z.node(k)) zz += z * z;
  }
  report.z_norm = std::sqrt(zz * grid.h / static_cast<double>(P));

  const auto y0 = sol.Y.node(start);
  if (backend.is_exact()) {
    // Atoms differing only in W bits must carry the same Y.
    const std::size_t w_mask = 0x5555555555555555ULL & ((std::size_t{1} << (2 * grid.n_end)) - 1);
    std::vector<double> lo(P, INFINITY), hi(P, -INFINITY);
    for (std::size_t a = 0; a < P; ++a) {
      const std::size_t key = a & ~w_mask;
      lo[key] = std::min(lo[key], y0[a]);
      hi[key] = std::max(hi[key], y0[a]);
    }
    for (std::size_t a = 0; a < P; ++a) {
      if (hi[a] >= lo[a]) report.b_spread = std::max(report.b_spread, hi[a] - lo[a]);
    }
    report.tol_z = 0.0;
    report.pass = report.z_norm == 0.0 && report.b_spread <= 1e-12;
    return report;
  }

  // Y_{t0} on polynomial features of the B increments alone.
  const std::vector<double> db_mid = paths.B_between(start, grid.n_T);
  const std::vector<double> db_tail = paths.B_between(grid.n_T, grid.n_end);
  const double s_mid = std::sqrt(grid.T() - grid.t(start));
  const double s_tail = std::sqrt(grid.horizon() - grid.T());
  const int degree = backend.basis().degree;
  std::vector<double> X;
  std::size_t F = 0;
  for (int i = 0; i <= degree; ++i) {
    for (int j = 0; i + j <= degree; ++j) ++F;
  }
  X.reserve(P * F);
  for (std::size_t p = 0; p < P; ++p) {
    const double u = db_mid[p] / s_mid;
    const double v = db_tail[p] / s_tail;
    for (int i = 0; i <= degree; ++i) {
      for (int j = 0; i + j <= degree; ++j) X.push_back(std::pow(u, i) * std::pow(v, j));
    }
  }
  const LeastSquaresFit fit =
      least_squares(X, F, std::vector<double>(y0.begin(), y0.end()), 1, backend.basis().ridge);
  report.one_minus_r2 = std::max(0.0, 1.0 - fit.r_squared);

  double y2 = 0.0;
  for (double y : y0) y2 += y * y;
  y2 /= static_cast<double>(P);
  std::size_t node_features = 0;
  markov_features(backend.basis(), paths, start, &node_features);
  report.tol_z = 3.0 * std::sqrt((grid.T() - coeffs.t0) * static_cast<double>(node_features) *
                                 y2 / (static_cast<double>(P) * grid.h));
  report.pass = report.z_norm <= report.tol_z && report.one_minus_r2 <= report.tol_meas;
  return report;
}

}  // namespace abdsde
