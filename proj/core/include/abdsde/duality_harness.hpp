#pragma once

#include <cstdint>
#include <vector>

#include "abdsde/abdsde_solver.hpp"

namespace abdsde {

/// Scalar linear pair (d = l = 1, constant coefficients): the anticipated BDSDE with
/// f = (mu + kappa^2) y + mu_bar E[Y_{t+delta}] + sigma z + sigma_bar E[Z_{t+delta}] + rho,
/// g = kappa y, and the delayed doubly stochastic SDE for X started at t0.
/// Terminal data is deterministic: xi_s = xi + xi_slope (s - T), eta_s = eta.
struct LinearDualityCoeffs {
  double mu = 0.0;
  double mu_bar = 0.0;
  double sigma = 0.0;
  double sigma_bar = 0.0;
  double kappa = 0.0;
  double rho = 0.0;
  double delta = 0.25;
  double T = 1.0;
  double t0 = 0.25;
  double xi = 1.0;
  double xi_slope = 0.0;
  double eta = 0.0;

  /// Throws InvalidArgument unless 0 < delta <= t0 < T and all values are finite,
  /// NonCommensurate unless delta, t0 and T are multiples of h.
  void validate(double h) const;
  GeneratorSpec generator() const;
  TerminalSpec terminal() const;
  /// Grid [0, T + delta] with step h and constant delay delta.
  Scenario scenario(double h) const;
};

/// X on nodes first..n_T per path, first = start - delta/h; X = 0 before start, X_start = 1.
struct DelayedPaths {
  int first = 0;
  int start = 0;
  PathProcess X;  // node j holds grid node first + j

  double at(std::size_t p, int k) const { return X.at(p, k - first)[0]; }
};

/// Euler per step with the dB term at the right endpoint:
/// X_{j+1} = (X_j + (mu X_j + mu_bar X_{j-D}) h + (sigma X_j + sigma_bar X_{j-D}) dW_j)
///           / (1 - kappa dB_j).
DelayedPaths solve_delayed_dsde(const LinearDualityCoeffs& coeffs, const PathEnsemble& paths,
                                int start);

/// Per path, X_T xi_T + int_t^T rho X ds + int_T^{T+delta} (mu_bar xi_s + sigma_bar eta)
/// X_{s-delta} ds with trapezoid quadrature. Averaging over the W paths that share a
/// B path gives the dual representation of Y_t.
std::vector<double> duality_rhs_samples(const LinearDualityCoeffs& coeffs,
                                        const PathEnsemble& paths, int start);

/// outer x inner paths; path o*inner + i carries the B path of outer index o and a
/// W path of its own.
PathEnsemble nested_paths(const TimeGrid& grid, std::size_t outer, std::size_t inner,
                          std::uint64_t seed);

struct DualityLevel {
  double h = 0.0;
  double mean_signed_residual = 0.0;
};

struct DualityReport {
  std::vector<double> residual;         // per outer path, Y_solver - Y_rhs
  std::vector<double> residual_stderr;  // inner Monte Carlo standard error per outer path
  double mean_abs_residual = 0.0;
  double max_abs_residual = 0.0;
  std::vector<DualityLevel> ladder;  // finest first
  double C_est = 0.0;
  double tol_mean = 0.0;
  double tol_max = 0.0;
  bool calibrated = false;  // false when the grid cannot be coarsened `levels - 1` times
  bool pass = false;
};

/// Solver and dual representation on the same nested ensemble. Tolerances:
/// tol_mean = 3 (mean stderr + C h), tol_max = 4 max stderr + 3 C h, where C is the
/// largest |r(2h) - r(h)| / h over the ladder built by coarsening the same paths.
DualityReport duality_check(const LinearDualityCoeffs& coeffs, const PathEnsemble& paths,
                            std::size_t inner, const CondExpBackend& backend, int levels = 3);

struct Prop51Report {
  double z_norm = 0.0;  // grid L2 norm of Z on [t0, T]
  double tol_z = 0.0;
  double one_minus_r2 = 0.0;  // Y_{t0} regressed on B features only
  double b_spread = 0.0;      // exact backend: spread of Y_{t0} across W branches
  double tol_meas = 1e-3;
  bool pass = false;
};

/// With the regression backend tol_z = 3 sqrt((T - t0) F E[Y_{t0}^2] / (P h)); on the
/// tree Z must vanish and Y_{t0} must not depend on the W branches at all.
Prop51Report prop51_check(const LinearDualityCoeffs& coeffs, const PathEnsemble& paths,
                          const CondExpBackend& backend, double tol_meas = 1e-3);

}  // namespace abdsde
