#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "abdsde/conditional_expectation.hpp"
#include "abdsde/delay_structure.hpp"
#include "abdsde/generator_model.hpp"
#include "abdsde/stochastic_core.hpp"

namespace abdsde {

struct SolverOptions {
  /// Inner passes of Y_hat <- Y_bar + h f(Y_hat); 0 is the explicit scheme.
  int implicit_iters = 1;
};

/// Everything a solve needs besides paths and backend. The delay is required
/// when the generator anticipates.
class Scenario {
 public:
  Scenario(TimeGrid grid, std::optional<DelaySpec> delay, GeneratorSpec generator,
           TerminalSpec terminal, SolverOptions options = {}, std::uint64_t hash = 0);

  const TimeGrid& grid() const { return grid_; }
  const std::optional<ValidatedDelay>& delay() const { return delay_; }
  const GeneratorSpec& generator() const { return generator_; }
  const TerminalSpec& terminal() const { return terminal_; }
  const SolverOptions& options() const { return options_; }
  std::uint64_t hash() const { return hash_; }
  Dims dims() const { return generator_.dims(); }
  double M() const { return delay_ ? delay_->M : 1.0; }

  /// Anticipated index offsets per node 0..n_T (all 1 without a delay).
  const GridOffsets& offsets() const { return offsets_; }

  /// Same scenario rebuilt on the grid with step h (T and K kept).
  Scenario with_grid(double h) const;
  Scenario with_generator(GeneratorSpec generator) const;
  Scenario with_terminal(TerminalSpec terminal) const;

 private:
  TimeGrid grid_;
  std::optional<ValidatedDelay> delay_;
  GeneratorSpec generator_;
  TerminalSpec terminal_;
  SolverOptions options_;
  std::uint64_t hash_;
  GridOffsets offsets_;
};

struct SolutionProcess {
  PathProcess Y;  // m, nodes 0..n_end
  PathProcess Z;  // m x d
  /// Drift f_k actually used at node k < n_T and noise G_k at nodes 1..n_T.
  PathProcess F;  // m
  PathProcess G;  // m x l
  std::uint64_t scenario_hash = 0;
  std::string backend;
  int iterations = 1;
  /// Largest regression standard-error scale over all node fits (0 on the tree).
  double fit_stderr = 0.0;
  /// Same, restricted to Y-valued targets (Y_bar and the anticipated means).
  double fit_stderr_Y = 0.0;
  double energy_Y = 0.0;  // E sum_k |Y_k|^2 h
  double energy_Z = 0.0;
};

struct ContractionParams {
  double lambda0 = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
  double c_bar = 0.0;
};

/// Throws Infeasible if alpha1 + alpha2*M >= 1. Default lambda0 = 2c(1+M)/(1-alpha1-alpha2*M).
ContractionParams contraction_params(const LipschitzData& lip, double M,
                                     std::optional<double> lambda0 = std::nullopt);

/// (mean_p sum_k e^{beta t_k}(gamma|Y_k|^2 + |Z_k|^2) h)^{1/2} over k = 0..n_end.
double weighted_norm(const SolutionProcess& sol, const TimeGrid& grid,
                     const ContractionParams& params);
double weighted_distance(const SolutionProcess& a, const SolutionProcess& b,
                         const TimeGrid& grid, const ContractionParams& params);

SolutionProcess solve_backward_sweep(const Scenario& scenario, const PathEnsemble& paths,
                                     const CondExpBackend& backend);

/// Solves segment by segment on the partition from segment_interval, each segment
/// using the values already computed after it as terminal data.
SolutionProcess solve_segmented(const Scenario& scenario, const PathEnsemble& paths,
                                const CondExpBackend& backend);

/// One application of I: anticipated conditional means are computed from `frozen`,
/// then the sweep runs with those terms held fixed.
SolutionProcess picard_map_I(const Scenario& scenario, const SolutionProcess& frozen,
                             const PathEnsemble& paths, const CondExpBackend& backend);

/// Starting point of the Picard iteration: terminal part (xi, eta), Y = xi_T (or
/// `initial_y` when given) and Z = 0 before T.
SolutionProcess picard_start(const Scenario& scenario, const PathEnsemble& paths,
                             std::optional<double> initial_y = std::nullopt);

struct PicardLog {
  std::vector<double> distances;  // weighted distance between iterates n and n+1
  std::vector<double> ratios;     // distances[n] / distances[n-1]
  ContractionParams params;
};

struct PicardResult {
  SolutionProcess solution;
  PicardLog log;
};

/// Iterates I until the weighted distance drops below tol. Throws NoConvergence.
PicardResult picard_iterate(const Scenario& scenario, const PathEnsemble& paths,
                            const CondExpBackend& backend, double tol, int max_iter,
                            std::optional<double> initial_y = std::nullopt);

}  // namespace abdsde
