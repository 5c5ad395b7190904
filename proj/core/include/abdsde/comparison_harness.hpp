#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "abdsde/abdsde_solver.hpp"

namespace abdsde {

struct ComparisonReport {
  TimeGrid grid;
  PathProcess margin;  // Y1 - Y2, scalar, nodes 0..n_end
  std::vector<double> mean_margin;
  std::vector<double> min_margin;
  /// Run tolerance: standard-error scale of the Y fits plus the h-refinement delta.
  double fit_stderr = 0.0;
  double refinement_delta = 0.0;
  double tolerance = 0.0;
  /// max(3 * tolerance, 1e-10) unless an explicit epsilon was requested.
  double epsilon = 0.0;

  /// Fraction of (path, node) points with Y1 < Y2 - eps.
  double violation_fraction(double eps) const;
  std::vector<double> violation_fraction_by_node(double eps) const;
  double worst_margin() const;
};

/// Solves both scenarios on the same paths and backend. Throws TerminalOrderViolated
/// unless xi1 >= xi2 on every sample and terminal node. The refinement delta uses the
/// same paths coarsened by 2 (regression backend only; the tree has no coarser copy).
ComparisonReport run_comparison(const Scenario& first, const Scenario& second,
                                const PathEnsemble& paths, const CondExpBackend& backend,
                                std::optional<double> epsilon = std::nullopt);

/// xi -> xi + shift, same eta.
TerminalSpec shifted_terminal(const TerminalSpec& base, double shift);

struct MonotoneChainReport {
  std::size_t samples = 0;
  std::size_t order_violations = 0;
  std::size_t monotonicity_violations = 0;
  std::string first_counterexample;
  bool pass = false;
};

/// Randomized check of f1 >= ftilde >= f2 at the same arguments and of ftilde being
/// nondecreasing in the anticipated Y value, with the anticipated law a point mass.
/// Scalar generators only.
MonotoneChainReport check_monotone_chain(const GeneratorSpec& f1, const GeneratorSpec& ftilde,
                                         const GeneratorSpec& f2, std::size_t samples,
                                         std::uint64_t seed);

}  // namespace abdsde
