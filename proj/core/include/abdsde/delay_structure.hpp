#pragma once

#include <vector>

#include "abdsde/stochastic_core.hpp"

namespace abdsde {

/// Anticipation map t -> a + b*t. Constant delays have b = 0.
struct DelayForm {
  double a = 0.0;
  double b = 0.0;

  double operator()(double t) const { return a + b * t; }
  static DelayForm constant(double a) { return DelayForm{a, 0.0}; }
  static DelayForm affine(double a, double b) { return DelayForm{a, b}; }
};

/// The pair of anticipation maps: delta for Y, zeta for Z.
struct DelaySpec {
  DelayForm delta;
  DelayForm zeta;

  static DelaySpec uniform(DelayForm form) { return DelaySpec{form, form}; }
};

/// Per-node index offsets for nodes 0..n_T. Offsets are always >= 1.
struct GridOffsets {
  std::vector<int> delta;
  std::vector<int> zeta;
  std::vector<double> delta_snap_error;
  std::vector<double> zeta_snap_error;

  double max_snap_error() const;
};

struct ValidatedDelay {
  DelaySpec spec;
  TimeGrid grid;
  double K = 0.0;
  double M = 1.0;
  /// Substitution constant implied by the affine slope, 1/(1+b); M = max(1, this).
  double M_required = 1.0;
  /// Largest observed ratio lhs/rhs of the substitution inequality over the
  /// quadrature probes; must not exceed M.
  double a2_worst_ratio = 0.0;
  GridOffsets offsets;
};

/// Checks positivity and t + delta(t) <= T+K on every node of [0, T], certifies
/// the substitution bound M and spot-checks it by quadrature against g = 1, u, u^2.
ValidatedDelay validate_delay(const DelaySpec& spec, const TimeGrid& grid);

/// Nearest-node snapping of the anticipated times t_k + delta(t_k).
GridOffsets to_grid_offsets(const DelaySpec& spec, const TimeGrid& grid);

/// Points T = t_0 > t_1 > ... > t_N = 0 with min(s+delta(s), s+zeta(s)) >= t_{i-1}
/// for every grid s in [t_i, t_{i-1}].
struct Segmentation {
  std::vector<double> points;
  std::vector<int> indices;
  int N = 0;
};

Segmentation segment_interval(const DelaySpec& spec, const TimeGrid& grid);

}  // namespace abdsde
