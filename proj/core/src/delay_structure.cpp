#include "abdsde/delay_structure.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>

#include "abdsde/error.hpp"

namespace abdsde {
namespace {

constexpr double kTimeTol = 1e-12;

void check_form(const DelayForm& form, const char* name) {
  if (!std::isfinite(form.a) || !std::isfinite(form.b) || form.b < 0.0) {
    throw Error(ErrorKind::kUnsupportedDelayForm,
                std::string(name) + " must be a + b*t with finite a and b >= 0");
  }
}

void check_on_grid(const DelayForm& form, const TimeGrid& grid, const char* name) {
  const double horizon = grid.horizon();
  for (int k = 0; k <= grid.n_T; ++k) {
    const double t = grid.t(k);
    const double value = form(t);
    if (!(value > 0.0)) {
      throw Error(ErrorKind::kNonPositiveDelay,
                  std::string(name) + "(" + std::to_string(t) + ") = " + std::to_string(value));
    }
    if (t + value > horizon + kTimeTol * std::max(1.0, horizon)) {
      throw Error(ErrorKind::kA1Violation, std::string("t + ") + name + "(t) = " +
                                               std::to_string(t + value) + " exceeds T+K = " +
                                               std::to_string(horizon));
    }
  }
}

// Composite Simpson; exact for the polynomial integrands probed here.
double simpson(const std::function<double(double)>& f, double lo, double hi) {
  if (hi <= lo) return 0.0;
  constexpr int kPanels = 64;
  const double step = (hi - lo) / kPanels;
  double sum = f(lo) + f(hi);
  for (int i = 1; i < kPanels; ++i) sum += f(lo + i * step) * (i % 2 == 1 ? 4.0 : 2.0);
  return sum * step / 3.0;
}

double worst_substitution_ratio(const DelayForm& form, const TimeGrid& grid) {
  const std::array<std::function<double(double)>, 3> probes = {
      [](double) { return 1.0; }, [](double u) { return u; }, [](double u) { return u * u; }};
  const double T = grid.T();
  double worst = 0.0;
  for (const auto& g : probes) {
    for (int k = 0; k < grid.n_T; ++k) {
      const double t = grid.t(k);
      const double lhs = simpson([&](double s) { return g(s + form(s)); }, t, T);
      const double rhs = simpson(g, t, grid.horizon());
      if (rhs > 0.0) worst = std::max(worst, lhs / rhs);
    }
  }
  return worst;
}

void snap(const DelayForm& form, const TimeGrid& grid, std::vector<int>& offsets,
          std::vector<double>& errors) {
  offsets.assign(grid.n_T + 1, 1);
  errors.assign(grid.n_T + 1, 0.0);
  for (int k = 0; k <= grid.n_T; ++k) {
    const double target = grid.t(k) + form(grid.t(k));
    long idx = std::lround(target / grid.h);
    idx = std::clamp<long>(idx, k + 1, grid.n_end);
    offsets[k] = static_cast<int>(idx - k);
    errors[k] = std::abs(target - static_cast<double>(idx) * grid.h);
  }
}

}  // namespace

double GridOffsets::max_snap_error() const {
  double worst = 0.0;
  for (double e : delta_snap_error) worst = std::max(worst, e);
  for (double e : zeta_snap_error) worst = std::max(worst, e);
  return worst;
}

GridOffsets to_grid_offsets(const DelaySpec& spec, const TimeGrid& grid) {
  GridOffsets out;
  snap(spec.delta, grid, out.delta, out.delta_snap_error);
  snap(spec.zeta, grid, out.zeta, out.zeta_snap_error);
  return out;
}

ValidatedDelay validate_delay(const DelaySpec& spec, const TimeGrid& grid) {
  check_form(spec.delta, "delta");
  check_form(spec.zeta, "zeta");
  check_on_grid(spec.delta, grid, "delta");
  check_on_grid(spec.zeta, grid, "zeta");

  ValidatedDelay out;
  out.spec = spec;
  out.grid = grid;
  out.K = grid.horizon() - grid.T();
  // u = s + a + b*s has du = (1+b) ds and [t+delta(t), T+delta(T)] lies in [t, T+K].
  out.M_required = std::max(1.0 / (1.0 + spec.delta.b), 1.0 / (1.0 + spec.zeta.b));
  out.M = std::max(1.0, out.M_required);
  out.a2_worst_ratio = std::max(worst_substitution_ratio(spec.delta, grid),
                                worst_substitution_ratio(spec.zeta, grid));
  if (out.a2_worst_ratio > out.M * (1.0 + 1e-9)) {
    throw Error(ErrorKind::kValidationError,
                "substitution bound M=" + std::to_string(out.M) +
                    " violated by quadrature probe (ratio " +
                    std::to_string(out.a2_worst_ratio) + ")");
  }
  out.offsets = to_grid_offsets(spec, grid);
  return out;
}

Segmentation segment_interval(const DelaySpec& spec, const TimeGrid& grid) {
  auto reach = [&](int k) {
    const double s = grid.t(k);
    return std::min(s + spec.delta(s), s + spec.zeta(s));
  };

  Segmentation seg;
  seg.points.push_back(grid.T());
  seg.indices.push_back(grid.n_T);
  int prev = grid.n_T;
  while (prev > 0) {
    const double bound = grid.t(prev) - kTimeTol * std::max(1.0, grid.T());
    int j = grid.n_T;
    while (j > 0 && reach(j - 1) >= bound) --j;
    if (j >= prev || static_cast<int>(seg.indices.size()) > grid.n_T) {
      throw Error(ErrorKind::kNonTermination,
                  "segmentation stalls at t=" + std::to_string(grid.t(prev)) +
                      "; anticipation shorter than the grid step");
    }
    seg.points.push_back(grid.t(j));
    seg.indices.push_back(j);
    prev = j;
  }
  seg.N = static_cast<int>(seg.points.size()) - 1;
  return seg;
}

}  // namespace abdsde
