#include "abdsde/abdsde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "abdsde/error.hpp"

namespace abdsde {

Scenario::Scenario(TimeGrid grid, std::optional<DelaySpec> delay, GeneratorSpec generator,
                   TerminalSpec terminal, SolverOptions options, std::uint64_t hash)
    : grid_(grid),
      generator_(std::move(generator)),
      terminal_(std::move(terminal)),
      options_(options),
      hash_(hash) {
  if (options_.implicit_iters < 0) {
    throw Error(ErrorKind::kInvalidArgument, "implicit_iters must be >= 0");
  }
  if (delay) {
    delay_ = validate_delay(*delay, grid_);
    offsets_ = delay_->offsets;
  } else {
    if (generator_.has_anticipation()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "generator '" + generator_.name() + "' anticipates but no delay was given");
    }
    offsets_.delta.assign(grid_.n_T + 1, 1);
    offsets_.zeta.assign(grid_.n_T + 1, 1);
    offsets_.delta_snap_error.assign(grid_.n_T + 1, 0.0);
    offsets_.zeta_snap_error.assign(grid_.n_T + 1, 0.0);
  }
  generator_.check_feasible(M());
}

Scenario Scenario::with_grid(double h) const {
  const TimeGrid grid = make_grid(grid_.T(), grid_.horizon() - grid_.T(), h);
  std::optional<DelaySpec> spec;
  if (delay_) spec = delay_->spec;
  return Scenario(grid, spec, generator_, terminal_, options_, hash_);
}

Scenario Scenario::with_generator(GeneratorSpec generator) const {
  std::optional<DelaySpec> spec;
  if (delay_) spec = delay_->spec;
  return Scenario(grid_, spec, std::move(generator), terminal_, options_, hash_);
}

Scenario Scenario::with_terminal(TerminalSpec terminal) const {
  std::optional<DelaySpec> spec;
  if (delay_) spec = delay_->spec;
  return Scenario(grid_, spec, generator_, std::move(terminal), options_, hash_);
}

ContractionParams contraction_params(const LipschitzData& lip, double M,
                                     std::optional<double> lambda0) {
  const double s = lip.alpha1 + lip.alpha2 * M;
  if (!(s < 1.0)) {
    throw Error(ErrorKind::kInfeasible,
                "alpha1 + alpha2*M = " + std::to_string(s) + " must be < 1");
  }
  if (!(lip.c >= 0.0) || !(M > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "contraction_params needs c >= 0 and M > 0");
  }
  ContractionParams p;
  p.lambda0 = lambda0 ? *lambda0 : (lip.c > 0.0 ? 2.0 * lip.c * (1.0 + M) / (1.0 - s) : 1.0);
  if (!(p.lambda0 > 0.0)) throw Error(ErrorKind::kInvalidArgument, "lambda0 must be positive");
  p.c_bar = lip.c / p.lambda0 * (1.0 + M) + s;
  if (!(p.c_bar < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "lambda0 = " + std::to_string(p.lambda0) + " gives c_bar >= 1");
  }
  const double den = lip.c * (1.0 + M) + p.lambda0 * s;
  const double gamma = den > 0.0 ? lip.c * (1.0 + p.lambda0) * (1.0 + M) / den : 0.0;
  // The formula degenerates to 0 when c = 0, which would not be a norm.
  p.gamma = std::max(gamma, 1e-6);
  p.beta = p.lambda0 + p.gamma;
  return p;
}

namespace {

double weighted_sum(const PathProcess& Y, const PathProcess& Z, const PathProcess* Y2,
                    const PathProcess* Z2, const TimeGrid& grid,
                    const ContractionParams& params) {
  const std::size_t P = Y.paths();
  double total = 0.0;
  for (int k = 0; k < Y.nodes(); ++k) {
    const auto y = Y.node(k);
    const auto z = Z.node(k);
    double sy = 0.0;
    double sz = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double v = Y2 ? y[i] - Y2->node(k)[i] : y[i];
      sy += v * v;
    }
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double v = Z2 ? z[i] - Z2->node(k)[i] : z[i];
      sz += v * v;
    }
    total += std::exp(params.beta * grid.t(k)) * (params.gamma * sy + sz) * grid.h;
  }
  return std::sqrt(total / static_cast<double>(P));
}

}  // namespace

double weighted_norm(const SolutionProcess& sol, const TimeGrid& grid,
                     const ContractionParams& params) {
  return weighted_sum(sol.Y, sol.Z, nullptr, nullptr, grid, params);
}

double weighted_distance(const SolutionProcess& a, const SolutionProcess& b,
                         const TimeGrid& grid, const ContractionParams& params) {
  if (a.Y.data().size() != b.Y.data().size() || a.Z.data().size() != b.Z.data().size()) {
    throw Error(ErrorKind::kShapeMismatch, "weighted_distance: processes differ in shape");
  }
  return weighted_sum(a.Y, a.Z, &b.Y, &b.Z, grid, params);
}

namespace {

bool column_constant(const std::vector<double>& v, int width, int col, std::size_t P) {
  for (std::size_t p = 1; p < P; ++p) {
    if (v[p * width + col] != v[col]) return false;
  }
  return true;
}

void require_finite(std::span<const double> v, const char* what, int k) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw Error(ErrorKind::kNonFinite,
                  std::string(what) + " is not finite at node " + std::to_string(k));
    }
  }
}

struct SweepState {
  SolutionProcess sol;
  std::vector<std::vector<double>> E;  // anticipated means at nodes 0..n_T, P x width
  std::vector<char> e_ready;
};

class Sweeper {
 public:
  Sweeper(const Scenario& scenario, const PathEnsemble& paths, const CondExpBackend& backend)
      : sc_(scenario),
        gen_(scenario.generator()),
        paths_(paths),
        backend_(backend),
        grid_(scenario.grid()),
        P_(paths.size()),
        m_(scenario.dims().m),
        d_(scenario.dims().d),
        l_(scenario.dims().l),
        w_(gen_.anticipation_width()) {
    if (!(paths.grid() == grid_) || paths.dim_w() != d_ || paths.dim_b() != l_) {
      throw Error(ErrorKind::kShapeMismatch, "path ensemble does not match the scenario");
    }
    if (backend.is_exact() && !paths.is_tree()) {
      throw Error(ErrorKind::kBackendMismatch, "exact backend needs a tree ensemble");
    }
  }

  SweepState init(const TerminalData& terminal) const {
    SweepState s;
    const int nodes = grid_.nodes();
    s.sol.Y = PathProcess(P_, nodes, m_, 1);
    s.sol.Z = PathProcess(P_, nodes, m_, d_);
    s.sol.F = PathProcess(P_, nodes, m_, 1);
    s.sol.G = PathProcess(P_, nodes, m_, l_);
    s.sol.scenario_hash = sc_.hash();
    s.sol.backend = backend_.describe();
    for (int j = 0; j <= grid_.n_end - grid_.n_T; ++j) {
      const auto xi = terminal.xi.node(j);
      const auto eta = terminal.eta.node(j);
      std::copy(xi.begin(), xi.end(), s.sol.Y.node(grid_.n_T + j).begin());
      std::copy(eta.begin(), eta.end(), s.sol.Z.node(grid_.n_T + j).begin());
    }
    s.E.assign(grid_.n_T + 1, {});
    s.e_ready.assign(grid_.n_T + 1, 0);
    return s;
  }

  /// e_k from the (Y, Z) stored in `source`.
  std::vector<double> anticipated(const SolutionProcess& source, int k,
                                  std::optional<NodeProjector>& proj) const {
    if (w_ == 0) return {};
    const int a = k + sc_.offsets().delta[k];
    const int b = k + sc_.offsets().zeta[k];
    std::vector<double> target(P_ * w_);
    for (std::size_t p = 0; p < P_; ++p) {
      gen_.anticipate(source.Y.at(p, a), source.Z.at(p, b),
                      std::span<double>(target).subspan(p * w_, w_));
    }
    if (sc_.terminal().deterministic() && a >= grid_.n_T && b >= grid_.n_T) return target;
    return projector(proj, k).project(target, w_);
  }

  void run(SweepState& s, int k_hi, int k_lo) const {
    if (!s.e_ready[k_hi]) {
      std::optional<NodeProjector> proj;
      s.E[k_hi] = anticipated(s.sol, k_hi, proj);
      s.e_ready[k_hi] = 1;
      if (proj) {
        s.sol.fit_stderr = std::max(s.sol.fit_stderr, proj->fit_stderr());
        s.sol.fit_stderr_Y = std::max(s.sol.fit_stderr_Y, proj->fit_stderr());
      }
    }
    for (int k = k_hi - 1; k >= k_lo; --k) step(s, k);
  }

  void finish(SweepState& s) const {
    double ey = 0.0;
    double ez = 0.0;
    for (int k = 0; k < grid_.nodes(); ++k) {
      for (double v : s.sol.Y.node(k)) ey += v * v;
      for (double v : s.sol.Z.node(k)) ez += v * v;
    }
    s.sol.energy_Y = ey * grid_.h / static_cast<double>(P_);
    s.sol.energy_Z = ez * grid_.h / static_cast<double>(P_);
  }

 private:
  NodeProjector& projector(std::optional<NodeProjector>& proj, int k) const {
    if (!proj) proj.emplace(backend_, paths_, k);
    return *proj;
  }

  std::span<const double> e_at(const SweepState& s, std::size_t p, int k) const {
    return std::span<const double>(s.E[k]).subspan(p * w_, w_);
  }

  void step(SweepState& s, int k) const {
    const double h = grid_.h;
    const double tk = grid_.t(k);
    const double tk1 = grid_.t(k + 1);
    SolutionProcess& sol = s.sol;
    std::optional<NodeProjector> proj;

    // V = Y_{k+1} + G_{k+1} dB_k, with G at the right endpoint.
    std::vector<double> V(P_ * m_);
    for (std::size_t p = 0; p < P_; ++p) {
      const auto g = sol.G.at(p, k + 1);
      gen_.noise(tk1, sol.Y.at(p, k + 1), sol.Z.at(p, k + 1), e_at(s, p, k + 1), g);
      const auto y = sol.Y.at(p, k + 1);
      const auto db = paths_.dB(p, k);
      for (int r = 0; r < m_; ++r) {
        double v = y[r];
        for (int j = 0; j < l_; ++j) v += g[r * l_ + j] * db[j];
        V[p * m_ + r] = v;
      }
    }
    require_finite(sol.G.node(k + 1), "G", k + 1);

    // A row of V that is constant across paths is F_{t_k}-measurable, and dW_k is
    // independent of F_{t_k} with mean zero, so that row of Z vanishes exactly.
    const int md = m_ * d_;
    std::vector<double> Zt(P_ * md, 0.0);
    for (int r = 0; r < m_; ++r) {
      if (column_constant(V, m_, r, P_)) continue;
      for (std::size_t p = 0; p < P_; ++p) {
        const auto dw = paths_.dW(p, k);
        for (int i = 0; i < d_; ++i) Zt[p * md + r * d_ + i] = V[p * m_ + r] * dw[i] / h;
      }
    }
    // Y-valued fits first so their error scale can be read off before the noisier Z fit.
    const std::vector<double> Ybar = projector(proj, k).project(V, m_);
    if (!s.e_ready[k]) {
      s.E[k] = anticipated(sol, k, proj);
      s.e_ready[k] = 1;
    }
    if (proj) sol.fit_stderr_Y = std::max(sol.fit_stderr_Y, proj->fit_stderr());
    const std::vector<double> Zk = projector(proj, k).project(Zt, md);
    std::copy(Zk.begin(), Zk.end(), sol.Z.node(k).begin());

    std::vector<double> yhat(m_);
    std::vector<double> fval(m_);
    for (std::size_t p = 0; p < P_; ++p) {
      const std::span<const double> ybar(Ybar.data() + p * m_, m_);
      const auto z = sol.Z.at(p, k);
      const auto e = e_at(s, p, k);
      std::copy(ybar.begin(), ybar.end(), yhat.begin());
      for (int it = 0; it < sc_.options().implicit_iters; ++it) {
        gen_.drift(tk, yhat, z, e, fval);
        for (int r = 0; r < m_; ++r) yhat[r] = ybar[r] + h * fval[r];
      }
      const auto f = sol.F.at(p, k);
      gen_.drift(tk, yhat, z, e, f);
      const auto y = sol.Y.at(p, k);
      for (int r = 0; r < m_; ++r) y[r] = ybar[r] + h * f[r];
    }
    require_finite(sol.Y.node(k), "Y", k);
    require_finite(sol.Z.node(k), "Z", k);
    if (proj) sol.fit_stderr = std::max(sol.fit_stderr, proj->fit_stderr());
  }

  const Scenario& sc_;
  const GeneratorSpec& gen_;
  const PathEnsemble& paths_;
  const CondExpBackend& backend_;
  TimeGrid grid_;
  std::size_t P_;
  int m_, d_, l_, w_;
};

}  // namespace

SolutionProcess solve_backward_sweep(const Scenario& scenario, const PathEnsemble& paths,
                                     const CondExpBackend& backend) {
  const Sweeper sweeper(scenario, paths, backend);
  SweepState s = sweeper.init(scenario.terminal().materialize(paths, scenario.dims()));
  sweeper.run(s, scenario.grid().n_T, 0);
  sweeper.finish(s);
  return std::move(s.sol);
}

SolutionProcess solve_segmented(const Scenario& scenario, const PathEnsemble& paths,
                                const CondExpBackend& backend) {
  if (!scenario.delay()) return solve_backward_sweep(scenario, paths, backend);
  const Segmentation seg = segment_interval(scenario.delay()->spec, scenario.grid());
  if (seg.N == 1) return solve_backward_sweep(scenario, paths, backend);

  const Sweeper sweeper(scenario, paths, backend);
  SweepState s = sweeper.init(scenario.terminal().materialize(paths, scenario.dims()));
  for (int i = 1; i <= seg.N; ++i) sweeper.run(s, seg.indices[i - 1], seg.indices[i]);
  sweeper.finish(s);
  return std::move(s.sol);
}

SolutionProcess picard_map_I(const Scenario& scenario, const SolutionProcess& frozen,
                             const PathEnsemble& paths, const CondExpBackend& backend) {
  const TimeGrid& grid = scenario.grid();
  if (frozen.Y.nodes() != grid.nodes() || frozen.Y.paths() != paths.size()) {
    throw Error(ErrorKind::kShapeMismatch, "frozen process does not match the scenario");
  }
  const Sweeper sweeper(scenario, paths, backend);
  SweepState s = sweeper.init(scenario.terminal().materialize(paths, scenario.dims()));
  double frozen_stderr = 0.0;
  for (int k = 0; k <= grid.n_T; ++k) {
    std::optional<NodeProjector> proj;
    s.E[k] = sweeper.anticipated(frozen, k, proj);
    s.e_ready[k] = 1;
    if (proj) frozen_stderr = std::max(frozen_stderr, proj->fit_stderr());
  }
  sweeper.run(s, grid.n_T, 0);
  sweeper.finish(s);
  s.sol.fit_stderr = std::max(s.sol.fit_stderr, frozen_stderr);
  s.sol.fit_stderr_Y = std::max(s.sol.fit_stderr_Y, frozen_stderr);
  return std::move(s.sol);
}

SolutionProcess picard_start(const Scenario& scenario, const PathEnsemble& paths,
                             std::optional<double> initial_y) {
  const TimeGrid& grid = scenario.grid();
  const Dims dims = scenario.dims();
  const TerminalData terminal = scenario.terminal().materialize(paths, dims);
  SolutionProcess sol;
  sol.Y = PathProcess(paths.size(), grid.nodes(), dims.m, 1);
  sol.Z = PathProcess(paths.size(), grid.nodes(), dims.m, dims.d);
  sol.F = PathProcess(paths.size(), grid.nodes(), dims.m, 1);
  sol.G = PathProcess(paths.size(), grid.nodes(), dims.m, dims.l);
  sol.scenario_hash = scenario.hash();
  sol.iterations = 0;
  for (int j = 0; j <= grid.n_end - grid.n_T; ++j) {
    std::copy(terminal.xi.node(j).begin(), terminal.xi.node(j).end(),
              sol.Y.node(grid.n_T + j).begin());
    std::copy(terminal.eta.node(j).begin(), terminal.eta.node(j).end(),
              sol.Z.node(grid.n_T + j).begin());
  }
  const auto xi_T = terminal.xi.node(0);
  for (int k = 0; k < grid.n_T; ++k) {
    auto y = sol.Y.node(k);
    if (initial_y) {
      std::fill(y.begin(), y.end(), *initial_y);
    } else {
      std::copy(xi_T.begin(), xi_T.end(), y.begin());
    }
  }
  return sol;
}

PicardResult picard_iterate(const Scenario& scenario, const PathEnsemble& paths,
                            const CondExpBackend& backend, double tol, int max_iter,
                            std::optional<double> initial_y) {
  if (!(tol > 0.0) || max_iter < 1) {
    throw Error(ErrorKind::kInvalidArgument, "picard_iterate needs tol > 0 and max_iter >= 1");
  }
  PicardResult result;
  result.log.params = contraction_params(scenario.generator().lipschitz(), scenario.M());
  SolutionProcess current = picard_start(scenario, paths, initial_y);
  for (int n = 1; n <= max_iter; ++n) {
    SolutionProcess next = picard_map_I(scenario, current, paths, backend);
    const double dist = weighted_distance(current, next, scenario.grid(), result.log.params);
    auto& log = result.log;
    if (!log.distances.empty()) {
      const double prev = log.distances.back();
      log.ratios.push_back(prev > 0.0 ? dist / prev : 0.0);
    }
    log.distances.push_back(dist);
    current = std::move(next);
    if (dist < tol) {
      // Applications of I before the iterates stopped moving.
      current.iterations = std::max(1, n - 1);
      result.solution = std::move(current);
      return result;
    }
  }
  throw Error(ErrorKind::kNoConvergence,
              "Picard iteration did not reach tol=" + std::to_string(tol) + " in " +
                  std::to_string(max_iter) + " iterations (last distance " +
                  std::to_string(result.log.distances.back()) + ")");
}

}  // namespace abdsde
