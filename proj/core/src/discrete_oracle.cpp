#include "abdsde/discrete_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "abdsde/error.hpp"

namespace abdsde {
namespace {

// Representative atom of block `blk` at node k: the block's bits in their slots,
// every other bit zero.
std::size_t representative(std::uint32_t blk, int k, int n) {
  std::size_t atom = 0;
  for (int j = 0; j < n; ++j) {
    const std::size_t bit = (blk >> j) & 1U;
    atom |= bit << (j < k ? 2 * j : 2 * j + 1);
  }
  return atom;
}

// Block index at node a of the atoms whose node-k block is `blk` and whose W bits
// on steps [k, c) are `u` (bit j-k).
std::uint32_t shifted_block(std::uint32_t blk, int k, int a, std::uint32_t u) {
  std::uint32_t out = blk;
  for (int j = k; j < a; ++j) {
    const std::uint32_t bit = (u >> (j - k)) & 1U;
    out = (out & ~(1U << j)) | (bit << j);
  }
  return out;
}

}  // namespace

OracleSolution oracle_solve(const Scenario& scenario) {
  const TimeGrid& grid = scenario.grid();
  const Dims dims = scenario.dims();
  if (dims.m != 1 || dims.d != 1 || dims.l != 1) {
    throw Error(ErrorKind::kShapeMismatch, "oracle needs m = d = l = 1");
  }
  if (scenario.offsets().max_snap_error() > 1e-9 * grid.h) {
    throw Error(ErrorKind::kInvalidArgument, "oracle needs delays aligned to the grid");
  }
  const int n = grid.n_end;
  OracleSolution out{build_tree(n, grid.h), grid, {}, {}, {}, {}};
  const TreeModel& tree = out.tree;
  const std::size_t B = tree.blocks();
  const double h = grid.h;
  const double root_h = std::sqrt(h);
  const GeneratorSpec& gen = scenario.generator();
  const int w = gen.anticipation_width();

  out.Y.assign(grid.nodes(), std::vector<double>(B, 0.0));
  out.Z.assign(grid.nodes(), std::vector<double>(B, 0.0));
  out.F.assign(grid.nodes(), std::vector<double>(B, 0.0));
  out.G.assign(grid.nodes(), std::vector<double>(B, 0.0));

  // Terminal values on one atom per block.
  std::vector<double> dw(n), db(n);
  for (int k = grid.n_T; k <= grid.n_end; ++k) {
    for (std::uint32_t blk = 0; blk < B; ++blk) {
      const std::size_t atom = representative(blk, k, n);
      for (int j = 0; j < n; ++j) {
        dw[j] = tree.dW(atom, j);
        db[j] = tree.dB(atom, j);
      }
      const PathView view{dw, db, 1, 1, h};
      double xi = 0.0;
      double eta = 0.0;
      scenario.terminal().evaluate(grid, k, view, {&xi, 1}, {&eta, 1});
      out.Y[k][blk] = xi;
      out.Z[k][blk] = eta;
    }
  }

  std::vector<std::vector<double>> E(grid.n_T + 1, std::vector<double>(B * w, 0.0));
  auto anticipate = [&](int k) {
    if (w == 0) return;
    const int a = k + scenario.offsets().delta[k];
    const int b = k + scenario.offsets().zeta[k];
    const int c = std::max(a, b);
    const std::uint32_t combos = 1U << (c - k);
    std::vector<double> phi(w);
    for (std::uint32_t blk = 0; blk < B; ++blk) {
      double* e = E[k].data() + blk * w;
      std::fill(e, e + w, 0.0);
      for (std::uint32_t u = 0; u < combos; ++u) {
        const double y = out.Y[a][shifted_block(blk, k, a, u)];
        const double z = out.Z[b][shifted_block(blk, k, b, u)];
        gen.anticipate({&y, 1}, {&z, 1}, phi);
        for (int q = 0; q < w; ++q) e[q] += phi[q];
      }
      for (int q = 0; q < w; ++q) e[q] /= combos;
    }
  };

  anticipate(grid.n_T);
  for (int k = grid.n_T - 1; k >= 0; --k) {
    const double t1 = grid.t(k + 1);
    for (std::uint32_t blk = 0; blk < B; ++blk) {
      const double y = out.Y[k + 1][blk];
      const double z = out.Z[k + 1][blk];
      gen.noise(t1, {&y, 1}, {&z, 1}, {E[k + 1].data() + blk * w, static_cast<std::size_t>(w)},
                {&out.G[k + 1][blk], 1});
    }
    for (std::uint32_t blk = 0; blk < B; ++blk) {
      const double dB = ((blk >> k) & 1U) ? root_h : -root_h;
      double V[2];
      for (std::uint32_t branch = 0; branch < 2; ++branch) {
        const std::uint32_t next = (blk & ~(1U << k)) | (branch << k);
        V[branch] = out.Y[k + 1][next] + out.G[k + 1][next] * dB;
      }
      out.Y[k][blk] = 0.5 * (V[0] + V[1]);  // Y_bar until the drift is added
      out.Z[k][blk] = 0.5 * (V[1] * root_h - V[0] * root_h) / h;
    }
    anticipate(k);
    const double tk = grid.t(k);
    for (std::uint32_t blk = 0; blk < B; ++blk) {
      const double ybar = out.Y[k][blk];
      const double z = out.Z[k][blk];
      const std::span<const double> e(E[k].data() + blk * w, w);
      double yhat = ybar;
      double f = 0.0;
      for (int it = 0; it < scenario.options().implicit_iters; ++it) {
        gen.drift(tk, {&yhat, 1}, {&z, 1}, e, {&f, 1});
        yhat = ybar + h * f;
      }
      gen.drift(tk, {&yhat, 1}, {&z, 1}, e, {&f, 1});
      out.F[k][blk] = f;
      out.Y[k][blk] = ybar + h * f;
    }
  }
  return out;
}

OracleDiff compare_to_oracle(const OracleSolution& oracle, const SolutionProcess& sol) {
  const std::size_t atoms = oracle.tree.atoms();
  if (sol.Y.paths() != atoms || sol.Y.nodes() != oracle.grid.nodes() || sol.Y.dim() != 1 ||
      sol.Z.dim() != 1) {
    throw Error(ErrorKind::kShapeMismatch, "solution is not on the oracle's tree");
  }
  OracleDiff diff;
  diff.max_abs_diff_Y.assign(oracle.grid.nodes(), 0.0);
  diff.max_abs_diff_Z.assign(oracle.grid.nodes(), 0.0);
  for (int k = 0; k < oracle.grid.nodes(); ++k) {
    for (std::size_t a = 0; a < atoms; ++a) {
      diff.max_abs_diff_Y[k] =
          std::max(diff.max_abs_diff_Y[k], std::abs(sol.Y.at(a, k)[0] - oracle.Y_at(a, k)));
      diff.max_abs_diff_Z[k] =
          std::max(diff.max_abs_diff_Z[k], std::abs(sol.Z.at(a, k)[0] - oracle.Z_at(a, k)));
    }
    diff.max_Y = std::max(diff.max_Y, diff.max_abs_diff_Y[k]);
    diff.max_Z = std::max(diff.max_Z, diff.max_abs_diff_Z[k]);
  }
  return diff;
}

double measurability_defect(const PathProcess& X, const TreeModel& tree) {
  if (X.paths() != tree.atoms()) {
    throw Error(ErrorKind::kShapeMismatch, "process is not indexed by the tree's atoms");
  }
  const int dim = X.dim();
  double worst = 0.0;
  const int nodes = std::min(X.nodes(), tree.steps() + 1);
  std::vector<double> lo(tree.blocks() * dim), hi(tree.blocks() * dim);
  for (int k = 0; k < nodes; ++k) {
    std::fill(lo.begin(), lo.end(), INFINITY);
    std::fill(hi.begin(), hi.end(), -INFINITY);
    for (std::size_t a = 0; a < tree.atoms(); ++a) {
      const std::uint32_t blk = tree.block(a, k);
      const auto x = X.at(a, k);
      for (int i = 0; i < dim; ++i) {
        lo[blk * dim + i] = std::min(lo[blk * dim + i], x[i]);
        hi[blk * dim + i] = std::max(hi[blk * dim + i], x[i]);
      }
    }
    for (std::size_t i = 0; i < lo.size(); ++i) worst = std::max(worst, hi[i] - lo[i]);
  }
  return worst;
}

}  // namespace abdsde
