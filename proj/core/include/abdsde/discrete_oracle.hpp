#pragma once

#include <vector>

#include "abdsde/abdsde_solver.hpp"
#include "abdsde/tree_model.hpp"

namespace abdsde {

/// Exact backward recursion on the tree, one value per F_{t_k} block and node.
struct OracleSolution {
  TreeModel tree;
  TimeGrid grid;
  std::vector<std::vector<double>> Y;  // [node][block]
  std::vector<std::vector<double>> Z;
  std::vector<std::vector<double>> F;  // drift used at nodes < n_T
  std::vector<std::vector<double>> G;  // noise at nodes 1..n_T

  double Y_at(std::size_t atom, int k) const { return Y[k][tree.block(atom, k)]; }
  double Z_at(std::size_t atom, int k) const { return Z[k][tree.block(atom, k)]; }
  double F_at(std::size_t atom, int k) const { return F[k][tree.block(atom, k)]; }
  double G_at(std::size_t atom, int k) const { return G[k][tree.block(atom, k)]; }
};

/// Scalar scenarios only (m = d = l = 1), grid-aligned delays, n_end <= 8 steps.
/// Throws TooLarge, ShapeMismatch, InvalidArgument.
OracleSolution oracle_solve(const Scenario& scenario);

struct OracleDiff {
  std::vector<double> max_abs_diff_Y;  // per node
  std::vector<double> max_abs_diff_Z;
  double max_Y = 0.0;
  double max_Z = 0.0;
};

/// Per-node max |solver - oracle| over all atoms; `sol` must come from the tree ensemble.
OracleDiff compare_to_oracle(const OracleSolution& oracle, const SolutionProcess& sol);

/// Largest spread of X_k within an F_{t_k} block, over all nodes. Zero means X is adapted.
double measurability_defect(const PathProcess& X, const TreeModel& tree);

}  // namespace abdsde
