#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace abdsde {

/// Uniform grid t_k = k*h on [0, T+K]; node n_T is the terminal time T.
struct TimeGrid {
  double h = 0.0;
  int n_T = 0;
  int n_end = 0;

  double t(int k) const { return k * h; }
  double T() const { return n_T * h; }
  double horizon() const { return n_end * h; }
  int nodes() const { return n_end + 1; }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// Builds the grid for [0, T+K] with step h. Throws NonCommensurate unless
/// T/h and K/h are integers within relative tolerance 1e-9.
TimeGrid make_grid(double T, double K, double h);

/// Read-only view of one path's increments.
struct PathView {
  std::span<const double> dw;  // steps x d, row-major
  std::span<const double> db;  // steps x l
  int d = 1;
  int l = 1;
  double h = 0.0;

  double dW(int k, int i = 0) const { return dw[static_cast<std::size_t>(k) * d + i]; }
  double dB(int k, int j = 0) const { return db[static_cast<std::size_t>(k) * l + j]; }
  /// W_{t_k}, summed from node 0 in index order.
  double W(int k, int i = 0) const;
  /// B_{t_k} with B_0 = 0.
  double B(int k, int j = 0) const;
};

/// Increments of the two independent drivers W (d-dim) and B (l-dim) for P
/// paths. Path p's increments depend only on (seed, p), never on P.
class PathEnsemble {
 public:
  PathEnsemble(TimeGrid grid, int d, int l, std::vector<double> dW,
               std::vector<double> dB, std::uint64_t seed, int tree_steps = 0);

  std::size_t size() const { return paths_; }
  const TimeGrid& grid() const { return grid_; }
  int dim_w() const { return d_; }
  int dim_b() const { return l_; }
  std::uint64_t seed() const { return seed_; }

  /// Nonzero when the ensemble enumerates the atoms of a TreeModel in atom order.
  int tree_steps() const { return tree_steps_; }
  bool is_tree() const { return tree_steps_ > 0; }

  std::span<const double> dW(std::size_t p, int k) const;
  std::span<const double> dB(std::size_t p, int k) const;
  PathView path(std::size_t p) const;

  /// W_{t_k} for every path, P x d row-major.
  std::vector<double> W_at(int k) const;
  /// B_{t_to} - B_{t_from} for every path, P x l row-major.
  std::vector<double> B_between(int k_from, int k_to) const;

  /// Same Brownian paths observed on a grid with step factor*h.
  PathEnsemble coarsen(int factor) const;

  const std::vector<double>& raw_dW() const { return dW_; }
  const std::vector<double>& raw_dB() const { return dB_; }

 private:
  TimeGrid grid_;
  int d_;
  int l_;
  std::size_t paths_;
  std::vector<double> dW_;  // [p][k][i]
  std::vector<double> dB_;  // [p][k][j]
  std::uint64_t seed_;
  int tree_steps_;
};

/// SplitMix64 finalizer; used to derive independent substream seeds.
std::uint64_t mix_seed(std::uint64_t x) noexcept;
/// Seed for substream `index` of `master`; stable across P and worker count.
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Fills `out` with i.i.d. N(0, variance) draws from the substream seeded by `stream_seed`.
void gaussian_fill(std::uint64_t stream_seed, double variance, std::span<double> out);

PathEnsemble sample_paths(const TimeGrid& grid, int d, int l, std::size_t P,
                          std::uint64_t seed);

/// Grid-indexed per-path values in R^{rows x cols}; layout [node][path][rows*cols].
class PathProcess {
 public:
  PathProcess() = default;
  PathProcess(std::size_t paths, int nodes, int rows, int cols = 1);

  std::size_t paths() const { return paths_; }
  int nodes() const { return nodes_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int dim() const { return rows_ * cols_; }

  std::span<double> at(std::size_t p, int k);
  std::span<const double> at(std::size_t p, int k) const;
  /// All paths at node k, P x dim row-major.
  std::span<double> node(int k);
  std::span<const double> node(int k) const;

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const PathProcess&, const PathProcess&) = default;

 private:
  std::size_t paths_ = 0;
  int nodes_ = 0;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

/// Per path, sum_{k=k_from}^{k_to-1} Z_k dW_k (left endpoint). Z is m x d.
/// Returns P x m row-major.
std::vector<double> forward_integral(const PathProcess& Z, const PathEnsemble& paths,
                                     int k_from, int k_to);

/// Per path, sum_{k=k_from}^{k_to-1} G_{k+1} dB_k (right endpoint, backward Ito).
/// G is m x l. Returns P x m row-major.
std::vector<double> backward_integral(const PathProcess& G, const PathEnsemble& paths,
                                      int k_from, int k_to);

}  // namespace abdsde
