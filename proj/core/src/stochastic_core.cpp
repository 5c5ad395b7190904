#include "abdsde/stochastic_core.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "abdsde/error.hpp"

namespace abdsde {
namespace {

int integral_ratio(double value, double h, const char* what) {
  const double ratio = value / h;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) > 1e-9 * std::max(1.0, std::abs(ratio))) {
    throw Error(ErrorKind::kNonCommensurate,
                std::string(what) + "=" + std::to_string(value) +
                    " is not an integer multiple of h=" + std::to_string(h));
  }
  return static_cast<int>(nearest);
}

}  // namespace

TimeGrid make_grid(double T, double K, double h) {
  if (!(h > 0.0) || !(T > 0.0) || !(K >= 0.0) || !std::isfinite(T + K + h)) {
    throw Error(ErrorKind::kInvalidArgument, "grid requires T > 0, K >= 0, h > 0");
  }
  const int n_T = integral_ratio(T, h, "T");
  const int n_K = integral_ratio(K, h, "K");
  if (n_T < 1) throw Error(ErrorKind::kNonCommensurate, "T/h must be at least 1");
  return TimeGrid{h, n_T, n_T + n_K};
}

double PathView::W(int k, int i) const {
  double w = 0.0;
  for (int j = 0; j < k; ++j) w += dW(j, i);
  return w;
}

double PathView::B(int k, int j) const {
  double b = 0.0;
  for (int s = 0; s < k; ++s) b += dB(s, j);
  return b;
}

PathEnsemble::PathEnsemble(TimeGrid grid, int d, int l, std::vector<double> dW,
                           std::vector<double> dB, std::uint64_t seed, int tree_steps)
    : grid_(grid),
      d_(d),
      l_(l),
      paths_(0),
      dW_(std::move(dW)),
      dB_(std::move(dB)),
      seed_(seed),
      tree_steps_(tree_steps) {
  if (d < 1 || l < 1 || grid.n_end < 1) {
    throw Error(ErrorKind::kShapeMismatch, "ensemble needs d, l >= 1 and at least one step");
  }
  const std::size_t per_path_w = static_cast<std::size_t>(grid.n_end) * d;
  const std::size_t per_path_b = static_cast<std::size_t>(grid.n_end) * l;
  paths_ = dW_.size() / per_path_w;
  if (paths_ == 0 || dW_.size() != paths_ * per_path_w || dB_.size() != paths_ * per_path_b) {
    throw Error(ErrorKind::kShapeMismatch, "increment arrays do not match grid and dimensions");
  }
}

std::span<const double> PathEnsemble::dW(std::size_t p, int k) const {
  return {dW_.data() + (p * grid_.n_end + k) * d_, static_cast<std::size_t>(d_)};
}

std::span<const double> PathEnsemble::dB(std::size_t p, int k) const {
  return {dB_.data() + (p * grid_.n_end + k) * l_, static_cast<std::size_t>(l_)};
}

PathView PathEnsemble::path(std::size_t p) const {
  const std::size_t sw = static_cast<std::size_t>(grid_.n_end) * d_;
  const std::size_t sb = static_cast<std::size_t>(grid_.n_end) * l_;
  return PathView{{dW_.data() + p * sw, sw}, {dB_.data() + p * sb, sb}, d_, l_, grid_.h};
}

std::vector<double> PathEnsemble::W_at(int k) const {
  std::vector<double> out(paths_ * d_, 0.0);
  for (std::size_t p = 0; p < paths_; ++p) {
    for (int j = 0; j < k; ++j) {
      const auto inc = dW(p, j);
      for (int i = 0; i < d_; ++i) out[p * d_ + i] += inc[i];
    }
  }
  return out;
}

std::vector<double> PathEnsemble::B_between(int k_from, int k_to) const {
  std::vector<double> out(paths_ * l_, 0.0);
  for (std::size_t p = 0; p < paths_; ++p) {
    for (int j = k_from; j < k_to; ++j) {
      const auto inc = dB(p, j);
      for (int i = 0; i < l_; ++i) out[p * l_ + i] += inc[i];
    }
  }
  return out;
}

PathEnsemble PathEnsemble::coarsen(int factor) const {
  if (factor < 1 || grid_.n_T % factor != 0 || grid_.n_end % factor != 0) {
    throw Error(ErrorKind::kNonCommensurate,
                "cannot coarsen grid by factor " + std::to_string(factor));
  }
  const TimeGrid coarse{grid_.h * factor, grid_.n_T / factor, grid_.n_end / factor};
  std::vector<double> cw(paths_ * coarse.n_end * d_, 0.0);
  std::vector<double> cb(paths_ * coarse.n_end * l_, 0.0);
  for (std::size_t p = 0; p < paths_; ++p) {
    for (int k = 0; k < grid_.n_end; ++k) {
      const int ck = k / factor;
      const auto iw = dW(p, k);
      const auto ib = dB(p, k);
      for (int i = 0; i < d_; ++i) cw[(p * coarse.n_end + ck) * d_ + i] += iw[i];
      for (int j = 0; j < l_; ++j) cb[(p * coarse.n_end + ck) * l_ + j] += ib[j];
    }
  }
  return PathEnsemble(coarse, d_, l_, std::move(cw), std::move(cb), seed_);
}

std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix_seed(mix_seed(master) ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

void gaussian_fill(std::uint64_t stream_seed, double variance, std::span<double> out) {
  std::mt19937_64 engine(stream_seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(variance));
  for (double& x : out) x = normal(engine);
}

PathEnsemble sample_paths(const TimeGrid& grid, int d, int l, std::size_t P,
                          std::uint64_t seed) {
  if (P < 1 || d < 1 || l < 1) {
    throw Error(ErrorKind::kInvalidArgument, "sample_paths needs P, d, l >= 1");
  }
  const std::size_t sw = static_cast<std::size_t>(grid.n_end) * d;
  const std::size_t sb = static_cast<std::size_t>(grid.n_end) * l;
  std::vector<double> dW(P * sw);
  std::vector<double> dB(P * sb);
  for (std::size_t p = 0; p < P; ++p) {
    gaussian_fill(substream_seed(seed, 2 * p), grid.h, {dW.data() + p * sw, sw});
    gaussian_fill(substream_seed(seed, 2 * p + 1), grid.h, {dB.data() + p * sb, sb});
  }
  return PathEnsemble(grid, d, l, std::move(dW), std::move(dB), seed);
}

PathProcess::PathProcess(std::size_t paths, int nodes, int rows, int cols)
    : paths_(paths),
      nodes_(nodes),
      rows_(rows),
      cols_(cols),
      data_(paths * static_cast<std::size_t>(nodes) * rows * cols, 0.0) {}

std::span<double> PathProcess::at(std::size_t p, int k) {
  const std::size_t dim = static_cast<std::size_t>(rows_) * cols_;
  return {data_.data() + (static_cast<std::size_t>(k) * paths_ + p) * dim, dim};
}

std::span<const double> PathProcess::at(std::size_t p, int k) const {
  const std::size_t dim = static_cast<std::size_t>(rows_) * cols_;
  return {data_.data() + (static_cast<std::size_t>(k) * paths_ + p) * dim, dim};
}

std::span<double> PathProcess::node(int k) {
  const std::size_t n = paths_ * rows_ * cols_;
  return {data_.data() + static_cast<std::size_t>(k) * n, n};
}

std::span<const double> PathProcess::node(int k) const {
  const std::size_t n = paths_ * rows_ * cols_;
  return {data_.data() + static_cast<std::size_t>(k) * n, n};
}

namespace {

void check_integral_args(const PathProcess& X, const PathEnsemble& paths, int cols,
                         int k_from, int k_to, const char* name) {
  if (X.cols() != cols || X.paths() != paths.size() ||
      X.nodes() != paths.grid().nodes()) {
    throw Error(ErrorKind::kShapeMismatch, std::string(name) + ": integrand shape mismatch");
  }
  if (k_from < 0 || k_from > k_to || k_to > paths.grid().n_end) {
    throw Error(ErrorKind::kInvalidArgument, std::string(name) + ": bad index range");
  }
}

}  // namespace

std::vector<double> forward_integral(const PathProcess& Z, const PathEnsemble& paths,
                                     int k_from, int k_to) {
  const int d = paths.dim_w();
  check_integral_args(Z, paths, d, k_from, k_to, "forward_integral");
  const int m = Z.rows();
  std::vector<double> out(paths.size() * m, 0.0);
  for (std::size_t p = 0; p < paths.size(); ++p) {
    for (int k = k_from; k < k_to; ++k) {
      const auto z = Z.at(p, k);
      const auto dw = paths.dW(p, k);
      for (int r = 0; r < m; ++r) {
        for (int i = 0; i < d; ++i) out[p * m + r] += z[r * d + i] * dw[i];
      }
    }
  }
  return out;
}

std::vector<double> backward_integral(const PathProcess& G, const PathEnsemble& paths,
                                      int k_from, int k_to) {
  const int l = paths.dim_b();
  check_integral_args(G, paths, l, k_from, k_to, "backward_integral");
  const int m = G.rows();
  std::vector<double> out(paths.size() * m, 0.0);
  for (std::size_t p = 0; p < paths.size(); ++p) {
    for (int k = k_from; k < k_to; ++k) {
      const auto g = G.at(p, k + 1);
      const auto db = paths.dB(p, k);
      for (int r = 0; r < m; ++r) {
        for (int j = 0; j < l; ++j) out[p * m + r] += g[r * l + j] * db[j];
      }
    }
  }
  return out;
}

}  // namespace abdsde
