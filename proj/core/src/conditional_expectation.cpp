#include "abdsde/conditional_expectation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

#include "abdsde/error.hpp"
#include "abdsde/tree_model.hpp"

namespace abdsde {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Exponent vectors of all monomials of total degree <= p in r variables,
// ordered by degree; the first one is the constant.
std::vector<std::vector<int>> monomials(int r, int p) {
  std::vector<std::vector<int>> out;
  std::vector<int> e(r, 0);
  std::function<void(int, int)> rec = [&](int var, int left) {
    if (var == r) {
      out.push_back(e);
      return;
    }
    for (int x = 0; x <= left; ++x) {
      e[var] = x;
      rec(var + 1, left - x);
    }
    e[var] = 0;
  };
  rec(0, p);
  auto degree = [](const std::vector<int>& v) { return std::accumulate(v.begin(), v.end(), 0); };
  std::stable_sort(out.begin(), out.end(),
                   [&](const auto& a, const auto& b) { return degree(a) < degree(b); });
  return out;
}

bool column_constant(std::span<const double> targets, int width, int col, std::size_t P) {
  const double first = targets[col];
  for (std::size_t p = 1; p < P; ++p) {
    if (targets[p * width + col] != first) return false;
  }
  return true;
}

void check_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorKind::kNonFinite, "condexp target is not finite");
  }
}

struct Factorization {
  Eigen::LDLT<Eigen::MatrixXd> ldlt;
  bool singular = false;
};

Factorization factorize(const Eigen::Ref<const Eigen::MatrixXd>& X, double ridge) {
  const double P = static_cast<double>(X.rows());
  Eigen::MatrixXd A = (X.transpose() * X) / P;
  for (Eigen::Index i = 1; i < A.rows(); ++i) A(i, i) += ridge;
  Factorization f;
  f.ldlt.compute(A);
  const auto D = f.ldlt.vectorD().cwiseAbs();
  f.singular = f.ldlt.info() != Eigen::Success ||
               D.minCoeff() <= 1e-12 * std::max(D.maxCoeff(), 1e-300);
  return f;
}

}  // namespace

CondExpBackend CondExpBackend::regression(RegressionBasis basis) {
  if (basis.feature_map != "markov-poly") {
    throw Error(ErrorKind::kUnknownName, "unknown feature map '" + basis.feature_map + "'");
  }
  if (basis.degree < 0 || !(basis.ridge >= 0.0) || !std::isfinite(basis.ridge)) {
    throw Error(ErrorKind::kInvalidArgument, "basis needs degree >= 0 and ridge >= 0");
  }
  CondExpBackend b;
  b.kind_ = Kind::kRegression;
  b.basis_ = std::move(basis);
  return b;
}

CondExpBackend CondExpBackend::exact() {
  CondExpBackend b;
  b.kind_ = Kind::kExact;
  return b;
}

std::string CondExpBackend::describe() const {
  if (kind_ == Kind::kExact) return "exact";
  std::ostringstream os;
  os << "regression(" << basis_.feature_map << ",degree=" << basis_.degree
     << ",ridge=" << basis_.ridge << ")";
  return os.str();
}

std::vector<double> markov_features(const RegressionBasis& basis, const PathEnsemble& paths,
                                    int k, std::size_t* feature_count) {
  const TimeGrid& grid = paths.grid();
  const std::size_t P = paths.size();
  const int d = paths.dim_w();
  const int l = paths.dim_b();

  // Standardized raw drivers, P x r.
  std::vector<std::vector<double>> raw;
  auto add_block = [&](const std::vector<double>& v, int width, double scale) {
    for (int c = 0; c < width; ++c) {
      std::vector<double> col(P);
      for (std::size_t p = 0; p < P; ++p) col[p] = v[p * width + c] / scale;
      raw.push_back(std::move(col));
    }
  };
  if (k > 0) add_block(paths.W_at(k), d, std::sqrt(grid.t(k)));
  if (k < grid.n_T) {
    add_block(paths.B_between(k, grid.n_T), l, std::sqrt(grid.T() - grid.t(k)));
    if (grid.n_end > grid.n_T) {
      add_block(paths.B_between(grid.n_T, grid.n_end), l,
                std::sqrt(grid.horizon() - grid.T()));
    }
  } else if (k < grid.n_end) {
    add_block(paths.B_between(k, grid.n_end), l, std::sqrt(grid.horizon() - grid.t(k)));
  }

  const auto powers = monomials(static_cast<int>(raw.size()), basis.degree);
  const std::size_t F = powers.size();
  std::vector<double> X(P * F);
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t f = 0; f < F; ++f) {
      double v = 1.0;
      for (std::size_t r = 0; r < raw.size(); ++r) {
        for (int e = 0; e < powers[f][r]; ++e) v *= raw[r][p];
      }
      X[p * F + f] = v;
    }
  }
  if (feature_count != nullptr) *feature_count = F;
  return X;
}

LeastSquaresFit least_squares(std::span<const double> X, std::size_t features,
                              std::span<const double> Y, int width, double ridge) {
  const std::size_t P = features == 0 ? 0 : X.size() / features;
  if (features == 0 || width < 1 || X.size() != P * features || Y.size() != P * width) {
    throw Error(ErrorKind::kShapeMismatch, "least_squares: shape mismatch");
  }
  check_finite(X);
  check_finite(Y);
  const Eigen::Map<const RowMatrix> Xm(X.data(), P, features);
  const Eigen::Map<const RowMatrix> Ym(Y.data(), P, width);
  const Eigen::MatrixXd Xd = Xm;
  const Factorization fac = factorize(Xd, ridge);
  if (ridge == 0.0 && fac.singular) {
    throw Error(ErrorKind::kSingularDesign, "design matrix is rank-deficient");
  }
  const Eigen::MatrixXd rhs = (Xd.transpose() * Ym) / static_cast<double>(P);
  const Eigen::MatrixXd beta = fac.ldlt.solve(rhs);
  const Eigen::MatrixXd fitted = Xd * beta;

  LeastSquaresFit out;
  out.coefficients.resize(features * width);
  out.fitted.resize(P * width);
  for (std::size_t f = 0; f < features; ++f) {
    for (int c = 0; c < width; ++c) out.coefficients[f * width + c] = beta(f, c);
  }
  double ss_res = 0.0;
  for (std::size_t p = 0; p < P; ++p) {
    for (int c = 0; c < width; ++c) {
      out.fitted[p * width + c] = fitted(p, c);
      const double r = Ym(p, c) - fitted(p, c);
      ss_res += r * r;
    }
  }
  out.residual_rms = std::sqrt(ss_res / static_cast<double>(P * width));

  const double mean = Ym.col(0).mean();
  double ss_tot = 0.0;
  double ss_first = 0.0;
  double sum_sq = 0.0;
  for (std::size_t p = 0; p < P; ++p) {
    ss_tot += (Ym(p, 0) - mean) * (Ym(p, 0) - mean);
    ss_first += (Ym(p, 0) - fitted(p, 0)) * (Ym(p, 0) - fitted(p, 0));
    sum_sq += Ym(p, 0) * Ym(p, 0);
  }
  out.r_squared = ss_tot <= 1e-28 * std::max(1.0, sum_sq) ? 1.0 : 1.0 - ss_first / ss_tot;
  return out;
}

struct NodeProjector::Impl {
  CondExpBackend backend;
  std::size_t P = 0;
  // exact
  std::size_t blocks = 0;
  std::vector<int> free_bits;  // atom bit positions averaged out, dW_k first
  std::size_t free_mask = 0;
  // regression
  Eigen::MatrixXd X;
  mutable bool factored = false;
  mutable Factorization fac;
};

NodeProjector::NodeProjector(const CondExpBackend& backend, const PathEnsemble& paths, int k)
    : impl_(std::make_unique<Impl>()), k_(k) {
  const TimeGrid& grid = paths.grid();
  if (k < 0 || k > grid.n_end) {
    throw Error(ErrorKind::kInvalidArgument, "condexp node out of range");
  }
  impl_->backend = backend;
  impl_->P = paths.size();
  if (backend.is_exact()) {
    const int n = paths.tree_steps();
    if (!paths.is_tree() || n != grid.n_end ||
        paths.size() != (std::size_t{1} << (2 * n))) {
      throw Error(ErrorKind::kBackendMismatch,
                  "exact backend requires a tree ensemble enumerating all atoms");
    }
    impl_->blocks = TreeModel(n, grid.h).blocks();
    if (k < n) impl_->free_bits.push_back(2 * k);
    for (int j = 0; j < n; ++j) {
      if (j < k) impl_->free_bits.push_back(2 * j + 1);
      if (j > k) impl_->free_bits.push_back(2 * j);
    }
    for (int q : impl_->free_bits) impl_->free_mask |= std::size_t{1} << q;
    return;
  }
  std::size_t F = 0;
  const std::vector<double> X = markov_features(backend.basis(), paths, k, &F);
  impl_->X = Eigen::Map<const RowMatrix>(X.data(), paths.size(), F);
}

NodeProjector::~NodeProjector() = default;
NodeProjector::NodeProjector(NodeProjector&&) noexcept = default;
NodeProjector& NodeProjector::operator=(NodeProjector&&) noexcept = default;

std::size_t NodeProjector::features() const {
  return impl_->backend.is_exact() ? impl_->blocks : static_cast<std::size_t>(impl_->X.cols());
}

double NodeProjector::fit_stderr() const {
  if (impl_->backend.is_exact()) return 0.0;
  return max_rms_ * std::sqrt(static_cast<double>(features()) / static_cast<double>(impl_->P));
}

std::vector<double> NodeProjector::project(std::span<const double> targets, int width) const {
  const std::size_t P = impl_->P;
  if (width < 1 || targets.size() != P * width) {
    throw Error(ErrorKind::kShapeMismatch, "condexp targets must be P x width");
  }
  check_finite(targets);

  std::vector<double> out(targets.begin(), targets.end());
  std::vector<int> fit_cols;
  for (int c = 0; c < width; ++c) {
    if (!column_constant(targets, width, c, P)) fit_cols.push_back(c);
  }
  if (fit_cols.empty()) return out;

  if (impl_->backend.is_exact()) {
    // Pairwise reduction over the free bits, the current W branch first, so that a
    // target odd in dW_k with an F_{t_k}-measurable factor sums to exactly zero.
    const double atoms_per_block = static_cast<double>(P / impl_->blocks);
    std::vector<double> buf(P);
    for (int c : fit_cols) {
      for (std::size_t a = 0; a < P; ++a) buf[a] = targets[a * width + c];
      for (int q : impl_->free_bits) {
        const std::size_t bit = std::size_t{1} << q;
        for (std::size_t a = 0; a < P; ++a) {
          if ((a & bit) == 0) buf[a] += buf[a | bit];
        }
      }
      for (std::size_t a = 0; a < P; ++a) {
        out[a * width + c] = buf[a & ~impl_->free_mask] / atoms_per_block;
      }
    }
    return out;
  }

  const auto F = static_cast<std::size_t>(impl_->X.cols());
  if (P < 10 * F) {
    throw Error(ErrorKind::kInsufficientPaths,
                std::to_string(P) + " paths for " + std::to_string(F) +
                    " features; need at least 10 per feature");
  }
  const double ridge = impl_->backend.basis().ridge;
  if (!impl_->factored) {
    impl_->fac = factorize(impl_->X, ridge);
    impl_->factored = true;
  }
  if (ridge == 0.0 && impl_->fac.singular) {
    throw Error(ErrorKind::kSingularDesign,
                "design matrix at node " + std::to_string(k_) + " is rank-deficient");
  }
  const auto cols = static_cast<Eigen::Index>(fit_cols.size());
  Eigen::MatrixXd Y(P, cols);
  for (std::size_t p = 0; p < P; ++p) {
    for (Eigen::Index j = 0; j < cols; ++j) Y(p, j) = targets[p * width + fit_cols[j]];
  }
  const Eigen::MatrixXd beta =
      impl_->fac.ldlt.solve((impl_->X.transpose() * Y) / static_cast<double>(P));
  const Eigen::MatrixXd fitted = impl_->X * beta;
  double ss = 0.0;
  for (std::size_t p = 0; p < P; ++p) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double r = Y(p, j) - fitted(p, j);
      ss += r * r;
      out[p * width + fit_cols[j]] = fitted(p, j);
    }
  }
  max_rms_ = std::max(max_rms_, std::sqrt(ss / static_cast<double>(P * cols)));
  return out;
}

std::vector<double> condexp(const CondExpBackend& backend, std::span<const double> targets,
                            int width, int k, const PathEnsemble& paths) {
  return NodeProjector(backend, paths, k).project(targets, width);
}

}  // namespace abdsde
