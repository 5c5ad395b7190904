#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "abdsde/stochastic_core.hpp"

namespace abdsde {

/// "markov-poly": all monomials of total degree <= degree in the standardized
/// drivers W_{t_k}, B_T - B_{t_k} and B_{T+K} - B_T (the latter two merge once t_k >= T).
/// Drivers that vanish identically at node k are dropped.
struct RegressionBasis {
  std::string feature_map = "markov-poly";
  int degree = 2;
  double ridge = 1e-8;
};

class CondExpBackend {
 public:
  enum class Kind { kRegression, kExact };

  static CondExpBackend regression(RegressionBasis basis = {});
  /// Exact enumeration; only valid on tree ensembles.
  static CondExpBackend exact();

  Kind kind() const { return kind_; }
  bool is_exact() const { return kind_ == Kind::kExact; }
  const RegressionBasis& basis() const { return basis_; }
  std::string describe() const;

 private:
  Kind kind_ = Kind::kRegression;
  RegressionBasis basis_;
};

/// Feature matrix at node k, P x F row-major; column 0 is the intercept.
std::vector<double> markov_features(const RegressionBasis& basis, const PathEnsemble& paths,
                                    int k, std::size_t* feature_count = nullptr);

struct LeastSquaresFit {
  std::vector<double> coefficients;  // F x width
  std::vector<double> fitted;        // P x width
  double residual_rms = 0.0;
  double r_squared = 1.0;  // of the first column; 1 when the target is constant
};

/// Ridge least squares (X'X/P + ridge*diag(0,1,..,1)) b = X'Y/P. X is P x F with an
/// intercept column first. Throws SingularDesign if ridge == 0 and X is rank-deficient.
LeastSquaresFit least_squares(std::span<const double> X, std::size_t features,
                              std::span<const double> Y, int width, double ridge);

/// Conditional expectation operator for one node, reusable across targets.
class NodeProjector {
 public:
  NodeProjector(const CondExpBackend& backend, const PathEnsemble& paths, int k);
  ~NodeProjector();
  NodeProjector(NodeProjector&&) noexcept;
  NodeProjector& operator=(NodeProjector&&) noexcept;

  /// targets: P x width row-major. Columns constant across paths are returned as is.
  std::vector<double> project(std::span<const double> targets, int width) const;

  int node() const { return k_; }
  std::size_t features() const;
  /// Largest residual RMS over the regression fits done so far (0 for exact).
  double max_residual_rms() const { return max_rms_; }
  /// Standard-error scale of the fitted values, max_residual_rms * sqrt(F / P).
  double fit_stderr() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int k_;
  mutable double max_rms_ = 0.0;
};

/// E[target | F_{t_k}] per path, with F_t generated by W on [0, t] and B on [t, T+K].
/// Throws InsufficientPaths (P < 10 F), SingularDesign, BackendMismatch, NonFinite.
std::vector<double> condexp(const CondExpBackend& backend, std::span<const double> targets,
                            int width, int k, const PathEnsemble& paths);

}  // namespace abdsde
