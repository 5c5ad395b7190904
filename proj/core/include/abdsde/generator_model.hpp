#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "abdsde/stochastic_core.hpp"

namespace abdsde {

struct Dims {
  int m = 1;
  int d = 1;
  int l = 1;

  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Declared constants: |df|^2 <= c(|dy|^2 + |dz|^2 + |dy'|^2 + |dz'|^2) and
/// |dg|^2 <= c(|dy|^2 + |dy'|^2) + alpha1 |dz|^2 + alpha2 |dz'|^2.
struct LipschitzData {
  double c = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
};

/// A map phi(y', z') of the anticipated point (Y_{t+delta(t)}, Z_{t+zeta(t)}).
/// The generator only sees its conditional mean given F_t.
struct AnticipationFunctional {
  std::string name;
  int width = 1;
  std::function<void(std::span<const double> y, std::span<const double> z,
                     std::span<double> out)>
      map;
};

/// (t, y in R^m, z in R^{m x d}, e in R^{sum q_j}) -> out.
using CoefficientFn =
    std::function<void(double t, std::span<const double> y, std::span<const double> z,
                       std::span<const double> e, std::span<double> out)>;

using Params = std::map<std::string, double, std::less<>>;

class GeneratorSpec {
 public:
  struct Flags {
    bool g_depends_on_z = false;
    bool g_depends_on_anticipation = false;
    bool g_vanishes = false;
  };

  struct Value {
    std::vector<double> f;  // m
    std::vector<double> g;  // m x l
  };

  GeneratorSpec(std::string name, Dims dims, CoefficientFn f, CoefficientFn g,
                std::vector<AnticipationFunctional> functionals, LipschitzData lipschitz,
                Flags flags);

  const std::string& name() const { return name_; }
  const Dims& dims() const { return dims_; }
  const LipschitzData& lipschitz() const { return lipschitz_; }
  const Flags& flags() const { return flags_; }
  const std::vector<AnticipationFunctional>& functionals() const { return functionals_; }
  int anticipation_width() const { return width_; }
  bool has_anticipation() const { return width_ > 0; }

  /// Concatenated phi_j(y', z') for all declared functionals.
  void anticipate(std::span<const double> y_future, std::span<const double> z_future,
                  std::span<double> e) const;

  /// Unchecked evaluation used by the solvers.
  void drift(double t, std::span<const double> y, std::span<const double> z,
             std::span<const double> e, std::span<double> out) const {
    f_(t, y, z, e, out);
  }
  void noise(double t, std::span<const double> y, std::span<const double> z,
             std::span<const double> e, std::span<double> out) const {
    g_(t, y, z, e, out);
  }

  /// Checked pointwise evaluation. Throws ShapeMismatch or NonFinite.
  Value evaluate(double t, std::span<const double> y, std::span<const double> z,
                 std::span<const double> e) const;

  /// f and g at e = phi(y', z'), i.e. with a point-mass anticipated law.
  Value evaluate_at_point(double t, std::span<const double> y, std::span<const double> z,
                          std::span<const double> y_future,
                          std::span<const double> z_future) const;

  GeneratorSpec with_lipschitz(LipschitzData lipschitz) const;

  /// Throws Infeasible unless alpha1 + alpha2*M < 1.
  void check_feasible(double M) const;

 private:
  std::string name_;
  Dims dims_;
  CoefficientFn f_;
  CoefficientFn g_;
  std::vector<AnticipationFunctional> functionals_;
  LipschitzData lipschitz_;
  Flags flags_;
  int width_ = 0;
};

/// Coefficients of the linear generator
/// f = (mu + |kappa|^2) y + mu_bar E[Y_{t+delta}] + sigma.z + sigma_bar.E[Z_{t+delta}] + rho,
/// g = kappa y.
struct LinearCoefficients {
  std::function<double(double)> mu;
  std::function<double(double)> mu_bar;
  std::function<double(double)> rho;
  std::vector<double> sigma;      // d
  std::vector<double> sigma_bar;  // d
  std::vector<double> kappa;      // l
  double sup_mu = 0.0;
  double sup_mu_bar = 0.0;

  static LinearCoefficients constant(double mu, double mu_bar, std::vector<double> sigma,
                                     std::vector<double> sigma_bar, std::vector<double> kappa,
                                     double rho);
};

GeneratorSpec linear_generator(const LinearCoefficients& coeffs, Dims dims);

/// Catalog: zero, constant_rho, linear_bsde, anticipated_drift, example41_f1,
/// example41_f2, example41_g, example42_f1, example42_ftilde, example42_f2,
/// duality_linear. Throws UnknownName.
GeneratorSpec builtin_generator(std::string_view name, const Params& params, Dims dims);
const std::vector<std::string>& builtin_generator_names();

struct LipschitzAudit {
  std::size_t samples = 0;
  double f_constant = 0.0;
  double g_y_constant = 0.0;
  double g_z_constant = 0.0;
  double g_anticipated_z_constant = 0.0;
  bool pass = false;
};

/// Random pairs with standard Gaussian arguments scaled by 0.1, 1 and 10 in
/// rotation. Each g constant is measured with only its own argument group varied.
LipschitzAudit audit_lipschitz(const GeneratorSpec& spec, std::size_t samples,
                               std::uint64_t seed);

/// Terminal values (xi, eta) on nodes n_T..n_end. Node j of the processes is grid node n_T + j.
struct TerminalData {
  PathProcess xi;   // m
  PathProcess eta;  // m x d
  bool deterministic = false;
};

/// xi_k, eta_k for grid node k >= n_T along one path; must be measurable with
/// respect to W up to t_k and B increments after t_k.
using TerminalFn = std::function<void(const TimeGrid& grid, int k, const PathView& path,
                                      std::span<double> xi, std::span<double> eta)>;

class TerminalSpec {
 public:
  TerminalSpec(std::string name, TerminalFn fn, bool deterministic);

  const std::string& name() const { return name_; }
  bool deterministic() const { return deterministic_; }

  void evaluate(const TimeGrid& grid, int k, const PathView& path, std::span<double> xi,
                std::span<double> eta) const {
    fn_(grid, k, path, xi, eta);
  }

  TerminalData materialize(const PathEnsemble& paths, Dims dims) const;

 private:
  std::string name_;
  TerminalFn fn_;
  bool deterministic_;
};

/// Catalog: constant(value), affine_w(value, slope), last_w_increment(value, scale),
/// b_after_T(value, slope), linear_in_time(value, slope, eta). Throws UnknownName.
TerminalSpec builtin_terminal(std::string_view name, const Params& params, Dims dims);

}  // namespace abdsde
