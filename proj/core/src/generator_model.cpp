#include "abdsde/generator_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "abdsde/error.hpp"

namespace abdsde {
namespace {

double param(const Params& params, std::string_view key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void check_keys(std::string_view owner, const Params& params,
                std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : params) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "unknown parameter '" + key + "' for " + std::string(owner));
    }
    if (!std::isfinite(value)) {
      throw Error(ErrorKind::kNonFinite, "parameter '" + key + "' is not finite");
    }
  }
}

void require_scalar(std::string_view name, Dims dims) {
  if (dims.m != 1 || dims.d != 1 || dims.l != 1) {
    throw Error(ErrorKind::kShapeMismatch, std::string(name) + " requires m = d = l = 1");
  }
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

double norm(std::span<const double> v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

const CoefficientFn kZero = [](double, std::span<const double>, std::span<const double>,
                               std::span<const double>, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
};

// f = e, i.e. the drift is the conditional mean of a scalar functional.
const CoefficientFn kDriftIsAnticipation =
    [](double, std::span<const double>, std::span<const double>, std::span<const double> e,
       std::span<double> out) { std::copy(e.begin(), e.begin() + out.size(), out.begin()); };

// g = y + |z| / sqrt(3)
const CoefficientFn kExample41Noise = [](double, std::span<const double> y,
                                         std::span<const double> z, std::span<const double>,
                                         std::span<double> out) {
  out[0] = y[0] + norm(z) / std::sqrt(3.0);
};

AnticipationFunctional scalar_functional(std::string name, double (*phi)(double, double)) {
  return AnticipationFunctional{
      std::move(name), 1,
      [phi](std::span<const double> y, std::span<const double> z, std::span<double> out) {
        out[0] = phi(y[0], z[0]);
      }};
}

GeneratorSpec anticipated_scalar(std::string name, Dims dims, double (*phi)(double, double),
                                 double c, bool with_example41_noise) {
  require_scalar(name, dims);
  GeneratorSpec::Flags flags;
  LipschitzData lip{c, 0.0, 0.0};
  CoefficientFn g = kZero;
  if (with_example41_noise) {
    g = kExample41Noise;
    flags.g_depends_on_z = true;
    lip.c = std::max(c, 1.0);
    lip.alpha1 = 1.0 / 3.0;
  } else {
    flags.g_vanishes = true;
  }
  return GeneratorSpec(name, dims, kDriftIsAnticipation, g,
                       {scalar_functional("phi", phi)}, lip, flags);
}

}  // namespace

GeneratorSpec::GeneratorSpec(std::string name, Dims dims, CoefficientFn f, CoefficientFn g,
                             std::vector<AnticipationFunctional> functionals,
                             LipschitzData lipschitz, Flags flags)
    : name_(std::move(name)),
      dims_(dims),
      f_(std::move(f)),
      g_(std::move(g)),
      functionals_(std::move(functionals)),
      lipschitz_(lipschitz),
      flags_(flags) {
  if (dims_.m < 1 || dims_.d < 1 || dims_.l < 1) {
    throw Error(ErrorKind::kShapeMismatch, "generator dimensions must be positive");
  }
  if (!(lipschitz_.c >= 0.0) || !(lipschitz_.alpha1 >= 0.0) || !(lipschitz_.alpha2 >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "Lipschitz constants must be nonnegative");
  }
  for (const auto& phi : functionals_) width_ += phi.width;
}

void GeneratorSpec::anticipate(std::span<const double> y_future,
                               std::span<const double> z_future, std::span<double> e) const {
  std::size_t offset = 0;
  for (const auto& phi : functionals_) {
    phi.map(y_future, z_future, e.subspan(offset, phi.width));
    offset += phi.width;
  }
}

GeneratorSpec::Value GeneratorSpec::evaluate(double t, std::span<const double> y,
                                             std::span<const double> z,
                                             std::span<const double> e) const {
  if (static_cast<int>(y.size()) != dims_.m ||
      static_cast<int>(z.size()) != dims_.m * dims_.d ||
      static_cast<int>(e.size()) != width_) {
    throw Error(ErrorKind::kShapeMismatch, "argument shapes do not match generator " + name_);
  }
  if (!std::isfinite(t) || !all_finite(y) || !all_finite(z) || !all_finite(e)) {
    throw Error(ErrorKind::kNonFinite, "non-finite argument to generator " + name_);
  }
  Value v{std::vector<double>(dims_.m), std::vector<double>(dims_.m * dims_.l)};
  f_(t, y, z, e, v.f);
  g_(t, y, z, e, v.g);
  return v;
}

GeneratorSpec::Value GeneratorSpec::evaluate_at_point(double t, std::span<const double> y,
                                                      std::span<const double> z,
                                                      std::span<const double> y_future,
                                                      std::span<const double> z_future) const {
  std::vector<double> e(width_);
  anticipate(y_future, z_future, e);
  return evaluate(t, y, z, e);
}

GeneratorSpec GeneratorSpec::with_lipschitz(LipschitzData lipschitz) const {
  GeneratorSpec copy = *this;
  copy.lipschitz_ = lipschitz;
  return copy;
}

void GeneratorSpec::check_feasible(double M) const {
  const double s = lipschitz_.alpha1 + lipschitz_.alpha2 * M;
  if (!(s < 1.0)) {
    throw Error(ErrorKind::kInfeasible, "alpha1 + alpha2*M = " + std::to_string(s) +
                                            " must be < 1 (generator " + name_ + ")");
  }
}

LinearCoefficients LinearCoefficients::constant(double mu, double mu_bar,
                                                std::vector<double> sigma,
                                                std::vector<double> sigma_bar,
                                                std::vector<double> kappa, double rho) {
  LinearCoefficients c;
  c.mu = [mu](double) { return mu; };
  c.mu_bar = [mu_bar](double) { return mu_bar; };
  c.rho = [rho](double) { return rho; };
  c.sigma = std::move(sigma);
  c.sigma_bar = std::move(sigma_bar);
  c.kappa = std::move(kappa);
  c.sup_mu = std::abs(mu);
  c.sup_mu_bar = std::abs(mu_bar);
  return c;
}

GeneratorSpec linear_generator(const LinearCoefficients& coeffs, Dims dims) {
  if (dims.m != 1 || static_cast<int>(coeffs.sigma.size()) != dims.d ||
      static_cast<int>(coeffs.sigma_bar.size()) != dims.d ||
      static_cast<int>(coeffs.kappa.size()) != dims.l) {
    throw Error(ErrorKind::kShapeMismatch, "linear generator needs m = 1 and matching d, l");
  }
  const double kappa_sq = std::inner_product(coeffs.kappa.begin(), coeffs.kappa.end(),
                                             coeffs.kappa.begin(), 0.0);
  const double sigma_sq = std::inner_product(coeffs.sigma.begin(), coeffs.sigma.end(),
                                             coeffs.sigma.begin(), 0.0);
  const double sigma_bar_sq = std::inner_product(
      coeffs.sigma_bar.begin(), coeffs.sigma_bar.end(), coeffs.sigma_bar.begin(), 0.0);
  const double a = coeffs.sup_mu + kappa_sq;

  auto f = [coeffs, kappa_sq](double t, std::span<const double> y, std::span<const double> z,
                              std::span<const double> e, std::span<double> out) {
    double v = (coeffs.mu(t) + kappa_sq) * y[0] + coeffs.mu_bar(t) * e[0] + coeffs.rho(t);
    for (std::size_t i = 0; i < coeffs.sigma.size(); ++i) {
      v += coeffs.sigma[i] * z[i] + coeffs.sigma_bar[i] * e[1 + i];
    }
    out[0] = v;
  };
  auto g = [kappa = coeffs.kappa](double, std::span<const double> y, std::span<const double>,
                                  std::span<const double>, std::span<double> out) {
    for (std::size_t j = 0; j < kappa.size(); ++j) out[j] = kappa[j] * y[0];
  };
  std::vector<AnticipationFunctional> functionals{
      {"y_future", 1,
       [](std::span<const double> y, std::span<const double>, std::span<double> out) {
         out[0] = y[0];
       }},
      {"z_future", dims.d,
       [](std::span<const double>, std::span<const double> z, std::span<double> out) {
         std::copy(z.begin(), z.end(), out.begin());
       }}};
  // Cauchy-Schwarz over the four argument groups.
  const double c_f = a * a + coeffs.sup_mu_bar * coeffs.sup_mu_bar + sigma_sq + sigma_bar_sq;
  GeneratorSpec::Flags flags;
  flags.g_vanishes = kappa_sq == 0.0;
  return GeneratorSpec("duality_linear", dims, f, g, std::move(functionals),
                       LipschitzData{std::max(c_f, kappa_sq), 0.0, 0.0}, flags);
}

const std::vector<std::string>& builtin_generator_names() {
  static const std::vector<std::string> names = {
      "zero",         "constant_rho", "linear_bsde",  "anticipated_drift",
      "example41_f1", "example41_f2", "example41_g",  "example42_f1",
      "example42_ftilde", "example42_f2", "duality_linear"};
  return names;
}

GeneratorSpec builtin_generator(std::string_view name, const Params& params, Dims dims) {
  GeneratorSpec::Flags vanishing;
  vanishing.g_vanishes = true;

  if (name == "zero") {
    check_keys(name, params, {});
    return GeneratorSpec("zero", dims, kZero, kZero, {}, LipschitzData{}, vanishing);
  }
  if (name == "constant_rho") {
    check_keys(name, params, {"rho"});
    const double rho = param(params, "rho", 0.0);
    auto f = [rho](double, std::span<const double>, std::span<const double>,
                   std::span<const double>, std::span<double> out) {
      std::fill(out.begin(), out.end(), rho);
    };
    return GeneratorSpec("constant_rho", dims, f, kZero, {}, LipschitzData{}, vanishing);
  }
  if (name == "linear_bsde") {
    check_keys(name, params, {"a", "rho"});
    const double a = param(params, "a", 1.0);
    const double rho = param(params, "rho", 0.0);
    auto f = [a, rho](double, std::span<const double> y, std::span<const double>,
                      std::span<const double>, std::span<double> out) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * y[i] + rho;
    };
    return GeneratorSpec("linear_bsde", dims, f, kZero, {}, LipschitzData{a * a, 0.0, 0.0},
                         vanishing);
  }
  if (name == "anticipated_drift") {
    check_keys(name, params, {});
    AnticipationFunctional phi{
        "y_future", dims.m,
        [](std::span<const double> y, std::span<const double>, std::span<double> out) {
          std::copy(y.begin(), y.end(), out.begin());
        }};
    return GeneratorSpec("anticipated_drift", dims, kDriftIsAnticipation, kZero, {phi},
                         LipschitzData{1.0, 0.0, 0.0}, vanishing);
  }
  if (name == "example41_f1") {
    check_keys(name, params, {});
    return anticipated_scalar(
        "example41_f1", dims,
        [](double y, double z) { return y + std::sin(2.0 * y) + std::abs(z) + 2.0; }, 10.0,
        true);
  }
  if (name == "example41_f2") {
    check_keys(name, params, {});
    return anticipated_scalar(
        "example41_f2", dims,
        [](double y, double z) { return y + 2.0 * std::abs(std::cos(y)) + std::sin(z) - 2.0; },
        10.0, true);
  }
  if (name == "example41_g") {
    check_keys(name, params, {});
    require_scalar(name, dims);
    GeneratorSpec::Flags flags;
    flags.g_depends_on_z = true;
    return GeneratorSpec("example41_g", dims, kZero, kExample41Noise, {},
                         LipschitzData{1.0, 1.0 / 3.0, 0.0}, flags);
  }
  if (name == "example42_f1") {
    check_keys(name, params, {});
    return anticipated_scalar(
        "example42_f1", dims, [](double y, double) { return y - std::sin(2.0 * y) + 2.0; }, 9.0,
        false);
  }
  if (name == "example42_ftilde") {
    check_keys(name, params, {});
    return anticipated_scalar("example42_ftilde", dims,
                              [](double y, double) { return y + std::cos(y); }, 4.0, false);
  }
  if (name == "example42_f2") {
    check_keys(name, params, {});
    return anticipated_scalar("example42_f2", dims,
                              [](double y, double) { return y + 2.0 * std::cos(y) - 1.0; }, 9.0,
                              false);
  }
  if (name == "duality_linear") {
    check_keys(name, params, {"mu", "mu_bar", "sigma", "sigma_bar", "kappa", "rho"});
    return linear_generator(
        LinearCoefficients::constant(
            param(params, "mu", 0.0), param(params, "mu_bar", 0.0),
            std::vector<double>(dims.d, param(params, "sigma", 0.0)),
            std::vector<double>(dims.d, param(params, "sigma_bar", 0.0)),
            std::vector<double>(dims.l, param(params, "kappa", 0.0)), param(params, "rho", 0.0)),
        dims);
  }
  throw Error(ErrorKind::kUnknownName, "unknown generator '" + std::string(name) + "'");
}

LipschitzAudit audit_lipschitz(const GeneratorSpec& spec, std::size_t samples,
                               std::uint64_t seed) {
  if (samples < 1000) {
    throw Error(ErrorKind::kInvalidArgument, "audit_lipschitz needs at least 1000 samples");
  }
  const Dims dims = spec.dims();
  const std::size_t m = dims.m;
  const std::size_t md = static_cast<std::size_t>(dims.m) * dims.d;
  const std::size_t w = spec.anticipation_width();
  constexpr std::array<double, 3> kScales = {0.1, 1.0, 10.0};

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  std::vector<double> y1(m), y2(m), z1(md), z2(md), yf1(m), yf2(m), zf1(md), zf2(md);
  std::vector<double> e1(w), e2(w), e3(w), e4(w);
  std::vector<double> fa(m), fb(m);
  std::vector<double> ga(m * dims.l), gb(m * dims.l);

  LipschitzAudit out;
  out.samples = samples;
  for (std::size_t s = 0; s < samples; ++s) {
    const double scale = kScales[s % kScales.size()];
    auto draw = [&](std::vector<double>& v) {
      for (double& x : v) x = scale * normal(rng);
    };
    const double t = uniform(rng);
    draw(y1), draw(y2), draw(z1), draw(z2), draw(yf1), draw(yf2), draw(zf1), draw(zf2);

    spec.anticipate(yf1, zf1, e1);
    spec.anticipate(yf2, zf2, e2);
    spec.drift(t, y1, z1, e1, fa);
    spec.drift(t, y2, z2, e2, fb);
    const double f_den = squared_distance(y1, y2) + squared_distance(z1, z2) +
                         squared_distance(yf1, yf2) + squared_distance(zf1, zf2);
    out.f_constant = std::max(out.f_constant, squared_distance(fa, fb) / f_den);

    // y and y' only
    spec.anticipate(yf2, zf1, e3);
    spec.noise(t, y1, z1, e1, ga);
    spec.noise(t, y2, z1, e3, gb);
    out.g_y_constant = std::max(out.g_y_constant, squared_distance(ga, gb) /
                                                      (squared_distance(y1, y2) +
                                                       squared_distance(yf1, yf2)));
    // z only
    spec.noise(t, y1, z2, e1, gb);
    out.g_z_constant =
        std::max(out.g_z_constant, squared_distance(ga, gb) / squared_distance(z1, z2));
    // z' only
    spec.anticipate(yf1, zf2, e4);
    spec.noise(t, y1, z1, e4, gb);
    out.g_anticipated_z_constant = std::max(
        out.g_anticipated_z_constant, squared_distance(ga, gb) / squared_distance(zf1, zf2));
  }

  const LipschitzData& lip = spec.lipschitz();
  constexpr double kSlack = 1.0 + 1e-9;
  out.pass = out.f_constant <= lip.c * kSlack && out.g_y_constant <= lip.c * kSlack &&
             out.g_z_constant <= lip.alpha1 * kSlack &&
             out.g_anticipated_z_constant <= lip.alpha2 * kSlack;
  return out;
}

TerminalSpec::TerminalSpec(std::string name, TerminalFn fn, bool deterministic)
    : name_(std::move(name)), fn_(std::move(fn)), deterministic_(deterministic) {}

TerminalData TerminalSpec::materialize(const PathEnsemble& paths, Dims dims) const {
  const TimeGrid& grid = paths.grid();
  const int nodes = grid.n_end - grid.n_T + 1;
  TerminalData out{PathProcess(paths.size(), nodes, dims.m, 1),
                   PathProcess(paths.size(), nodes, dims.m, dims.d), deterministic_};
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const PathView view = paths.path(p);
    for (int j = 0; j < nodes; ++j) {
      fn_(grid, grid.n_T + j, view, out.xi.at(p, j), out.eta.at(p, j));
    }
  }
  for (double v : out.xi.data()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kNonFinite, "terminal value is not finite");
  }
  return out;
}

TerminalSpec builtin_terminal(std::string_view name, const Params& params, Dims dims) {
  const double value = param(params, "value", 0.0);
  const int d = dims.d;
  if (name == "constant") {
    check_keys(name, params, {"value"});
    return TerminalSpec(
        "constant",
        [value](const TimeGrid&, int, const PathView&, std::span<double> xi,
                std::span<double> eta) {
          std::fill(xi.begin(), xi.end(), value);
          std::fill(eta.begin(), eta.end(), 0.0);
        },
        true);
  }
  if (name == "affine_w") {
    check_keys(name, params, {"value", "slope"});
    const double slope = param(params, "slope", 1.0);
    return TerminalSpec(
        "affine_w",
        [value, slope, d](const TimeGrid&, int k, const PathView& path, std::span<double> xi,
                          std::span<double> eta) {
          std::fill(xi.begin(), xi.end(), value + slope * path.W(k));
          std::fill(eta.begin(), eta.end(), 0.0);
          for (std::size_t r = 0; r < xi.size(); ++r) eta[r * d] = slope;
        },
        false);
  }
  if (name == "last_w_increment") {
    check_keys(name, params, {"value", "scale"});
    const double scale = param(params, "scale", 1.0);
    return TerminalSpec(
        "last_w_increment",
        [value, scale](const TimeGrid& grid, int, const PathView& path, std::span<double> xi,
                       std::span<double> eta) {
          std::fill(xi.begin(), xi.end(),
                    value + scale * path.dW(grid.n_T - 1) / std::sqrt(grid.h));
          std::fill(eta.begin(), eta.end(), 0.0);
        },
        false);
  }
  if (name == "b_after_T") {
    check_keys(name, params, {"value", "slope"});
    const double slope = param(params, "slope", 1.0);
    return TerminalSpec(
        "b_after_T",
        [value, slope](const TimeGrid& grid, int k, const PathView& path, std::span<double> xi,
                       std::span<double> eta) {
          double tail = 0.0;
          for (int j = k; j < grid.n_end; ++j) tail += path.dB(j);
          std::fill(xi.begin(), xi.end(), value + slope * tail);
          std::fill(eta.begin(), eta.end(), 0.0);
        },
        false);
  }
  if (name == "linear_in_time") {
    check_keys(name, params, {"value", "slope", "eta"});
    const double slope = param(params, "slope", 0.0);
    const double eta_value = param(params, "eta", 0.0);
    return TerminalSpec(
        "linear_in_time",
        [value, slope, eta_value](const TimeGrid& grid, int k, const PathView&,
                                  std::span<double> xi, std::span<double> eta) {
          std::fill(xi.begin(), xi.end(), value + slope * (grid.t(k) - grid.T()));
          std::fill(eta.begin(), eta.end(), eta_value);
        },
        true);
  }
  throw Error(ErrorKind::kUnknownName, "unknown terminal data '" + std::string(name) + "'");
}

}  // namespace abdsde
