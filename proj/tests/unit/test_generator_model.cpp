#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"

using namespace abdsde;

namespace {

const std::vector<double> kZero1{0.0};

double f_at(const GeneratorSpec& g, double y, double z, double y_future, double z_future) {
  const std::vector<double> Y{y}, Z{z}, Yf{y_future}, Zf{z_future};
  return g.evaluate_at_point(0.3, Y, Z, Yf, Zf).f[0];
}

}  // namespace

TEST(Builtins, CatalogIsComplete) {
  for (const std::string& name : builtin_generator_names()) {
    EXPECT_NO_THROW(builtin_generator(name, {}, Dims{})) << name;
  }
  try {
    builtin_generator("nope", {}, Dims{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnknownName);
  }
}

TEST(Builtins, RejectsUnknownParameters) {
  EXPECT_THROW(builtin_generator("linear_bsde", {{"b", 1.0}}, Dims{}), Error);
  EXPECT_THROW(builtin_terminal("constant", {{"slope", 1.0}}, Dims{}), Error);
}

TEST(Builtins, ZeroGenerator) {
  const GeneratorSpec g = builtin_generator("zero", {}, Dims{});
  EXPECT_FALSE(g.has_anticipation());
  const auto v = g.evaluate(0.0, std::vector<double>{3.0}, std::vector<double>{-2.0}, {});
  EXPECT_EQ(v.f[0], 0.0);
  EXPECT_EQ(v.g[0], 0.0);
}

TEST(Builtins, LinearBsde) {
  const GeneratorSpec g = builtin_generator("linear_bsde", {{"a", 1.0}, {"rho", 1.0}}, Dims{});
  const auto v = g.evaluate(0.0, std::vector<double>{1.0}, std::vector<double>{0.0}, {});
  EXPECT_DOUBLE_EQ(v.f[0], 2.0);
}

TEST(Builtins, Example41AtOrigin) {
  const GeneratorSpec f1 = builtin_generator("example41_f1", {}, Dims{});
  const GeneratorSpec f2 = builtin_generator("example41_f2", {}, Dims{});
  EXPECT_DOUBLE_EQ(f_at(f1, 0.0, 0.0, 0.0, 0.0), 2.0);
  EXPECT_DOUBLE_EQ(f_at(f2, 0.0, 0.0, 0.0, 0.0), 0.0);
}

TEST(Builtins, Example41Noise) {
  const GeneratorSpec g = builtin_generator("example41_g", {}, Dims{});
  const auto v = g.evaluate(0.0, std::vector<double>{1.0}, std::vector<double>{1.0}, {});
  EXPECT_NEAR(v.g[0], 1.0 + 1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(v.g[0], 1.5774, 1e-4);
  EXPECT_DOUBLE_EQ(g.lipschitz().alpha1, 1.0 / 3.0);
}

TEST(Builtins, DualityLinearRhoOnly) {
  const GeneratorSpec g = builtin_generator("duality_linear", {{"rho", 0.7}}, Dims{});
  const auto v = g.evaluate_at_point(0.0, std::vector<double>{5.0}, std::vector<double>{-1.0},
                                     std::vector<double>{2.0}, std::vector<double>{3.0});
  EXPECT_DOUBLE_EQ(v.f[0], 0.7);
  EXPECT_DOUBLE_EQ(v.g[0], 0.0);
}

TEST(Builtins, AnticipatedDriftReadsFutureY) {
  const GeneratorSpec g = builtin_generator("anticipated_drift", {}, Dims{});
  EXPECT_DOUBLE_EQ(f_at(g, 10.0, 4.0, 1.25, 0.0), 1.25);
}

TEST(Builtins, ShapeAndFiniteChecks) {
  const GeneratorSpec g = builtin_generator("linear_bsde", {}, Dims{});
  EXPECT_THROW(g.evaluate(0.0, std::vector<double>{1.0, 2.0}, std::vector<double>{0.0}, {}),
               Error);
  try {
    g.evaluate(0.0, std::vector<double>{NAN}, std::vector<double>{0.0}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNonFinite);
  }
}

TEST(Builtins, Feasibility) {
  const GeneratorSpec g = builtin_generator("example41_g", {}, Dims{});
  EXPECT_NO_THROW(g.check_feasible(1.0));
  const GeneratorSpec bad = g.with_lipschitz({1.0, 0.7, 0.4});
  try {
    bad.check_feasible(1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInfeasible);
  }
}

TEST(Builtins, DeclaredConstantsAreFeasible) {
  // Property: alpha1 + alpha2 * M < 1 for every builtin with M = 1.
  for (const std::string& name : builtin_generator_names()) {
    const GeneratorSpec g = builtin_generator(name, {}, Dims{});
    EXPECT_LT(g.lipschitz().alpha1 + g.lipschitz().alpha2, 1.0) << name;
  }
}

TEST(Audit, PassesForAllBuiltins) {
  const Params duality{{"mu", 0.1}, {"mu_bar", 0.05}, {"sigma", 0.1}, {"sigma_bar", 0.2},
                       {"kappa", 0.3}, {"rho", 0.2}};
  for (const std::string& name : builtin_generator_names()) {
    const Params p = name == "duality_linear" ? duality : Params{};
    const LipschitzAudit a = audit_lipschitz(builtin_generator(name, p, Dims{}), 2000, 3);
    EXPECT_TRUE(a.pass) << name << " f=" << a.f_constant << " gy=" << a.g_y_constant
                        << " gz=" << a.g_z_constant;
    EXPECT_EQ(a.samples, 2000u);
  }
}

TEST(Audit, ZeroGeneratorObservesNothing) {
  const LipschitzAudit a = audit_lipschitz(builtin_generator("zero", {}, Dims{}), 1000, 1);
  EXPECT_TRUE(a.pass);
  EXPECT_EQ(a.f_constant, 0.0);
  EXPECT_EQ(a.g_y_constant, 0.0);
  EXPECT_EQ(a.g_z_constant, 0.0);
}

TEST(Audit, Example41NoiseZCoefficient) {
  const LipschitzAudit a = audit_lipschitz(builtin_generator("example41_g", {}, Dims{}), 5000, 9);
  EXPECT_TRUE(a.pass);
  EXPECT_LE(a.g_z_constant, 1.0 / 3.0 + 1e-12);
  EXPECT_GT(a.g_z_constant, 0.3);
}

TEST(Audit, NegativeControlFails) {
  const GeneratorSpec g =
      builtin_generator("linear_bsde", {{"a", 2.0}}, Dims{}).with_lipschitz({0.5, 0.0, 0.0});
  EXPECT_FALSE(audit_lipschitz(g, 1000, 1).pass);
  const GeneratorSpec noise =
      builtin_generator("example41_g", {}, Dims{}).with_lipschitz({1.0, 0.1, 0.0});
  EXPECT_FALSE(audit_lipschitz(noise, 1000, 1).pass);
}

TEST(Audit, NeedsEnoughSamples) {
  EXPECT_THROW(audit_lipschitz(builtin_generator("zero", {}, Dims{}), 10, 1), Error);
}

TEST(Properties, Example41Dominance) {
  // For x >= y and any u, v: x + sin 2x + |u| + 2 >= y + 2|cos y| + sin v - 2.
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n(0.0, 1.0);
  const GeneratorSpec f1 = builtin_generator("example41_f1", {}, Dims{});
  const GeneratorSpec f2 = builtin_generator("example41_f2", {}, Dims{});
  for (int i = 0; i < 20000; ++i) {
    const double scale = (i % 3 == 0) ? 0.1 : (i % 3 == 1 ? 1.0 : 10.0);
    const double y = scale * n(rng);
    const double x = y + std::abs(scale * n(rng));
    const double u = scale * n(rng);
    const double v = scale * n(rng);
    const double y0 = scale * n(rng);
    const double z0 = scale * n(rng);
    ASSERT_GE(f_at(f1, y0, z0, x, u), f_at(f2, y0, z0, y, v))
        << "x=" << x << " y=" << y << " u=" << u << " v=" << v;
  }
}

TEST(Properties, Example42Chain) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 3.0);
  const GeneratorSpec f1 = builtin_generator("example42_f1", {}, Dims{});
  const GeneratorSpec ft = builtin_generator("example42_ftilde", {}, Dims{});
  const GeneratorSpec f2 = builtin_generator("example42_f2", {}, Dims{});
  for (int i = 0; i < 20000; ++i) {
    const double y = n(rng), z = n(rng), x = n(rng);
    ASSERT_GE(f_at(f1, y, z, x, 0.0), f_at(ft, y, z, x, 0.0));
    ASSERT_GE(f_at(ft, y, z, x, 0.0), f_at(f2, y, z, x, 0.0));
    const double x2 = x + std::abs(n(rng));
    ASSERT_GE(f_at(ft, y, z, x2, 0.0), f_at(ft, y, z, x, 0.0));
  }
}

TEST(Terminal, ConstantMaterializes) {
  const TimeGrid g = make_grid(1.0, 0.5, 0.25);
  const PathEnsemble e = sample_paths(g, 1, 1, 5, 1);
  const TerminalSpec t = builtin_terminal("constant", {{"value", 2.5}}, Dims{});
  EXPECT_TRUE(t.deterministic());
  const TerminalData d = t.materialize(e, Dims{});
  EXPECT_EQ(d.xi.nodes(), g.n_end - g.n_T + 1);
  for (double v : d.xi.data()) EXPECT_EQ(v, 2.5);
  for (double v : d.eta.data()) EXPECT_EQ(v, 0.0);
}

TEST(Terminal, AffineInW) {
  const TimeGrid g = make_grid(1.0, 0.5, 0.25);
  const PathEnsemble e = sample_paths(g, 1, 1, 5, 1);
  const TerminalSpec t = builtin_terminal("affine_w", {{"value", 0.5}, {"slope", 2.0}}, Dims{});
  EXPECT_FALSE(t.deterministic());
  const TerminalData d = t.materialize(e, Dims{});
  for (std::size_t p = 0; p < 5; ++p) {
    for (int j = 0; j < d.xi.nodes(); ++j) {
      EXPECT_NEAR(d.xi.at(p, j)[0], 0.5 + 2.0 * e.path(p).W(g.n_T + j), 1e-14);
      EXPECT_DOUBLE_EQ(d.eta.at(p, j)[0], 2.0);
    }
  }
}

TEST(Terminal, LinearInTime) {
  const TimeGrid g = make_grid(1.0, 0.5, 0.25);
  const PathEnsemble e = sample_paths(g, 1, 1, 2, 1);
  const TerminalSpec t = builtin_terminal(
      "linear_in_time", {{"value", 1.0}, {"slope", 2.0}, {"eta", 0.3}}, Dims{});
  EXPECT_TRUE(t.deterministic());
  const TerminalData d = t.materialize(e, Dims{});
  for (int j = 0; j < d.xi.nodes(); ++j) {
    EXPECT_NEAR(d.xi.at(1, j)[0], 1.0 + 2.0 * (g.t(g.n_T + j) - 1.0), 1e-14);
    EXPECT_DOUBLE_EQ(d.eta.at(1, j)[0], 0.3);
  }
}

TEST(Terminal, UnknownName) {
  EXPECT_THROW(builtin_terminal("nope", {}, Dims{}), Error);
}
