#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace abdsde;
using abdsde::testing::make_scenario;
using abdsde::testing::tree_for;

namespace {

// f(t, y, z, e) = sign * e + offset with e = E[Y_{t+delta}].
GeneratorSpec reads_future(const std::string& name, double sign, double offset) {
  AnticipationFunctional phi{
      "y_future", 1,
      [](std::span<const double> y, std::span<const double>, std::span<double> out) {
        out[0] = y[0];
      }};
  CoefficientFn f = [sign, offset](double, std::span<const double>, std::span<const double>,
                                   std::span<const double> e, std::span<double> out) {
    out[0] = sign * e[0] + offset;
  };
  CoefficientFn g = [](double, std::span<const double>, std::span<const double>,
                       std::span<const double>, std::span<double> out) { out[0] = 0.0; };
  GeneratorSpec::Flags flags;
  flags.g_vanishes = true;
  return GeneratorSpec(name, Dims{}, f, g, {phi}, LipschitzData{1.0, 0.0, 0.0}, flags);
}

Scenario example41_pair_first(double T, double K, double h) {
  return make_scenario(T, K, h, DelaySpec::uniform(DelayForm::constant(K)), "example41_f1", {},
                       "affine_w", {{"value", 0.5}, {"slope", 1.0}});
}

}  // namespace

TEST(Comparison, IdenticalScenarios) {
  const Scenario sc = example41_pair_first(1.0, 0.25, 0.125);
  const PathEnsemble e = sample_paths(sc.grid(), 1, 1, 500, 3);
  const ComparisonReport r = run_comparison(sc, sc, e, CondExpBackend::regression());
  for (double m : r.margin.data()) EXPECT_EQ(m, 0.0);
  EXPECT_EQ(r.violation_fraction(0.0), 0.0);
  EXPECT_EQ(r.worst_margin(), 0.0);
}

TEST(Comparison, TerminalOrderViolated) {
  const Scenario a = example41_pair_first(1.0, 0.25, 0.125);
  const Scenario b = a.with_terminal(shifted_terminal(a.terminal(), 0.1));
  const PathEnsemble e = sample_paths(a.grid(), 1, 1, 200, 3);
  try {
    run_comparison(a, b, e, CondExpBackend::regression());
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::kTerminalOrderViolated);
  }
}

TEST(Comparison, LinearMarginConverges) {
  // (Y^1 - Y^2)' = -(Y^1 - Y^2) - 1 with zero terminal gap: margin(0) = e - 1.
  std::vector<double> err;
  for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
    const Scenario a = make_scenario(1.0, 0.0, h, std::nullopt, "linear_bsde",
                                     {{"a", 1.0}, {"rho", 1.0}}, "affine_w", {});
    const Scenario b = a.with_generator(
        builtin_generator("linear_bsde", {{"a", 1.0}, {"rho", 0.0}}, Dims{}));
    const PathEnsemble e = sample_paths(a.grid(), 1, 1, 2000, 5);
    const ComparisonReport r = run_comparison(a, b, e, CondExpBackend::regression());
    err.push_back(std::abs(r.mean_margin[0] - (std::exp(1.0) - 1.0)));
    EXPECT_EQ(r.violation_fraction(r.epsilon), 0.0);
  }
  EXPECT_LT(err[2], err[1]);
  EXPECT_LT(err[1], err[0]);
  EXPECT_LT(err[2], 0.05);
}

TEST(Comparison, ViolationFractionMonotone) {
  // The second terminal sits 5 below the first, so margins straddle a range of eps.
  const Scenario a = example41_pair_first(1.0, 0.25, 0.0625);
  const Scenario b =
      a.with_terminal(builtin_terminal("affine_w", {{"value", -5.0}}, Dims{}));
  const PathEnsemble e = sample_paths(a.grid(), 1, 1, 2000, 8);
  const ComparisonReport r = run_comparison(a, b, e, CondExpBackend::regression());
  double prev = 1.0;
  for (double eps : {-10.0, -6.0, -5.5, -5.0, -4.0, 0.0, 1e-3, 0.5, 3.0}) {
    const double v = r.violation_fraction(eps);
    EXPECT_LE(v, prev) << eps;
    prev = v;
  }
  EXPECT_GT(r.violation_fraction(-10.0), 0.0);
  EXPECT_EQ(r.violation_fraction(0.0), 0.0);
}

TEST(Comparison, Example41TreeIsOrdered) {
  const Scenario a = example41_pair_first(0.8, 0.2, 0.2);
  const Scenario b = a.with_generator(builtin_generator("example41_f2", {}, Dims{}))
                         .with_terminal(builtin_terminal("affine_w", {}, Dims{}));
  const PathEnsemble tree = tree_for(a.grid()).ensemble(a.grid());
  const ComparisonReport r = run_comparison(a, b, tree, CondExpBackend::exact());
  EXPECT_GE(r.worst_margin(), -1e-10);
  EXPECT_EQ(r.refinement_delta, 0.0);
  EXPECT_EQ(r.epsilon, 1e-10);
}

TEST(Comparison, NonAnticipatedPairMonteCarlo) {
  // f1 >= f2 pointwise, xi1 >= xi2, shared g = 0: no violations beyond eps*.
  const Scenario a = make_scenario(1.0, 0.0, 1.0 / 32, std::nullopt, "linear_bsde",
                                   {{"a", 0.5}, {"rho", 0.2}}, "affine_w", {{"value", 0.1}});
  const Scenario b = make_scenario(1.0, 0.0, 1.0 / 32, std::nullopt, "linear_bsde",
                                   {{"a", 0.5}, {"rho", 0.0}}, "affine_w", {});
  const PathEnsemble e = sample_paths(a.grid(), 1, 1, 5000, 10);
  const ComparisonReport r = run_comparison(a, b, e, CondExpBackend::regression());
  EXPECT_GT(r.tolerance, 0.0);
  EXPECT_DOUBLE_EQ(r.epsilon, std::max(3.0 * r.tolerance, 1e-10));
  EXPECT_EQ(r.violation_fraction(r.epsilon), 0.0);
}

TEST(Comparison, ShiftedTerminal) {
  const TerminalSpec base = builtin_terminal("affine_w", {{"value", 1.0}}, Dims{});
  const TerminalSpec up = shifted_terminal(base, 0.5);
  const TimeGrid g = make_grid(1.0, 0.25, 0.25);
  const PathEnsemble e = sample_paths(g, 1, 1, 4, 1);
  const TerminalData d0 = base.materialize(e, Dims{});
  const TerminalData d1 = up.materialize(e, Dims{});
  for (std::size_t i = 0; i < d0.xi.data().size(); ++i) {
    EXPECT_DOUBLE_EQ(d1.xi.data()[i], d0.xi.data()[i] + 0.5);
  }
  EXPECT_EQ(d0.eta, d1.eta);
}

TEST(MonotoneChain, Example42Triple) {
  const MonotoneChainReport r =
      check_monotone_chain(builtin_generator("example42_f1", {}, Dims{}),
                           builtin_generator("example42_ftilde", {}, Dims{}),
                           builtin_generator("example42_f2", {}, Dims{}), 5000, 1);
  EXPECT_TRUE(r.pass) << r.first_counterexample;
  EXPECT_EQ(r.samples, 5000u);
}

TEST(MonotoneChain, IdentityBetweenShifts) {
  const MonotoneChainReport r =
      check_monotone_chain(reads_future("up", 1.0, 1.0), reads_future("id", 1.0, 0.0),
                           reads_future("down", 1.0, -1.0), 2000, 2);
  EXPECT_TRUE(r.pass) << r.first_counterexample;
}

TEST(MonotoneChain, DecreasingMiddleFails) {
  const MonotoneChainReport r =
      check_monotone_chain(reads_future("up", 1.0, 1.0), reads_future("neg", -1.0, 0.0),
                           reads_future("down", 1.0, -1.0), 2000, 2);
  EXPECT_FALSE(r.pass);
  EXPECT_GT(r.monotonicity_violations, 0u);
  EXPECT_FALSE(r.first_counterexample.empty());
}
