#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace abdsde;
using abdsde::testing::max_abs_diff;

TEST(Exact, ConstantTarget) {
  const TimeGrid g = make_grid(0.5, 0.0, 0.25);
  const PathEnsemble e = build_tree(2, 0.25).ensemble(g);
  const std::vector<double> target(e.size(), 3.25);
  for (int k = 0; k <= 2; ++k) {
    for (double v : condexp(CondExpBackend::exact(), target, 1, k, e)) EXPECT_EQ(v, 3.25);
  }
}

TEST(Exact, HandEnumerationTwoSteps) {
  // Target depends on the last W increment only; at k = 1 the W bit of step 1 is
  // unknown, so the estimate averages over its two values for every atom.
  const TimeGrid g = make_grid(0.5, 0.0, 0.25);
  const TreeModel t = build_tree(2, 0.25);
  const PathEnsemble e = t.ensemble(g);
  std::vector<double> target(e.size());
  for (std::size_t a = 0; a < e.size(); ++a) {
    const double w = e.dW(a, 1)[0];
    target[a] = w * w * w + 2.0 * w + (w > 0 ? 1.0 : 0.0);
  }
  const std::vector<double> est = condexp(CondExpBackend::exact(), target, 1, 1, e);
  // (0.125 + 1 + 1) + (-0.125 - 1 + 0), halved.
  for (double v : est) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(Exact, KeepsFutureBInformation) {
  // B increments after t_k are known at k, so a function of them is returned as is.
  const TimeGrid g = make_grid(0.75, 0.0, 0.25);
  const PathEnsemble e = build_tree(3, 0.25).ensemble(g);
  std::vector<double> target(e.size());
  for (std::size_t a = 0; a < e.size(); ++a) target[a] = std::exp(e.dB(a, 1)[0] + e.dB(a, 2)[0]);
  EXPECT_LT(max_abs_diff(condexp(CondExpBackend::exact(), target, 1, 1, e), target), 1e-15);
  // At k = 2 only dB_2 is known.
  const std::vector<double> at2 = condexp(CondExpBackend::exact(), target, 1, 2, e);
  for (std::size_t a = 0; a < e.size(); ++a) {
    const double expected = std::exp(e.dB(a, 2)[0]) * std::cosh(0.5);
    EXPECT_NEAR(at2[a], expected, 1e-14);
  }
}

namespace {

// Smooth target built from W increments on every step and B increments from step b_from on.
std::vector<double> mixed_target(const PathEnsemble& e, int steps, int b_from) {
  std::vector<double> target(e.size());
  for (std::size_t a = 0; a < e.size(); ++a) {
    double s = 0.0;
    for (int j = 0; j < steps; ++j) {
      s += std::sin(1.0 + j) * e.dW(a, j)[0];
      if (j >= b_from) s += 0.3 * (j + 1) * e.dB(a, j)[0];
    }
    target[a] = std::tanh(s) + s * s;
  }
  return target;
}

}  // namespace

TEST(Exact, Idempotent) {
  const TimeGrid g = make_grid(1.0, 0.25, 0.25);
  const PathEnsemble e = build_tree(5, 0.25).ensemble(g);
  const std::vector<double> target = mixed_target(e, 5, 0);
  for (int k = 0; k <= 5; ++k) {
    const std::vector<double> once = condexp(CondExpBackend::exact(), target, 1, k, e);
    const std::vector<double> twice = condexp(CondExpBackend::exact(), once, 1, k, e);
    EXPECT_LT(max_abs_diff(once, twice), 1e-14) << k;
  }
}

TEST(Exact, TowerProperty) {
  // F_t mixes past W with future B, so it is not monotone in t. The tower identity
  // E[E[X | F_k'] | F_k] = E[X | F_k] for k <= k' holds for targets that do not
  // involve B increments before k'.
  const TimeGrid g = make_grid(1.0, 0.25, 0.25);
  const PathEnsemble e = build_tree(5, 0.25).ensemble(g);
  for (int kk = 0; kk <= 5; ++kk) {
    const std::vector<double> target = mixed_target(e, 5, kk);
    const std::vector<double> inner = condexp(CondExpBackend::exact(), target, 1, kk, e);
    for (int k = 0; k <= kk; ++k) {
      const std::vector<double> direct = condexp(CondExpBackend::exact(), target, 1, k, e);
      const std::vector<double> outer = condexp(CondExpBackend::exact(), inner, 1, k, e);
      EXPECT_LT(max_abs_diff(direct, outer), 1e-12) << k << " " << kk;
    }
  }
}

TEST(Exact, TowerNeedsLateBInformation) {
  // With B increments in [k, k') in the target, the composed estimate also averages
  // them out and the identity fails; guards against a monotone-filtration backend.
  const TimeGrid g = make_grid(1.0, 0.25, 0.25);
  const PathEnsemble e = build_tree(5, 0.25).ensemble(g);
  const std::vector<double> target = mixed_target(e, 5, 0);
  const std::vector<double> inner = condexp(CondExpBackend::exact(), target, 1, 3, e);
  const std::vector<double> direct = condexp(CondExpBackend::exact(), target, 1, 1, e);
  const std::vector<double> outer = condexp(CondExpBackend::exact(), inner, 1, 1, e);
  EXPECT_GT(max_abs_diff(direct, outer), 1e-3);
}

TEST(Exact, Measurability) {
  const TimeGrid g = make_grid(1.0, 0.0, 0.25);
  const TreeModel t = build_tree(4, 0.25);
  const PathEnsemble e = t.ensemble(g);
  std::vector<double> target(e.size());
  for (std::size_t a = 0; a < e.size(); ++a) target[a] = std::cos(static_cast<double>(a));
  for (int k = 0; k <= 4; ++k) {
    const std::vector<double> est = condexp(CondExpBackend::exact(), target, 1, k, e);
    std::vector<double> first(t.blocks(), NAN);
    for (std::size_t a = 0; a < e.size(); ++a) {
      const auto b = t.block(a, k);
      if (std::isnan(first[b])) first[b] = est[a];
      EXPECT_EQ(est[a], first[b]);
    }
  }
}

TEST(Exact, MultiColumnTargets) {
  const TimeGrid g = make_grid(0.5, 0.0, 0.25);
  const PathEnsemble e = build_tree(2, 0.25).ensemble(g);
  std::vector<double> two(2 * e.size()), one(e.size());
  for (std::size_t a = 0; a < e.size(); ++a) {
    one[a] = e.dW(a, 0)[0] + std::abs(e.dB(a, 1)[0]) * a;
    two[2 * a] = 1.0;
    two[2 * a + 1] = one[a];
  }
  const std::vector<double> est2 = condexp(CondExpBackend::exact(), two, 2, 1, e);
  const std::vector<double> est1 = condexp(CondExpBackend::exact(), one, 1, 1, e);
  for (std::size_t a = 0; a < e.size(); ++a) {
    EXPECT_EQ(est2[2 * a], 1.0);
    EXPECT_DOUBLE_EQ(est2[2 * a + 1], est1[a]);
  }
}

TEST(Exact, BackendMismatch) {
  const TimeGrid g = make_grid(1.0, 0.0, 0.25);
  const PathEnsemble e = sample_paths(g, 1, 1, 100, 1);
  std::vector<double> target(100, 0.0);
  target[3] = 1.0;
  try {
    condexp(CondExpBackend::exact(), target, 1, 1, e);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::kBackendMismatch);
  }
}

TEST(Regression, ConstantTarget) {
  const TimeGrid g = make_grid(1.0, 0.0, 0.25);
  const PathEnsemble e = sample_paths(g, 1, 1, 5, 1);  // far too few paths for a fit
  const std::vector<double> target(5, -1.5);
  for (double v : condexp(CondExpBackend::regression(), target, 1, 2, e)) EXPECT_EQ(v, -1.5);
}

TEST(Regression, RecoversLinearFunctionOfW) {
  const TimeGrid g = make_grid(1.0, 0.0, 0.25);
  const std::size_t P = 5000;
  const PathEnsemble e = sample_paths(g, 1, 1, P, 2);
  const std::vector<double> Wk = e.W_at(2);
  const std::vector<double> WT = e.W_at(4);
  std::vector<double> target(P);
  for (std::size_t p = 0; p < P; ++p) target[p] = 1.0 + 2.0 * WT[p];
  const std::vector<double> est = condexp(CondExpBackend::regression(), target, 1, 2, e);
  double mse = 0.0;
  for (std::size_t p = 0; p < P; ++p) {
    const double err = est[p] - (1.0 + 2.0 * Wk[p]);
    mse += err * err / static_cast<double>(P);
  }
  // Residual sd 2 sqrt(0.5) and F = 10 give an RMS estimation error near 0.063.
  EXPECT_LT(std::sqrt(mse), 3 * 0.063);
}

TEST(Regression, ProjectionResidualsOrthogonal) {
  const TimeGrid g = make_grid(1.0, 0.0, 0.25);
  const std::size_t P = 3000;
  const PathEnsemble e = sample_paths(g, 1, 1, P, 3);
  RegressionBasis basis;
  basis.ridge = 0.0;
  std::size_t F = 0;
  const std::vector<double> X = markov_features(basis, e, 2, &F);
  ASSERT_GT(F, 1u);
  std::vector<double> target(P);
  const std::vector<double> WT = e.W_at(4);
  for (std::size_t p = 0; p < P; ++p) target[p] = std::exp(WT[p]) + std::sin(3.0 * WT[p]);
  const LeastSquaresFit fit = least_squares(X, F, target, 1, 0.0);
  for (std::size_t j = 0; j < F; ++j) {
    double dot = 0.0, nx = 0.0, nr = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
      const double r = target[p] - fit.fitted[p];
      dot += X[p * F + j] * r;
      nx += X[p * F + j] * X[p * F + j];
      nr += r * r;
    }
    EXPECT_LE(std::abs(dot), 1e-8 * std::sqrt(nx * nr)) << "feature " << j;
  }
}

TEST(Regression, InsufficientPaths) {
  const TimeGrid g = make_grid(1.0, 0.0, 0.25);
  const PathEnsemble e = sample_paths(g, 1, 1, 20, 1);
  std::vector<double> target(20);
  for (std::size_t p = 0; p < 20; ++p) target[p] = static_cast<double>(p);
  try {
    condexp(CondExpBackend::regression(), target, 1, 2, e);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::kInsufficientPaths);
  }
}

TEST(Regression, SingularDesignWithoutRidge) {
  std::vector<double> X(100 * 2);
  std::vector<double> Y(100);
  for (int p = 0; p < 100; ++p) {
    X[2 * p] = 1.0;
    X[2 * p + 1] = 1.0;  // duplicates the intercept
    Y[p] = p;
  }
  try {
    least_squares(X, 2, Y, 1, 0.0);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::kSingularDesign);
  }
  EXPECT_NO_THROW(least_squares(X, 2, Y, 1, 1e-6));
}

TEST(Regression, NonFiniteTarget) {
  const TimeGrid g = make_grid(1.0, 0.0, 0.25);
  const PathEnsemble e = sample_paths(g, 1, 1, 200, 1);
  std::vector<double> target(200, 1.0);
  target[7] = INFINITY;
  try {
    condexp(CondExpBackend::regression(), target, 1, 2, e);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::kNonFinite);
  }
}

TEST(Regression, FeaturesAtTimeZeroAreBOnly) {
  // W_0 = 0, so only the B drivers (and the intercept) survive at k = 0.
  const TimeGrid g = make_grid(1.0, 0.5, 0.25);
  const PathEnsemble e = sample_paths(g, 1, 1, 200, 1);
  std::size_t F0 = 0, F2 = 0, FT = 0;
  markov_features(RegressionBasis{}, e, 0, &F0);
  markov_features(RegressionBasis{}, e, 2, &F2);
  markov_features(RegressionBasis{}, e, 5, &FT);
  EXPECT_EQ(F0, 6u);   // degree 2 in two B drivers
  EXPECT_EQ(F2, 10u);  // degree 2 in W and two B drivers
  EXPECT_EQ(FT, 6u);   // W and one merged B driver
}

TEST(Regression, NodeProjectorReuse) {
  const TimeGrid g = make_grid(1.0, 0.0, 0.25);
  const std::size_t P = 1000;
  const PathEnsemble e = sample_paths(g, 1, 1, P, 5);
  const NodeProjector proj(CondExpBackend::regression(), e, 2);
  std::vector<double> a(P), b(P);
  const std::vector<double> WT = e.W_at(4);
  for (std::size_t p = 0; p < P; ++p) {
    a[p] = WT[p];
    b[p] = WT[p] * WT[p];
  }
  EXPECT_LT(max_abs_diff(proj.project(a, 1), condexp(CondExpBackend::regression(), a, 1, 2, e)),
            1e-12);
  EXPECT_LT(max_abs_diff(proj.project(b, 1), condexp(CondExpBackend::regression(), b, 1, 2, e)),
            1e-12);
  EXPECT_GT(proj.max_residual_rms(), 0.0);
  EXPECT_NEAR(proj.fit_stderr(),
              proj.max_residual_rms() * std::sqrt(static_cast<double>(proj.features()) / P),
              1e-15);
}
