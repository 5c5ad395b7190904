#include <gtest/gtest.h>

#include <set>

#include "test_support.hpp"

using namespace abdsde;

TEST(TreeModel, OneStep) {
  const TreeModel t = build_tree(1, 0.25);
  EXPECT_EQ(t.atoms(), 4u);
  EXPECT_DOUBLE_EQ(t.probability(), 0.25);
}

TEST(TreeModel, TwoStepPartition) {
  const TreeModel t = build_tree(2, 0.5);
  EXPECT_EQ(t.atoms(), 16u);
  std::vector<int> size(t.blocks(), 0);
  for (std::size_t a = 0; a < t.atoms(); ++a) ++size[t.block(a, 1)];
  EXPECT_EQ(t.blocks(), 4u);
  for (int s : size) EXPECT_EQ(s, 4);
}

TEST(TreeModel, TooLarge) {
  try {
    build_tree(9, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTooLarge);
  }
  EXPECT_THROW(build_tree(0, 0.1), Error);
}

TEST(TreeModel, BlocksMatchFiltration) {
  // Property: same block at k <=> same W bits before k and same B bits from k on.
  const TreeModel t = build_tree(3, 0.5);
  for (int k = 0; k <= 3; ++k) {
    for (std::size_t a = 0; a < t.atoms(); ++a) {
      for (std::size_t b = 0; b < t.atoms(); ++b) {
        bool same = true;
        for (int j = 0; j < 3; ++j) {
          if (j < k && TreeModel::w_bit(a, j) != TreeModel::w_bit(b, j)) same = false;
          if (j >= k && TreeModel::b_bit(a, j) != TreeModel::b_bit(b, j)) same = false;
        }
        ASSERT_EQ(same, t.block(a, k) == t.block(b, k)) << a << " " << b << " k=" << k;
      }
    }
  }
}

TEST(TreeModel, EnsembleEnumeratesAtoms) {
  const TimeGrid g = make_grid(0.5, 0.25, 0.25);
  const TreeModel t = build_tree(3, 0.25);
  const PathEnsemble e = t.ensemble(g);
  EXPECT_TRUE(e.is_tree());
  EXPECT_EQ(e.size(), 64u);
  std::set<std::vector<double>> seen;
  for (std::size_t a = 0; a < e.size(); ++a) {
    std::vector<double> key;
    for (int j = 0; j < 3; ++j) {
      EXPECT_DOUBLE_EQ(e.dW(a, j)[0], t.dW(a, j));
      EXPECT_DOUBLE_EQ(std::abs(e.dB(a, j)[0]), 0.5);
      key.push_back(e.dW(a, j)[0]);
      key.push_back(e.dB(a, j)[0]);
    }
    seen.insert(key);
  }
  EXPECT_EQ(seen.size(), 64u);
  EXPECT_THROW(t.ensemble(make_grid(1.0, 0.0, 0.25)), Error);
}
