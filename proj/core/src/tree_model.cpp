#include "abdsde/tree_model.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "abdsde/error.hpp"

namespace abdsde {

TreeModel::TreeModel(int steps, double h) : n_(steps), h_(h), root_h_(std::sqrt(h)) {
  if (steps > kMaxSteps) {
    throw Error(ErrorKind::kTooLarge,
                "tree with " + std::to_string(steps) + " steps exceeds the limit of 8");
  }
  if (steps < 1 || !(h > 0.0) || !std::isfinite(h)) {
    throw Error(ErrorKind::kInvalidArgument, "tree needs at least one step and h > 0");
  }
}

double TreeModel::probability() const { return std::ldexp(1.0, -2 * n_); }

std::uint32_t TreeModel::block(std::size_t atom, int k) const {
  std::uint32_t key = 0;
  for (int j = 0; j < n_; ++j) {
    const int bit = j < k ? w_bit(atom, j) : b_bit(atom, j);
    key |= static_cast<std::uint32_t>(bit) << j;
  }
  return key;
}

PathEnsemble TreeModel::ensemble(const TimeGrid& grid) const {
  if (grid.n_end != n_ || std::abs(grid.h - h_) > 1e-15 * h_) {
    throw Error(ErrorKind::kShapeMismatch, "tree ensemble needs a grid with n_end == steps");
  }
  const std::size_t count = atoms();
  std::vector<double> dw(count * n_);
  std::vector<double> db(count * n_);
  for (std::size_t a = 0; a < count; ++a) {
    for (int j = 0; j < n_; ++j) {
      dw[a * n_ + j] = dW(a, j);
      db[a * n_ + j] = dB(a, j);
    }
  }
  return PathEnsemble(grid, 1, 1, std::move(dw), std::move(db), 0, n_);
}

TreeModel build_tree(int steps, double h) { return TreeModel(steps, h); }

}  // namespace abdsde
