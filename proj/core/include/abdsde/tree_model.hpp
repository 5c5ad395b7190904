#pragma once

#include <cstddef>
#include <cstdint>

#include "abdsde/stochastic_core.hpp"

namespace abdsde {

/// Finite probability space with n steps; each step draws (dW, dB) in {+-sqrt(h)}^2
/// uniformly. Atom a stores the W bit of step j at bit 2j and the B bit at 2j+1
/// (bit set means +sqrt(h)).
class TreeModel {
 public:
  static constexpr int kMaxSteps = 8;

  TreeModel(int steps, double h);

  int steps() const { return n_; }
  double h() const { return h_; }
  std::size_t atoms() const { return std::size_t{1} << (2 * n_); }
  double probability() const;

  static int w_bit(std::size_t atom, int j) { return static_cast<int>((atom >> (2 * j)) & 1U); }
  static int b_bit(std::size_t atom, int j) {
    return static_cast<int>((atom >> (2 * j + 1)) & 1U);
  }
  double dW(std::size_t atom, int j) const { return w_bit(atom, j) ? root_h_ : -root_h_; }
  double dB(std::size_t atom, int j) const { return b_bit(atom, j) ? root_h_ : -root_h_; }

  /// Two atoms share an F_{t_k} block iff their W bits agree on steps < k and their
  /// B bits agree on steps >= k. Block bit j is the W bit for j < k, the B bit otherwise.
  std::uint32_t block(std::size_t atom, int k) const;
  std::size_t blocks() const { return std::size_t{1} << n_; }

  /// One path per atom, in atom order, on the grid with n_end == steps.
  PathEnsemble ensemble(const TimeGrid& grid) const;

 private:
  int n_;
  double h_;
  double root_h_;
};

/// Throws TooLarge if steps > 8.
TreeModel build_tree(int steps, double h);

}  // namespace abdsde
