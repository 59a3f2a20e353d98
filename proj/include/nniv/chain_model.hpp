#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "errors.hpp"

namespace nniv {

// Open chain of n_spins sites with XX couplings D_{jk} = 1/(2 |j-k|^alpha),
// truncated to |j-k| <= neighbor_range. neighbor_range = 1 is the
// nearest-neighbor model, neighbor_range = n_spins-1 keeps every pair.
struct ChainSpec {
  int n_spins = 2;
  int neighbor_range = 1;
  double alpha = 3.0;

  void validate() const {
    if (n_spins < 2)
      throw validation_error("chain needs at least 2 spins, got " + std::to_string(n_spins));
    if (neighbor_range < 1 || neighbor_range > n_spins - 1)
      throw validation_error("neighbor_range must lie in [1, n_spins-1], got " +
                             std::to_string(neighbor_range));
    if (!std::isfinite(alpha) || alpha <= 0.0)
      throw validation_error("alpha must be positive and finite");
  }

  static ChainSpec nni(int n, double alpha) { return {n, 1, alpha}; }
  static ChainSpec ani(int n, double alpha) { return {n, n - 1, alpha}; }

  bool operator==(const ChainSpec&) const = default;
};

struct CouplingMatrix {
  ChainSpec spec;
  Eigen::MatrixXd entries;

  int size() const { return static_cast<int>(entries.rows()); }
};

// Single-excitation hopping matrix. The 1/2 comes from writing the XX exchange
// through raising/lowering operators; it makes the adjacent coupling exactly 1/2
// in the time units used throughout.
inline CouplingMatrix build_coupling_matrix(const ChainSpec& spec) {
  spec.validate();
  const int n = spec.n_spins;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    const int hi = std::min(n - 1, j + spec.neighbor_range);
    for (int k = j + 1; k <= hi; ++k) {
      const double v = 0.5 / std::pow(static_cast<double>(k - j), spec.alpha);
      a(j, k) = v;
      a(k, j) = v;
    }
  }
  return {spec, std::move(a)};
}

}
