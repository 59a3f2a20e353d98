#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "chain_model.hpp"
#include "errors.hpp"

namespace nniv {

using Complex = std::complex<double>;

struct SpectralDecomposition {
  ChainSpec spec;
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns, orthonormal

  int size() const { return static_cast<int>(eigenvalues.size()); }
};

inline SpectralDecomposition decompose(const CouplingMatrix& coupling) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(coupling.entries);
  if (solver.info() != Eigen::Success)
    throw numerical_error("eigendecomposition failed for n = " +
                          std::to_string(coupling.size()));
  return {coupling.spec, solver.eigenvalues(), solver.eigenvectors()};
}

inline SpectralDecomposition decompose(const ChainSpec& spec) {
  return decompose(build_coupling_matrix(spec));
}

// Uniform time grid for quadrature. The interval count is kept even so that
// composite Simpson weights apply directly; a requested horizon that does not
// land on the grid is rounded up.
struct TauGrid {
  double step = 0.05;
  int intervals = 2;

  static TauGrid over_horizon(double horizon, double step) {
    if (!std::isfinite(step) || step <= 0.0)
      throw validation_error("grid step must be positive");
    if (!std::isfinite(horizon) || horizon <= 0.0)
      throw validation_error("time horizon must be positive");
    int s = static_cast<int>(std::ceil(horizon / step - 1e-9));
    if (s < 2) s = 2;
    if (s % 2 != 0) ++s;
    return {step, s};
  }

  int points() const { return intervals + 1; }
  double horizon() const { return step * intervals; }
  double tau(int i) const { return step * i; }

  bool operator==(const TauGrid&) const = default;
};

// One transition amplitude p_{jk}(tau) sampled on a TauGrid. Sites are 1-based.
struct AmplitudeSeries {
  int source = 1;
  int target = 1;
  ChainSpec spec;
  TauGrid grid;
  Eigen::VectorXcd values;
};

namespace detail {

inline void check_site(int site, int n) {
  if (site < 1 || site > n)
    throw validation_error("site index " + std::to_string(site) +
                           " outside chain of " + std::to_string(n) + " spins");
}

}  // namespace detail

// p_{jk}(tau_s) = sum_q v_q(j) v_q(k) exp(-i lambda_q tau_s)
inline AmplitudeSeries amplitude_series(const SpectralDecomposition& dec, int j, int k,
                                        const TauGrid& grid) {
  const int n = dec.size();
  detail::check_site(j, n);
  detail::check_site(k, n);
  Eigen::VectorXd c = dec.eigenvectors.row(j - 1).cwiseProduct(dec.eigenvectors.row(k - 1));
  Eigen::VectorXcd vals(grid.points());
  for (int s = 0; s < grid.points(); ++s) {
    const double tau = grid.tau(s);
    Complex acc(0.0, 0.0);
    for (int q = 0; q < n; ++q) {
      const double phase = dec.eigenvalues(q) * tau;
      acc += c(q) * Complex(std::cos(phase), -std::sin(phase));
    }
    vals(s) = acc;
  }
  return {j, k, dec.spec, grid, std::move(vals)};
}

inline AmplitudeSeries amplitude_series(const ChainSpec& spec, int j, int k,
                                        const TauGrid& grid) {
  return amplitude_series(decompose(spec), j, k, grid);
}

// Full propagator matrix exp(-i A tau). Entries are assembled from the scalar
// sums sum_q v_q(j) v_q(k) exp(-i lambda_q tau) over the upper triangle and
// mirrored, which keeps the matrix symmetric to the last bit.
inline Eigen::MatrixXcd amplitude_matrix(const SpectralDecomposition& dec, double tau) {
  const int n = dec.size();
  Eigen::VectorXcd phases(n);
  for (int q = 0; q < n; ++q) {
    const double phase = dec.eigenvalues(q) * tau;
    phases(q) = Complex(std::cos(phase), -std::sin(phase));
  }
  const Eigen::MatrixXd& v = dec.eigenvectors;
  Eigen::MatrixXcd p(n, n);
  for (int j = 0; j < n; ++j) {
    for (int k = j; k < n; ++k) {
      Complex acc(0.0, 0.0);
      for (int q = 0; q < n; ++q) acc += (v(j, q) * v(k, q)) * phases(q);
      p(j, k) = acc;
      p(k, j) = acc;
    }
  }
  return p;
}

// Closed form for the nearest-neighbor chain: lambda_q = cos(q pi / (n+1)),
// v_q(j) = sqrt(2/(n+1)) sin(q j pi / (n+1)).
inline Complex nni_analytic_amplitude(int n, int j, int k, double tau) {
  if (n < 2) throw validation_error("chain needs at least 2 spins");
  detail::check_site(j, n);
  detail::check_site(k, n);
  const double theta = std::numbers::pi / (n + 1);
  Complex acc(0.0, 0.0);
  for (int q = 1; q <= n; ++q) {
    const double lambda = std::cos(q * theta);
    const double w = std::sin(q * j * theta) * std::sin(q * k * theta);
    const double phase = lambda * tau;
    acc += w * Complex(std::cos(phase), -std::sin(phase));
  }
  return acc * (2.0 / (n + 1));
}

// Single-excitation state: amplitudes[j-1] multiplies the basis state with the
// excitation on site j.
struct InitialState {
  Eigen::VectorXcd amplitudes;

  static InitialState site(int n, int j) {
    detail::check_site(j, n);
    Eigen::VectorXcd a = Eigen::VectorXcd::Zero(n);
    a(j - 1) = Complex(1.0, 0.0);
    return {std::move(a)};
  }

  static InitialState uniform(int n) {
    if (n < 2) throw validation_error("chain needs at least 2 spins");
    Eigen::VectorXcd a =
        Eigen::VectorXcd::Constant(n, Complex(1.0 / std::sqrt(static_cast<double>(n)), 0.0));
    return {std::move(a)};
  }

  void validate(int n) const {
    if (static_cast<int>(amplitudes.size()) != n)
      throw validation_error("state dimension " + std::to_string(amplitudes.size()) +
                             " does not match chain of " + std::to_string(n) + " spins");
    const double norm2 = amplitudes.squaredNorm();
    if (std::abs(norm2 - 1.0) > 1e-10)
      throw validation_error("initial state must be normalized (|norm^2 - 1| <= 1e-10)");
  }
};

inline InitialState evolve_state(const InitialState& state, const ChainSpec& spec, double tau) {
  spec.validate();
  state.validate(spec.n_spins);
  if (!std::isfinite(tau)) throw validation_error("evolution time must be finite");
  const SpectralDecomposition dec = decompose(spec);
  return {amplitude_matrix(dec, tau) * state.amplitudes};
}

}
