#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <nniv/propagator.hpp>

using namespace nniv;
using std::numbers::pi;

TEST_CASE("two-spin eigenvalues are plus and minus one half", "[propagator]") {
  const SpectralDecomposition dec = decompose(ChainSpec::nni(2, 3.0));
  CHECK_THAT(dec.eigenvalues(0), Catch::Matchers::WithinAbs(-0.5, 1e-14));
  CHECK_THAT(dec.eigenvalues(1), Catch::Matchers::WithinAbs(0.5, 1e-14));
}

TEST_CASE("three-spin nearest-neighbor spectrum", "[propagator]") {
  const SpectralDecomposition dec = decompose(ChainSpec::nni(3, 3.0));
  const double r = 1.0 / std::sqrt(2.0);
  CHECK_THAT(dec.eigenvalues(0), Catch::Matchers::WithinAbs(-r, 1e-14));
  CHECK_THAT(dec.eigenvalues(1), Catch::Matchers::WithinAbs(0.0, 1e-14));
  CHECK_THAT(dec.eigenvalues(2), Catch::Matchers::WithinAbs(r, 1e-14));
}

TEST_CASE("decomposition reconstructs the matrix", "[propagator]") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> pick_alpha(3.0, 12.0);
  for (const int n : {7, 33, 200}) {
    const CouplingMatrix m = build_coupling_matrix(ChainSpec::ani(n, pick_alpha(rng)));
    const SpectralDecomposition dec = decompose(m);
    CHECK(dec.eigenvalues.sum() == Catch::Approx(0.0).margin(1e-11));
    const Eigen::MatrixXd vtv =
        dec.eigenvectors.transpose() * dec.eigenvectors - Eigen::MatrixXd::Identity(n, n);
    CHECK(vtv.cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::MatrixXd rebuilt =
        dec.eigenvectors * dec.eigenvalues.asDiagonal() * dec.eigenvectors.transpose();
    CHECK((rebuilt - m.entries).cwiseAbs().maxCoeff() < 1e-12);
    for (int q = 1; q < n; ++q) CHECK(dec.eigenvalues(q - 1) <= dec.eigenvalues(q));
  }
}

TEST_CASE("tau grids snap up to an even interval count", "[propagator]") {
  const TauGrid g = TauGrid::over_horizon(40.0, 0.05);
  CHECK(g.intervals == 800);
  CHECK(g.horizon() == Catch::Approx(40.0));
  CHECK(TauGrid::over_horizon(10.01, 0.05).intervals == 202);
  CHECK(TauGrid::over_horizon(0.07, 0.05).intervals == 2);
  CHECK_THROWS_AS(TauGrid::over_horizon(-1.0, 0.05), validation_error);
  CHECK_THROWS_AS(TauGrid::over_horizon(1.0, 0.0), validation_error);
}

TEST_CASE("propagator matrix is unitary symmetric and mirror symmetric", "[propagator]") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> pick_alpha(3.0, 15.0);
  for (const int n : {2, 9, 64}) {
    const double alpha = pick_alpha(rng);
    std::uniform_real_distribution<double> pick_tau(0.0, 4.0 * n);
    const SpectralDecomposition dec = decompose(ChainSpec::ani(n, alpha));
    const double tau = pick_tau(rng);
    const Eigen::MatrixXcd p = amplitude_matrix(dec, tau);
    CHECK((p * p.adjoint() - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        CHECK(p(j, k) == p(k, j));  // exact by construction
        CHECK(std::abs(p(j, k) - p(n - 1 - j, n - 1 - k)) < 1e-10);
      }
  }
}

TEST_CASE("propagation composes over time", "[propagator]") {
  const SpectralDecomposition dec = decompose(ChainSpec::ani(8, 3.0));
  const Eigen::MatrixXcd a = amplitude_matrix(dec, 1.7);
  const Eigen::MatrixXcd b = amplitude_matrix(dec, 2.6);
  const Eigen::MatrixXcd c = amplitude_matrix(dec, 4.3);
  CHECK((a * b - c).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((amplitude_matrix(dec, 0.0) - Eigen::MatrixXcd::Identity(8, 8)).cwiseAbs().maxCoeff() <
        1e-13);
}

TEST_CASE("two-spin amplitude is a half-frequency sine", "[propagator]") {
  const SpectralDecomposition dec = decompose(ChainSpec::nni(2, 3.0));
  const TauGrid grid = TauGrid::over_horizon(2.0 * pi, 0.05);
  const AmplitudeSeries s = amplitude_series(dec, 1, 2, grid);
  for (int i = 0; i < grid.points(); ++i) {
    const Complex expect(0.0, -std::sin(grid.tau(i) / 2.0));
    CHECK(std::abs(s.values(i) - expect) < 1e-12);
  }
}

TEST_CASE("three-spin end amplitude has the cosine closed form", "[propagator]") {
  const SpectralDecomposition dec = decompose(ChainSpec::nni(3, 3.0));
  const TauGrid grid = TauGrid::over_horizon(12.0, 0.05);
  const AmplitudeSeries s = amplitude_series(dec, 1, 3, grid);
  for (int i = 0; i < grid.points(); ++i) {
    const double expect = (std::cos(grid.tau(i) / std::sqrt(2.0)) - 1.0) / 2.0;
    CHECK(std::abs(s.values(i) - Complex(expect, 0.0)) < 1e-10);
  }
  // full transfer at tau = sqrt(2) pi
  const double tau_star = std::sqrt(2.0) * pi;
  const TauGrid fine = TauGrid::over_horizon(tau_star, tau_star / 2.0);
  CHECK(std::abs(amplitude_series(dec, 1, 3, fine).values(2) - Complex(-1.0, 0.0)) < 1e-12);
}

TEST_CASE("series agrees with the propagator matrix and starts at identity", "[propagator]") {
  const SpectralDecomposition dec = decompose(ChainSpec::ani(6, 4.0));
  const TauGrid grid = TauGrid::over_horizon(3.0, 0.5);
  const AmplitudeSeries s = amplitude_series(dec, 2, 5, grid);
  CHECK(std::abs(s.values(0)) <= 1e-14);  // identity up to eigenvector rounding
  for (int i = 0; i < grid.points(); ++i) {
    const Eigen::MatrixXcd p = amplitude_matrix(dec, grid.tau(i));
    CHECK(std::abs(s.values(i) - p(1, 4)) < 1e-12);
    CHECK(std::abs(s.values(i)) <= 1.0 + 1e-10);
  }
  CHECK(std::abs(amplitude_series(dec, 3, 3, grid).values(0) - Complex(1.0, 0.0)) <= 1e-14);
  CHECK_THROWS_AS(amplitude_series(dec, 0, 3, grid), validation_error);
  CHECK_THROWS_AS(amplitude_series(dec, 1, 7, grid), validation_error);
}

TEST_CASE("spectral nearest-neighbor amplitudes match the sine-basis oracle", "[propagator]") {
  for (const int n : {2, 3, 10}) {
    const SpectralDecomposition dec = decompose(ChainSpec::nni(n, 3.0));
    const TauGrid grid = TauGrid::over_horizon(4.0 * n, 0.5);
    for (const auto [j, k] : {std::pair{1, n}, std::pair{1, 1}, std::pair{(n + 1) / 2, n}}) {
      const AmplitudeSeries s = amplitude_series(dec, j, k, grid);
      for (int i = 0; i < grid.points(); ++i)
        CHECK(std::abs(s.values(i) - nni_analytic_amplitude(n, j, k, grid.tau(i))) < 1e-8);
    }
  }
  CHECK(std::abs(nni_analytic_amplitude(2, 1, 2, pi) - Complex(0.0, -1.0)) < 1e-12);
  CHECK(std::abs(nni_analytic_amplitude(2, 1, 2, 0.0)) < 1e-14);
}

TEST_CASE("transfer peak of the five-spin chain arrives near tau of order N", "[propagator]") {
  const SpectralDecomposition dec = decompose(ChainSpec::ani(5, 3.0));
  const TauGrid grid = TauGrid::over_horizon(10.0, 0.05);
  const AmplitudeSeries s = amplitude_series(dec, 1, 5, grid);
  int best = 0;
  for (int i = 1; i < grid.points(); ++i)
    if (std::norm(s.values(i)) > std::norm(s.values(best))) best = i;
  CHECK(grid.tau(best) > 3.0);
  CHECK(grid.tau(best) < 8.0);
  CHECK(std::norm(s.values(best)) > 0.5);
}

TEST_CASE("evolve_state matches a frozen high-precision oracle", "[propagator]") {
  // N=4 all-neighbor chain, alpha=3, tau=5, uniform start. Reference computed
  // with a 50-digit matrix exponential.
  const ChainSpec spec = ChainSpec::ani(4, 3.0);
  const InitialState out = evolve_state(InitialState::uniform(4), spec, 5.0);
  const Complex edge(-0.15588869067523309797, 0.47378836089250377103);
  const Complex inner(-0.18703625794030960413, 0.46501692809836726329);
  CHECK(std::abs(out.amplitudes(0) - edge) < 1e-12);
  CHECK(std::abs(out.amplitudes(1) - inner) < 1e-12);
  CHECK(std::abs(out.amplitudes(2) - inner) < 1e-12);
  CHECK(std::abs(out.amplitudes(3) - edge) < 1e-12);
  CHECK(std::abs(out.amplitudes.squaredNorm() - 1.0) < 1e-10);

  const InitialState from_site = evolve_state(InitialState::site(4, 1), spec, 5.0);
  CHECK(std::abs(from_site.amplitudes(3) - Complex(-0.150630015543786959, 0.907960567118510844)) <
        1e-12);
  const Eigen::MatrixXcd p = amplitude_matrix(decompose(spec), 5.0);
  for (int j = 0; j < 4; ++j) CHECK(std::abs(from_site.amplitudes(j) - p(j, 0)) < 1e-14);
}

TEST_CASE("evolve_state validates its input", "[propagator]") {
  const ChainSpec spec = ChainSpec::ani(4, 3.0);
  CHECK_THROWS_AS(evolve_state(InitialState::uniform(5), spec, 1.0), validation_error);
  InitialState bad = InitialState::uniform(4);
  bad.amplitudes *= 1.1;
  CHECK_THROWS_AS(evolve_state(bad, spec, 1.0), validation_error);
  const InitialState same = evolve_state(InitialState::site(4, 2), spec, 0.0);
  CHECK(std::abs(same.amplitudes(1) - Complex(1.0, 0.0)) < 1e-14);
}
