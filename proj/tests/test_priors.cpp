#include "itdq/priors.hpp"

#include "itdq/dynamics.hpp"
#include "itdq/sampler.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

using namespace itdq;
using itdq::testing::standard_grid;
using itdq::testing::well_potential;
using itdq::testing::finite_difference;
using itdq::testing::long_double_gradient;
using itdq::testing::long_double_spectrum;
using itdq::testing::random_potential;

TEST_CASE("negated laplacian") {
  const Grid grid = build_grid(7, 0.0, 3.0, 1.0);  // h = 0.5
  const Eigen::MatrixXd l = negated_laplacian(grid);
  CHECK(l(0, 0) == doctest::Approx(8.0));
  CHECK(l(0, 1) == doctest::Approx(-4.0));
  CHECK(l(0, 6) == doctest::Approx(-4.0));
  CHECK((l * Eigen::VectorXd::Ones(7)).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l);
  CHECK(es.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("K0 is the truncated heat-kernel series in L") {
  const Grid grid = standard_grid();
  const Eigen::MatrixXd l = negated_laplacian(grid);
  const Eigen::MatrixXd k0 = build_k0(grid, 0.1, 3.0);
  // lambda (sigma0^2/2)^k / k! for k = 0..3 at lambda = 0.1, sigma0 = 3.
  const double c[4] = {0.1, 0.45, 1.0125, 1.51875};
  const Eigen::MatrixXd l2 = l * l;
  const Eigen::MatrixXd expected =
      c[0] * Eigen::MatrixXd::Identity(21, 21) + c[1] * l + c[2] * l2 + c[3] * l2 * l;
  CHECK((k0 - expected).cwiseAbs().maxCoeff() < 1e-11);

  // Fourier modes diagonalize every circulant: eigenvalues are the series
  // evaluated at 2 (1 - cos(2 pi k / n)).
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k0);
  std::vector<double> modes;
  for (int k = 0; k < 21; ++k) {
    const double mu = 2.0 * (1.0 - std::cos(2.0 * std::numbers::pi * k / 21.0));
    modes.push_back(c[0] + c[1] * mu + c[2] * mu * mu + c[3] * mu * mu * mu);
  }
  std::sort(modes.begin(), modes.end());
  for (int k = 0; k < 21; ++k) CHECK(es.eigenvalues()[k] == doctest::Approx(modes[static_cast<std::size_t>(k)]).epsilon(1e-10));
  CHECK(es.eigenvalues().minCoeff() == doctest::Approx(0.1));
}

TEST_CASE("smoothness prior value and gradient") {
  const Grid grid = standard_grid();
  const Potential v0 = well_potential(grid);
  const SmoothnessPrior prior = make_smoothness_prior(grid, 0.1, 3.0, v0);
  CHECK(log_prior_and_grad(prior, v0).value == 0.0);

  const Potential v = random_potential(21, 3, -3.0, 1.0, 1e5);
  const ValueAndGradient vg = log_prior_and_grad(prior, v);
  CHECK(vg.value < 0.0);
  CHECK(vg.gradient[0] == 0.0);
  CHECK(vg.gradient[20] == 0.0);
  const Eigen::VectorXd fd =
      finite_difference([&](const Potential& p) { return log_prior_and_grad(prior, p).value; }, v, 1e-4);
  CHECK((vg.gradient - fd).cwiseAbs().maxCoeff() < 1e-6 * vg.gradient.cwiseAbs().maxCoeff());

  CHECK_THROWS_AS(make_smoothness_prior(grid, 0.0, 3.0, v0), std::invalid_argument);
  CHECK_THROWS_AS(make_smoothness_prior(grid, 0.1, -1.0, v0), std::invalid_argument);
  CHECK_THROWS_AS(make_smoothness_prior(build_grid(5, 0, 4, 1), 0.1, 3.0, v0), std::invalid_argument);
}

TEST_CASE("ground-state energy derivative is the ground-state density") {
  const Grid grid = standard_grid();
  const Potential v = well_potential(grid);
  const EigenSystem eig = solve_lattice(grid, v);
  const Eigen::VectorXd density = eig.states.col(0).array().square();
  const Eigen::VectorXd fd = long_double_gradient(
      [&](const Eigen::VectorXd& w) { return long_double_spectrum(grid, w).eigenvalues()[0]; }, v.values(), 1e-3L);
  for (Eigen::Index x = 1; x < 20; ++x) {
    if (density[x] > 1e-8) CHECK(std::abs(fd[x] - density[x]) / density[x] < 1e-6);
  }
}

TEST_CASE("energy constraint value and gradient") {
  const Grid grid = standard_grid();
  const Potential v = random_potential(21, 5, -3.0, 0.0, 1e5);
  const EnergyConstraint constraint{10.0, -1.678};
  const EigenSystem eig = solve_lattice(grid, v);
  const ValueAndGradient vg = log_energy_and_grad(constraint, eig);
  const double gap = eig.ground_energy() - constraint.kappa;
  CHECK(vg.value == doctest::Approx(-5.0 * gap * gap));
  CHECK(log_energy(constraint, eig) == doctest::Approx(vg.value));
  CHECK(vg.gradient[0] == 0.0);
  CHECK(vg.gradient[20] == 0.0);
  const Eigen::VectorXd fd = finite_difference(
      [&](const Potential& p) { return log_energy(constraint, solve_lattice(grid, p)); }, v, 1e-5);
  CHECK((vg.gradient - fd).cwiseAbs().maxCoeff() < 1e-6 * vg.gradient.cwiseAbs().maxCoeff());

  const EnergyConstraint off{0.0, 3.0};
  CHECK(log_energy(off, eig) == 0.0);
}

TEST_CASE("reference fit stays in the box and improves on the grid") {
  const Grid grid = standard_grid();
  const ReferenceParams truth{0.3, 1.0, -4.0};
  const Potential v = reference_potential(truth, grid, 1e5);
  const EigenSystem eig = solve_lattice(grid, v);
  const std::vector<double> deltas(200, 5.0);
  const Dataset data = sample_path(eig, 10, deltas, 4);
  const EnergyConstraint constraint{10.0, eig.ground_energy()};

  const ReferenceFitOptions options;
  const ReferenceFit fit = fit_reference(data.observations(), grid, constraint, 1e5, options);
  CHECK(fit.objective >= fit.best_grid_objective);
  CHECK(fit.objective ==
        doctest::Approx(extended_log_likelihood(fit.params, data.observations(), grid, constraint, 1e5)));
  CHECK(fit.params.a >= options.a_min);
  CHECK(fit.params.a <= options.a_max);
  CHECK(fit.params.b >= -9.0);
  CHECK(fit.params.b <= 9.0);
  CHECK(fit.params.c >= options.c_min);
  CHECK(fit.params.c <= options.c_max);
  // A maximum-likelihood fit cannot be beaten by the generating parameters
  // by more than what the search resolution leaves on the table.
  const double at_truth = extended_log_likelihood(truth, data.observations(), grid, constraint, 1e5);
  CHECK(fit.objective > at_truth - 1.0);

  CHECK_THROWS_AS(fit_reference({}, grid, constraint, 1e5, options), std::invalid_argument);
}
