#pragma once

// Gaussian smoothness prior over potentials, the ground-state energy
// constraint, and the parametric reference-potential fit.

#include "itdq/lattice_model.hpp"
#include "itdq/observation.hpp"

#include <Eigen/Dense>

#include <span>

namespace itdq {

struct ValueAndGradient {
  double value = 0.0;
  Eigen::VectorXd gradient;  // end sites are always zero
};

// L = -d^2/dx^2 on the periodic three-point stencil: L(j,j) = 2/h^2,
// L(j,j+-1 mod n) = -1/h^2. Positive semi-definite, annihilates constants.
Eigen::MatrixXd negated_laplacian(const Grid& grid);

// K0 = lambda * sum_{k=0}^{3} (sigma0^2 / 2)^k / k! * L^k.
Eigen::MatrixXd build_k0(const Grid& grid, double lambda, double sigma0);

struct SmoothnessPrior {
  double lambda = 0.0;
  double sigma0 = 0.0;
  Eigen::MatrixXd k0;
  Potential v0;
};

// Throws std::invalid_argument for non-positive lambda/sigma0 or a mean of
// the wrong size.
SmoothnessPrior make_smoothness_prior(const Grid& grid, double lambda, double sigma0,
                                      Potential v0);

// -1/2 (v - v0)^T K0 (v - v0) and its gradient -K0 (v - v0).
ValueAndGradient log_prior_and_grad(const SmoothnessPrior& prior, const Potential& v);

// Gaussian likelihood of a noisy ground-state energy reading kappa with
// precision mu.
struct EnergyConstraint {
  double mu = 0.0;
  double kappa = 0.0;
};

// -mu/2 (E0 - kappa)^2; gradient uses dE0/dv(x) = |psi_0(x)|^2.
ValueAndGradient log_energy_and_grad(const EnergyConstraint& constraint, const EigenSystem& eig);

double log_energy(const EnergyConstraint& constraint, const EigenSystem& eig);

// Search box and resolution for the reference fit.
struct ReferenceFitOptions {
  double a_min = 0.0, a_max = 2.0;
  double c_min = -10.0, c_max = 0.0;
  // b spans [x_min + b_margin, x_max - b_margin].
  double b_margin = 1.0;
  int a_steps = 9;
  int b_steps = 0;  // 0: one candidate per lattice site inside the box
  int c_steps = 11;
  double simplex_tolerance = 1e-6;
  int simplex_max_iterations = 2000;

  friend bool operator==(const ReferenceFitOptions&, const ReferenceFitOptions&) = default;
};

struct ReferenceFit {
  ReferenceParams params;
  double objective = 0.0;  // extended log-likelihood at params
  double best_grid_objective = 0.0;
};

// sum_i ln p_i(v0) + ln p_E(v0) for v0 = reference_potential(params).
// Returns -inf when some observation is impossible.
double extended_log_likelihood(const ReferenceParams& params, std::span<const Observation> data,
                               const Grid& grid, const EnergyConstraint& constraint,
                               double boundary_value);

// Coarse grid search over the box followed by Nelder-Mead refinement inside
// it. Throws std::invalid_argument for empty data and DomainError when every
// grid candidate has zero likelihood.
ReferenceFit fit_reference(std::span<const Observation> data, const Grid& grid,
                           const EnergyConstraint& constraint, double boundary_value,
                           const ReferenceFitOptions& options = {});

}  // namespace itdq
