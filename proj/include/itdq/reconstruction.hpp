#pragma once

// Functional derivatives of the log-likelihood and the MAP iteration.

#include "itdq/dynamics.hpp"
#include "itdq/lattice_model.hpp"
#include "itdq/observation.hpp"
#include "itdq/priors.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace itdq {

struct MapConfig {
  double eta = 0.05;
  int max_iter = 5000;
  double conv_tol = 1e-6;
  // Relative to max|E|: pairs closer than this use the confluent limit of the
  // divided difference.
  double degeneracy_tol = 1e-8;
  bool backtracking = true;

  friend bool operator==(const MapConfig&, const MapConfig&) = default;
};

// Throws std::invalid_argument when a field violates its constraint.
void validate(const MapConfig& cfg);

// Absolute gap threshold for an eigensystem: degeneracy_tol * max|E|.
double absolute_degeneracy_tol(const EigenSystem& eig, double degeneracy_tol);

// D(a, g) = (exp(-i delta E_a) - exp(-i delta E_g)) / (E_a - E_g), with the
// confluent form -i delta exp(-i delta E_mid) sinc(delta (E_a - E_g) / 2) for
// gaps at or below `gap_tol`.
Eigen::MatrixXcd divided_differences(const Eigen::VectorXd& energies, double delta, double gap_tol);

// d phi(to) / d v(x) for phi = <to| exp(-i delta H) |from>, as a vector over x,
// from the divided-difference (Daleckii-Krein) form.
Eigen::VectorXcd amplitude_variation(const EigenSystem& eig, double delta, std::size_t to_site,
                                     std::size_t from_site, double gap_tol);

// Same quantity assembled term by term from first-order perturbation theory:
// eigenvalue shifts plus the two eigenvector-correction sums. Requires a
// non-degenerate spectrum.
Eigen::VectorXcd amplitude_variation_perturbative(const EigenSystem& eig, double delta,
                                                  std::size_t to_site, std::size_t from_site);

// d ln p / d v(x) = 2 Re[ dphi(x) / phi ] with end sites zeroed. Throws
// ZeroLikelihoodError(observation_index) when p vanishes.
Eigen::VectorXd amplitude_derivative(const EigenSystem& eig, double delta, std::size_t to_site,
                                     std::size_t from_site, double gap_tol,
                                     std::size_t observation_index = 0);

// sum_i d ln p_i / d v, accumulated per distinct interval in O(n^3).
Eigen::VectorXd log_likelihood_gradient(const EigenSystem& eig,
                                        std::span<const Observation> observations, double gap_tol);

struct PosteriorValue {
  double value = 0.0;  // -inf when an observation is impossible
  double log_likelihood = 0.0;
  double log_prior = 0.0;
  double log_energy = 0.0;
  std::optional<std::size_t> zero_likelihood_at;

  bool finite() const noexcept { return !zero_likelihood_at.has_value(); }
};

// ln p(v | D) up to v-independent constants.
PosteriorValue log_posterior(const Grid& grid, const Potential& v,
                             std::span<const Observation> observations,
                             const SmoothnessPrior& prior, const EnergyConstraint& constraint);

// Full gradient of ln p(v | D); end sites zero. Throws ZeroLikelihoodError.
Eigen::VectorXd log_posterior_gradient(const Grid& grid, const Potential& v,
                                       std::span<const Observation> observations,
                                       const SmoothnessPrior& prior,
                                       const EnergyConstraint& constraint, double degeneracy_tol);

struct MapResult {
  Potential v_map;
  bool converged = false;
  int iterations_used = 0;
  std::vector<double> log_posterior_trace;  // value at v_init, then after each accepted step
  double final_grad_norm = 0.0;             // max |d ln p(v|D) / d v| over interior sites
  double final_update_norm = 0.0;           // eta * max |K0^-1 gradient|
};

// Preconditioned ascent v <- v + eta K0^-1 grad ln p(v|D) on interior sites,
// halving the step while the posterior would decrease (if backtracking).
// Stops when eta * |K0^-1 grad|_inf < conv_tol or after max_iter iterations.
// Throws ZeroLikelihoodError or DomainError on impossible data or
// non-finite iterates.
MapResult map_reconstruct(const Grid& grid, const Potential& v_init,
                          std::span<const Observation> observations, const SmoothnessPrior& prior,
                          const EnergyConstraint& constraint, const MapConfig& cfg = {});

}  // namespace itdq
