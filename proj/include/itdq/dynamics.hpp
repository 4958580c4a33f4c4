#pragma once

// Transition amplitudes <to| exp(-i delta H) |from> from the spectral
// expansion, and the Markov kernel of repeated position measurements.

#include "itdq/lattice_model.hpp"
#include "itdq/observation.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>

namespace itdq {

// Probabilities below this are treated as exact zeros when sampling and when
// deciding whether an observation is impossible.
inline constexpr double kZeroProbability = 1e-300;

// U = sum_alpha exp(-i delta E_alpha) psi_alpha psi_alpha^T.
Eigen::MatrixXcd evolution_operator(const EigenSystem& eig, double delta);

// phi[x] = <x| U(delta) |from_site>.
Eigen::VectorXcd transition_amplitudes(const EigenSystem& eig, double delta,
                                       std::size_t from_site);

// p[x] = |phi[x]|^2.
Eigen::VectorXd transition_probability(const EigenSystem& eig, double delta,
                                       std::size_t from_site);

// probs(to, from) = p(to | delta, from). Columns sum to one; for a real
// Hamiltonian the matrix is symmetric, so the uniform distribution is
// stationary.
struct TransitionKernel {
  double delta = 0.0;
  Eigen::MatrixXd probs;
};

TransitionKernel transition_kernel(const EigenSystem& eig, double delta);

struct LogLikelihood {
  double value = 0.0;                             // sum_i ln p_i, -inf when impossible
  std::optional<std::size_t> zero_likelihood_at;  // first impossible observation

  bool finite() const noexcept { return !zero_likelihood_at.has_value(); }
};

// sum_i ln p(next_i | delta_i, prev_i) under the eigensystem's Hamiltonian.
LogLikelihood log_likelihood(const EigenSystem& eig, std::span<const Observation> observations);

}  // namespace itdq
