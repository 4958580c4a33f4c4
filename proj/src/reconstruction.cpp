#include "itdq/reconstruction.hpp"

#include "itdq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

namespace itdq {

using cplx = std::complex<double>;

namespace {

// Eigenvalues of a Hamiltonian with 1e5 boundary pins carry absolute errors
// around 1e-11, so the posterior is only resolved to about that level.
// Backtracking accepts decreases below this.
constexpr double kAscentSlack = 1e-10;
// After a halving, later iterations restart from the reduced step and regrow
// it by this factor per iteration, never beyond eta.
constexpr double kStepRegrowth = 1.05;

}  // namespace

void validate(const MapConfig& cfg) {
  if (!(cfg.eta > 0.0) || !std::isfinite(cfg.eta)) throw std::invalid_argument("eta must be positive");
  if (cfg.max_iter <= 0) throw std::invalid_argument("max_iter must be positive");
  if (!(cfg.conv_tol > 0.0)) throw std::invalid_argument("conv_tol must be positive");
  if (!(cfg.degeneracy_tol > 0.0)) throw std::invalid_argument("degeneracy_tol must be positive");
}

double absolute_degeneracy_tol(const EigenSystem& eig, double degeneracy_tol) {
  return degeneracy_tol * eig.energies.cwiseAbs().maxCoeff();
}

Eigen::MatrixXcd divided_differences(const Eigen::VectorXd& energies, double delta,
                                     double gap_tol) {
  const auto n = energies.size();
  Eigen::MatrixXcd d(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index g = a; g < n; ++g) {
      const double gap = energies[a] - energies[g];
      cplx value;
      if (std::abs(gap) > gap_tol) {
        value = (std::polar(1.0, -delta * energies[a]) - std::polar(1.0, -delta * energies[g])) / gap;
      } else {
        const double z = 0.5 * delta * gap;
        const double sinc = std::abs(z) < 1e-4 ? 1.0 - z * z / 6.0 : std::sin(z) / z;
        const double mid = 0.5 * (energies[a] + energies[g]);
        value = cplx(0.0, -delta) * std::polar(1.0, -delta * mid) * sinc;
      }
      d(a, g) = value;
      d(g, a) = value;
    }
  }
  return d;
}

namespace {

// delta phi(x) = sum_{a,g} P(x,a) P(x,g) [D o C](a,g).
Eigen::VectorXcd contract_sites(const Eigen::MatrixXd& states, const Eigen::MatrixXcd& weighted) {
  const Eigen::MatrixXcd left = states.cast<cplx>() * weighted;
  return left.cwiseProduct(states.cast<cplx>()).rowwise().sum();
}

void zero_ends(Eigen::VectorXd& g) {
  g[0] = 0.0;
  g[g.size() - 1] = 0.0;
}

}  // namespace

Eigen::VectorXcd amplitude_variation(const EigenSystem& eig, double delta, std::size_t to_site,
                                     std::size_t from_site, double gap_tol) {
  if (to_site >= eig.size() || from_site >= eig.size()) throw std::out_of_range("site outside the lattice");
  const Eigen::VectorXd to_row = eig.states.row(static_cast<Eigen::Index>(to_site)).transpose();
  const Eigen::VectorXd from_row = eig.states.row(static_cast<Eigen::Index>(from_site)).transpose();
  const Eigen::MatrixXcd weighted =
      divided_differences(eig.energies, delta, gap_tol).cwiseProduct((to_row * from_row.transpose()).cast<cplx>());
  return contract_sites(eig.states, weighted);
}

Eigen::VectorXcd amplitude_variation_perturbative(const EigenSystem& eig, double delta,
                                                  std::size_t to_site, std::size_t from_site) {
  const auto n = static_cast<Eigen::Index>(eig.size());
  const auto to = static_cast<Eigen::Index>(to_site);
  const auto from = static_cast<Eigen::Index>(from_site);
  const Eigen::MatrixXd& psi = eig.states;
  const Eigen::VectorXd& e = eig.energies;

  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
  for (Eigen::Index x = 0; x < n; ++x) {
    cplx sum = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
      const cplx phase = std::polar(1.0, -delta * e[a]);
      // eigenvalue shift dE_a / dv(x) = psi_a(x)^2
      cplx term = cplx(0.0, -delta) * psi(x, a) * psi(x, a) * psi(to, a) * psi(from, a);
      for (Eigen::Index g = 0; g < n; ++g) {
        if (g == a) continue;
        const double inv_gap = 1.0 / (e[a] - e[g]);
        term += inv_gap * psi(to, g) * psi(x, g) * psi(x, a) * psi(from, a);
        term += inv_gap * psi(from, g) * psi(x, g) * psi(x, a) * psi(to, a);
      }
      sum += phase * term;
    }
    out[x] = sum;
  }
  return out;
}

Eigen::VectorXd amplitude_derivative(const EigenSystem& eig, double delta, std::size_t to_site,
                                     std::size_t from_site, double gap_tol,
                                     std::size_t observation_index) {
  const cplx phi = transition_amplitudes(eig, delta, from_site)[static_cast<Eigen::Index>(to_site)];
  if (!(std::norm(phi) > kZeroProbability)) throw ZeroLikelihoodError(observation_index);
  Eigen::VectorXd g = 2.0 * (amplitude_variation(eig, delta, to_site, from_site, gap_tol) / phi).real();
  zero_ends(g);
  return g;
}

Eigen::VectorXd log_likelihood_gradient(const EigenSystem& eig,
                                        std::span<const Observation> observations,
                                        double gap_tol) {
  const auto n = static_cast<Eigen::Index>(eig.size());
  // Per interval: Z(to, from) += 1 / phi_i, so that sum_i a_i b_i^T / phi_i = P^T Z P.
  std::map<double, std::vector<std::size_t>> by_delta;
  for (std::size_t i = 0; i < observations.size(); ++i) by_delta[observations[i].delta].push_back(i);

  const Eigen::MatrixXcd states = eig.states.cast<cplx>();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
  for (const auto& [delta, indices] : by_delta) {
    const Eigen::MatrixXcd u = evolution_operator(eig, delta);
    Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t i : indices) {
      const auto to = static_cast<Eigen::Index>(observations[i].next_site);
      const auto from = static_cast<Eigen::Index>(observations[i].prev_site);
      if (to >= n || from >= n) throw std::out_of_range("site outside the lattice");
      const cplx phi = u(to, from);
      if (!(std::norm(phi) > kZeroProbability)) throw ZeroLikelihoodError(i);
      z(to, from) += 1.0 / phi;
    }
    const Eigen::MatrixXcd c = states.transpose() * z * states;
    grad += 2.0 * contract_sites(eig.states, divided_differences(eig.energies, delta, gap_tol).cwiseProduct(c)).real();
  }
  zero_ends(grad);
  return grad;
}

namespace {

struct Evaluation {
  PosteriorValue value;
  EigenSystem eig;
};

Evaluation evaluate(const Grid& grid, const Potential& v, std::span<const Observation> observations,
                    const SmoothnessPrior& prior, const EnergyConstraint& constraint) {
  Evaluation out{{}, solve_lattice(grid, v)};
  const LogLikelihood ll = log_likelihood(out.eig, observations);
  out.value.log_prior = log_prior_and_grad(prior, v).value;
  out.value.log_energy = log_energy(constraint, out.eig);
  out.value.log_likelihood = ll.value;
  out.value.zero_likelihood_at = ll.zero_likelihood_at;
  out.value.value = ll.finite() ? ll.value + out.value.log_prior + out.value.log_energy
                                : -std::numeric_limits<double>::infinity();
  return out;
}

Eigen::VectorXd gradient_at(const Evaluation& at, const Potential& v,
                            std::span<const Observation> observations, const SmoothnessPrior& prior,
                            const EnergyConstraint& constraint, double degeneracy_tol) {
  return log_prior_and_grad(prior, v).gradient + log_energy_and_grad(constraint, at.eig).gradient +
         log_likelihood_gradient(at.eig, observations,
                                 absolute_degeneracy_tol(at.eig, degeneracy_tol));
}

}  // namespace

PosteriorValue log_posterior(const Grid& grid, const Potential& v,
                             std::span<const Observation> observations,
                             const SmoothnessPrior& prior, const EnergyConstraint& constraint) {
  return evaluate(grid, v, observations, prior, constraint).value;
}

Eigen::VectorXd log_posterior_gradient(const Grid& grid, const Potential& v,
                                       std::span<const Observation> observations,
                                       const SmoothnessPrior& prior,
                                       const EnergyConstraint& constraint, double degeneracy_tol) {
  const Evaluation at = evaluate(grid, v, observations, prior, constraint);
  if (!at.value.finite()) throw ZeroLikelihoodError(*at.value.zero_likelihood_at);
  return gradient_at(at, v, observations, prior, constraint, degeneracy_tol);
}

MapResult map_reconstruct(const Grid& grid, const Potential& v_init,
                          std::span<const Observation> observations, const SmoothnessPrior& prior,
                          const EnergyConstraint& constraint, const MapConfig& cfg) {
  validate(cfg);
  const auto n = static_cast<Eigen::Index>(grid.n_points);
  if (v_init.size() != grid.n_points || prior.v0.size() != grid.n_points) {
    throw std::invalid_argument("potential does not match the grid");
  }
  const Eigen::Index interior = n - 2;
  const Eigen::LLT<Eigen::MatrixXd> k0_interior(prior.k0.block(1, 1, interior, interior));
  if (k0_interior.info() != Eigen::Success) {
    throw DomainError("inverse covariance is not positive definite on the interior sites");
  }

  MapResult result{v_init, false, 0, {}, 0.0, 0.0};
  Potential v = v_init;
  Evaluation current = evaluate(grid, v, observations, prior, constraint);
  if (!current.value.finite()) throw ZeroLikelihoodError(*current.value.zero_likelihood_at);
  result.log_posterior_trace.push_back(current.value.value);

  Eigen::VectorXd grad;
  double step = cfg.eta;
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    result.iterations_used = iter;
    grad = gradient_at(current, v, observations, prior, constraint, cfg.degeneracy_tol);
    Eigen::VectorXd direction = Eigen::VectorXd::Zero(n);
    direction.segment(1, interior) = k0_interior.solve(grad.segment(1, interior));
    if (!direction.allFinite()) throw DomainError("non-finite update at iteration " + std::to_string(iter));

    result.final_update_norm = cfg.eta * direction.cwiseAbs().maxCoeff();
    if (result.final_update_norm < cfg.conv_tol) {
      result.converged = true;
      break;
    }

    step = std::min(cfg.eta, step * kStepRegrowth);
    bool accepted = false;
    while (!accepted) {
      const Potential trial = v.with_values(v.values() + step * direction);
      Evaluation next = evaluate(grid, trial, observations, prior, constraint);
      if (!cfg.backtracking) {
        if (!next.value.finite()) throw ZeroLikelihoodError(*next.value.zero_likelihood_at);
        accepted = true;
      } else if (next.value.finite() && next.value.value >= current.value.value - kAscentSlack) {
        accepted = true;
      }
      if (accepted) {
        v = trial;
        current = std::move(next);
        result.log_posterior_trace.push_back(current.value.value);
      } else {
        step *= 0.5;
        // No ascent along a non-trivial direction: stalled at roundoff level.
        if (step < cfg.eta * 0x1.0p-52) break;
      }
    }
    if (!accepted) break;
  }

  grad = gradient_at(current, v, observations, prior, constraint, cfg.degeneracy_tol);
  result.final_grad_norm = grad.segment(1, interior).cwiseAbs().maxCoeff();
  result.v_map = v;
  return result;
}

}  // namespace itdq
