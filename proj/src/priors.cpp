#include "itdq/priors.hpp"

#include "itdq/dynamics.hpp"
#include "itdq/errors.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace itdq {

namespace {

void zero_ends(Eigen::VectorXd& g) {
  g[0] = 0.0;
  g[g.size() - 1] = 0.0;
}

}  // namespace

Eigen::MatrixXd negated_laplacian(const Grid& grid) {
  const auto n = static_cast<Eigen::Index>(grid.n_points);
  const double inv_h2 = 1.0 / (grid.spacing * grid.spacing);
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index next = (j + 1) % n;
    l(j, j) = 2.0 * inv_h2;
    l(j, next) = -inv_h2;
    l(next, j) = -inv_h2;
  }
  return l;
}

Eigen::MatrixXd build_k0(const Grid& grid, double lambda, double sigma0) {
  const Eigen::MatrixXd l = negated_laplacian(grid);
  const auto n = l.rows();
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd k0 = Eigen::MatrixXd::Zero(n, n);
  double coefficient = lambda;
  for (int k = 0; k <= 3; ++k) {
    if (k > 0) {
      power = power * l;
      coefficient *= sigma0 * sigma0 / 2.0 / k;
    }
    k0 += coefficient * power;
  }
  // Powers of a symmetric matrix are symmetric only up to roundoff.
  return 0.5 * (k0 + k0.transpose());
}

SmoothnessPrior make_smoothness_prior(const Grid& grid, double lambda, double sigma0,
                                      Potential v0) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be positive");
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw std::invalid_argument("sigma0 must be positive");
  if (v0.size() != grid.n_points) throw std::invalid_argument("prior mean does not match the grid");
  return SmoothnessPrior{lambda, sigma0, build_k0(grid, lambda, sigma0), std::move(v0)};
}

ValueAndGradient log_prior_and_grad(const SmoothnessPrior& prior, const Potential& v) {
  if (v.size() != prior.v0.size()) throw std::invalid_argument("potential does not match the prior");
  const Eigen::VectorXd diff = v.values() - prior.v0.values();
  const Eigen::VectorXd k_diff = prior.k0 * diff;
  ValueAndGradient out{-0.5 * diff.dot(k_diff), -k_diff};
  zero_ends(out.gradient);
  return out;
}

double log_energy(const EnergyConstraint& constraint, const EigenSystem& eig) {
  const double miss = eig.ground_energy() - constraint.kappa;
  return -0.5 * constraint.mu * miss * miss;
}

ValueAndGradient log_energy_and_grad(const EnergyConstraint& constraint, const EigenSystem& eig) {
  const double miss = eig.ground_energy() - constraint.kappa;
  ValueAndGradient out{-0.5 * constraint.mu * miss * miss,
                       -constraint.mu * miss * eig.states.col(0).cwiseAbs2()};
  zero_ends(out.gradient);
  return out;
}

double extended_log_likelihood(const ReferenceParams& params, std::span<const Observation> data,
                               const Grid& grid, const EnergyConstraint& constraint,
                               double boundary_value) {
  const EigenSystem eig = solve_lattice(grid, reference_potential(params, grid, boundary_value));
  const LogLikelihood ll = log_likelihood(eig, data);
  if (!ll.finite()) return -std::numeric_limits<double>::infinity();
  return ll.value + log_energy(constraint, eig);
}

namespace {

struct SimplexContext {
  std::span<const Observation> data;
  const Grid* grid;
  const EnergyConstraint* constraint;
  double boundary_value;
  std::array<double, 3> lower;
  std::array<double, 3> upper;
};

ReferenceParams clamp_to_box(const gsl_vector* x, const SimplexContext& ctx) {
  std::array<double, 3> p{};
  for (std::size_t i = 0; i < 3; ++i) {
    p[i] = std::clamp(gsl_vector_get(x, i), ctx.lower[i], ctx.upper[i]);
  }
  return ReferenceParams{p[0], p[1], p[2]};
}

double simplex_cost(const gsl_vector* x, void* raw) {
  const auto& ctx = *static_cast<const SimplexContext*>(raw);
  // Outside the box: value at the projection plus a distance penalty, so the
  // simplex is pushed back inside.
  double outside = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double xi = gsl_vector_get(x, i);
    outside += std::max(0.0, ctx.lower[i] - xi) + std::max(0.0, xi - ctx.upper[i]);
  }
  const double value = extended_log_likelihood(clamp_to_box(x, ctx), ctx.data, *ctx.grid,
                                               *ctx.constraint, ctx.boundary_value);
  if (!std::isfinite(value)) return 1e300;
  return -value + 1e3 * outside;
}

struct MinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};
struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};

double grid_value(double lo, double hi, int steps, int i) {
  return steps <= 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (steps - 1);
}

}  // namespace

ReferenceFit fit_reference(std::span<const Observation> data, const Grid& grid,
                           const EnergyConstraint& constraint, double boundary_value,
                           const ReferenceFitOptions& options) {
  if (data.empty()) throw std::invalid_argument("reference fit needs at least one observation");

  const double b_lo = grid.x_min + options.b_margin;
  const double b_hi = grid.x_max - options.b_margin;
  if (!(b_hi >= b_lo)) throw std::invalid_argument("reference search box for b is empty");
  const int b_steps = options.b_steps > 0
                          ? options.b_steps
                          : static_cast<int>(std::floor((b_hi - b_lo) / grid.spacing + 1e-9)) + 1;

  ReferenceParams best;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int ia = 0; ia < options.a_steps; ++ia) {
    for (int ib = 0; ib < b_steps; ++ib) {
      for (int ic = 0; ic < options.c_steps; ++ic) {
        const ReferenceParams candidate{grid_value(options.a_min, options.a_max, options.a_steps, ia),
                                        grid_value(b_lo, b_hi, b_steps, ib),
                                        grid_value(options.c_min, options.c_max, options.c_steps, ic)};
        const double value =
            extended_log_likelihood(candidate, data, grid, constraint, boundary_value);
        if (value > best_value) {
          best_value = value;
          best = candidate;
        }
      }
    }
  }
  if (!std::isfinite(best_value)) {
    throw DomainError("every reference candidate gives zero likelihood for the data");
  }

  SimplexContext ctx{data,
                     &grid,
                     &constraint,
                     boundary_value,
                     {options.a_min, b_lo, options.c_min},
                     {options.a_max, b_hi, options.c_max}};
  gsl_multimin_function fn{&simplex_cost, 3, &ctx};

  std::unique_ptr<gsl_vector, VectorDeleter> start(gsl_vector_alloc(3));
  std::unique_ptr<gsl_vector, VectorDeleter> step(gsl_vector_alloc(3));
  gsl_vector_set(start.get(), 0, best.a);
  gsl_vector_set(start.get(), 1, best.b);
  gsl_vector_set(start.get(), 2, best.c);
  gsl_vector_set(step.get(), 0, 0.5 * (options.a_max - options.a_min) / std::max(1, options.a_steps - 1));
  gsl_vector_set(step.get(), 1, 0.5 * grid.spacing);
  gsl_vector_set(step.get(), 2, 0.5 * (options.c_max - options.c_min) / std::max(1, options.c_steps - 1));

  std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> minimizer(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 3));
  gsl_multimin_fminimizer_set(minimizer.get(), &fn, start.get(), step.get());
  for (int it = 0; it < options.simplex_max_iterations; ++it) {
    if (gsl_multimin_fminimizer_iterate(minimizer.get()) != GSL_SUCCESS) break;
    const double size = gsl_multimin_fminimizer_size(minimizer.get());
    if (gsl_multimin_test_size(size, options.simplex_tolerance) == GSL_SUCCESS) break;
  }

  ReferenceFit fit{best, best_value, best_value};
  const ReferenceParams refined = clamp_to_box(gsl_multimin_fminimizer_x(minimizer.get()), ctx);
  const double refined_value =
      extended_log_likelihood(refined, data, grid, constraint, boundary_value);
  if (refined_value >= best_value) {
    fit.params = refined;
    fit.objective = refined_value;
  }
  return fit;
}

}  // namespace itdq
