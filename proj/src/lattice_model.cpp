#include "itdq/lattice_model.hpp"

#include "itdq/errors.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace itdq {

std::optional<std::size_t> Grid::site_at(double x, double tolerance) const {
  const double position = (x - x_min) / spacing;
  const double nearest = std::round(position);
  if (!std::isfinite(position) || nearest < 0.0 || nearest > static_cast<double>(n_points - 1) ||
      std::abs(position - nearest) > tolerance) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(nearest);
}

Eigen::VectorXd Grid::coordinates() const {
  Eigen::VectorXd x(static_cast<Eigen::Index>(n_points));
  for (std::size_t j = 0; j < n_points; ++j) x[static_cast<Eigen::Index>(j)] = coordinate(j);
  return x;
}

Grid build_grid(std::size_t n_points, double x_min, double x_max, double mass) {
  if (n_points < 3) throw std::invalid_argument("grid needs at least 3 points");
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min)) {
    throw std::invalid_argument("grid requires finite x_max > x_min");
  }
  if (!std::isfinite(mass) || !(mass > 0.0)) throw std::invalid_argument("mass must be positive");
  Grid grid;
  grid.n_points = n_points;
  grid.x_min = x_min;
  grid.x_max = x_max;
  grid.spacing = (x_max - x_min) / static_cast<double>(n_points - 1);
  grid.mass = mass;
  return grid;
}

Potential::Potential(Eigen::VectorXd values, double boundary_value)
    : values_(std::move(values)), boundary_value_(boundary_value) {
  if (values_.size() < 3) throw std::invalid_argument("potential needs at least 3 sites");
  if (!std::isfinite(boundary_value_) || !values_.allFinite()) {
    throw std::invalid_argument("potential values must be finite");
  }
  if (values_[0] != boundary_value_ || values_[values_.size() - 1] != boundary_value_) {
    throw std::invalid_argument("potential end sites must equal the boundary value");
  }
}

Potential Potential::pinned(Eigen::VectorXd values, double boundary_value) {
  if (values.size() >= 1) {
    values[0] = boundary_value;
    values[values.size() - 1] = boundary_value;
  }
  return Potential(std::move(values), boundary_value);
}

Potential Potential::with_values(const Eigen::VectorXd& values) const {
  if (values.size() != values_.size()) throw std::invalid_argument("potential size mismatch");
  return pinned(values, boundary_value_);
}

double gaussian_well_value(const GaussianWellSpec& spec, double x) {
  const double prefactor = spec.normalization == WellNormalization::sigma_sqrt_two_pi
                               ? spec.sigma * std::sqrt(2.0 * std::numbers::pi)
                               : std::sqrt(2.0 * std::numbers::pi * spec.sigma);
  const double offset = x - spec.c2;
  return spec.c1 / prefactor * std::exp(-offset * offset / (2.0 * spec.sigma * spec.sigma));
}

Potential gaussian_well(const GaussianWellSpec& spec, const Grid& grid, double boundary_value) {
  if (!(spec.sigma > 0.0)) throw std::invalid_argument("well width sigma must be positive");
  Eigen::VectorXd v(static_cast<Eigen::Index>(grid.n_points));
  for (std::size_t j = 0; j < grid.n_points; ++j) {
    v[static_cast<Eigen::Index>(j)] = gaussian_well_value(spec, grid.coordinate(j));
  }
  return Potential::pinned(std::move(v), boundary_value);
}

Potential reference_potential(const ReferenceParams& params, const Grid& grid,
                              double boundary_value) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(grid.n_points));
  for (std::size_t j = 0; j < grid.n_points; ++j) {
    const double offset = grid.coordinate(j) - params.b;
    v[static_cast<Eigen::Index>(j)] = std::min(0.0, params.a * offset * offset + params.c);
  }
  return Potential::pinned(std::move(v), boundary_value);
}

Eigen::MatrixXd kinetic_operator(const Grid& grid) {
  const auto n = static_cast<Eigen::Index>(grid.n_points);
  const double diagonal = 1.0 / (grid.mass * grid.spacing * grid.spacing);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    t(j, j) = diagonal;
    const Eigen::Index next = (j + 1) % n;
    t(j, next) = -0.5 * diagonal;
    t(next, j) = -0.5 * diagonal;
  }
  return t;
}

Eigen::MatrixXd build_hamiltonian(const Grid& grid, const Potential& potential) {
  if (potential.size() != grid.n_points) {
    throw std::invalid_argument("potential has " + std::to_string(potential.size()) +
                                " sites, grid has " + std::to_string(grid.n_points));
  }
  Eigen::MatrixXd h = kinetic_operator(grid);
  h.diagonal() += potential.values();
  return h;
}

EigenSystem eigendecompose(const Eigen::MatrixXd& hamiltonian) {
  if (hamiltonian.rows() != hamiltonian.cols()) {
    throw std::invalid_argument("hamiltonian must be square");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(hamiltonian, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw DomainError("symmetric eigensolver did not converge");
  }
  // Eigen returns eigenvalues in increasing order.
  return EigenSystem{solver.eigenvalues(), solver.eigenvectors()};
}

}  // namespace itdq
