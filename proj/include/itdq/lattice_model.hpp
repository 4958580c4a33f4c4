#pragma once

// One-dimensional lattice, potentials on it, the lattice Hamiltonian and its
// eigendecomposition. Units: hbar = 1.

#include <Eigen/Dense>

#include <cstddef>
#include <optional>

namespace itdq {

struct Grid {
  std::size_t n_points = 0;
  double x_min = 0.0;
  double x_max = 0.0;
  double spacing = 0.0;
  double mass = 1.0;

  double coordinate(std::size_t site) const { return x_min + static_cast<double>(site) * spacing; }

  // Site whose coordinate lies within `tolerance * spacing` of x, if any.
  std::optional<std::size_t> site_at(double x, double tolerance = 1e-6) const;

  Eigen::VectorXd coordinates() const;
};

// Throws std::invalid_argument unless n_points >= 3, x_max > x_min, mass > 0.
Grid build_grid(std::size_t n_points, double x_min, double x_max, double mass);

// Real potential on the lattice; both end sites carry the same pinned value.
class Potential {
 public:
  // Validates the pin and finiteness; throws std::invalid_argument.
  Potential(Eigen::VectorXd values, double boundary_value);

  // Copies `values` and overwrites the end sites with `boundary_value`.
  static Potential pinned(Eigen::VectorXd values, double boundary_value);

  const Eigen::VectorXd& values() const noexcept { return values_; }
  double boundary_value() const noexcept { return boundary_value_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t site) const { return values_[static_cast<Eigen::Index>(site)]; }

  // Same pin, new interior taken from `values` (end entries ignored).
  Potential with_values(const Eigen::VectorXd& values) const;

 private:
  Eigen::VectorXd values_;
  double boundary_value_;
};

enum class WellNormalization {
  sigma_sqrt_two_pi,  // c1 / (sigma * sqrt(2 pi)), a normalized Gaussian
  sqrt_two_pi_sigma,  // c1 / sqrt(2 pi sigma)
};

struct GaussianWellSpec {
  double c1 = -10.0;
  double c2 = -2.0;
  double sigma = 2.0;
  WellNormalization normalization = WellNormalization::sigma_sqrt_two_pi;
};

// min(0, a (x - b)^2 + c)
struct ReferenceParams {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

struct EigenSystem {
  Eigen::VectorXd energies;  // ascending
  Eigen::MatrixXd states;    // column alpha is psi_alpha on the sites

  std::size_t size() const noexcept { return static_cast<std::size_t>(energies.size()); }
  double ground_energy() const { return energies[0]; }
};

double gaussian_well_value(const GaussianWellSpec& spec, double x);

Potential gaussian_well(const GaussianWellSpec& spec, const Grid& grid, double boundary_value);
Potential reference_potential(const ReferenceParams& params, const Grid& grid,
                              double boundary_value);

// Kinetic part of the Hamiltonian: three-point second difference with a
// periodic wrap between the first and last site.
Eigen::MatrixXd kinetic_operator(const Grid& grid);

// T + diag(v). Throws std::invalid_argument on a size mismatch.
Eigen::MatrixXd build_hamiltonian(const Grid& grid, const Potential& potential);

// Dense symmetric eigendecomposition. Throws DomainError if the solver fails.
EigenSystem eigendecompose(const Eigen::MatrixXd& hamiltonian);

inline EigenSystem solve_lattice(const Grid& grid, const Potential& potential) {
  return eigendecompose(build_hamiltonian(grid, potential));
}

}  // namespace itdq
