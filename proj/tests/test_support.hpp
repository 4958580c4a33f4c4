#pragma once

#include "itdq/lattice_model.hpp"
#include "itdq/sampler.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>

namespace itdq::testing {

inline Grid standard_grid() { return build_grid(21, -10.0, 10.0, 1.0); }

inline Potential well_potential(const Grid& grid) { return gaussian_well(GaussianWellSpec{}, grid, 1e5); }

// Interior values uniform in [lo, hi); the end sites get `boundary`.
inline Potential random_potential(std::size_t n, std::uint64_t seed, double lo, double hi, double boundary) {
  SplitMix64 rng(seed);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = lo + (hi - lo) * rng.uniform();
  return Potential::pinned(std::move(v), boundary);
}

// exp(-i delta H) by scaling and squaring a truncated Taylor series. Used as
// an oracle independent of the eigendecomposition.
inline Eigen::MatrixXcd taylor_propagator(const Eigen::MatrixXd& h, double delta) {
  const Eigen::MatrixXcd a = std::complex<double>(0.0, -delta) * h.cast<std::complex<double>>();
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  while (norm / std::ldexp(1.0, squarings) > 0.25) ++squarings;
  const Eigen::MatrixXcd scaled = a / std::ldexp(1.0, squarings);
  Eigen::MatrixXcd term = Eigen::MatrixXcd::Identity(h.rows(), h.cols());
  Eigen::MatrixXcd sum = term;
  for (int k = 1; k <= 30; ++k) {
    term = term * scaled / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

// Extended-precision reference for the lattice, built without the library's
// Hamiltonian or spectral code. The 1e5 wall pins limit double-precision
// finite differences to about 1e-9 absolute, too coarse for small gradient
// components; long double buys three more digits.
using LongMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

inline Eigen::SelfAdjointEigenSolver<LongMatrix> long_double_spectrum(const Grid& grid, const Eigen::VectorXd& v) {
  const auto n = static_cast<Eigen::Index>(grid.n_points);
  const long double h = grid.spacing;
  const long double m = grid.mass;
  LongMatrix ham = LongMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    ham(j, j) = 1.0L / (m * h * h) + static_cast<long double>(v[j]);
    ham(j, (j + 1) % n) = ham((j + 1) % n, j) = -0.5L / (m * h * h);
  }
  return Eigen::SelfAdjointEigenSolver<LongMatrix>(ham);
}

inline long double long_double_log_probability(const Grid& grid, const Eigen::VectorXd& v, double delta,
                                               std::size_t from, std::size_t to) {
  const auto es = long_double_spectrum(grid, v);
  std::complex<long double> amplitude = 0.0L;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const long double phase = -static_cast<long double>(delta) * es.eigenvalues()[k];
    amplitude += es.eigenvectors()(static_cast<Eigen::Index>(to), k) *
                 es.eigenvectors()(static_cast<Eigen::Index>(from), k) *
                 std::complex<long double>(std::cos(phase), std::sin(phase));
  }
  return std::log(std::norm(amplitude));
}

// Five-point central differences of a long double function along each
// interior coordinate.
inline Eigen::VectorXd long_double_gradient(const std::function<long double(const Eigen::VectorXd&)>& f,
                                            const Eigen::VectorXd& v, long double step) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(v.size());
  for (Eigen::Index x = 1; x + 1 < v.size(); ++x) {
    const auto at = [&](long double s) {
      Eigen::VectorXd w = v;
      w[x] += static_cast<double>(s);
      return f(w);
    };
    grad[x] = static_cast<double>((-at(2 * step) + 8 * at(step) - 8 * at(-step) + at(-2 * step)) / (12 * step));
  }
  return grad;
}

// Central differences of f along each interior coordinate of v.
inline Eigen::VectorXd finite_difference(const std::function<double(const Potential&)>& f, const Potential& v,
                                         double step) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(v.size()));
  for (Eigen::Index x = 1; x + 1 < grad.size(); ++x) {
    Eigen::VectorXd up = v.values();
    Eigen::VectorXd down = v.values();
    up[x] += step;
    down[x] -= step;
    grad[x] = (f(v.with_values(up)) - f(v.with_values(down))) / (2.0 * step);
  }
  return grad;
}

}  // namespace itdq::testing
