#pragma once

// Simulation of repeated ideal position measurements on the lattice.

#include "itdq/dynamics.hpp"
#include "itdq/lattice_model.hpp"
#include "itdq/observation.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace itdq {

// Ordered measurement record starting from the preparation site. Each
// observation starts where the previous one ended.
class Dataset {
 public:
  Dataset() = default;

  // Throws std::invalid_argument if the chain is broken or a delta is
  // negative or non-finite.
  Dataset(std::size_t x0_site, std::vector<Observation> observations);

  std::size_t x0_site() const noexcept { return x0_site_; }
  std::span<const Observation> observations() const noexcept { return observations_; }
  std::size_t size() const noexcept { return observations_.size(); }
  bool empty() const noexcept { return observations_.empty(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t x0_site_ = 0;
  std::vector<Observation> observations_;
};

// 64-bit deterministic stream (splitmix64). The output sequence is fixed by
// the seed alone, independent of the standard library in use.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();

 private:
  std::uint64_t state_;
};

// Inverse-CDF draw from an unnormalized probability vector; entries below
// kZeroProbability are never selected.
std::size_t sample_site(const Eigen::VectorXd& probabilities, double uniform);

// Runs the measurement chain under the true eigensystem. Throws
// std::invalid_argument for an empty `deltas` or a bad start site.
Dataset sample_path(const EigenSystem& eig_true, std::size_t x0_site,
                    std::span<const double> deltas, std::uint64_t seed);

// h[x] = (1/n) #{i : next_site_i = x}. Throws std::invalid_argument when empty.
Eigen::VectorXd empirical_transition_histogram(const Dataset& dataset, const Grid& grid);

// Histogram of next sites over the observations that started at
// `prev_site`, normalized by their count; nullopt when none did.
std::optional<Eigen::VectorXd> restricted_histogram(const Dataset& dataset, const Grid& grid,
                                                    std::size_t prev_site);

}  // namespace itdq
