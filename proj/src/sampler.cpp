#include "itdq/sampler.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace itdq {

Dataset::Dataset(std::size_t x0_site, std::vector<Observation> observations)
    : x0_site_(x0_site), observations_(std::move(observations)) {
  std::size_t expected = x0_site_;
  for (std::size_t i = 0; i < observations_.size(); ++i) {
    const Observation& obs = observations_[i];
    if (obs.prev_site != expected) {
      throw std::invalid_argument("observation " + std::to_string(i) +
                                  " does not start where the previous one ended");
    }
    if (!std::isfinite(obs.delta) || obs.delta < 0.0) {
      throw std::invalid_argument("observation " + std::to_string(i) +
                                  " has a negative or non-finite interval");
    }
    expected = obs.next_site;
  }
}

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::size_t sample_site(const Eigen::VectorXd& probabilities, double uniform) {
  double total = 0.0;
  for (double p : probabilities) {
    if (p > kZeroProbability) total += p;
  }
  if (!(total > 0.0)) throw std::invalid_argument("cannot sample from an all-zero distribution");

  const double target = uniform * total;
  double cumulative = 0.0;
  std::size_t last_allowed = 0;
  for (Eigen::Index x = 0; x < probabilities.size(); ++x) {
    const double p = probabilities[x];
    if (!(p > kZeroProbability)) continue;
    last_allowed = static_cast<std::size_t>(x);
    cumulative += p;
    if (target < cumulative) return last_allowed;
  }
  // Roundoff can leave target == total; fall back to the last admissible site.
  return last_allowed;
}

Dataset sample_path(const EigenSystem& eig_true, std::size_t x0_site,
                    std::span<const double> deltas, std::uint64_t seed) {
  if (deltas.empty()) throw std::invalid_argument("sample_path needs at least one interval");
  if (x0_site >= eig_true.size()) throw std::invalid_argument("start site outside the lattice");

  SplitMix64 rng(seed);
  std::vector<Observation> observations;
  observations.reserve(deltas.size());
  std::size_t current = x0_site;
  for (double delta : deltas) {
    if (!std::isfinite(delta) || delta < 0.0) {
      throw std::invalid_argument("measurement intervals must be finite and non-negative");
    }
    const std::size_t next =
        sample_site(transition_probability(eig_true, delta, current), rng.uniform());
    observations.push_back(Observation{current, delta, next});
    current = next;
  }
  return Dataset(x0_site, std::move(observations));
}

Eigen::VectorXd empirical_transition_histogram(const Dataset& dataset, const Grid& grid) {
  if (dataset.empty()) throw std::invalid_argument("histogram of an empty dataset");
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.n_points));
  for (const Observation& obs : dataset.observations()) {
    counts[static_cast<Eigen::Index>(obs.next_site)] += 1.0;
  }
  return counts / static_cast<double>(dataset.size());
}

std::optional<Eigen::VectorXd> restricted_histogram(const Dataset& dataset, const Grid& grid,
                                                    std::size_t prev_site) {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.n_points));
  std::size_t matched = 0;
  for (const Observation& obs : dataset.observations()) {
    if (obs.prev_site != prev_site) continue;
    counts[static_cast<Eigen::Index>(obs.next_site)] += 1.0;
    ++matched;
  }
  if (matched == 0) return std::nullopt;
  return Eigen::VectorXd(counts / static_cast<double>(matched));
}

}  // namespace itdq
