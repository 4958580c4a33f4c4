#include "itdq/dynamics.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <stdexcept>

namespace itdq {

namespace {

Eigen::VectorXcd phases(const Eigen::VectorXd& energies, double delta) {
  Eigen::VectorXcd out(energies.size());
  for (Eigen::Index a = 0; a < energies.size(); ++a) {
    out[a] = std::polar(1.0, -delta * energies[a]);
  }
  return out;
}

void check_site(const EigenSystem& eig, std::size_t site) {
  if (site >= eig.size()) throw std::out_of_range("site index outside the lattice");
}

}  // namespace

Eigen::MatrixXcd evolution_operator(const EigenSystem& eig, double delta) {
  const Eigen::MatrixXcd states = eig.states.cast<std::complex<double>>();
  return states * phases(eig.energies, delta).asDiagonal() * states.transpose();
}

Eigen::VectorXcd transition_amplitudes(const EigenSystem& eig, double delta,
                                       std::size_t from_site) {
  check_site(eig, from_site);
  const auto from = static_cast<Eigen::Index>(from_site);
  Eigen::VectorXcd weights = phases(eig.energies, delta);
  for (Eigen::Index a = 0; a < weights.size(); ++a) weights[a] *= eig.states(from, a);
  return eig.states.cast<std::complex<double>>() * weights;
}

Eigen::VectorXd transition_probability(const EigenSystem& eig, double delta,
                                       std::size_t from_site) {
  return transition_amplitudes(eig, delta, from_site).cwiseAbs2();
}

TransitionKernel transition_kernel(const EigenSystem& eig, double delta) {
  return TransitionKernel{delta, evolution_operator(eig, delta).cwiseAbs2()};
}

LogLikelihood log_likelihood(const EigenSystem& eig, std::span<const Observation> observations) {
  // Observations typically share a handful of intervals; build each kernel once.
  std::map<double, Eigen::MatrixXd> kernels;
  LogLikelihood result;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const Observation& obs = observations[i];
    check_site(eig, obs.prev_site);
    check_site(eig, obs.next_site);
    auto it = kernels.find(obs.delta);
    if (it == kernels.end()) {
      it = kernels.emplace(obs.delta, transition_kernel(eig, obs.delta).probs).first;
    }
    const double p = it->second(static_cast<Eigen::Index>(obs.next_site),
                                static_cast<Eigen::Index>(obs.prev_site));
    if (!(p > kZeroProbability)) {
      result.value = -std::numeric_limits<double>::infinity();
      result.zero_likelihood_at = i;
      return result;
    }
    result.value += std::log(p);
  }
  return result;
}

}  // namespace itdq
