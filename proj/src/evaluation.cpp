#include "itdq/evaluation.hpp"

#include "itdq/dynamics.hpp"
#include "itdq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace itdq {

DataError data_error(const Grid& grid, const Potential& v, std::span<const Observation> observations) {
  const LogLikelihood ll = log_likelihood(solve_lattice(grid, v), observations);
  if (!ll.finite()) return DataError{std::numeric_limits<double>::infinity(), ll.zero_likelihood_at};
  // -0.0 from an all-certain dataset reads badly in output files.
  return DataError{ll.value == 0.0 ? 0.0 : -ll.value, std::nullopt};
}

double generalization_error(const Grid& grid, const Potential& v, const EigenSystem& eig_true,
                            double delta) {
  if (v.size() != grid.n_points || eig_true.size() != grid.n_points) {
    throw std::invalid_argument("generalization error: grid size mismatch");
  }
  const Eigen::MatrixXd p_true = transition_kernel(eig_true, delta).probs;
  const Eigen::MatrixXd p_model = transition_kernel(solve_lattice(grid, v), delta).probs;
  double total = 0.0;
  for (Eigen::Index from = 0; from < p_true.cols(); ++from) {
    for (Eigen::Index to = 0; to < p_true.rows(); ++to) {
      const double weight = p_true(to, from);
      if (weight == 0.0) continue;
      const double model = p_model(to, from);
      if (!(model > 0.0)) return std::numeric_limits<double>::infinity();
      total -= weight * std::log(model);
    }
  }
  return total / static_cast<double>(grid.n_points);
}

ErrorReport error_report(const Grid& grid, const Potential& v,
                         std::span<const Observation> observations, const EigenSystem& eig_true,
                         double delta) {
  const Eigen::MatrixXd p_true = transition_kernel(eig_true, delta).probs;
  double entropy = 0.0;
  for (double p : p_true.reshaped()) {
    if (p > 0.0) entropy -= p * std::log(p);
  }
  return ErrorReport{data_error(grid, v, observations).value,
                     generalization_error(grid, v, eig_true, delta),
                     entropy / static_cast<double>(grid.n_points)};
}

MapResult run_pipeline(const Grid& grid, std::span<const Observation> observations,
                       const PipelineConfig& pipeline, const std::optional<Potential>& v_init) {
  const SmoothnessPrior prior =
      make_smoothness_prior(grid, pipeline.lambda, pipeline.sigma0, pipeline.v0);
  return map_reconstruct(grid, v_init.value_or(pipeline.v0), observations, prior, pipeline.energy,
                         pipeline.map);
}

double cross_validation_error(const Grid& grid, std::span<const Observation> observations,
                              const PipelineConfig& pipeline, std::size_t k_folds) {
  const std::size_t n = observations.size();
  if (k_folds < 2 || k_folds > n) {
    throw std::invalid_argument("cross-validation needs 2 <= k_folds <= number of observations");
  }
  double held_out_total = 0.0;
  for (std::size_t fold = 0; fold < k_folds; ++fold) {
    const std::size_t begin = fold * n / k_folds;
    const std::size_t end = (fold + 1) * n / k_folds;
    std::vector<Observation> training(observations.begin(), observations.begin() + static_cast<std::ptrdiff_t>(begin));
    training.insert(training.end(), observations.begin() + static_cast<std::ptrdiff_t>(end), observations.end());

    const MapResult fit = run_pipeline(grid, training, pipeline);
    const DataError held_out = data_error(grid, fit.v_map, observations.subspan(begin, end - begin));
    if (!held_out.finite()) return std::numeric_limits<double>::infinity();
    held_out_total += held_out.value;
  }
  return held_out_total / static_cast<double>(n);
}

std::vector<LambdaScanRow> lambda_scan(const Grid& grid, std::span<const Observation> observations,
                                       std::span<const double> lambdas,
                                       const PipelineConfig& pipeline, const ScanSetup& setup) {
  if (setup.eig_true == nullptr) throw std::invalid_argument("lambda scan needs the true eigensystem");
  std::vector<std::size_t> order(lambdas.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lambdas[a] > lambdas[b]; });

  std::vector<LambdaScanRow> rows(lambdas.size());
  std::optional<Potential> warm_start;
  for (std::size_t idx : order) {
    PipelineConfig cell = pipeline;
    cell.lambda = lambdas[idx];
    const MapResult fit = run_pipeline(grid, observations, cell, warm_start);
    warm_start = fit.v_map;

    LambdaScanRow& row = rows[idx];
    row.lambda = lambdas[idx];
    row.eps_d = data_error(grid, fit.v_map, observations).value;
    row.eps_g = generalization_error(grid, fit.v_map, *setup.eig_true, setup.eval_delta);
    row.cv_estimate = cross_validation_error(grid, observations, cell, setup.cv_folds);
  }
  return rows;
}

}  // namespace itdq
