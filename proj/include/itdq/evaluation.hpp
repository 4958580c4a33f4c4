#pragma once

// Error measures for reconstructed potentials: data error, exact
// generalization error, cross-validation and the regularization scan.

#include "itdq/lattice_model.hpp"
#include "itdq/observation.hpp"
#include "itdq/priors.hpp"
#include "itdq/reconstruction.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace itdq {

struct DataError {
  double value = 0.0;  // +inf when some observation is impossible
  std::optional<std::size_t> zero_likelihood_at;

  bool finite() const noexcept { return !zero_likelihood_at.has_value(); }
};

// eps_D(v) = -sum_i ln p_i(v).
DataError data_error(const Grid& grid, const Potential& v, std::span<const Observation> observations);

// eps_g(v) = -(1/n) sum_x sum_x' p(x'|delta, x, v_true) ln p(x'|delta, x, v),
// uniform over all n start sites. Returns +inf if v assigns zero
// probability to a transition the true law allows.
double generalization_error(const Grid& grid, const Potential& v, const EigenSystem& eig_true,
                            double delta);

struct ErrorReport {
  double eps_d = 0.0;
  double eps_g = 0.0;
  double eps_g_true = 0.0;
};

ErrorReport error_report(const Grid& grid, const Potential& v,
                         std::span<const Observation> observations, const EigenSystem& eig_true,
                         double delta);

// Everything needed to run a reconstruction for one lambda: the shared
// reference potential plus the inference hyperparameters.
struct PipelineConfig {
  Potential v0;
  double lambda = 0.1;
  double sigma0 = 3.0;
  EnergyConstraint energy;
  MapConfig map;
};

// MAP reconstruction started from the reference potential (or `v_init`).
MapResult run_pipeline(const Grid& grid, std::span<const Observation> observations,
                       const PipelineConfig& pipeline,
                       const std::optional<Potential>& v_init = std::nullopt);

// k contiguous folds; each held-out fold is scored with the MAP potential
// from the remaining observations. Returns the mean held-out -ln p_i per
// observation. Throws std::invalid_argument unless 2 <= k <= size.
double cross_validation_error(const Grid& grid, std::span<const Observation> observations,
                              const PipelineConfig& pipeline, std::size_t k_folds);

struct LambdaScanRow {
  double lambda = 0.0;
  double eps_d = 0.0;
  double eps_g = 0.0;
  double cv_estimate = 0.0;
};

struct ScanSetup {
  const EigenSystem* eig_true = nullptr;
  double eval_delta = 5.0;
  std::size_t cv_folds = 5;
};

// One row per lambda, in the order given. Reconstructions run from the
// largest lambda down, each warm-started at the previous MAP potential.
std::vector<LambdaScanRow> lambda_scan(const Grid& grid, std::span<const Observation> observations,
                                       std::span<const double> lambdas,
                                       const PipelineConfig& pipeline, const ScanSetup& setup);

}  // namespace itdq
