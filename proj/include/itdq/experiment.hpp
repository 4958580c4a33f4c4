#pragma once

// Experiment configuration, file formats and the commands behind the `itdq`
// executable. Every output file is written atomically (temp file, rename).

#include "itdq/evaluation.hpp"
#include "itdq/lattice_model.hpp"
#include "itdq/priors.hpp"
#include "itdq/reconstruction.hpp"
#include "itdq/sampler.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace itdq {

struct ExperimentConfig {
  struct GridSection {
    std::size_t n_points = 21;
    double x_min = -10.0;
    double x_max = 10.0;
    double mass = 1.0;

    friend bool operator==(const GridSection&, const GridSection&) = default;
  } grid;

  struct TruePotentialSection {
    double c1 = -10.0;
    double c2 = -2.0;
    double sigma = 2.0;
    double boundary_value = 1e5;
    WellNormalization normalization = WellNormalization::sigma_sqrt_two_pi;

    friend bool operator==(const TruePotentialSection&, const TruePotentialSection&) = default;
  } true_potential;

  struct SamplerSection {
    double x0 = 0.0;
    std::size_t n_obs = 50;
    double delta = 5.0;
    std::uint64_t seed = 1;

    friend bool operator==(const SamplerSection&, const SamplerSection&) = default;
  } sampler;

  struct PriorSection {
    double lambda = 0.1;
    double sigma0 = 3.0;

    friend bool operator==(const PriorSection&, const PriorSection&) = default;
  } prior;

  struct EnergySection {
    double mu = 10.0;
    std::optional<double> kappa;  // nullopt: ground-state energy of the true potential

    friend bool operator==(const EnergySection&, const EnergySection&) = default;
  } energy;

  MapConfig map;

  ReferenceFitOptions reference;

  struct ScanSection {
    std::vector<double> lambdas{1.0, 0.3, 0.1, 0.03, 0.01};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::size_t cv_folds = 5;

    friend bool operator==(const ScanSection&, const ScanSection&) = default;
  } scan;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// `[section]` headers and `key = value` lines; `#` and `;` start comments.
// Unset keys keep their defaults. Throws ConfigError naming the line.
ExperimentConfig parse_config(std::string_view text);
std::string serialize_config(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

// Objects derived from a configuration.
struct Experiment {
  ExperimentConfig config;
  Grid grid;
  Potential v_true;
  EigenSystem eig_true;
  EnergyConstraint energy;
  std::size_t x0_site;
};

// Throws ConfigError when the derived objects are inconsistent (e.g. x0 off
// the lattice).
Experiment make_experiment(const ExperimentConfig& cfg);

// Shortest decimal text that reads back to the same double.
std::string format_number(double value);

void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string dataset_to_csv(const Dataset& dataset, const Grid& grid);
// Throws IoError with the offending line on malformed input.
Dataset dataset_from_csv(std::string_view text, const Grid& grid);
Dataset read_dataset(const std::filesystem::path& path, const Grid& grid);

// Reads the `v_map` column of a potentials file.
Potential read_map_potential(const std::filesystem::path& path, const Grid& grid,
                             double boundary_value);

std::filesystem::path cmd_simulate(const Experiment& exp, const std::filesystem::path& out_dir);

std::filesystem::path cmd_evolve(const Experiment& exp, const std::filesystem::path& out_dir,
                                 double x0, double t_max, std::size_t t_steps);

std::filesystem::path cmd_fit_reference(const Experiment& exp,
                                        const std::filesystem::path& dataset_path,
                                        const std::filesystem::path& out_dir);

struct ReconstructOutputs {
  std::filesystem::path potentials;
  std::filesystem::path summary;
};

ReconstructOutputs cmd_reconstruct(const Experiment& exp,
                                   const std::filesystem::path& dataset_path,
                                   const std::filesystem::path& out_dir);

std::filesystem::path cmd_compare(const Experiment& exp, const std::filesystem::path& dataset_path,
                                  const std::filesystem::path& potentials_path,
                                  std::optional<double> filter_prev_x,
                                  const std::filesystem::path& out_dir);

std::filesystem::path cmd_scan(const Experiment& exp, const std::filesystem::path& out_dir);

}  // namespace itdq
