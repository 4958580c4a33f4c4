#include "itdq/errors.hpp"
#include "itdq/experiment.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  fs::path config;
  fs::path out = ".";
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config, "Experiment configuration file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", opts.out, "Output directory")->capture_default_str();
  cmd->add_option("--seed", opts.seed, "Override sampler.seed");
}

itdq::Experiment load(const CommonOptions& opts) {
  itdq::ExperimentConfig cfg = itdq::load_config(opts.config);
  if (opts.seed) cfg.sampler.seed = *opts.seed;
  return itdq::make_experiment(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Potential reconstruction from repeated lattice position measurements"};
  app.require_subcommand(1);

  CommonOptions common;
  std::optional<fs::path> dataset;
  std::optional<fs::path> potentials;
  std::optional<double> filter_prev_x;
  std::optional<double> evolve_x0;
  double t_max = 50.0;
  std::size_t t_steps = 101;

  auto* simulate = app.add_subcommand("simulate", "Sample a measurement record under the true potential");
  add_common(simulate, common);

  auto* evolve = app.add_subcommand("evolve", "Tabulate p(x, t) for a particle released at one site");
  add_common(evolve, common);
  evolve->add_option("--x0", evolve_x0, "Release site coordinate (default: sampler.x0)");
  evolve->add_option("--t-max", t_max, "Final time")->capture_default_str();
  evolve->add_option("--t-steps", t_steps, "Number of time samples")->capture_default_str();

  auto* fit = app.add_subcommand("fit-reference", "Fit the parametric reference potential");
  add_common(fit, common);
  fit->add_option("--dataset", dataset, "Dataset CSV (default: <out>/dataset.csv)");

  auto* reconstruct = app.add_subcommand("reconstruct", "MAP reconstruction of the potential");
  add_common(reconstruct, common);
  reconstruct->add_option("--dataset", dataset, "Dataset CSV (default: <out>/dataset.csv)");

  auto* compare = app.add_subcommand("compare", "Compare empirical and predicted transition distributions");
  add_common(compare, common);
  compare->add_option("--dataset", dataset, "Dataset CSV (default: <out>/dataset.csv)");
  compare->add_option("--potentials", potentials, "Potentials CSV (default: <out>/potentials.csv)");
  compare->add_option("--filter-prev-x", filter_prev_x, "Only observations starting at this coordinate");

  auto* scan = app.add_subcommand("scan", "Error measures across lambda and seeds");
  add_common(scan, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const fs::path dataset_path = dataset.value_or(common.out / "dataset.csv");
  try {
    const itdq::Experiment exp = load(common);
    fs::path written;
    if (*simulate) {
      written = itdq::cmd_simulate(exp, common.out);
    } else if (*evolve) {
      written = itdq::cmd_evolve(exp, common.out, evolve_x0.value_or(exp.config.sampler.x0), t_max, t_steps);
    } else if (*fit) {
      written = itdq::cmd_fit_reference(exp, dataset_path, common.out);
    } else if (*reconstruct) {
      const auto outputs = itdq::cmd_reconstruct(exp, dataset_path, common.out);
      fmt::print("{}\n", outputs.potentials.string());
      written = outputs.summary;
    } else if (*compare) {
      written = itdq::cmd_compare(exp, dataset_path, potentials.value_or(common.out / "potentials.csv"),
                                  filter_prev_x, common.out);
    } else if (*scan) {
      written = itdq::cmd_scan(exp, common.out);
    }
    fmt::print("{}\n", written.string());
    return 0;
  } catch (const itdq::ConfigError& e) {
    fmt::print(stderr, "itdq: configuration error: {}\n", e.what());
    return 2;
  } catch (const itdq::IoError& e) {
    fmt::print(stderr, "itdq: {}\n", e.what());
    return 2;
  } catch (const itdq::DomainError& e) {
    fmt::print(stderr, "itdq: {}\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "itdq: {}\n", e.what());
    return 1;
  } catch (const std::out_of_range& e) {
    fmt::print(stderr, "itdq: {}\n", e.what());
    return 1;
  }
}
