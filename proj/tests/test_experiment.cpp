#include "itdq/experiment.hpp"

#include "itdq/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

using namespace itdq;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("itdq_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("empty configuration gives the defaults") {
  CHECK(parse_config("") == ExperimentConfig{});
  CHECK(parse_config("# nothing here\n\n[grid]\n") == ExperimentConfig{});
}

TEST_CASE("configuration round trip") {
  ExperimentConfig cfg;
  cfg.grid.n_points = 31;
  cfg.grid.x_min = -15.0;
  cfg.grid.x_max = 15.0;
  cfg.true_potential.normalization = WellNormalization::sqrt_two_pi_sigma;
  cfg.sampler.seed = 18446744073709551615ULL;
  cfg.sampler.delta = 0.1;
  cfg.prior.lambda = 1.0 / 3.0;
  cfg.energy.kappa = -1.6784130404766353;
  cfg.map.backtracking = false;
  cfg.reference.b_steps = 7;
  cfg.scan.lambdas = {2.0, 0.7, 1e-3};
  cfg.scan.seeds = {5, 6};
  cfg.scan.cv_folds = 10;
  const std::string text = serialize_config(cfg);
  CHECK(parse_config(text) == cfg);
  CHECK(serialize_config(parse_config(text)) == text);
  CHECK(parse_config(serialize_config(ExperimentConfig{})) == ExperimentConfig{});
}

TEST_CASE("configuration errors name the offending line") {
  CHECK(error_line("[grid]\nn_points = 21\nfoo = 1\n") == 3);
  CHECK(error_line("[nowhere]\n") == 1);
  CHECK(error_line("[sampler]\nn_obs = many\n") == 2);
  CHECK(error_line("[sampler]\ndelta = -1\n") == 2);
  CHECK(error_line("[prior]\nlambda = 0.1\nlambda = 0.2\n") == 3);
  CHECK(error_line("x = 1\n") == 1);
  CHECK(error_line("[grid\n") == 1);
  CHECK(error_line("[map]\nbacktracking = maybe\n") == 2);
  CHECK(error_line("[scan]\nlambdas = 1, , 2\n") == 2);
  CHECK(error_line("[grid]\nx_min = 5\nx_max = 5\n") == 3);
  CHECK(error_line("[true_potential]\nnormalization = other\n") == 2);
  CHECK(error_line("[grid]\nn_points = 2\n") == 2);
  CHECK(error_line("[energy]\nkappa = true-ground-state ; comment\nmu = 0\n") == 0);
}

TEST_CASE("experiment derives the lattice objects") {
  const Experiment exp = make_experiment(ExperimentConfig{});
  CHECK(exp.grid.n_points == 21);
  CHECK(exp.x0_site == 10);
  CHECK(exp.energy.kappa == doctest::Approx(-1.6784130404766353).epsilon(1e-12));
  CHECK(exp.energy.mu == 10.0);

  ExperimentConfig off;
  off.sampler.x0 = 0.5;
  CHECK_THROWS_AS(make_experiment(off), ConfigError);

  ExperimentConfig fixed;
  fixed.energy.kappa = -2.0;
  CHECK(make_experiment(fixed).energy.kappa == -2.0);
}

TEST_CASE("number formatting round-trips") {
  for (double x : {0.1, -1.6784130404766353, 1e5, 1e-300, 3.0, -0.0}) {
    CHECK(std::stod(format_number(x)) == x);
  }
  CHECK(format_number(3.0) == "3");
}

TEST_CASE("dataset csv round trip and malformed input") {
  const Experiment exp = make_experiment(ExperimentConfig{});
  const Dataset data(10, {{10, 5.0, 8}, {8, 5.0, 12}, {12, 2.5, 12}});
  const std::string csv = dataset_to_csv(data, exp.grid);
  CHECK(csv.rfind("index,prev_site,prev_x,delta,next_site,next_x\n0,10,0,5,8,-2\n", 0) == 0);
  CHECK(dataset_from_csv(csv, exp.grid) == data);

  CHECK_THROWS_AS(dataset_from_csv("", exp.grid), IoError);
  CHECK_THROWS_AS(dataset_from_csv("a,b\n", exp.grid), IoError);
  CHECK_THROWS_AS(dataset_from_csv("index,prev_site,prev_x,delta,next_site,next_x\n", exp.grid), IoError);
  CHECK_THROWS_AS(dataset_from_csv("index,prev_site,prev_x,delta,next_site,next_x\n0,10,0,5,30,10\n", exp.grid),
                  IoError);
  CHECK_THROWS_AS(
      dataset_from_csv("index,prev_site,prev_x,delta,next_site,next_x\n0,10,0,5,8,-2\n1,9,-1,5,8,-2\n", exp.grid),
      IoError);
  CHECK_THROWS_AS(dataset_from_csv("index,prev_site,prev_x,delta,next_site,next_x\n0,10,0,x,8,-2\n", exp.grid),
                  IoError);
}

TEST_CASE("atomic writes leave no temporary behind") {
  const fs::path dir = scratch_dir("atomic");
  write_file_atomic(dir / "a.txt", "first");
  write_file_atomic(dir / "a.txt", "second");
  CHECK(slurp(dir / "a.txt") == "second");
  CHECK_FALSE(fs::exists(dir / "a.txt.tmp"));
  write_file_atomic(dir / "nested" / "b.txt", "x");
  CHECK(fs::exists(dir / "nested" / "b.txt"));
}

TEST_CASE("evolution table is normalized at every time") {
  const Experiment exp = make_experiment(ExperimentConfig{});
  const fs::path dir = scratch_dir("evolve");
  const fs::path path = cmd_evolve(exp, dir, 0.0, 10.0, 5);
  std::istringstream in(slurp(path));
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,x,p");
  std::map<double, double> totals;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    double t = 0, x = 0, p = 0;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &x, &p) == 3);
    totals[t] += p;
    ++rows;
  }
  CHECK(rows == 5 * 21);
  REQUIRE(totals.size() == 5);
  CHECK(totals.begin()->first == 0.0);
  CHECK(totals.rbegin()->first == 10.0);
  for (const auto& [t, total] : totals) CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(cmd_evolve(exp, dir, 0.0, 10.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(cmd_evolve(exp, dir, 0.0, 0.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(cmd_evolve(exp, dir, 0.3, 10.0, 5), std::invalid_argument);
}

TEST_CASE("simulate, reconstruct and compare on files") {
  ExperimentConfig cfg;
  cfg.sampler.n_obs = 30;
  const Experiment exp = make_experiment(cfg);
  const fs::path dir = scratch_dir("pipeline");
  const fs::path dataset = cmd_simulate(exp, dir);
  const Dataset data = read_dataset(dataset, exp.grid);
  CHECK(data.size() == 30);
  CHECK(data.x0_site() == 10);

  const ReconstructOutputs out = cmd_reconstruct(exp, dataset, dir);
  const Potential v_map = read_map_potential(out.potentials, exp.grid, 1e5);
  CHECK(v_map[0] == 1e5);
  const std::string summary = slurp(out.summary);
  CHECK(summary.find("eps_g_map = ") != std::string::npos);
  CHECK(summary.find("converged = true") != std::string::npos);

  const fs::path all = cmd_compare(exp, dataset, out.potentials, std::nullopt, dir);
  CHECK(all.filename() == "compare.csv");
  const fs::path from0 = cmd_compare(exp, dataset, out.potentials, 0.0, dir);
  CHECK(from0.filename() == "compare_prev_x_0.csv");
  CHECK_THROWS_AS(cmd_compare(exp, dataset, out.potentials, -10.0, dir), DomainError);
  CHECK_THROWS_AS(cmd_compare(exp, dataset, out.potentials, 0.25, dir), DomainError);
  CHECK_THROWS_AS(read_dataset(dir / "missing.csv", exp.grid), IoError);
}

TEST_CASE("shipped default configuration matches the built-in defaults") {
  CHECK(load_config(fs::path(ITDQ_CONFIG_DIR) / "default.ini") == ExperimentConfig{});
  CHECK_THROWS_AS(load_config(fs::path(ITDQ_CONFIG_DIR) / "absent.ini"), IoError);
}
