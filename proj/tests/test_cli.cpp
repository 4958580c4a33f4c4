#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string command = std::string(ITDQ_EXE) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path workspace(const std::string& name, const std::string& config) {
  const fs::path dir = fs::temp_directory_path() / ("itdq_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "config.ini") << config;
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("exit codes") {
  const fs::path dir = workspace("codes", "[sampler]\nn_obs = 20\n");
  const std::string common = "--config " + (dir / "config.ini").string() + " --out " + dir.string();
  CHECK(run("") == 2);
  CHECK(run("simulate") == 2);
  CHECK(run("simulate --config " + (dir / "absent.ini").string()) == 2);
  CHECK(run("simulate " + common) == 0);
  CHECK(fs::exists(dir / "dataset.csv"));
  CHECK(run("reconstruct " + common + " --dataset " + (dir / "absent.csv").string()) == 2);
  CHECK(run("evolve " + common + " --t-steps 1") == 1);
  CHECK(run("evolve " + common + " --x0 0.5") == 1);

  std::ofstream(dir / "bad.ini") << "[grid]\nspacing = 2\n";
  CHECK(run("simulate --config " + (dir / "bad.ini").string() + " --out " + dir.string()) == 2);

  std::ofstream(dir / "offgrid.ini") << "[sampler]\nx0 = 0.5\n";
  CHECK(run("simulate --config " + (dir / "offgrid.ini").string() + " --out " + dir.string()) == 2);
}

TEST_CASE("seed override and repeatability") {
  const fs::path dir = workspace("seed", "[sampler]\nn_obs = 20\nseed = 4\n");
  const std::string common = "--config " + (dir / "config.ini").string() + " --out " + dir.string();
  REQUIRE(run("simulate " + common) == 0);
  const std::string first = slurp(dir / "dataset.csv");
  REQUIRE(run("simulate " + common) == 0);
  CHECK(slurp(dir / "dataset.csv") == first);
  REQUIRE(run("simulate " + common + " --seed 5") == 0);
  CHECK(slurp(dir / "dataset.csv") != first);
  REQUIRE(run("simulate " + common + " --seed 4") == 0);
  CHECK(slurp(dir / "dataset.csv") == first);
}

TEST_CASE("compare with a filter that matches nothing is a domain error") {
  const fs::path dir = workspace("filter", "[sampler]\nn_obs = 20\n");
  const std::string common = "--config " + (dir / "config.ini").string() + " --out " + dir.string();
  REQUIRE(run("simulate " + common) == 0);
  REQUIRE(run("reconstruct " + common) == 0);
  CHECK(run("compare " + common) == 0);
  CHECK(run("compare " + common + " --filter-prev-x 0") == 0);
  CHECK(fs::exists(dir / "compare_prev_x_0.csv"));
  CHECK(run("compare " + common + " --filter-prev-x -10") == 1);
}
