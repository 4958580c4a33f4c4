#include "itdq/experiment.hpp"

#include "itdq/dynamics.hpp"
#include "itdq/errors.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace itdq {

namespace fs = std::filesystem;

std::string format_number(double value) { return fmt::format("{}", value); }

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view text, std::size_t line) {
  text = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw ConfigError("expected a finite number, got '" + std::string(text) + "'", line);
  }
  return value;
}

template <typename Int>
Int parse_integer(std::string_view text, std::size_t line) {
  text = trim(text);
  Int value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("expected a non-negative integer, got '" + std::string(text) + "'", line);
  }
  return value;
}

bool parse_bool(std::string_view text, std::size_t line) {
  text = trim(text);
  if (text == "true" || text == "yes" || text == "on" || text == "1") return true;
  if (text == "false" || text == "no" || text == "off" || text == "0") return false;
  throw ConfigError("expected true or false, got '" + std::string(text) + "'", line);
}

template <typename T, typename Parse>
std::vector<T> parse_list(std::string_view text, std::size_t line, Parse parse) {
  std::vector<T> out;
  while (true) {
    const auto comma = text.find(',');
    const std::string_view item = trim(text.substr(0, comma));
    if (item.empty()) throw ConfigError("empty entry in list", line);
    out.push_back(parse(item, line));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

void require(bool ok, const std::string& what, std::size_t line) {
  if (!ok) throw ConfigError(what, line);
}

using Setter = std::function<void(ExperimentConfig&, std::string_view, std::size_t)>;

double positive(std::string_view v, std::size_t line, const char* name) {
  const double x = parse_double(v, line);
  require(x > 0.0, std::string(name) + " must be positive", line);
  return x;
}

double non_negative(std::string_view v, std::size_t line, const char* name) {
  const double x = parse_double(v, line);
  require(x >= 0.0, std::string(name) + " must be non-negative", line);
  return x;
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"grid.n_points",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) {
         c.grid.n_points = parse_integer<std::size_t>(v, l);
         require(c.grid.n_points >= 3, "n_points must be at least 3", l);
       }},
      {"grid.x_min", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.grid.x_min = parse_double(v, l); }},
      {"grid.x_max", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.grid.x_max = parse_double(v, l); }},
      {"grid.mass", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.grid.mass = positive(v, l, "mass"); }},

      {"true_potential.c1", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.true_potential.c1 = parse_double(v, l); }},
      {"true_potential.c2", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.true_potential.c2 = parse_double(v, l); }},
      {"true_potential.sigma",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.true_potential.sigma = positive(v, l, "sigma"); }},
      {"true_potential.boundary_value",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.true_potential.boundary_value = parse_double(v, l); }},
      {"true_potential.normalization",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) {
         v = trim(v);
         if (v == "sigma_sqrt_2pi") {
           c.true_potential.normalization = WellNormalization::sigma_sqrt_two_pi;
         } else if (v == "sqrt_2pi_sigma") {
           c.true_potential.normalization = WellNormalization::sqrt_two_pi_sigma;
         } else {
           throw ConfigError("normalization must be sigma_sqrt_2pi or sqrt_2pi_sigma", l);
         }
       }},

      {"sampler.x0", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.sampler.x0 = parse_double(v, l); }},
      {"sampler.n_obs",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) {
         c.sampler.n_obs = parse_integer<std::size_t>(v, l);
         require(c.sampler.n_obs >= 1, "n_obs must be at least 1", l);
       }},
      {"sampler.delta", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.sampler.delta = non_negative(v, l, "delta"); }},
      {"sampler.seed", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.sampler.seed = parse_integer<std::uint64_t>(v, l); }},

      {"prior.lambda", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.prior.lambda = positive(v, l, "lambda"); }},
      {"prior.sigma0", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.prior.sigma0 = positive(v, l, "sigma0"); }},

      {"energy.mu", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.energy.mu = non_negative(v, l, "mu"); }},
      {"energy.kappa",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) {
         if (trim(v) == "true-ground-state") {
           c.energy.kappa.reset();
         } else {
           c.energy.kappa = parse_double(v, l);
         }
       }},

      {"map.eta", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.map.eta = positive(v, l, "eta"); }},
      {"map.max_iter",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) {
         c.map.max_iter = parse_integer<int>(v, l);
         require(c.map.max_iter > 0, "max_iter must be positive", l);
       }},
      {"map.conv_tol", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.map.conv_tol = positive(v, l, "conv_tol"); }},
      {"map.degeneracy_tol",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.map.degeneracy_tol = positive(v, l, "degeneracy_tol"); }},
      {"map.backtracking", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.map.backtracking = parse_bool(v, l); }},

      {"reference.a_min", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.reference.a_min = non_negative(v, l, "a_min"); }},
      {"reference.a_max", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.reference.a_max = non_negative(v, l, "a_max"); }},
      {"reference.b_margin",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.reference.b_margin = non_negative(v, l, "b_margin"); }},
      {"reference.c_min", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.reference.c_min = parse_double(v, l); }},
      {"reference.c_max", [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.reference.c_max = parse_double(v, l); }},
      {"reference.a_steps",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) {
         c.reference.a_steps = parse_integer<int>(v, l);
         require(c.reference.a_steps >= 1, "a_steps must be at least 1", l);
       }},
      {"reference.b_steps",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.reference.b_steps = parse_integer<int>(v, l); }},
      {"reference.c_steps",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) {
         c.reference.c_steps = parse_integer<int>(v, l);
         require(c.reference.c_steps >= 1, "c_steps must be at least 1", l);
       }},
      {"reference.simplex_tolerance",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) {
         c.reference.simplex_tolerance = positive(v, l, "simplex_tolerance");
       }},
      {"reference.simplex_max_iterations",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) {
         c.reference.simplex_max_iterations = parse_integer<int>(v, l);
       }},

      {"scan.lambdas",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) {
         c.scan.lambdas = parse_list<double>(v, l, [](std::string_view item, std::size_t line) {
           return positive(item, line, "every lambda");
         });
       }},
      {"scan.seeds",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) {
         c.scan.seeds = parse_list<std::uint64_t>(v, l, parse_integer<std::uint64_t>);
       }},
      {"scan.cv_folds",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) {
         c.scan.cv_folds = parse_integer<std::size_t>(v, l);
         require(c.scan.cv_folds >= 2, "cv_folds must be at least 2", l);
       }},
  };
  return table;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::map<std::string, std::size_t, std::less<>> seen;
  std::string section;
  std::size_t line_no = 0;
  while (!text.empty() || line_no == 0) {
    const auto newline = text.find('\n');
    std::string_view line = text.substr(0, newline);
    text = newline == std::string_view::npos ? std::string_view{} : text.substr(newline + 1);
    ++line_no;

    const auto comment = line.find_first_of("#;");
    line = trim(line.substr(0, comment));
    if (line.empty()) {
      if (text.empty()) break;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("unterminated section header", line_no);
      section = std::string(trim(line.substr(1, line.size() - 2)));
      static const std::vector<std::string> known = {"grid", "true_potential", "sampler", "prior",
                                                     "energy", "map", "reference", "scan"};
      if (std::find(known.begin(), known.end(), section) == known.end()) {
        throw ConfigError("unknown section [" + section + "]", line_no);
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line_no);
    if (section.empty()) throw ConfigError("key outside of any section", line_no);
    const std::string key = section + "." + std::string(trim(line.substr(0, eq)));
    const auto setter = setters().find(key);
    if (setter == setters().end()) throw ConfigError("unknown key '" + key + "'", line_no);
    if (!seen.emplace(key, line_no).second) throw ConfigError("duplicate key '" + key + "'", line_no);
    setter->second(cfg, line.substr(eq + 1), line_no);
  }

  const auto line_of = [&](std::string_view key) {
    const auto it = seen.find(key);
    return it == seen.end() ? std::size_t{0} : it->second;
  };
  if (!(cfg.grid.x_max > cfg.grid.x_min)) {
    throw ConfigError("x_max must exceed x_min", std::max(line_of("grid.x_max"), line_of("grid.x_min")));
  }
  if (cfg.reference.a_max < cfg.reference.a_min) {
    throw ConfigError("a_max must not be below a_min", line_of("reference.a_max"));
  }
  if (cfg.reference.c_max < cfg.reference.c_min) {
    throw ConfigError("c_max must not be below c_min", line_of("reference.c_max"));
  }
  return cfg;
}

std::string serialize_config(const ExperimentConfig& c) {
  std::string out;
  const auto put = [&out](std::string_view key, const std::string& value) {
    out += fmt::format("{} = {}\n", key, value);
  };
  const auto num = format_number;

  out += "[grid]\n";
  put("n_points", std::to_string(c.grid.n_points));
  put("x_min", num(c.grid.x_min));
  put("x_max", num(c.grid.x_max));
  put("mass", num(c.grid.mass));

  out += "\n[true_potential]\n";
  put("c1", num(c.true_potential.c1));
  put("c2", num(c.true_potential.c2));
  put("sigma", num(c.true_potential.sigma));
  put("boundary_value", num(c.true_potential.boundary_value));
  put("normalization", c.true_potential.normalization == WellNormalization::sigma_sqrt_two_pi
                           ? "sigma_sqrt_2pi"
                           : "sqrt_2pi_sigma");

  out += "\n[sampler]\n";
  put("x0", num(c.sampler.x0));
  put("n_obs", std::to_string(c.sampler.n_obs));
  put("delta", num(c.sampler.delta));
  put("seed", std::to_string(c.sampler.seed));

  out += "\n[prior]\n";
  put("lambda", num(c.prior.lambda));
  put("sigma0", num(c.prior.sigma0));

  out += "\n[energy]\n";
  put("mu", num(c.energy.mu));
  put("kappa", c.energy.kappa ? num(*c.energy.kappa) : std::string("true-ground-state"));

  out += "\n[map]\n";
  put("eta", num(c.map.eta));
  put("max_iter", std::to_string(c.map.max_iter));
  put("conv_tol", num(c.map.conv_tol));
  put("degeneracy_tol", num(c.map.degeneracy_tol));
  put("backtracking", c.map.backtracking ? "true" : "false");

  out += "\n[reference]\n";
  put("a_min", num(c.reference.a_min));
  put("a_max", num(c.reference.a_max));
  put("b_margin", num(c.reference.b_margin));
  put("c_min", num(c.reference.c_min));
  put("c_max", num(c.reference.c_max));
  put("a_steps", std::to_string(c.reference.a_steps));
  put("b_steps", std::to_string(c.reference.b_steps));
  put("c_steps", std::to_string(c.reference.c_steps));
  put("simplex_tolerance", num(c.reference.simplex_tolerance));
  put("simplex_max_iterations", std::to_string(c.reference.simplex_max_iterations));

  out += "\n[scan]\n";
  std::vector<std::string> items;
  for (double l : c.scan.lambdas) items.push_back(num(l));
  put("lambdas", fmt::format("{}", fmt::join(items, ", ")));
  put("seeds", fmt::format("{}", fmt::join(c.scan.seeds, ", ")));
  put("cv_folds", std::to_string(c.scan.cv_folds));
  return out;
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return buffer.str();
}

}  // namespace

ExperimentConfig load_config(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_config(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

Experiment make_experiment(const ExperimentConfig& cfg) {
  const Grid grid = build_grid(cfg.grid.n_points, cfg.grid.x_min, cfg.grid.x_max, cfg.grid.mass);
  const GaussianWellSpec well{cfg.true_potential.c1, cfg.true_potential.c2, cfg.true_potential.sigma,
                              cfg.true_potential.normalization};
  Potential v_true = gaussian_well(well, grid, cfg.true_potential.boundary_value);
  EigenSystem eig_true = solve_lattice(grid, v_true);
  const auto x0_site = grid.site_at(cfg.sampler.x0);
  if (!x0_site) throw ConfigError("sampler.x0 = " + format_number(cfg.sampler.x0) + " is not a lattice site");
  const EnergyConstraint energy{cfg.energy.mu, cfg.energy.kappa.value_or(eig_true.ground_energy())};
  return Experiment{cfg, grid, std::move(v_true), std::move(eig_true), energy, *x0_site};
}

// ---------------------------------------------------------------------------
// Files

void write_file_atomic(const fs::path& path, std::string_view contents) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string dataset_to_csv(const Dataset& dataset, const Grid& grid) {
  std::string out = "index,prev_site,prev_x,delta,next_site,next_x\n";
  const auto observations = dataset.observations();
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const Observation& o = observations[i];
    out += fmt::format("{},{},{},{},{},{}\n", i, o.prev_site, format_number(grid.coordinate(o.prev_site)),
                       format_number(o.delta), o.next_site, format_number(grid.coordinate(o.next_site)));
  }
  return out;
}

namespace {

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  while (true) {
    const auto comma = line.find(',');
    fields.push_back(trim(line.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return fields;
}

// Runs `body` for each non-empty data line after checking the header.
template <typename Body>
void for_each_row(std::string_view text, std::string_view header, const std::string& source, Body body) {
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const auto newline = text.find('\n');
    const std::string_view line = trim(text.substr(0, newline));
    text = newline == std::string_view::npos ? std::string_view{} : text.substr(newline + 1);
    ++line_no;
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != header) throw IoError(source + ": line " + std::to_string(line_no) + ": expected header '" + std::string(header) + "'");
      header_seen = true;
      continue;
    }
    try {
      body(split_csv_line(line), line_no);
    } catch (const ConfigError& e) {
      throw IoError(source + ": " + e.what());
    }
  }
  if (!header_seen) throw IoError(source + ": empty file");
}

}  // namespace

Dataset dataset_from_csv(std::string_view text, const Grid& grid) {
  std::vector<Observation> observations;
  for_each_row(text, "index,prev_site,prev_x,delta,next_site,next_x", "dataset",
               [&](const std::vector<std::string_view>& f, std::size_t line) {
                 if (f.size() != 6) throw ConfigError("expected 6 fields", line);
                 Observation o{parse_integer<std::size_t>(f[1], line), parse_double(f[3], line),
                               parse_integer<std::size_t>(f[4], line)};
                 if (o.prev_site >= grid.n_points || o.next_site >= grid.n_points) {
                   throw ConfigError("site index outside the lattice", line);
                 }
                 if (parse_integer<std::size_t>(f[0], line) != observations.size()) {
                   throw ConfigError("rows must be numbered consecutively from 0", line);
                 }
                 observations.push_back(o);
               });
  if (observations.empty()) throw IoError("dataset: no observations");
  try {
    const std::size_t x0 = observations.front().prev_site;
    return Dataset(x0, std::move(observations));
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("dataset: ") + e.what());
  }
}

Dataset read_dataset(const fs::path& path, const Grid& grid) {
  try {
    return dataset_from_csv(read_file(path), grid);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

Potential read_map_potential(const fs::path& path, const Grid& grid, double boundary_value) {
  std::vector<double> values;
  for_each_row(read_file(path), "x,v_true,v_ref,v_map", path.string(),
               [&](const std::vector<std::string_view>& f, std::size_t line) {
                 if (f.size() != 4) throw ConfigError("expected 4 fields", line);
                 values.push_back(parse_double(f[3], line));
               });
  if (values.size() != grid.n_points) {
    throw IoError(path.string() + ": expected " + std::to_string(grid.n_points) + " rows, found " +
                  std::to_string(values.size()));
  }
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  try {
    return Potential(std::move(v), boundary_value);
  } catch (const std::invalid_argument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Commands

namespace {

std::string summary_line(std::string_view key, const std::string& value) {
  return fmt::format("{} = {}\n", key, value);
}

std::vector<double> constant_deltas(const ExperimentConfig& cfg) {
  return std::vector<double>(cfg.sampler.n_obs, cfg.sampler.delta);
}

// Kernel per distinct interval, averaged over the selected observations.
Eigen::VectorXd mean_transition(const EigenSystem& eig, std::span<const Observation> observations) {
  std::map<double, Eigen::MatrixXd> kernels;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(eig.size()));
  for (const Observation& o : observations) {
    auto it = kernels.find(o.delta);
    if (it == kernels.end()) it = kernels.emplace(o.delta, transition_kernel(eig, o.delta).probs).first;
    mean += it->second.col(static_cast<Eigen::Index>(o.prev_site));
  }
  return mean / static_cast<double>(observations.size());
}

}  // namespace

fs::path cmd_simulate(const Experiment& exp, const fs::path& out_dir) {
  const std::vector<double> deltas = constant_deltas(exp.config);
  const Dataset dataset = sample_path(exp.eig_true, exp.x0_site, deltas, exp.config.sampler.seed);
  const fs::path path = out_dir / "dataset.csv";
  write_file_atomic(path, dataset_to_csv(dataset, exp.grid));
  return path;
}

fs::path cmd_evolve(const Experiment& exp, const fs::path& out_dir, double x0, double t_max,
                    std::size_t t_steps) {
  if (!(t_max > 0.0) || !std::isfinite(t_max) || t_steps < 2) {
    throw std::invalid_argument("evolve needs t_max > 0 and at least 2 time steps");
  }
  const auto site = exp.grid.site_at(x0);
  if (!site) throw std::invalid_argument("x0 = " + format_number(x0) + " is not a lattice site");
  std::string out = "t,x,p\n";
  for (std::size_t k = 0; k < t_steps; ++k) {
    const double t = t_max * static_cast<double>(k) / static_cast<double>(t_steps - 1);
    const Eigen::VectorXd p = transition_probability(exp.eig_true, t, *site);
    for (std::size_t x = 0; x < exp.grid.n_points; ++x) {
      out += fmt::format("{},{},{}\n", format_number(t), format_number(exp.grid.coordinate(x)),
                         format_number(p[static_cast<Eigen::Index>(x)]));
    }
  }
  const fs::path path = out_dir / "evolution.csv";
  write_file_atomic(path, out);
  return path;
}

fs::path cmd_fit_reference(const Experiment& exp, const fs::path& dataset_path, const fs::path& out_dir) {
  const Dataset dataset = read_dataset(dataset_path, exp.grid);
  const ReferenceFit fit = fit_reference(dataset.observations(), exp.grid, exp.energy,
                                         exp.config.true_potential.boundary_value, exp.config.reference);
  std::string out;
  out += summary_line("ref_a", format_number(fit.params.a));
  out += summary_line("ref_b", format_number(fit.params.b));
  out += summary_line("ref_c", format_number(fit.params.c));
  out += summary_line("extended_log_likelihood", format_number(fit.objective));
  out += summary_line("kappa", format_number(exp.energy.kappa));
  const fs::path path = out_dir / "reference.txt";
  write_file_atomic(path, out);
  return path;
}

ReconstructOutputs cmd_reconstruct(const Experiment& exp, const fs::path& dataset_path,
                                   const fs::path& out_dir) {
  const ExperimentConfig& cfg = exp.config;
  const Dataset dataset = read_dataset(dataset_path, exp.grid);
  const double boundary = cfg.true_potential.boundary_value;
  const ReferenceFit fit = fit_reference(dataset.observations(), exp.grid, exp.energy, boundary, cfg.reference);
  const Potential v_ref = reference_potential(fit.params, exp.grid, boundary);

  const PipelineConfig pipeline{v_ref, cfg.prior.lambda, cfg.prior.sigma0, exp.energy, cfg.map};
  const MapResult result = run_pipeline(exp.grid, dataset.observations(), pipeline);

  const double delta = cfg.sampler.delta;
  const ErrorReport map_errors = error_report(exp.grid, result.v_map, dataset.observations(), exp.eig_true, delta);
  const DataError eps_d_true = data_error(exp.grid, exp.v_true, dataset.observations());
  const DataError eps_d_ref = data_error(exp.grid, v_ref, dataset.observations());
  const double eps_g_ref = generalization_error(exp.grid, v_ref, exp.eig_true, delta);
  if (map_errors.eps_g < map_errors.eps_g_true - 1e-12) {
    throw DomainError("generalization error below the true-potential baseline; numerical failure");
  }

  std::string potentials = "x,v_true,v_ref,v_map\n";
  for (std::size_t j = 0; j < exp.grid.n_points; ++j) {
    potentials += fmt::format("{},{},{},{}\n", format_number(exp.grid.coordinate(j)),
                              format_number(exp.v_true[j]), format_number(v_ref[j]),
                              format_number(result.v_map[j]));
  }

  std::string summary;
  summary += summary_line("n_obs", std::to_string(dataset.size()));
  summary += summary_line("eps_d_map", format_number(map_errors.eps_d));
  summary += summary_line("eps_d_true", format_number(eps_d_true.value));
  summary += summary_line("eps_d_ref", format_number(eps_d_ref.value));
  summary += summary_line("eps_g_map", format_number(map_errors.eps_g));
  summary += summary_line("eps_g_true", format_number(map_errors.eps_g_true));
  summary += summary_line("eps_g_ref", format_number(eps_g_ref));
  summary += summary_line("e0_true", format_number(exp.eig_true.ground_energy()));
  summary += summary_line("e0_map", format_number(solve_lattice(exp.grid, result.v_map).ground_energy()));
  summary += summary_line("kappa", format_number(exp.energy.kappa));
  summary += summary_line("ref_a", format_number(fit.params.a));
  summary += summary_line("ref_b", format_number(fit.params.b));
  summary += summary_line("ref_c", format_number(fit.params.c));
  summary += summary_line("lambda", format_number(cfg.prior.lambda));
  summary += summary_line("sigma0", format_number(cfg.prior.sigma0));
  summary += summary_line("mu", format_number(cfg.energy.mu));
  summary += summary_line("iterations", std::to_string(result.iterations_used));
  summary += summary_line("converged", result.converged ? "true" : "false");
  summary += summary_line("final_grad_norm", format_number(result.final_grad_norm));
  summary += summary_line("log_posterior", format_number(result.log_posterior_trace.back()));

  ReconstructOutputs outputs{out_dir / "potentials.csv", out_dir / "summary.txt"};
  write_file_atomic(outputs.potentials, potentials);
  write_file_atomic(outputs.summary, summary);
  return outputs;
}

fs::path cmd_compare(const Experiment& exp, const fs::path& dataset_path, const fs::path& potentials_path,
                     std::optional<double> filter_prev_x, const fs::path& out_dir) {
  const Dataset dataset = read_dataset(dataset_path, exp.grid);
  const Potential v_map = read_map_potential(potentials_path, exp.grid, exp.config.true_potential.boundary_value);

  std::vector<Observation> selected;
  Eigen::VectorXd p_emp;
  fs::path path = out_dir / "compare.csv";
  if (filter_prev_x) {
    const auto site = exp.grid.site_at(*filter_prev_x);
    if (!site) throw DomainError("filter x = " + format_number(*filter_prev_x) + " is not a lattice site");
    const auto histogram = restricted_histogram(dataset, exp.grid, *site);
    if (!histogram) {
      throw DomainError("no observation starts at x = " + format_number(*filter_prev_x));
    }
    p_emp = *histogram;
    for (const Observation& o : dataset.observations()) {
      if (o.prev_site == *site) selected.push_back(o);
    }
    path = out_dir / fmt::format("compare_prev_x_{}.csv", format_number(*filter_prev_x));
  } else {
    p_emp = empirical_transition_histogram(dataset, exp.grid);
    selected.assign(dataset.observations().begin(), dataset.observations().end());
  }

  const Eigen::VectorXd p_true = mean_transition(exp.eig_true, selected);
  const Eigen::VectorXd p_map = mean_transition(solve_lattice(exp.grid, v_map), selected);
  std::string out = "x,p_emp,p_true,p_map\n";
  for (std::size_t j = 0; j < exp.grid.n_points; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    out += fmt::format("{},{},{},{}\n", format_number(exp.grid.coordinate(j)), format_number(p_emp[jj]),
                       format_number(p_true[jj]), format_number(p_map[jj]));
  }
  write_file_atomic(path, out);
  return path;
}

fs::path cmd_scan(const Experiment& exp, const fs::path& out_dir) {
  const ExperimentConfig& cfg = exp.config;
  const double boundary = cfg.true_potential.boundary_value;
  const std::vector<double> deltas = constant_deltas(cfg);
  std::string out = "lambda,seed,eps_d,eps_g,cv\n";
  for (std::uint64_t seed : cfg.scan.seeds) {
    const Dataset dataset = sample_path(exp.eig_true, exp.x0_site, deltas, seed);
    const ReferenceFit fit = fit_reference(dataset.observations(), exp.grid, exp.energy, boundary, cfg.reference);
    const PipelineConfig pipeline{reference_potential(fit.params, exp.grid, boundary), cfg.prior.lambda,
                                  cfg.prior.sigma0, exp.energy, cfg.map};
    const ScanSetup setup{&exp.eig_true, cfg.sampler.delta, cfg.scan.cv_folds};
    const auto rows = lambda_scan(exp.grid, dataset.observations(), cfg.scan.lambdas, pipeline, setup);
    for (const LambdaScanRow& row : rows) {
      out += fmt::format("{},{},{},{},{}\n", format_number(row.lambda), seed, format_number(row.eps_d),
                         format_number(row.eps_g), format_number(row.cv_estimate));
    }
  }
  const fs::path path = out_dir / "scan.csv";
  write_file_atomic(path, out);
  return path;
}

}  // namespace itdq
