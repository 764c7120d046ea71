// spike-lab: scenario runner and one-off solver front end.
//
// Exit codes: 0 success, 2 solver error, 3 invalid configuration or usage.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "spikelab/certificates.hpp"
#include "spikelab/errors.hpp"
#include "spikelab/experiments.hpp"
#include "spikelab/grid_solvers.hpp"
#include "spikelab/io.hpp"
#include "spikelab/operators.hpp"

namespace fs = std::filesystem;
using namespace spikelab;

namespace {

constexpr int kSolverFailure = 2;
constexpr int kBadConfig = 3;

json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open " + path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  std::ofstream f(out, std::ios::binary);
  f << text;
  if (!f) throw std::runtime_error("cannot write " + out);
}

std::vector<int> parse_levels(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad level list '" + s + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument("empty level list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse spike deconvolution on the torus: certificates, grid and off-grid solvers"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run scenario files, writing CSV/JSON into --out");
  std::vector<std::string> scenarios;
  std::string run_out;
  run->add_option("scenario", scenarios, "Scenario JSON file(s)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "Output directory")->required();

  auto* certify = app.add_subcommand("certify", "Build and check the pre-certificates of a measure");
  std::string cert_measure, cert_kernel = "dirichlet:fc=10", cert_out;
  int cert_grid = -1;
  certify->add_option("measure", cert_measure, "Measure JSON file")->required()->check(CLI::ExistingFile);
  certify->add_option("--kernel", cert_kernel, "Kernel, e.g. dirichlet:fc=10");
  certify->add_option("--grid", cert_grid, "Dyadic level for the grid check of the Fuchs pre-certificate");
  certify->add_option("--out", cert_out, "Write the report here instead of stdout");

  auto* path = app.add_subcommand("path", "Grid Lasso homotopy path of y = Phi m");
  std::string path_measure, path_kernel = "dirichlet:fc=10", path_out;
  int path_grid = 12;
  double path_lambda_min = 1e-4;
  path->add_option("measure", path_measure, "Measure JSON file")->required()->check(CLI::ExistingFile);
  path->add_option("--kernel", path_kernel, "Kernel, e.g. dirichlet:fc=10");
  path->add_option("--grid", path_grid, "Dyadic grid level");
  path->add_option("--lambda-min", path_lambda_min, "Smallest lambda, relative to lambda_max");
  path->add_option("--out", path_out, "Write the CSV here instead of stdout");

  auto* poly = app.add_subcommand("polytope", "Halfspaces (and vertices when fc = 1) of the grid dual set");
  int poly_fc = 1;
  std::string poly_levels = "3,4,7", poly_out;
  poly->add_option("--fc", poly_fc, "Cutoff frequency");
  poly->add_option("--n", poly_levels, "Comma-separated dyadic levels");
  poly->add_option("--out", poly_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kBadConfig;
  }

  try {
    if (*run) {
      std::vector<ScenarioConfig> cfgs;
      for (const auto& s : scenarios) cfgs.push_back(ScenarioConfig::from_json(read_json(s)));
      std::vector<std::function<void()>> jobs;
      for (std::size_t i = 0; i < cfgs.size(); ++i)
        jobs.push_back([&, i] {
          const ExperimentOutput o = run_scenario(cfgs[i]);
          o.write(cfgs.size() == 1 ? fs::path(run_out) : fs::path(run_out) / cfgs[i].name);
        });
      run_jobs(jobs, job_threads());
    } else if (*certify) {
      const Kernel k = parse_kernel_spec(cert_kernel);
      const DiscreteMeasure m = measure_from_json(read_json(cert_measure));
      std::optional<Grid> grid;
      if (cert_grid >= 0) grid = Grid::dyadic(cert_grid);
      json out = {{"measure", to_json(m)}, {"kernel", cert_kernel}};
      out["vanishing_derivative"] = to_json(check_ndsc(m, k));
      out["fuchs"] = to_json(fuchs_precert(m, k, grid));
      if (k.degree() % 2 == 0) out["fejer"] = to_json(fejer_precert(m, k.degree()));
      emit(out.dump(2) + "\n", cert_out);
    } else if (*path) {
      const Kernel k = parse_kernel_spec(path_kernel);
      const DiscreteMeasure m = measure_from_json(read_json(path_measure));
      if (!(path_lambda_min > 0.0 && path_lambda_min <= 1.0))
        throw std::invalid_argument("--lambda-min must be in (0, 1]");
      const GramBundle bundle(Grid::dyadic(path_grid), k);
      const TrigPoly y = forward(m, k);
      HomotopyOptions opts;
      opts.lambda_min = path_lambda_min * lambda_max(y, bundle);
      LassoPath lp;
      if (opts.lambda_min > 0.0) lp = homotopy_path(y, bundle, opts);
      std::ostringstream s;
      write_path_csv(s, lp, bundle.grid());
      emit(s.str(), path_out);
    } else if (*poly) {
      ScenarioConfig cfg;
      cfg.experiment = "polytope";
      cfg.name = "polytope";
      cfg.fc = poly_fc;
      cfg.levels = parse_levels(poly_levels);
      const ExperimentOutput o = run_polytope(cfg);
      if (poly_out.empty()) std::cout << o.summary.dump(2) << '\n';
      else o.write(poly_out);
    }
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return kSolverFailure;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid configuration: %s\n", e.what());
    return kBadConfig;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "invalid configuration: %s\n", e.what());
    return kBadConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
