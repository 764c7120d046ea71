#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "spikelab/errors.hpp"
#include "spikelab/experiments.hpp"
#include "spikelab/io.hpp"
#include "spikelab/operators.hpp"

using namespace spikelab;
namespace fs = std::filesystem;

namespace {

ScenarioConfig load(const std::string& name) {
  std::ifstream f(std::string(SPIKE_LAB_CONFIGS) + "/" + name);
  REQUIRE(f);
  return ScenarioConfig::from_json(json::parse(f));
}

const json& find_panel(const json& panels, double delta) {
  for (const auto& p : panels)
    if (std::abs(p["delta_fc"].get<double>() - delta) < 1e-12) return p;
  FAIL("missing panel");
  return panels[0];
}

fs::path scratch(const std::string& tag) {
  const fs::path d = fs::temp_directory_path() / ("spike_lab_test_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SPIKE_LAB_EXE) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

}  // namespace

TEST_CASE("kernel specs") {
  CHECK(parse_kernel_spec("dirichlet:fc=10").degree() == 10);
  CHECK(parse_kernel_spec("fejer:fc=6")(0.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(parse_kernel_spec("dirichlet"), std::invalid_argument);
  CHECK_THROWS_AS(parse_kernel_spec("dirichlet:fc=x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_kernel_spec("dirichlet:fc=10x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_kernel_spec("gauss:fc=3"), std::invalid_argument);
  CHECK_THROWS_AS(parse_kernel_spec("fejer:fc=5"), std::invalid_argument);
}

TEST_CASE("JSON round trips") {
  const DiscreteMeasure m(Eigen::Vector3d(0.1, 0.45, 0.8), Eigen::Vector3d(1.0, -0.25, 3.0));
  const DiscreteMeasure back = measure_from_json(json::parse(to_json(m).dump()));
  CHECK((back.positions() - m.positions()).norm() == 0.0);
  CHECK((back.amplitudes() - m.amplitudes()).norm() == 0.0);

  const TrigPoly p = synthesize_noise(dirichlet(4), 1.3, 9);
  const TrigPoly q = trig_poly_from_json(json::parse(to_json(p).dump()));
  CHECK((p.coeffs() - q.coeffs()).norm() == 0.0);
  CHECK_THROWS(trig_poly_from_json(json{{"degree", 2}, {"coeffs", {1.0, 2.0}}}));
  CHECK_THROWS_AS(measure_from_json(json::parse(R"({"spikes": [{"x": 0.1, "a": 0.0}]})")), std::invalid_argument);

  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) CHECK(std::stod(fmt(v)) == v);
}

TEST_CASE("CSV writer enforces row width") {
  std::ostringstream s;
  CsvWriter w(s, {"a", "b"});
  w.cell(1).cell(0.5);
  w.end_row();
  CHECK(s.str() == "a,b\n1,0.5\n");
  w.cell(1);
  CHECK_THROWS_AS(w.end_row(), std::logic_error);
}

TEST_CASE("scenario validation") {
  CHECK_THROWS(ScenarioConfig::from_json(json::parse(R"({"name": "x"})")));
  CHECK_THROWS_AS(ScenarioConfig::from_json(json::parse(R"({"experiment": "paths", "grid": {"level": -1}})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      ScenarioConfig::from_json(json::parse(R"({"experiment": "paths", "lambda": {"from": 1e-3, "to": 1.0}})")),
      std::invalid_argument);
  CHECK_THROWS_AS(ScenarioConfig::from_json(json::parse(R"({"experiment": "polytope", "levels": [3, -4]})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(ScenarioConfig::from_json(json::parse(R"({"experiment": "paths", "kernel": {"type": "x", "fc": 3}})")),
                  std::invalid_argument);
  ScenarioConfig bad;
  bad.experiment = "nonsense";
  CHECK_THROWS_AS(run_scenario(bad), std::invalid_argument);
  const std::vector<double> l = LambdaSchedule{1.0, 1e-2, 3, true}.resolve(10.0);
  REQUIRE(l.size() == 3);
  CHECK(l[0] == doctest::Approx(10.0));
  CHECK(l[1] == doctest::Approx(1.0));
  CHECK(l[2] == doctest::Approx(0.1));
}

TEST_CASE("certificate comparison verdicts") {
  const ExperimentOutput o = run_certificate_comparison(load("certificates_fc6.json"));
  const json& panels = o.summary["panels"];
  CHECK(find_panel(panels, 0.8)["eta_v"]["is_certificate"].get<bool>());
  CHECK(find_panel(panels, 0.8)["eta_cf"]["is_certificate"].get<bool>());
  CHECK(find_panel(panels, 0.7)["eta_v"]["is_certificate"].get<bool>());
  CHECK_FALSE(find_panel(panels, 0.7)["eta_cf"]["is_certificate"].get<bool>());
  for (double d : {0.6, 0.5}) {
    CHECK_FALSE(find_panel(panels, d)["eta_v"]["is_certificate"].get<bool>());
    CHECK_FALSE(find_panel(panels, d)["eta_cf"]["is_certificate"].get<bool>());
  }
  CHECK(o.files.size() == 4);
}

TEST_CASE("negative example verdicts") {
  const ScenarioConfig cfg = load("negative_fc6.json");
  const ExperimentOutput o = run_negative_example(cfg);
  CHECK(o.summary["example"]["verdict"] == "not identifiable");
  CHECK(o.summary["example"]["limit_tv"].get<double>() < 3.0 - 1e-3);
  CHECK(o.summary["control"]["verdict"] == "identifiable");
  CHECK(o.summary["control"]["eta_v_ndsc"].get<bool>());
  ScenarioConfig flipped = cfg;
  flipped.flip_signs = true;
  const ExperimentOutput f = run_negative_example(flipped);
  CHECK(f.summary["example"]["verdict"] == "not identifiable");
  CHECK(f.summary["control"]["verdict"] == "identifiable");
  CHECK(f.summary["example"]["limit_tv"].get<double>() ==
        doctest::Approx(o.summary["example"]["limit_tv"].get<double>()).epsilon(1e-9));
}

TEST_CASE("grid experiment") {
  const ExperimentOutput o = run_grid_experiment(load("grid_fc6_n7.json"));
  const json& variants = o.summary["variants"];
  REQUIRE(variants.size() == 2);
  for (const auto& v : variants) CHECK(v["fuchs_grid_sup"].get<double>() > 1.0);

  const DiscreteMeasure dy = measure_from_json(variants[0]["measure"]);
  for (const auto& n : variants[0]["neighbour_amplitudes"]) {
    const double t = n["position"].get<double>();
    const double a = n["amplitude"].get<double>();
    bool on_spike = false;
    for (const auto& s : dy.spikes()) {
      if (torus_dist(TorusPoint(t), s.position) < 1e-12) {
        on_spike = true;
        CHECK(std::abs(a - s.amplitude) < 1e-4);
      }
    }
    if (!on_spike) CHECK(std::abs(a) < 1e-4);
  }

  const DiscreteMeasure nd = measure_from_json(variants[1]["measure"]);
  const Grid g = Grid::dyadic(7);
  for (const auto& s : nd.spikes()) {
    const auto [lo, hi] = g.bracket(s.position.value());
    for (const auto& n : variants[1]["neighbour_amplitudes"]) {
      const Eigen::Index j = n["index"].get<Eigen::Index>();
      if (j != lo && j != hi) continue;
      const double a = n["amplitude"].get<double>();
      CHECK(std::abs(a) > 0.1);
      CHECK(a * s.amplitude > 0.0);
    }
  }
}

TEST_CASE("noise sweep") {
  const ExperimentOutput o = run_noise_sweep(load("noise_sweep_fc10.json"));
  for (const auto& a : o.summary["alphas"]) {
    if (a["certified_points"].get<int>() < a["total_points"].get<int>()) continue;
    CHECK(a["signs_ok"].get<bool>());
    CHECK(std::abs(a["position_slope"].get<double>() - 1.0) <= 0.15);
    CHECK(std::abs(a["amplitude_slope"].get<double>() - 1.0) <= 0.15);
  }
  CHECK(o.summary["alphas"][0]["certified_points"].get<int>() == o.summary["alphas"][0]["total_points"].get<int>());
  // The noiseless row of every alpha has zero error.
  std::istringstream csv(o.files[0].second);
  std::string line;
  std::getline(csv, line);
  int zero_rows = 0;
  while (std::getline(csv, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    if (std::stod(cells[1]) != 0.0) continue;
    ++zero_rows;
    CHECK(std::stod(cells[4]) == 0.0);
    CHECK(std::stod(cells[5]) == 0.0);
  }
  CHECK(zero_rows == static_cast<int>(o.summary["alphas"].size()));
}

TEST_CASE("polytope experiment") {
  const ExperimentOutput o = run_polytope(load("polytope_fc1.json"));
  for (const auto& l : o.summary["levels"]) {
    CHECK(l["max_tightness_error"].get<double>() <= 1e-9);
    CHECK(l["min_vertices_per_halfspace"].get<int>() >= 3);
    CHECK(l["orbit_error"].get<double>() <= 1e-9);
    if (l.contains("nesting_violation")) CHECK(l["nesting_violation"].get<double>() <= 1e-9);
  }
}

TEST_CASE("regularisation paths") {
  const ExperimentOutput o = run_paths(load("paths_fc10.json"));
  const json& w0 = o.summary["modes"][0];
  REQUIRE(w0["mode"] == "w0");
  CHECK_FALSE(w0["continuous_truncated"].get<bool>());
  CHECK(w0["final_lambda"].get<double>() == 0.0);
  CHECK(w0["final_vs_m0"]["max_position_error"].get<double>() <= 1e-6);
  CHECK(w0["final_vs_m0"]["max_amplitude_error"].get<double>() <= 1e-6);
  CHECK(w0["grid_max_kkt_violation"].get<double>() < 1e-8);
  for (const auto& m : o.summary["modes"]) CHECK(m["grid_max_kkt_violation"].get<double>() < 1e-8);

  ScenarioConfig zero = load("paths_fc10.json");
  zero.measure = DiscreteMeasure{};
  const ExperimentOutput z = run_paths(zero);
  for (const auto& [name, content] : z.files) CHECK(std::count(content.begin(), content.end(), '\n') == 1);
}

TEST_CASE("outputs are deterministic") {
  ScenarioConfig cfg = load("paths_fc10.json");
  cfg.grid_level = 10;
  cfg.lambdas.count = 9;
  cfg.lambdas.to = 1e-3;
  const ExperimentOutput a = run_paths(cfg);
  setenv("SPIKE_LAB_THREADS", "1", 1);
  const ExperimentOutput b = run_paths(cfg);
  setenv("SPIKE_LAB_THREADS", "2", 1);
  REQUIRE(a.files.size() == b.files.size());
  for (std::size_t i = 0; i < a.files.size(); ++i) {
    CHECK(a.files[i].first == b.files[i].first);
    CHECK(a.files[i].second == b.files[i].second);
  }
  CHECK(a.summary.dump() == b.summary.dump());

  const ExperimentOutput c1 = run_grid_experiment(load("grid_fc6_n7.json"));
  const ExperimentOutput c2 = run_grid_experiment(load("grid_fc6_n7.json"));
  for (std::size_t i = 0; i < c1.files.size(); ++i) CHECK(c1.files[i].second == c2.files[i].second);
}

TEST_CASE("job runner") {
  std::vector<int> hits(20, 0);
  std::vector<std::function<void()>> jobs;
  for (int i = 0; i < 20; ++i) jobs.push_back([&hits, i] { hits[static_cast<std::size_t>(i)]++; });
  run_jobs(jobs, 4);
  for (int h : hits) CHECK(h == 1);
  jobs.push_back([] { throw SolverError("boom"); });
  CHECK_THROWS_AS(run_jobs(jobs, 3), SolverError);
}

TEST_CASE("command line exit codes") {
  const fs::path dir = scratch("cli");
  const std::string cfgs = SPIKE_LAB_CONFIGS;
  CHECK(run_cli("polytope --fc 1 --n 3,4 --out " + (dir / "poly").string()) == 0);
  CHECK(fs::exists(dir / "poly" / "summary.json"));
  CHECK(run_cli("run " + cfgs + "/negative_fc6.json " + cfgs + "/polytope_fc1.json --out " + (dir / "multi").string()) == 0);
  CHECK(fs::exists(dir / "multi" / "negative_fc6" / "summary.json"));
  CHECK(fs::exists(dir / "multi" / "polytope_fc1" / "summary.json"));

  write_file(dir / "m.json", R"({"spikes": [{"x": 0.3, "a": 1.0}, {"x": 0.5, "a": -1.0}]})");
  CHECK(run_cli("certify " + (dir / "m.json").string() + " --kernel dirichlet:fc=6 --out " + (dir / "c.json").string()) == 0);
  CHECK(run_cli("path " + (dir / "m.json").string() + " --kernel dirichlet:fc=6 --grid 8 --out " + (dir / "p.csv").string()) == 0);
  CHECK(fs::file_size(dir / "p.csv") > 0);

  CHECK(run_cli("") == 3);
  CHECK(run_cli("frobnicate") == 3);
  CHECK(run_cli("polytope --n 3,x") == 3);
  CHECK(run_cli("certify " + (dir / "m.json").string() + " --kernel sinc:fc=6") == 3);
  CHECK(run_cli("path " + (dir / "m.json").string() + " --lambda-min 2") == 3);
  write_file(dir / "bad.json", "{\"experiment\": ");
  CHECK(run_cli("run " + (dir / "bad.json").string() + " --out " + (dir / "x").string()) == 3);
  write_file(dir / "bad2.json", R"({"experiment": "paths", "grid": {"level": 40}})");
  CHECK(run_cli("run " + (dir / "bad2.json").string() + " --out " + (dir / "x").string()) == 3);

  // Two spikes a nanometre apart: Gamma is numerically rank deficient.
  write_file(dir / "close.json", R"({"spikes": [{"x": 0.3, "a": 1.0}, {"x": 0.300000001, "a": 1.0}]})");
  CHECK(run_cli("certify " + (dir / "close.json").string() + " --kernel dirichlet:fc=6") == 2);
  fs::remove_all(dir);
}
