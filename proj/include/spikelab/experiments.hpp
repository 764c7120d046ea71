#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spikelab/io.hpp"

namespace spikelab {

/// Equally spaced spikes centred at `center`, spaced delta_fc / fc apart.
struct MeasureGenerator {
  int count = 3;
  double delta_fc = 0.7;
  double center = 0.5;
  std::vector<double> amplitudes{1.0, 1.0, -1.0};

  DiscreteMeasure build(int fc) const;
};

/// log-spaced lambda values from `from` down to `to` (inclusive), relative to
/// lambda_max of the noiseless observation unless `relative` is false.
struct LambdaSchedule {
  double from = 1.0;
  double to = 1e-4;
  int count = 41;
  bool relative = true;

  std::vector<double> resolve(double lambda_max) const;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::string experiment;  // paths | certificates | grid | noise_sweep | polytope | negative
  std::string kernel_type = "dirichlet";
  int fc = 10;
  std::optional<DiscreteMeasure> measure;
  MeasureGenerator generator;
  int grid_level = 12;
  std::uint64_t seed = 1;
  std::vector<double> fixed_noise{0.4, 0.8};        // ||w|| / ||y||
  std::vector<double> scaled_noise{0.07, 0.1, 0.5};  // ||w0|| / ||y||, w = lambda w0
  LambdaSchedule lambdas;
  std::vector<double> alphas{0.05, 0.5, 50.0};
  int decades = 4;
  int per_decade = 4;
  double noise_top = 1e-2;  // largest ||w|| / ||y|| of the sweep
  std::vector<double> deltas_fc{0.8, 0.7, 0.6, 0.5};
  std::vector<int> levels{3, 4, 7};
  double grid_offset = 0.37;  // non-dyadic shift, in grid steps
  bool flip_signs = false;

  Kernel kernel() const;
  /// The explicit measure if given, else the generator's.
  DiscreteMeasure build_measure() const;

  /// Throws std::invalid_argument (or a json exception) on a malformed config.
  static ScenarioConfig from_json(const json& j);
};

/// Files produced by an experiment (name -> content) and its JSON summary.
struct ExperimentOutput {
  json summary;
  std::vector<std::pair<std::string, std::string>> files;

  void write(const std::filesystem::path& dir) const;
};

ExperimentOutput run_paths(const ScenarioConfig& cfg);
ExperimentOutput run_certificate_comparison(const ScenarioConfig& cfg);
ExperimentOutput run_grid_experiment(const ScenarioConfig& cfg);
ExperimentOutput run_noise_sweep(const ScenarioConfig& cfg);
ExperimentOutput run_polytope(const ScenarioConfig& cfg);
ExperimentOutput run_negative_example(const ScenarioConfig& cfg);
/// Dispatch on cfg.experiment.
ExperimentOutput run_scenario(const ScenarioConfig& cfg);

struct NegativeVerdict {
  DiscreteMeasure m0;
  double limit_tv = 0.0;
  double tv = 0.0;
  DiscreteMeasure limit_clusters;
  bool support_matches = false;
  bool identifiable = false;
};

/// Runs the grid homotopy to lambda -> 0 on y = Phi m0 for
/// m0 = sign * (delta_{-s} + delta_0 - delta_{s}) and judges identifiability
/// from the limit: "not identifiable" iff its TV is below tv(m0) - 1e-4 or its
/// clustered signed support differs from that of m0.
NegativeVerdict negative_example_verdict(int fc, double spacing, int grid_level = 12, double sign = 1.0);

/// Least-squares slope of log(err) against log(noise) over the points with
/// positive noise and error.
double loglog_slope(const std::vector<double>& noise, const std::vector<double>& err);

/// Number of worker threads for independent jobs: SPIKE_LAB_THREADS if set
/// (>= 1), else the hardware concurrency.
unsigned job_threads();
/// Runs independent jobs on at most `threads` threads. The first exception
/// thrown by a job is rethrown after all workers finish.
void run_jobs(const std::vector<std::function<void()>>& jobs, unsigned threads);

}  // namespace spikelab
