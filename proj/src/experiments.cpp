#include "spikelab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "spikelab/errors.hpp"
#include "spikelab/operators.hpp"

namespace spikelab {

using Eigen::Index;
using Eigen::VectorXd;

// ---------------------------------------------------------------- config

DiscreteMeasure MeasureGenerator::build(int fc) const {
  if (count < 0) throw std::invalid_argument("spike count must be >= 0");
  if (static_cast<int>(amplitudes.size()) != count)
    throw std::invalid_argument("generator needs one amplitude per spike");
  if (count == 0) return {};
  if (!(delta_fc > 0.0)) throw std::invalid_argument("separation must be positive");
  const double d = delta_fc / fc;
  VectorXd x(count), a(count);
  for (int i = 0; i < count; ++i) {
    x[i] = center + (i - 0.5 * (count - 1)) * d;
    a[i] = amplitudes[static_cast<std::size_t>(i)];
  }
  return DiscreteMeasure(x, a);
}

std::vector<double> LambdaSchedule::resolve(double lambda_max) const {
  if (!(from > 0.0 && to > 0.0 && to <= from)) throw std::invalid_argument("lambda schedule must be positive and decreasing");
  if (count < 1 || (count == 1 && to != from)) throw std::invalid_argument("lambda schedule needs count >= 2");
  const double scale = relative ? lambda_max : 1.0;
  std::vector<double> out;
  for (int i = 0; i < count; ++i) {
    const double r = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    out.push_back(scale * from * std::pow(to / from, r));
  }
  return out;
}

Kernel ScenarioConfig::kernel() const {
  return kernel_from_json(json{{"type", kernel_type}, {"fc", fc}});
}

DiscreteMeasure ScenarioConfig::build_measure() const {
  DiscreteMeasure m = measure ? *measure : generator.build(fc);
  return flip_signs ? -m : m;
}

ScenarioConfig ScenarioConfig::from_json(const json& j) {
  ScenarioConfig c;
  if (!j.is_object()) throw std::invalid_argument("scenario must be a JSON object");
  c.experiment = j.at("experiment").get<std::string>();
  c.name = j.value("name", c.experiment);
  if (j.contains("kernel")) {
    c.kernel_type = j["kernel"].value("type", c.kernel_type);
    c.fc = j["kernel"].at("fc").get<int>();
  }
  if (j.contains("measure")) c.measure = measure_from_json(j["measure"]);
  if (j.contains("generator")) {
    const auto& g = j["generator"];
    c.generator.count = g.value("count", c.generator.count);
    c.generator.delta_fc = g.value("delta_fc", c.generator.delta_fc);
    c.generator.center = g.value("center", c.generator.center);
    c.generator.amplitudes = g.value("amplitudes", c.generator.amplitudes);
  }
  if (j.contains("grid")) c.grid_level = j["grid"].at("level").get<int>();
  if (j.contains("noise")) {
    const auto& n = j["noise"];
    c.seed = n.value("seed", c.seed);
    c.fixed_noise = n.value("fixed", c.fixed_noise);
    c.scaled_noise = n.value("scaled", c.scaled_noise);
  }
  if (j.contains("lambda")) {
    const auto& l = j["lambda"];
    c.lambdas.from = l.value("from", c.lambdas.from);
    c.lambdas.to = l.value("to", c.lambdas.to);
    c.lambdas.count = l.value("count", c.lambdas.count);
    c.lambdas.relative = l.value("relative", c.lambdas.relative);
  }
  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    c.alphas = s.value("alphas", c.alphas);
    c.decades = s.value("decades", c.decades);
    c.per_decade = s.value("per_decade", c.per_decade);
    c.noise_top = s.value("top", c.noise_top);
  }
  c.deltas_fc = j.value("deltas_fc", c.deltas_fc);
  c.levels = j.value("levels", c.levels);
  c.grid_offset = j.value("grid_offset", c.grid_offset);
  c.flip_signs = j.value("flip_signs", c.flip_signs);

  if (c.grid_level < 0 || c.grid_level > 12) throw std::invalid_argument("grid level must be in 0..12");
  for (int l : c.levels)
    if (l < 0) throw std::invalid_argument("levels must be >= 0");
  if (c.decades < 1 || c.per_decade < 1) throw std::invalid_argument("sweep needs at least one decade and one point");
  for (double v : c.fixed_noise)
    if (!(v >= 0.0)) throw std::invalid_argument("noise levels must be >= 0");
  for (double v : c.scaled_noise)
    if (!(v >= 0.0)) throw std::invalid_argument("noise levels must be >= 0");
  for (double a : c.alphas)
    if (!(a > 0.0)) throw std::invalid_argument("alphas must be positive");
  c.lambdas.resolve(1.0);  // validates the schedule
  c.kernel();              // validates the kernel
  return c;
}

void ExperimentOutput::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& [name, content] : files) {
    std::ofstream f(dir / name, std::ios::binary);
    f << content;
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
  }
  std::ofstream f(dir / "summary.json", std::ios::binary);
  f << summary.dump(2) << '\n';
}

// ---------------------------------------------------------------- jobs

unsigned job_threads() {
  if (const char* env = std::getenv("SPIKE_LAB_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void run_jobs(const std::vector<std::function<void()>>& jobs, unsigned threads) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < jobs.size();) {
      try {
        jobs[i]();
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

// ---------------------------------------------------------------- helpers

namespace {

json measure_errors(const DiscreteMeasure& est, const DiscreteMeasure& ref) {
  if (est.size() != ref.size()) return {{"comparable", false}};
  double pos = 0.0, amp = 0.0;
  bool signs = true;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    pos = std::max(pos, torus_dist(est.spikes()[i].position, ref.spikes()[i].position));
    amp = std::max(amp, std::abs(est.spikes()[i].amplitude - ref.spikes()[i].amplitude));
    signs = signs && (est.spikes()[i].amplitude > 0) == (ref.spikes()[i].amplitude > 0);
  }
  return {{"comparable", true}, {"max_position_error", pos}, {"max_amplitude_error", amp}, {"signs_agree", signs}};
}

std::string mode_label(const std::string& kind, double level) {
  std::ostringstream s;
  s << kind << '_' << level;
  return s.str();
}

// Sampled grid solutions along a schedule, one row per nonzero coefficient,
// with the KKT violation as validity.
struct GridRow {
  double lambda;
  Index index;
  double amplitude;
  double kkt;
};

}  // namespace

// ---------------------------------------------------------------- paths

ExperimentOutput run_paths(const ScenarioConfig& cfg) {
  const Kernel k = cfg.kernel();
  const DiscreteMeasure m0 = cfg.build_measure();
  const TrigPoly y = forward(m0, k);
  const GramBundle bundle(Grid::dyadic(cfg.grid_level), k);
  const double lmax0 = lambda_max(y, bundle);

  struct Mode {
    std::string label;
    std::string kind;  // none | fixed | scaled
    double level;
  };
  std::vector<Mode> modes{{"w0", "none", 0.0}};
  for (double l : cfg.fixed_noise) modes.push_back({mode_label("fixed", l), "fixed", l});
  for (double l : cfg.scaled_noise) modes.push_back({mode_label("scaled", l), "scaled", l});

  ExperimentOutput out;
  out.summary = {{"experiment", "paths"}, {"name", cfg.name}, {"fc", cfg.fc}, {"grid_level", cfg.grid_level},
                 {"measure", to_json(m0)}, {"lambda_max", lmax0}};
  const std::vector<std::string> header{"solver", "lambda", "index", "position", "amplitude", "residual", "valid"};

  if (!(lmax0 > 0.0) || m0.empty()) {
    for (const auto& md : modes) {
      std::ostringstream s;
      CsvWriter w(s, header);
      out.files.push_back({"paths_" + md.label + ".csv", s.str()});
    }
    out.summary["modes"] = json::array();
    return out;
  }

  const std::vector<double> lambdas = cfg.lambdas.resolve(lmax0);
  const TrigPoly unit = synthesize_noise(k, 1.0, cfg.seed);
  const double ynorm = y.norm();
  std::vector<std::string> csv(modes.size()), path_csv(modes.size());
  std::vector<json> summaries(modes.size());

  std::vector<std::function<void()>> jobs;
  for (std::size_t mi = 0; mi < modes.size(); ++mi) {
    jobs.push_back([&, mi] {
      const Mode& md = modes[mi];
      const TrigPoly w = unit * (md.level * ynorm);
      const bool scaled = md.kind == "scaled";
      const TrigPoly y_obs = scaled ? y : y + w;
      std::vector<GridRow> rows;
      std::vector<VectorXd> grid_sol;
      json ms = {{"mode", md.label}, {"kind", md.kind}, {"level", md.level}};

      if (!scaled) {
        HomotopyOptions opts;
        opts.lambda_min = lambdas.back();
        const LassoPath path = homotopy_path(y_obs, bundle, opts);
        std::ostringstream ps;
        write_path_csv(ps, path, bundle.grid());
        path_csv[mi] = ps.str();
        ms["grid_segments"] = path.segments.size();
        for (double lam : lambdas) grid_sol.push_back(path.coefficients(lam));
      } else {
        for (double lam : lambdas) {
          HomotopyOptions opts;
          opts.lambda_min = lam;
          const LassoPath path = homotopy_path(y + lam * w, bundle, opts);
          grid_sol.push_back(path.coefficients(lam));
        }
      }
      double worst_kkt = 0.0;
      for (std::size_t li = 0; li < lambdas.size(); ++li) {
        const TrigPoly yl = scaled ? y + lambdas[li] * w : y_obs;
        const double kkt = kkt_check(yl, bundle, lambdas[li], grid_sol[li]).max_violation();
        worst_kkt = std::max(worst_kkt, kkt);
        for (Index j = 0; j < grid_sol[li].size(); ++j)
          if (grid_sol[li][j] != 0.0) rows.push_back({lambdas[li], j, grid_sol[li][j], kkt});
      }
      ms["grid_max_kkt_violation"] = worst_kkt;

      // Continuous path, seeded at the first lambda whose grid clusters
      // reproduce the sign pattern of m0.
      const ExtremalitySystem sys(k, y_obs, m0.signs(), scaled ? std::optional<TrigPoly>(w) : std::nullopt);
      std::optional<std::size_t> seed_at;
      std::optional<DiscreteMeasure> seed;
      for (std::size_t li = 0; li < lambdas.size() && !seed_at; ++li) {
        const DiscreteMeasure c =
            dominant_spikes(cluster_grid_solution(bundle.grid(), grid_sol[li], 0), kSeedClusterFraction);
        if (c.size() == m0.size() && c.signs() == m0.signs()) {
          seed_at = li;
          seed = c;
        }
      }
      ContinuationResult cont;
      if (seed_at) {
        const std::vector<double> rest(lambdas.begin() + static_cast<std::ptrdiff_t>(*seed_at), lambdas.end());
        cont = continuation_path(sys, rest, seed);
      } else {
        cont.truncated = true;
        cont.diagnostic = "grid clusters never match the sign pattern";
      }
      ms["continuous_points"] = cont.points.size();
      ms["continuous_truncated"] = cont.truncated;
      ms["continuous_diagnostic"] = cont.diagnostic;
      double cert_hi = 0.0, cert_lo = 0.0;
      bool any = false;
      for (const auto& p : cont.points)
        if (p.certified) {
          if (!any) cert_hi = p.lambda;
          cert_lo = p.lambda;
          any = true;
        }
      if (any) ms["certified_lambda_range"] = {cert_lo, cert_hi};
      // Noiseless data: close the path with the lambda = 0 root.
      if (md.kind == "none" && !cont.truncated && !cont.points.empty()) {
        try {
          cont.points.push_back(newton_solve(sys, cont.points.back().a, cont.points.back().x, 0.0));
        } catch (const SolverError& err) {
          ms["limit_diagnostic"] = err.what();
        }
      }
      if (!cont.points.empty()) {
        const auto& last = cont.points.back();
        ms["final_lambda"] = last.lambda;
        ms["final_measure"] = to_json(last.measure());
        ms["final_vs_m0"] = measure_errors(last.measure(), m0);
      }

      std::ostringstream s;
      CsvWriter wr(s, header);
      for (const auto& r : rows) {
        wr.cell(std::string("grid")).cell(r.lambda).cell(static_cast<long long>(r.index)).cell(bundle.grid()[r.index]);
        wr.cell(r.amplitude).cell(r.kkt).cell(r.kkt < 1e-8 ? 1 : 0);
        wr.end_row();
      }
      for (const auto& p : cont.points)
        for (Index i = 0; i < p.a.size(); ++i) {
          wr.cell(std::string("continuous")).cell(p.lambda).cell(static_cast<long long>(i)).cell(p.x[i]);
          wr.cell(p.a[i]).cell(p.residual).cell(p.certified ? 1 : 0);
          wr.end_row();
        }
      csv[mi] = s.str();
      summaries[mi] = ms;
    });
  }
  run_jobs(jobs, job_threads());

  out.summary["modes"] = json::array();
  for (std::size_t mi = 0; mi < modes.size(); ++mi) {
    out.files.push_back({"paths_" + modes[mi].label + ".csv", csv[mi]});
    if (!path_csv[mi].empty()) out.files.push_back({"grid_path_" + modes[mi].label + ".csv", path_csv[mi]});
    out.summary["modes"].push_back(summaries[mi]);
  }
  return out;
}

// ---------------------------------------------------------------- certificates

ExperimentOutput run_certificate_comparison(const ScenarioConfig& cfg) {
  const Kernel k = cfg.kernel();
  ExperimentOutput out;
  out.summary = {{"experiment", "certificates"}, {"name", cfg.name}, {"fc", cfg.fc}, {"panels", json::array()}};
  constexpr int kSamples = 2048;
  for (double dfc : cfg.deltas_fc) {
    MeasureGenerator g = cfg.generator;
    g.delta_fc = dfc;
    DiscreteMeasure m0 = g.build(cfg.fc);
    if (cfg.flip_signs) m0 = -m0;
    const TrigPoly y = forward(m0, k);
    const CertificateReport v = check_ndsc(m0, k);
    const CertificateReport cf = fejer_precert(m0, cfg.fc);
    const double lmax = lambda_max(y, Grid::dyadic(cfg.grid_level), k);
    const MinNormEstimate est = estimate_min_norm_certificate(y, k, {1e-6 * lmax}, cfg.grid_level);
    const CertificateReport e0 = analyse_certificate(est.estimate, m0, "min_norm_estimate");

    std::ostringstream s;
    write_samples_csv(s, {"eta_v", "eta_cf", "eta0_estimate"}, {v.eta, cf.eta, est.estimate}, kSamples);
    std::ostringstream fname;
    fname << "certificates_" << dfc << ".csv";
    out.files.push_back({fname.str(), s.str()});
    out.summary["panels"].push_back({{"delta_fc", dfc},
                                     {"measure", to_json(m0)},
                                     {"eta_v", {{"sup_norm", v.sup_norm}, {"is_certificate", v.is_certificate},
                                                {"ndsc", v.ndsc}, {"interpolation_residual", v.interpolation_residual}}},
                                     {"eta_cf", {{"sup_norm", cf.sup_norm}, {"is_certificate", cf.is_certificate},
                                                 {"interpolation_residual", cf.interpolation_residual}}},
                                     {"eta0_estimate", {{"sup_norm", e0.sup_norm}, {"lambda", est.lambdas.back()},
                                                        {"distance_to_eta_v", sampled_distance(est.estimate, v.eta, kSamples)}}}});
  }
  return out;
}

// ---------------------------------------------------------------- grid

ExperimentOutput run_grid_experiment(const ScenarioConfig& cfg) {
  const Kernel k = cfg.kernel();
  const Grid grid = Grid::dyadic(cfg.grid_level);
  const GramBundle bundle(grid, k);
  const double h = 1.0 / static_cast<double>(grid.size());
  const MeasureGenerator& g = cfg.generator;
  if (g.count < 1) throw std::invalid_argument("grid experiment needs at least one spike");

  // Dyadic variant: spikes on grid points, the spacing rounded down to a
  // whole number of grid steps.
  const long steps = std::max(1L, static_cast<long>(std::floor(g.delta_fc / cfg.fc / h + 1e-9)));
  const double first = g.center - 0.5 * (g.count - 1) * steps * h;
  const long first_index = std::lround(first / h);

  ExperimentOutput out;
  out.summary = {{"experiment", "grid"}, {"name", cfg.name}, {"fc", cfg.fc}, {"grid_level", cfg.grid_level},
                 {"steps", steps}, {"variants", json::array()}};
  for (const std::string variant : {"dyadic", "non_dyadic"}) {
    const double shift = variant == "dyadic" ? 0.0 : cfg.grid_offset * h;
    VectorXd x(g.count), a(g.count);
    for (int i = 0; i < g.count; ++i) {
      x[i] = TorusPoint::wrap((first_index + i * steps) * h + shift);
      a[i] = g.amplitudes[static_cast<std::size_t>(i)] * (cfg.flip_signs ? -1.0 : 1.0);
    }
    const DiscreteMeasure m0(x, a);
    const TrigPoly y = forward(m0, k);
    const DiscreteCertificate dc = discrete_min_norm_certificate(y, grid, k);
    const CertificateReport fu = fuchs_precert(m0, k, grid);
    const double lmax_fine = lambda_max(y, Grid::dyadic(12), k);
    const MinNormEstimate est = estimate_min_norm_certificate(y, k, {1e-6 * lmax_fine}, 12);

    std::ostringstream cs;
    write_samples_csv(cs, {"eta0_estimate", "eta0_grid", "eta_fuchs"}, {est.estimate, dc.eta, fu.eta}, 2048);
    out.files.push_back({"grid_" + variant + "_certificates.csv", cs.str()});

    // Amplitude paths for each spike's bracketing grid points and their
    // outer neighbours.
    HomotopyOptions opts;
    opts.to_zero = true;
    const LassoPath path = homotopy_path(y, bundle, opts);
    const Index n = grid.size();
    std::vector<Index> watch;
    for (int i = 0; i < g.count; ++i) {
      const auto [lo, hi] = grid.bracket(x[i]);
      for (Index j : {(lo + n - 1) % n, lo, hi, (hi + 1) % n})
        if (std::find(watch.begin(), watch.end(), j) == watch.end()) watch.push_back(j);
    }
    std::sort(watch.begin(), watch.end());
    const std::vector<double> lambdas = cfg.lambdas.resolve(path.lambda_max);
    std::ostringstream ps;
    CsvWriter w(ps, {"lambda", "index", "position", "amplitude", "kkt_violation"});
    for (double lam : lambdas) {
      const VectorXd coef = path.coefficients(lam);
      const double kkt = kkt_check(y, bundle, lam, coef).max_violation();
      for (Index j : watch) {
        w.cell(lam).cell(static_cast<long long>(j)).cell(grid[j]).cell(coef[j]).cell(kkt);
        w.end_row();
      }
    }
    out.files.push_back({"grid_" + variant + "_amplitudes.csv", ps.str()});

    json ext = json::array();
    for (std::size_t q = 0; q < dc.extended_indices.size(); ++q)
      ext.push_back({{"index", dc.extended_indices[q]}, {"position", grid[dc.extended_indices[q]]},
                     {"sign", dc.extended_signs[q]}});
    json limits = json::array();
    const VectorXd small = path.coefficients(lambdas.back());
    for (Index j : watch) limits.push_back({{"index", j}, {"position", grid[j]}, {"amplitude", small[j]}});
    out.summary["variants"].push_back({{"variant", variant},
                                       {"measure", to_json(m0)},
                                       {"extended_support", ext},
                                       {"fuchs_grid_sup", *fu.grid_sup_off_support},
                                       {"segments", path.segments.size()},
                                       {"smallest_lambda", lambdas.back()},
                                       {"neighbour_amplitudes", limits},
                                       {"eta0_estimate_vs_grid", sampled_distance(est.estimate, dc.eta, 2048)}});
  }
  return out;
}

// ---------------------------------------------------------------- noise sweep

double loglog_slope(const std::vector<double>& noise, const std::vector<double>& err) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < noise.size(); ++i) {
    if (!(noise[i] > 0.0 && err[i] > 0.0)) continue;
    const double lx = std::log(noise[i]), ly = std::log(err[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return std::nan("");
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ExperimentOutput run_noise_sweep(const ScenarioConfig& cfg) {
  const Kernel k = cfg.kernel();
  const DiscreteMeasure m0 = cfg.build_measure();
  if (m0.empty()) throw std::invalid_argument("noise sweep needs a nonempty measure");
  const TrigPoly y = forward(m0, k);
  const TrigPoly unit = synthesize_noise(k, 1.0, cfg.seed);
  const VectorXd a0 = m0.amplitudes(), x0 = m0.positions();

  std::vector<double> levels{0.0};
  const int npts = cfg.decades * cfg.per_decade;
  for (int i = npts; i >= 0; --i)
    levels.push_back(cfg.noise_top * y.norm() * std::pow(10.0, -static_cast<double>(i) / cfg.per_decade));

  ExperimentOutput out;
  out.summary = {{"experiment", "noise_sweep"}, {"name", cfg.name}, {"fc", cfg.fc}, {"measure", to_json(m0)},
                 {"alphas", json::array()}};
  std::ostringstream s;
  CsvWriter w(s, {"alpha", "noise", "lambda", "spikes", "max_position_error", "max_amplitude_error", "signs_ok",
                  "residual", "dual_sup", "certified"});
  for (double alpha : cfg.alphas) {
    std::vector<double> nx, ep, ea;
    bool signs_ok = true;
    int certified = 0;
    VectorXd a = a0, x = x0;
    for (double lev : levels) {
      const double lam = lev / alpha;
      const ExtremalitySystem sys(k, y + unit * lev, m0.signs());
      double pe = std::nan(""), ae = std::nan(""), res = std::nan(""), sup = std::nan("");
      bool cert = false, sg = false;
      try {
        const ContinuousSolution sol = newton_solve(sys, a, x, lam);
        a = sol.a;
        x = sol.x;
        pe = ae = 0.0;
        for (Index i = 0; i < a0.size(); ++i) {
          pe = std::max(pe, torus_dist(TorusPoint(sol.x[i]), TorusPoint(x0[i])));
          ae = std::max(ae, std::abs(sol.a[i] - a0[i]));
        }
        sg = (sol.a.array() * m0.signs().array() > 0.0).all();
        res = sol.residual;
        sup = sol.dual_sup;
        cert = sol.certified;
      } catch (const SolverError&) {
        a = a0;
        x = x0;
      }
      w.cell(alpha).cell(lev).cell(lam).cell(static_cast<long long>(m0.size())).cell(pe).cell(ae);
      w.cell(sg ? 1 : 0).cell(res).cell(sup).cell(cert ? 1 : 0);
      w.end_row();
      if (cert && lev > 0.0) {
        ++certified;
        signs_ok = signs_ok && sg;
        nx.push_back(lev);
        ep.push_back(pe);
        ea.push_back(ae);
      }
    }
    out.summary["alphas"].push_back({{"alpha", alpha},
                                     {"certified_points", certified},
                                     {"total_points", static_cast<int>(levels.size()) - 1},
                                     {"signs_ok", signs_ok},
                                     {"position_slope", loglog_slope(nx, ep)},
                                     {"amplitude_slope", loglog_slope(nx, ea)}});
  }
  out.files.push_back({"noise_sweep.csv", s.str()});
  return out;
}

// ---------------------------------------------------------------- polytope

ExperimentOutput run_polytope(const ScenarioConfig& cfg) {
  std::vector<int> levels = cfg.levels;
  std::sort(levels.begin(), levels.end());
  std::vector<Polytope> polys;
  for (int n : levels) polys.push_back(build_polytope(cfg.fc, n));

  ExperimentOutput out;
  out.summary = {{"experiment", "polytope"}, {"name", cfg.name}, {"fc", cfg.fc}, {"levels", json::array()}};
  for (std::size_t i = 0; i < polys.size(); ++i) {
    const Polytope& p = polys[i];
    json lv = {{"level", p.level}, {"halfspaces", p.halfspaces.size()}, {"vertices", p.vertices.size()}};
    if (!p.vertices.empty()) {
      double tight = 0.0;
      std::vector<int> per_plane(p.halfspaces.size(), 0);
      for (const auto& v : p.vertices) {
        tight = std::max(tight, std::abs(max_violation(p.halfspaces, v)));
        for (int t : tight_planes(p.halfspaces, v)) ++per_plane[static_cast<std::size_t>(t)];
      }
      lv["max_tightness_error"] = tight;
      lv["min_vertices_per_halfspace"] = *std::min_element(per_plane.begin(), per_plane.end());
      // Rotation by one grid step maps the vertex set onto itself.
      const Eigen::MatrixXd r = shift_rotation(cfg.fc, 1.0 / static_cast<double>(1 << p.level));
      double orbit = 0.0;
      for (const auto& v : p.vertices) {
        const Eigen::Vector3d rv = r * v;
        double best = INFINITY;
        for (const auto& u : p.vertices) best = std::min(best, (u - rv).norm());
        orbit = std::max(orbit, best);
      }
      lv["orbit_error"] = orbit;
      if (i > 0) {
        double nest = -INFINITY;
        for (const auto& v : p.vertices) nest = std::max(nest, max_violation(polys[i - 1].halfspaces, v));
        lv["nesting_violation"] = nest;
      }
    }
    out.summary["levels"].push_back(lv);
    std::ostringstream f;
    f << "polytope_fc" << p.fc << "_n" << p.level << ".json";
    out.files.push_back({f.str(), to_json(p).dump(2) + "\n"});
  }
  return out;
}

// ---------------------------------------------------------------- negative

NegativeVerdict negative_example_verdict(int fc, double spacing, int grid_level, double sign) {
  if (fc < 2) throw std::invalid_argument("negative example needs fc >= 2");
  const Kernel k = dirichlet(fc);
  VectorXd x(3), a(3);
  x << -spacing, 0.0, spacing;
  a << sign, sign, -sign;
  NegativeVerdict v;
  v.m0 = DiscreteMeasure(x, a);
  v.tv = tv_norm(v.m0);
  const Grid grid = Grid::dyadic(grid_level);
  const GramBundle bundle(grid, k);
  HomotopyOptions opts;
  opts.to_zero = true;
  const LassoPath path = homotopy_path(forward(v.m0, k), bundle, opts);
  if (path.segments.empty()) throw SolverError("negative example: empty path");
  // lambda -> 0 limit of the last segment.
  const PathSegment& last = path.segments.back();
  VectorXd lim = VectorXd::Zero(grid.size());
  for (std::size_t q = 0; q < last.active.size(); ++q) lim[last.active[q]] = last.offset[static_cast<Index>(q)];
  for (Index j = 0; j < lim.size(); ++j)
    if (std::abs(lim[j]) < 1e-9) lim[j] = 0.0;
  v.limit_tv = lim.lpNorm<1>();
  // Clusters lighter than the TV resolution of the verdict do not count as
  // support (off-grid spikes leave ~1e-6 satellites on the grid).
  std::vector<Spike> kept;
  const DiscreteMeasure clusters = cluster_grid_solution(grid, lim, 0);
  for (const auto& s : clusters.spikes())
    if (std::abs(s.amplitude) >= 1e-4) kept.push_back(s);
  v.limit_clusters = DiscreteMeasure(std::move(kept));
  const double h = 1.0 / static_cast<double>(grid.size());
  v.support_matches = v.limit_clusters.size() == v.m0.size();
  if (v.support_matches) {
    const MatchReport rep = match_spikes(v.limit_clusters, v.m0, std::min(h, 0.49 * min_separation(v.m0)));
    v.support_matches = rep.matches.size() == v.m0.size() && rep.all_signs_agree;
  }
  v.identifiable = !(v.limit_tv < v.tv - 1e-4) && v.support_matches;
  return v;
}

ExperimentOutput run_negative_example(const ScenarioConfig& cfg) {
  const double sign = cfg.flip_signs ? -1.0 : 1.0;
  ExperimentOutput out;
  out.summary = {{"experiment", "negative"}, {"name", cfg.name}, {"fc", cfg.fc}, {"grid_level", cfg.grid_level}};
  auto describe = [&](double spacing) {
    const NegativeVerdict v = negative_example_verdict(cfg.fc, spacing, cfg.grid_level, sign);
    const CertificateReport nd = check_ndsc(v.m0, dirichlet(cfg.fc));
    return json{{"measure", to_json(v.m0)},
                {"spacing", spacing},
                {"tv", v.tv},
                {"limit_tv", v.limit_tv},
                {"limit_clusters", to_json(v.limit_clusters)},
                {"support_matches", v.support_matches},
                {"eta_v_sup", nd.sup_norm},
                {"eta_v_ndsc", nd.ndsc},
                {"verdict", v.identifiable ? "identifiable" : "not identifiable"}};
  };
  out.summary["example"] = describe(1.0 / (2.0 * cfg.fc));
  out.summary["control"] = describe(2.0 / cfg.fc);
  return out;
}

ExperimentOutput run_scenario(const ScenarioConfig& cfg) {
  if (cfg.experiment == "paths") return run_paths(cfg);
  if (cfg.experiment == "certificates") return run_certificate_comparison(cfg);
  if (cfg.experiment == "grid") return run_grid_experiment(cfg);
  if (cfg.experiment == "noise_sweep") return run_noise_sweep(cfg);
  if (cfg.experiment == "polytope") return run_polytope(cfg);
  if (cfg.experiment == "negative") return run_negative_example(cfg);
  throw std::invalid_argument("unknown experiment '" + cfg.experiment + "'");
}

}  // namespace spikelab
