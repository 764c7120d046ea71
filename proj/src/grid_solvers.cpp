#include "spikelab/grid_solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include "spikelab/errors.hpp"
#include "spikelab/operators.hpp"

namespace spikelab {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------- Grid

Grid::Grid(std::vector<double> points) {
  if (points.empty()) throw std::invalid_argument("grid must not be empty");
  if (static_cast<Index>(points.size()) > kMaxPoints)
    throw std::invalid_argument("grid has more than 4096 points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i] >= 0.0 && points[i] < 1.0)) throw std::invalid_argument("grid points must lie in [0, 1)");
    if (i > 0 && !(points[i] > points[i - 1]))
      throw std::invalid_argument("grid points must be strictly increasing");
  }
  points_ = Eigen::Map<const VectorXd>(points.data(), static_cast<Index>(points.size()));
}

Grid Grid::dyadic(int level) {
  if (level < 0 || (Index{1} << level) > kMaxPoints)
    throw std::invalid_argument("dyadic level must be in 0..12");
  const Index n = Index{1} << level;
  std::vector<double> pts(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) pts[static_cast<std::size_t>(j)] = static_cast<double>(j) / static_cast<double>(n);
  Grid g(std::move(pts));
  g.level_ = level;
  return g;
}

Index Grid::nearest(double t) const {
  const auto [lo, hi] = bracket(t);
  const TorusPoint p(t);
  return torus_dist(p, TorusPoint(points_[lo])) <= torus_dist(p, TorusPoint(points_[hi])) ? lo : hi;
}

std::pair<Index, Index> Grid::bracket(double t) const {
  const double u = TorusPoint::wrap(t);
  const Index n = size();
  const double* begin = points_.data();
  const Index hi = std::upper_bound(begin, begin + n, u) - begin;
  const Index lo = (hi + n - 1) % n;
  return {lo, hi % n};
}

// ---------------------------------------------------------------- Gram

GramBundle::GramBundle(const Grid& grid, const Kernel& kernel) : grid_(grid), kernel_(kernel) {
  dict_.resize(2 * kernel.degree() + 1, grid.size());
  for (Index j = 0; j < grid.size(); ++j) dict_.col(j) = atom(kernel, grid[j], 0).coeffs();
}

double GramBundle::gram_entry(Index i, Index j) const {
  return deriv_inner_product(kernel_, 0, 0, grid_[i] - grid_[j]);
}

MatrixXd GramBundle::gram() const {
  MatrixXd g(size(), size());
  for (Index i = 0; i < size(); ++i)
    for (Index j = i; j < size(); ++j) g(i, j) = g(j, i) = gram_entry(i, j);
  return g;
}

MatrixXd GramBundle::gram_block(const std::vector<Index>& idx) const {
  const Index n = static_cast<Index>(idx.size());
  MatrixXd g(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) g(i, j) = g(j, i) = gram_entry(idx[i], idx[j]);
  return g;
}

VectorXd GramBundle::correlate(const TrigPoly& r) const {
  if (r.degree() != kernel_.degree()) throw std::invalid_argument("observation degree must match the kernel");
  return correlate(r.coeffs());
}

VectorXd GramBundle::correlate(const VectorXd& r) const { return dict_.transpose() * r; }

TrigPoly GramBundle::synthesize(const VectorXd& a) const {
  if (a.size() != size()) throw std::invalid_argument("coefficient vector must have one entry per grid point");
  return TrigPoly(kernel_.degree(), dict_ * a);
}

GramBundle gram_setup(const Grid& grid, const Kernel& kernel) { return GramBundle(grid, kernel); }

double lambda_max(const TrigPoly& y, const GramBundle& bundle) {
  return bundle.correlate(y).cwiseAbs().maxCoeff();
}

double lambda_max(const TrigPoly& y, const Grid& grid, const Kernel& kernel) {
  return lambda_max(y, GramBundle(grid, kernel));
}

// ---------------------------------------------------------------- LassoPath

std::vector<double> LassoPath::breakpoints() const {
  std::vector<double> b;
  for (const auto& s : segments) b.push_back(s.lambda_hi);
  if (!segments.empty()) b.push_back(segments.back().lambda_lo);
  return b;
}

const PathSegment* LassoPath::segment_at(double lambda) const {
  for (const auto& s : segments)
    if (lambda <= s.lambda_hi && lambda >= s.lambda_lo) return &s;
  if (!segments.empty() && reaches_zero && lambda > 0.0 && lambda < segments.back().lambda_lo)
    return &segments.back();
  return nullptr;
}

VectorXd LassoPath::coefficients(double lambda) const {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  VectorXd a = VectorXd::Zero(grid_size);
  if (segments.empty() || lambda >= lambda_max) return a;
  const PathSegment* s = segment_at(lambda);
  if (s == nullptr) throw std::invalid_argument("lambda lies below the computed path");
  const VectorXd v = s->active_values(lambda);
  for (std::size_t q = 0; q < s->active.size(); ++q) a[s->active[q]] = v[static_cast<Index>(q)];
  return a;
}

// ---------------------------------------------------------------- homotopy

namespace {

struct Direction {
  std::vector<Index> active;
  VectorXd signs;
  VectorXd u, v;    // a_J(lambda) = u + lambda v
  VectorXd psi_u;   // Psi_J u
  VectorXd psi_v;   // Psi_J v
};

// Solves G_J u = Psi_J^T y and G_J v = -s. Returns false on a singular or
// oversized active set.
bool direction(const GramBundle& b, const VectorXd& y, const std::vector<Index>& active, const VectorXd& signs,
               Direction& out) {
  const Index n = static_cast<Index>(active.size());
  if (n == 0 || n > b.dim()) return false;
  MatrixXd pj(b.dim(), n);
  for (Index q = 0; q < n; ++q) pj.col(q) = b.dictionary().col(active[static_cast<std::size_t>(q)]);
  const MatrixXd gj = pj.transpose() * pj;
  Eigen::LDLT<MatrixXd> ldlt(gj);
  if (ldlt.info() != Eigen::Success || !(ldlt.rcond() >= 1e-14)) return false;
  out.active = active;
  out.signs = signs;
  out.u = ldlt.solve(pj.transpose() * y);
  out.v = ldlt.solve(-signs);
  out.psi_u = pj * out.u;
  out.psi_v = pj * out.v;
  return true;
}

std::string describe(const std::map<Index, int>& active) {
  std::string s = "{";
  for (const auto& [j, sg] : active) s += (s.size() > 1 ? "," : "") + std::to_string(j) + (sg > 0 ? "+" : "-");
  return s + "}";
}

// Picks the membership change of the tied variables `boundary` that keeps the
// path consistent just below lambda. Every subset of flips is scored by how
// much it violates: entering/retained tied actives must grow in magnitude
// (s_j v_j < 0), other actives must keep their sign, and tied inactives must
// not cross +-1 (1 - sigma cv_i <= 0 violates).
Direction resolve_boundary(const GramBundle& b, const VectorXd& y, double lambda,
                           const std::map<Index, int>& current, const std::vector<Index>& boundary,
                           const VectorXd& corr) {
  const std::size_t nb = boundary.size();
  auto sign_of = [&](Index i) { return corr[i] >= 0.0 ? 1 : -1; };

  auto evaluate = [&](const std::map<Index, int>& trial, Direction& d, double& viol) {
    std::vector<Index> act;
    VectorXd s(static_cast<Index>(trial.size()));
    for (const auto& [j, sg] : trial) {
      s[static_cast<Index>(act.size())] = sg;
      act.push_back(j);
    }
    if (!direction(b, y, act, s, d)) return false;
    viol = 0.0;
    const VectorXd a = d.u + lambda * d.v;
    for (std::size_t q = 0; q < act.size(); ++q) {
      const Index qi = static_cast<Index>(q);
      const bool tied = std::find(boundary.begin(), boundary.end(), act[q]) != boundary.end();
      viol = std::max(viol, tied ? s[qi] * d.v[qi] : -s[qi] * a[qi]);
    }
    for (Index i : boundary) {
      if (trial.count(i)) continue;
      const double cv = -b.dictionary().col(i).dot(d.psi_v);
      viol = std::max(viol, 1.0 - sign_of(i) * cv);
    }
    return true;
  };

  auto build = [&](std::uint64_t mask) {
    std::map<Index, int> trial = current;
    for (std::size_t q = 0; q < nb; ++q) {
      if (!((mask >> q) & 1u)) continue;
      const Index i = boundary[q];
      if (trial.count(i)) trial.erase(i);
      else trial[i] = sign_of(i);
    }
    return trial;
  };

  bool found = false;
  bool best_ok = false;
  double best_viol = 0.0;
  Direction best;
  auto consider = [&](const std::map<Index, int>& trial) {
    Direction d;
    double viol = 0.0;
    if (!evaluate(trial, d, viol)) return;
    const bool ok = viol <= 1e-12;
    if (!found || (ok && !best_ok) || (ok == best_ok && viol < best_viol)) {
      found = true;
      best_ok = ok;
      best_viol = viol;
      best = std::move(d);
    }
  };

  constexpr std::size_t kMaxEnumerated = 12;
  if (nb <= kMaxEnumerated) {
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << nb); ++mask) consider(build(mask));
  } else {
    // Too many ties to enumerate. Single changes first (the generic event),
    // then every deletion followed by insertions by increasing index.
    for (std::size_t q = 0; q < nb && !best_ok; ++q) {
      std::map<Index, int> one = current;
      const Index i = boundary[q];
      if (one.count(i)) one.erase(i);
      else one[i] = sign_of(i);
      consider(one);
    }
    std::map<Index, int> trial = current;
    for (Index i : boundary)
      if (trial.count(i)) trial.erase(i);
    if (!best_ok) consider(trial);
    for (Index i : boundary) {
      if (best_ok) break;
      if (current.count(i)) continue;
      trial[i] = sign_of(i);
      consider(trial);
      if (best_ok) break;
    }
  }
  if (!found)
    throw SingularSystemError("homotopy: every candidate active set near " + describe(current) +
                              " gives a singular reduced system");
  return best;
}

}  // namespace

LassoPath homotopy_path(const TrigPoly& y, const GramBundle& bundle, const HomotopyOptions& opts) {
  if (y.degree() != bundle.kernel().degree()) throw std::invalid_argument("observation degree must match the kernel");
  if (!opts.to_zero && !(opts.lambda_min > 0.0)) throw std::invalid_argument("lambda_min must be positive");
  const double tau = opts.tie_tolerance;
  const Index p = bundle.size();
  const VectorXd& yc = y.coeffs();

  LassoPath path;
  path.grid_size = p;
  const VectorXd c = bundle.correlate(yc);
  double lambda = c.cwiseAbs().maxCoeff();
  path.lambda_max = lambda;
  if (!(lambda > 0.0)) {
    path.reaches_zero = true;
    path.dual_limit = TrigPoly(y.degree());
    return path;
  }
  if (!opts.to_zero && opts.lambda_min >= lambda) return path;
  // Events below this level come from rounding in the correlations, not from
  // the data, and are not followed.
  const double resolution = kPathResolution * lambda;

  std::vector<Index> pending;
  for (Index i = 0; i < p; ++i)
    if (std::abs(c[i]) >= lambda * (1.0 - tau)) pending.push_back(i);
  std::map<Index, int> active;
  VectorXd corr = c;  // correlations at the current lambda, for entering signs

  Direction d;
  VectorXd cu, cv;
  int same_lambda_rounds = 0;
  for (;;) {
    if (static_cast<int>(path.segments.size()) >= opts.max_segments)
      throw ConvergenceError("homotopy: segment budget exhausted", lambda);
    d = resolve_boundary(bundle, yc, lambda, active, pending, corr);
    active.clear();
    for (std::size_t q = 0; q < d.active.size(); ++q)
      active[d.active[q]] = d.signs[static_cast<Index>(q)] > 0 ? 1 : -1;

    cu = bundle.correlate(VectorXd(yc - d.psi_u));
    cv = -bundle.correlate(d.psi_v);

    // Next event below lambda. Variables just resolved may not re-trigger at
    // lambda itself; others may (an immediate event yields no segment).
    std::vector<char> resolved(static_cast<std::size_t>(p), 0);
    for (Index i : pending) resolved[static_cast<std::size_t>(i)] = 1;
    VectorXd t = VectorXd::Constant(p, -std::numeric_limits<double>::infinity());
    auto admit = [&](Index i, double ti) {
      const double cap = resolved[static_cast<std::size_t>(i)] ? lambda * (1.0 - tau) : lambda * (1.0 + tau);
      if (ti > 0.0 && ti < cap) t[i] = std::max(t[i], std::min(ti, lambda));
    };
    std::vector<char> is_active(static_cast<std::size_t>(p), 0);
    for (std::size_t q = 0; q < d.active.size(); ++q) {
      const Index j = d.active[q];
      is_active[static_cast<std::size_t>(j)] = 1;
      const double vq = d.v[static_cast<Index>(q)];
      if (vq != 0.0) admit(j, -d.u[static_cast<Index>(q)] / vq);
    }
    for (Index i = 0; i < p; ++i) {
      if (is_active[static_cast<std::size_t>(i)]) continue;
      if (1.0 - cv[i] != 0.0) admit(i, cu[i] / (1.0 - cv[i]));
      if (1.0 + cv[i] != 0.0) admit(i, -cu[i] / (1.0 + cv[i]));
    }
    const double next = t.maxCoeff();
    const double floor = opts.to_zero ? 0.0 : opts.lambda_min;
    if (!(next > floor) || !(next > resolution)) {
      path.segments.push_back({lambda, floor, d.active, d.signs, d.u, d.v});
      path.reaches_zero = !(next > resolution);
      break;
    }
    pending.clear();
    for (Index i = 0; i < p; ++i)
      if (t[i] >= next * (1.0 - tau)) pending.push_back(i);
    corr = cu + next * cv;
    if (next >= lambda * (1.0 - tau)) {
      if (++same_lambda_rounds > 64)
        throw ConvergenceError("homotopy: cannot resolve events at lambda = " + std::to_string(lambda), lambda);
      continue;
    }
    same_lambda_rounds = 0;
    path.segments.push_back({lambda, next, d.active, d.signs, d.u, d.v});
    lambda = next;
  }

  if (path.reaches_zero) {
    // The residual y - Psi_J(u + lambda v) tends to y - Psi_J u, which must be
    // orthogonal to every atom for the rescaled residual to converge.
    const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
    if (cu.cwiseAbs().maxCoeff() <= 1e-8 * scale) {
      path.dual_limit = TrigPoly(y.degree(), -d.psi_v);
      path.dual_limit_projected = (yc - d.psi_u).norm() > 1e-10 * std::max(1.0, yc.norm());
    }
  }
  return path;
}

LassoPath homotopy_path(const TrigPoly& y, const Grid& grid, const Kernel& kernel, double lambda_min) {
  if (!(lambda_min > 0.0)) throw std::invalid_argument("lambda_min must be positive");
  HomotopyOptions opts;
  opts.lambda_min = lambda_min;
  return homotopy_path(y, GramBundle(grid, kernel), opts);
}

// ---------------------------------------------------------------- proximal

double lasso_objective(const TrigPoly& y, const GramBundle& bundle, double lambda, const VectorXd& a) {
  const VectorXd r = y.coeffs() - bundle.dictionary() * a;
  return 0.5 * r.squaredNorm() + lambda * a.lpNorm<1>();
}

namespace {

double spectral_bound(const MatrixXd& dict) {
  // Largest eigenvalue of Psi Psi^T (small: (2K+1) x (2K+1)) by power iteration.
  const MatrixXd g = dict * dict.transpose();
  VectorXd v = VectorXd::Ones(g.rows()).normalized();
  double ev = 0.0;
  for (int it = 0; it < 500; ++it) {
    const VectorXd w = g * v;
    const double nw = w.norm();
    if (nw == 0.0) return 1.0;
    const double next = v.dot(w);
    v = w / nw;
    if (std::abs(next - ev) <= 1e-14 * next) {
      ev = next;
      break;
    }
    ev = next;
  }
  return ev * 1.001;
}

double soft(double x, double t) { return x > t ? x - t : (x < -t ? x + t : 0.0); }

}  // namespace

ProximalResult proximal_solve(const TrigPoly& y, const GramBundle& bundle, double lambda, int max_iter, double tol) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (y.degree() != bundle.kernel().degree()) throw std::invalid_argument("observation degree must match the kernel");
  const MatrixXd& psi = bundle.dictionary();
  const VectorXd& yc = y.coeffs();
  const Index p = bundle.size();

  auto gap_of = [&](const VectorXd& a, double& obj) {
    const VectorXd r = yc - psi * a;
    const double linf = (psi.transpose() * r).cwiseAbs().maxCoeff();
    const VectorXd theta = r * (linf > lambda ? lambda / linf : 1.0);
    obj = 0.5 * r.squaredNorm() + lambda * a.lpNorm<1>();
    const double dual = yc.dot(theta) - 0.5 * theta.squaredNorm();
    return obj - dual;
  };

  ProximalResult res;
  res.coefficients = VectorXd::Zero(p);
  if (lambda >= lambda_max(y, bundle)) {
    res.objective = 0.5 * yc.squaredNorm();
    return res;
  }

  const double step = 1.0 / spectral_bound(psi);
  VectorXd a = VectorXd::Zero(p), z = a, a_prev = a;
  double tk = 1.0;
  const VectorXd psity = psi.transpose() * yc;
  for (int it = 1; it <= max_iter; ++it) {
    const VectorXd grad = psi.transpose() * (psi * z) - psity;
    a_prev = a;
    for (Index j = 0; j < p; ++j) a[j] = soft(z[j] - step * grad[j], step * lambda);
    // Gradient-based adaptive restart.
    if ((z - a).dot(a - a_prev) > 0.0) {
      tk = 1.0;
      z = a;
    } else {
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
      z = a + ((tk - 1.0) / tn) * (a - a_prev);
      tk = tn;
    }
    if (it % 10 == 0 || it == max_iter) {
      double obj = 0.0;
      const double gap = gap_of(a, obj);
      res.iterations = it;
      res.objective = obj;
      res.duality_gap = gap;
      if (gap <= tol * std::max(1.0, std::abs(obj))) {
        res.coefficients = a;
        return res;
      }
    }
  }
  throw ConvergenceError("proximal solver did not reach the requested duality gap", res.duality_gap);
}

ProximalResult proximal_solve(const TrigPoly& y, const Grid& grid, const Kernel& kernel, double lambda, int max_iter,
                              double tol) {
  return proximal_solve(y, GramBundle(grid, kernel), lambda, max_iter, tol);
}

// ---------------------------------------------------------------- KKT

KktReport kkt_check(const TrigPoly& y, const GramBundle& bundle, double lambda, const VectorXd& a) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (a.size() != bundle.size()) throw std::invalid_argument("coefficient vector must have one entry per grid point");
  KktReport rep;
  rep.eta = bundle.correlate(VectorXd(y.coeffs() - bundle.dictionary() * a)) / lambda;
  for (Index j = 0; j < a.size(); ++j) {
    rep.max_dual_violation = std::max(rep.max_dual_violation, std::abs(rep.eta[j]) - 1.0);
    if (a[j] != 0.0)
      rep.max_support_violation =
          std::max(rep.max_support_violation, std::abs(rep.eta[j] - (a[j] > 0.0 ? 1.0 : -1.0)));
  }
  return rep;
}

KktReport kkt_check(const TrigPoly& y, const Grid& grid, const Kernel& kernel, double lambda, const VectorXd& a) {
  return kkt_check(y, GramBundle(grid, kernel), lambda, a);
}

// ---------------------------------------------------------------- certificates

DiscreteCertificate discrete_min_norm_certificate(const TrigPoly& y, const Grid& grid, const Kernel& kernel) {
  const GramBundle bundle(grid, kernel);
  HomotopyOptions opts;
  opts.to_zero = true;
  const LassoPath path = homotopy_path(y, bundle, opts);
  if (!path.dual_limit)
    throw SolverError("homotopy path has no dual limit as lambda -> 0");
  DiscreteCertificate cert;
  cert.dual = *path.dual_limit;
  cert.eta = adjoint(cert.dual, kernel);
  cert.projected = path.dual_limit_projected;
  const VectorXd vals = bundle.correlate(cert.dual);
  std::vector<SignedPoint> ext;
  for (Index j = 0; j < grid.size(); ++j) {
    if (std::abs(vals[j]) >= 1.0 - kExtendedSupportTolerance) {
      const int s = vals[j] > 0.0 ? 1 : -1;
      cert.extended_indices.push_back(j);
      cert.extended_signs.push_back(s);
      ext.push_back({TorusPoint(grid[j]), s});
    }
  }
  cert.extended_support = SignedSupport(std::move(ext));
  return cert;
}

// ---------------------------------------------------------------- clustering

DiscreteMeasure cluster_grid_solution(const Grid& grid, const VectorXd& a, int max_gap) {
  if (a.size() != grid.size()) throw std::invalid_argument("coefficient vector must have one entry per grid point");
  if (max_gap < 0) throw std::invalid_argument("max_gap must be >= 0");
  const Index n = a.size();
  std::vector<Index> nz;
  for (Index j = 0; j < n; ++j)
    if (a[j] != 0.0) nz.push_back(j);
  if (nz.empty()) return {};

  auto sgn = [&](Index j) { return a[j] > 0.0 ? 1 : -1; };
  auto joined = [&](Index i, Index j) {  // j follows i cyclically
    const Index gap = (j - i + n) % n - 1;
    return gap <= max_gap && sgn(i) == sgn(j);
  };
  // Start at a nonzero entry that does not continue its predecessor, so runs
  // wrapping through index 0 stay together.
  const std::size_t m = nz.size();
  std::size_t start = 0;
  for (std::size_t q = 0; q < m; ++q)
    if (!joined(nz[(q + m - 1) % m], nz[q]) || m == 1) {
      start = q;
      break;
    }

  std::vector<Spike> spikes;
  std::size_t q = 0;
  while (q < m) {
    const Index first = nz[(start + q) % m];
    double mass = a[first], weighted = 0.0, wsum = std::abs(a[first]);
    std::size_t r = q + 1;
    while (r < m && joined(nz[(start + r - 1) % m], nz[(start + r) % m])) {
      const Index j = nz[(start + r) % m];
      mass += a[j];
      weighted += std::abs(a[j]) * torus_offset(TorusPoint(grid[j]), TorusPoint(grid[first]));
      wsum += std::abs(a[j]);
      ++r;
    }
    if (std::abs(mass) >= DiscreteMeasure::kMinAmplitude)
      spikes.push_back({TorusPoint(grid[first] + weighted / wsum), mass});
    q = r;
  }
  return DiscreteMeasure(std::move(spikes));
}

DiscreteMeasure dominant_spikes(const DiscreteMeasure& m, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("fraction must be in [0, 1]");
  double top = 0.0;
  for (const auto& s : m.spikes()) top = std::max(top, std::abs(s.amplitude));
  std::vector<Spike> kept;
  for (const auto& s : m.spikes())
    if (std::abs(s.amplitude) >= fraction * top) kept.push_back(s);
  return DiscreteMeasure(std::move(kept));
}

}  // namespace spikelab
