#include "spikelab/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "spikelab/errors.hpp"
#include "spikelab/operators.hpp"

namespace spikelab {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------- sup norm

SupNormResult sup_norm_analysis(const TrigPoly& eta) {
  const int d = eta.degree();
  const int n = 64 * (2 * d + 1);
  const VectorXd v = sample(eta, n);
  const VectorXd av = v.cwiseAbs();
  SupNormResult res;
  res.sup = av.maxCoeff();
  if (d == 0 || av.maxCoeff() - av.minCoeff() <= 1e-14 * std::max(1.0, res.sup)) {
    res.sup = std::abs(eta.constant());
    if (d > 0) res.sup = std::max(res.sup, av.maxCoeff());
    return res;
  }

  const double h = 1.0 / n;
  const double dscale = 2.0 * std::numbers::pi * d * std::max(1.0, res.sup);
  for (int j = 0; j < n; ++j) {
    const double prev = av[(j + n - 1) % n], next = av[(j + 1) % n];
    if (!(av[j] >= prev && av[j] >= next) || av[j] == 0.0) continue;
    const double t0 = static_cast<double>(j) / n;
    double t = t0;
    bool ok = false;
    for (int it = 0; it < 60; ++it) {
      const double g = eta(t, 1);
      if (std::abs(g) < 1e-12 * dscale) {
        ok = true;
        break;
      }
      const double hss = eta(t, 2);
      if (hss == 0.0) break;
      t -= g / hss;
      if (std::abs(torus_offset(TorusPoint(t), TorusPoint(t0))) > 1.5 * h) break;
    }
    Extremum e;
    if (ok) {
      const double val = eta(t);
      // A converged point must be a maximum of |eta|, not a minimum.
      ok = std::abs(val) >= av[j] && eta(t, 2) * val <= 0.0;
      e = {TorusPoint(t), val, ok};
    }
    if (!ok) {
      e = {TorusPoint(t0), v[j], false};
      res.fallback_used = true;
    }
    const bool dup = std::any_of(res.extrema.begin(), res.extrema.end(), [&](const Extremum& o) {
      return torus_dist(o.position, e.position) < 1e-9;
    });
    if (!dup) res.extrema.push_back(e);
    res.sup = std::max(res.sup, std::abs(e.value));
  }
  std::sort(res.extrema.begin(), res.extrema.end(),
            [](const Extremum& a, const Extremum& b) { return a.position < b.position; });
  return res;
}

// ---------------------------------------------------------------- analysis

CertificateReport analyse_certificate(const TrigPoly& eta, const DiscreteMeasure& m0, const std::string& kind,
                                      const NdscTolerances& tol) {
  CertificateReport rep;
  rep.kind = kind;
  rep.eta = eta;
  const SupNormResult sup = sup_norm_analysis(eta);
  rep.sup_norm = sup.sup;
  rep.extrema = sup.extrema;
  rep.polish_fallback = sup.fallback_used;
  for (const auto& e : sup.extrema)
    if (std::abs(e.value) >= 1.0 - kSaturationTolerance) rep.saturation_points.push_back({e.position, e.value > 0 ? 1 : -1});

  const Index n = static_cast<Index>(m0.size());
  const VectorXd x = m0.positions();
  const VectorXd s = m0.signs();
  rep.second_derivatives.resize(n);
  for (Index i = 0; i < n; ++i) {
    rep.interpolation_residual = std::max(rep.interpolation_residual, std::abs(eta(x[i]) - s[i]));
    rep.derivative_residual = std::max(rep.derivative_residual, std::abs(eta(x[i], 1)));
    rep.second_derivatives[i] = eta(x[i], 2);
  }
  rep.is_certificate =
      rep.sup_norm <= 1.0 + kCertificateSupTolerance && rep.interpolation_residual <= kInterpolationTolerance;
  if (!rep.is_certificate || n == 0) return rep;

  // Non-degenerate source condition: strictly below one outside the
  // neighbourhoods, strictly concave |eta| at each spike, and no other
  // near-saturating maximum inside a neighbourhood.
  const double delta = n >= 2 ? min_separation(x) / 4.0 : 0.25;
  auto nearest_spike = [&](double t) {
    Index best = 0;
    double dist = 1.0;
    for (Index i = 0; i < n; ++i) {
      const double dd = torus_dist(TorusPoint(t), TorusPoint(x[i]));
      if (dd < dist) {
        dist = dd;
        best = i;
      }
    }
    return std::pair{best, dist};
  };
  bool ok = true;
  const int ns = 64 * (2 * eta.degree() + 1);
  for (int j = 0; j < ns && ok; ++j) {
    const double t = static_cast<double>(j) / ns;
    if (nearest_spike(t).second >= delta && std::abs(eta(t)) > 1.0 - tol.saturation) ok = false;
  }
  for (Index i = 0; i < n && ok; ++i)
    for (double t : {x[i] - delta, x[i] + delta})
      if (std::abs(eta(t)) > 1.0 - tol.saturation) ok = false;
  for (const auto& e : rep.extrema) {
    if (!ok) break;
    if (std::abs(e.value) <= 1.0 - tol.saturation) continue;
    if (nearest_spike(e.position.value()).second > 1e-6) ok = false;
  }
  for (Index i = 0; i < n && ok; ++i)
    if (!(s[i] * rep.second_derivatives[i] <= -tol.curvature)) ok = false;
  rep.ndsc = ok;
  return rep;
}

// ---------------------------------------------------------------- builders

namespace {

void require_nonempty(const DiscreteMeasure& m0) {
  if (m0.empty()) throw std::invalid_argument("measure must have at least one spike");
}

}  // namespace

CertificateReport vanishing_derivative_precert(const DiscreteMeasure& m0, const Kernel& k) {
  require_nonempty(m0);
  const Index n = static_cast<Index>(m0.size());
  const VectorXd x = m0.positions();
  const GammaGram gram = build_gamma_gram(x, k);
  VectorXd rhs = VectorXd::Zero(2 * n);
  rhs.head(n) = m0.signs();
  const VectorXd coef = solve_symmetric(gram.matrix, rhs, 1e-12, "Gamma Gram");
  const TrigPoly p(k.degree(), gamma_matrix(x, k) * coef);
  CertificateReport rep = analyse_certificate(adjoint(p, k), m0, "vanishing_derivative");
  rep.dual = p;
  return rep;
}

CertificateReport fuchs_precert(const DiscreteMeasure& m0, const Kernel& k, const std::optional<Grid>& grid) {
  require_nonempty(m0);
  const Index n = static_cast<Index>(m0.size());
  const VectorXd x = m0.positions();
  MatrixXd phi(2 * k.degree() + 1, n);
  for (Index i = 0; i < n; ++i) phi.col(i) = atom(k, x[i], 0).coeffs();
  MatrixXd g(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) g(i, j) = deriv_inner_product(k, 0, 0, x[i] - x[j]);
  const VectorXd coef = solve_symmetric(g, m0.signs(), 1e-12, "support Gram");
  const TrigPoly p(k.degree(), phi * coef);
  CertificateReport rep = analyse_certificate(adjoint(p, k), m0, "fuchs");
  rep.dual = p;
  if (grid) {
    double off = 0.0;
    for (Index j = 0; j < grid->size(); ++j) {
      const double t = (*grid)[j];
      bool on = false;
      for (Index i = 0; i < n; ++i) on = on || torus_dist(TorusPoint(t), TorusPoint(x[i])) < 1e-12;
      if (!on) off = std::max(off, std::abs(rep.eta(t)));
    }
    rep.grid_sup_off_support = off;
  }
  return rep;
}

CertificateReport fejer_precert(const DiscreteMeasure& m0, int fc) {
  require_nonempty(m0);
  const Kernel kf = fejer_squared(fc);
  const Index n = static_cast<Index>(m0.size());
  const VectorXd x = m0.positions();
  // eta(t) = sum_i alpha_i K(t - x_i) + beta_i K'(t - x_i); rows enforce
  // eta(x_j) = s_j and eta'(x_j) = 0.
  MatrixXd a(2 * n, 2 * n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) {
      const double d = x[j] - x[i];
      a(j, i) = kf(d, 0);
      a(j, n + i) = kf(d, 1);
      a(n + j, i) = kf(d, 1);
      a(n + j, n + i) = kf(d, 2);
    }
  VectorXd rhs = VectorXd::Zero(2 * n);
  rhs.head(n) = m0.signs();
  Eigen::PartialPivLU<MatrixXd> lu(a);
  if (!(lu.rcond() >= 1e-12)) throw SingularSystemError("Fejer interpolation system is singular");
  const VectorXd coef = lu.solve(rhs);
  // K'(t - x) = -d/dx K(x - t), hence the sign on the derivative atoms.
  TrigPoly eta(fc);
  for (Index i = 0; i < n; ++i) {
    eta += coef[i] * atom(kf, x[i], 0);
    eta -= coef[n + i] * atom(kf, x[i], 1);
  }
  return analyse_certificate(eta, m0, "fejer");
}

CertificateReport check_ndsc(const DiscreteMeasure& m0, const Kernel& k, const NdscTolerances& tol) {
  CertificateReport rep = vanishing_derivative_precert(m0, k);
  CertificateReport out = analyse_certificate(rep.eta, m0, "vanishing_derivative", tol);
  out.dual = rep.dual;
  return out;
}

FirstOrderExpansion first_order_expansion(const DiscreteMeasure& m0, const Kernel& k) {
  require_nonempty(m0);
  const Index n = static_cast<Index>(m0.size());
  const GammaGram gram = build_gamma_gram(m0.positions(), k);
  VectorXd rhs = VectorXd::Zero(2 * n);
  rhs.head(n) = m0.signs();
  const VectorXd z = solve_symmetric(gram.matrix, rhs, 1e-12, "Gamma Gram");
  const VectorXd a0 = m0.amplitudes();
  return {-z.head(n), -(z.tail(n).array() / a0.array()).matrix()};
}

MinNormEstimate estimate_min_norm_certificate(const TrigPoly& y, const Kernel& k, const std::vector<double>& lambdas,
                                              int grid_n) {
  const int fc = k.degree();
  if (grid_n < 0 || grid_n > 12 || (1 << grid_n) < 8 * (2 * fc + 1))
    throw std::invalid_argument("grid level must satisfy 2^n >= 8 (2 fc + 1) and n <= 12");
  if (lambdas.empty()) throw std::invalid_argument("need at least one lambda");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0)) throw std::invalid_argument("lambdas must be positive");
    if (i > 0 && !(lambdas[i] < lambdas[i - 1])) throw std::invalid_argument("lambdas must be strictly decreasing");
  }
  const GramBundle bundle(Grid::dyadic(grid_n), k);
  HomotopyOptions opts;
  opts.lambda_min = lambdas.back();
  const LassoPath path = homotopy_path(y, bundle, opts);
  MinNormEstimate est;
  est.lambdas = lambdas;
  for (double lam : lambdas) {
    const VectorXd a = path.coefficients(lam);
    const TrigPoly p = (y - bundle.synthesize(a)) / lam;
    est.sequence.push_back(adjoint(p, k));
  }
  est.estimate = est.sequence.back();
  return est;
}

}  // namespace spikelab
