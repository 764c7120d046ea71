#include "spikelab/continuous_solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "spikelab/certificates.hpp"
#include "spikelab/errors.hpp"
#include "spikelab/operators.hpp"

namespace spikelab {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

ExtremalitySystem::ExtremalitySystem(Kernel kernel, TrigPoly y_obs, VectorXd signs,
                                     std::optional<TrigPoly> scaled_noise)
    : kernel_(std::move(kernel)), y_obs_(std::move(y_obs)), signs_(std::move(signs)),
      scaled_noise_(std::move(scaled_noise)) {
  if (y_obs_.degree() != kernel_.degree()) throw std::invalid_argument("observation degree must match the kernel");
  if (scaled_noise_ && scaled_noise_->degree() != kernel_.degree())
    throw std::invalid_argument("noise degree must match the kernel");
  if (signs_.size() == 0) throw std::invalid_argument("need at least one spike");
  for (Index i = 0; i < signs_.size(); ++i)
    if (signs_[i] != 1.0 && signs_[i] != -1.0) throw std::invalid_argument("signs must be +1 or -1");
}

TrigPoly ExtremalitySystem::observation(double lambda) const {
  if (!scaled_noise_) return y_obs_;
  return y_obs_ + lambda * *scaled_noise_;
}

namespace {

void check_shapes(const ExtremalitySystem& sys, const VectorXd& a, const VectorXd& x) {
  if (a.size() != sys.spikes() || x.size() != sys.spikes())
    throw std::invalid_argument("amplitudes and positions must have one entry per spike");
}

// q = Phi^*(Phi_x a - y_obs) as a trigonometric polynomial.
TrigPoly correlation(const ExtremalitySystem& sys, const VectorXd& a, const VectorXd& x, double lambda) {
  return adjoint(synthesize(sys.kernel(), x, a, VectorXd()) - sys.observation(lambda), sys.kernel());
}

double residual_scale(const ExtremalitySystem& sys, const VectorXd& a) {
  return deriv_inner_product(sys.kernel(), 0, 0, 0.0) * std::max(1.0, a.cwiseAbs().maxCoeff());
}

int first_sign_flip(const ExtremalitySystem& sys, const VectorXd& a) {
  for (Index i = 0; i < a.size(); ++i)
    if (!(a[i] * sys.signs()[i] > 0.0)) return static_cast<int>(i);
  return -1;
}

VectorXd wrap_all(VectorXd x) {
  for (Index i = 0; i < x.size(); ++i) x[i] = TorusPoint::wrap(x[i]);
  return x;
}

}  // namespace

VectorXd eval_E(const ExtremalitySystem& sys, const VectorXd& a, const VectorXd& x, double lambda) {
  check_shapes(sys, a, x);
  const Index n = sys.spikes();
  const TrigPoly q = correlation(sys, a, x, lambda);
  VectorXd e(2 * n);
  for (Index i = 0; i < n; ++i) {
    e[i] = q(x[i]) + lambda * sys.signs()[i];
    e[n + i] = q(x[i], 1);
  }
  return e;
}

MatrixXd jacobian_E(const ExtremalitySystem& sys, const VectorXd& a, const VectorXd& x, double lambda) {
  check_shapes(sys, a, x);
  const Index n = sys.spikes();
  const Kernel& k = sys.kernel();
  const TrigPoly q = correlation(sys, a, x, lambda);
  MatrixXd j = MatrixXd::Zero(2 * n, 2 * n);
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c) {
      const double d = x[r] - x[c];
      j(r, c) = deriv_inner_product(k, 0, 0, d);
      j(n + r, c) = deriv_inner_product(k, 1, 0, d);
      j(r, n + c) = a[c] * deriv_inner_product(k, 0, 1, d);
      j(n + r, n + c) = a[c] * deriv_inner_product(k, 1, 1, d);
    }
  for (Index r = 0; r < n; ++r) {
    j(r, n + r) += q(x[r], 1);
    j(n + r, n + r) += q(x[r], 2);
  }
  return j;
}

void certify_solution(const ExtremalitySystem& sys, ContinuousSolution& sol) {
  const DiscreteMeasure m(sol.x, sol.a);
  if (m.size() != static_cast<std::size_t>(sys.spikes())) {
    sol.certified = false;
    return;
  }
  if (sol.lambda > 0.0) {
    const TrigPoly r = sys.observation(sol.lambda) - synthesize(sys.kernel(), sol.x, sol.a, VectorXd());
    sol.eta = adjoint(r, sys.kernel()) / sol.lambda;
    const CertificateReport rep = analyse_certificate(sol.eta, m, "lasso_dual");
    sol.dual_sup = rep.sup_norm;
    sol.certified = rep.sup_norm <= 1.0 + 1e-8 && rep.interpolation_residual <= 1e-6;
  } else {
    const CertificateReport rep = vanishing_derivative_precert(m, sys.kernel());
    sol.eta = rep.eta;
    sol.dual_sup = rep.sup_norm;
    sol.certified = rep.sup_norm <= 1.0 + 1e-8 && rep.interpolation_residual <= 1e-6;
  }
}

ContinuousSolution newton_solve(const ExtremalitySystem& sys, const VectorXd& init_a, const VectorXd& init_x,
                                double lambda, const NewtonOptions& opts) {
  check_shapes(sys, init_a, init_x);
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (const int i = first_sign_flip(sys, init_a); i >= 0)
    throw std::invalid_argument("initial amplitude " + std::to_string(i) + " does not match its sign");
  const Index n = sys.spikes();
  VectorXd a = init_a, x = wrap_all(init_x);
  VectorXd e = eval_E(sys, a, x, lambda);
  double norm = e.cwiseAbs().maxCoeff();
  int it = 0;
  for (; norm > opts.tol * residual_scale(sys, a); ++it) {
    if (it >= opts.max_iter) throw ConvergenceError("Newton: iteration budget exhausted", norm);
    const MatrixXd jac = jacobian_E(sys, a, x, lambda);
    Eigen::PartialPivLU<MatrixXd> lu(jac);
    if (!(lu.rcond() >= 1e-14)) throw SingularSystemError("Newton: singular Jacobian");
    const VectorXd step = lu.solve(-e);
    double t = 1.0;
    int halvings = 0;
    for (;;) {
      const VectorXd a_try = a + t * step.head(n);
      const VectorXd x_try = wrap_all(x + t * step.tail(n));
      const VectorXd e_try = eval_E(sys, a_try, x_try, lambda);
      const double n_try = e_try.cwiseAbs().maxCoeff();
      if (n_try < norm || n_try <= opts.tol * residual_scale(sys, a_try)) {
        a = a_try;
        x = x_try;
        e = e_try;
        norm = n_try;
        break;
      }
      if (++halvings > opts.max_halvings) throw ConvergenceError("Newton: line search failed", norm);
      t *= 0.5;
    }
    if (const int i = first_sign_flip(sys, a); i >= 0)
      throw SignFlipError("Newton: amplitude " + std::to_string(i) + " changed sign", i);
  }
  for (int p = 0; p < opts.polish_steps && norm > 0.0; ++p) {
    Eigen::PartialPivLU<MatrixXd> lu(jacobian_E(sys, a, x, lambda));
    if (!(lu.rcond() >= 1e-14)) break;
    const VectorXd step = lu.solve(-e);
    const VectorXd a_try = a + step.head(n);
    const VectorXd x_try = wrap_all(x + step.tail(n));
    if (first_sign_flip(sys, a_try) >= 0) break;
    const VectorXd e_try = eval_E(sys, a_try, x_try, lambda);
    const double n_try = e_try.cwiseAbs().maxCoeff();
    if (!(n_try < norm)) break;
    a = a_try;
    x = x_try;
    e = e_try;
    norm = n_try;
    ++it;
  }
  ContinuousSolution sol;
  sol.lambda = lambda;
  sol.a = a;
  sol.x = x;
  sol.residual = norm;
  sol.iterations = it;
  certify_solution(sys, sol);
  return sol;
}

DiscreteMeasure seed_from_grid(const ExtremalitySystem& sys, double lambda, int grid_level) {
  if (!(lambda > 0.0)) throw std::invalid_argument("seeding needs lambda > 0");
  const GramBundle bundle(Grid::dyadic(grid_level), sys.kernel());
  HomotopyOptions opts;
  opts.lambda_min = lambda;
  const TrigPoly y = sys.observation(lambda);
  const LassoPath path = homotopy_path(y, bundle, opts);
  const DiscreteMeasure m =
      dominant_spikes(cluster_grid_solution(bundle.grid(), path.coefficients(lambda), 0), kSeedClusterFraction);
  if (static_cast<Index>(m.size()) != sys.spikes())
    throw SolverError("grid seed has " + std::to_string(m.size()) + " clusters, expected " +
                      std::to_string(sys.spikes()));
  // Match the clusters to the sign pattern cyclically: positions are sorted,
  // the system's signs follow the same sorted order.
  const VectorXd s = m.signs();
  if (s != sys.signs()) throw SolverError("grid seed does not match the sign pattern");
  return m;
}

ContinuationResult continuation_path(const ExtremalitySystem& sys, const std::vector<double>& lambdas,
                                     const std::optional<DiscreteMeasure>& start, const NewtonOptions& opts) {
  if (lambdas.empty()) throw std::invalid_argument("lambda grid is empty");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0)) throw std::invalid_argument("lambda grid must be strictly positive");
    if (i > 0 && !(lambdas[i] < lambdas[i - 1])) throw std::invalid_argument("lambda grid must be strictly decreasing");
  }
  ContinuationResult res;
  VectorXd a, x;
  try {
    const DiscreteMeasure m0 = start ? *start : seed_from_grid(sys, lambdas.front());
    if (static_cast<Index>(m0.size()) != sys.spikes()) throw std::invalid_argument("start has the wrong spike count");
    a = m0.amplitudes();
    x = m0.positions();
  } catch (const SolverError& err) {
    res.truncated = true;
    res.diagnostic = std::string("seed: ") + err.what();
    return res;
  }
  for (double lam : lambdas) {
    try {
      ContinuousSolution sol = newton_solve(sys, a, x, lam, opts);
      const bool ok = sol.certified;
      a = sol.a;
      x = sol.x;
      res.points.push_back(std::move(sol));
      if (!ok) {
        res.truncated = true;
        res.diagnostic = "uncertified root at lambda = " + std::to_string(lam);
        break;
      }
    } catch (const SolverError& err) {
      res.truncated = true;
      res.diagnostic = "lambda = " + std::to_string(lam) + ": " + err.what();
      break;
    }
  }
  return res;
}

}  // namespace spikelab
