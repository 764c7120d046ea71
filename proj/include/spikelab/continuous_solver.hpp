#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "spikelab/grid_solvers.hpp"
#include "spikelab/kernel.hpp"
#include "spikelab/torus.hpp"
#include "spikelab/trig_poly.hpp"

namespace spikelab {

/// First-order optimality conditions of the continuous Lasso restricted to N
/// spikes of fixed signs s:
///   E(a, x, lambda) = [ q(x_i) + lambda s_i ; q'(x_i) ],
///   q = Phi^* (Phi_x a - y_obs(lambda)),
/// where y_obs(lambda) = y_obs + lambda * w0 (w0 = 0 unless the noise is
/// tied to lambda).
class ExtremalitySystem {
 public:
  ExtremalitySystem(Kernel kernel, TrigPoly y_obs, Eigen::VectorXd signs,
                    std::optional<TrigPoly> scaled_noise = std::nullopt);

  const Kernel& kernel() const { return kernel_; }
  const TrigPoly& y_obs() const { return y_obs_; }
  const Eigen::VectorXd& signs() const { return signs_; }
  const std::optional<TrigPoly>& scaled_noise() const { return scaled_noise_; }
  Eigen::Index spikes() const { return signs_.size(); }

  TrigPoly observation(double lambda) const;

 private:
  Kernel kernel_;
  TrigPoly y_obs_;
  Eigen::VectorXd signs_;
  std::optional<TrigPoly> scaled_noise_;
};

/// Stacked residual (length 2N).
Eigen::VectorXd eval_E(const ExtremalitySystem& sys, const Eigen::VectorXd& a, const Eigen::VectorXd& x,
                       double lambda);

/// Analytic Jacobian with respect to (a, x), 2N x 2N.
Eigen::MatrixXd jacobian_E(const ExtremalitySystem& sys, const Eigen::VectorXd& a, const Eigen::VectorXd& x,
                           double lambda);

struct ContinuousSolution {
  double lambda = 0.0;
  Eigen::VectorXd a;
  Eigen::VectorXd x;
  double residual = 0.0;  // ||E||_inf at the returned point
  int iterations = 0;
  /// The dual candidate (Phi^*(y_obs - Phi_x a) / lambda, or eta_V at
  /// lambda = 0) has sup norm <= 1 + 1e-8 and interpolates the signs.
  bool certified = false;
  double dual_sup = 0.0;
  TrigPoly eta;

  DiscreteMeasure measure() const { return DiscreteMeasure(x, a); }
};

struct NewtonOptions {
  int max_iter = 50;
  double tol = 1e-11;   // relative to phi~(0) max(1, ||a||_inf)
  int max_halvings = 30;
  // Extra undamped steps after convergence, kept while they lower ||E||.
  // At small lambda the dual (q / lambda) amplifies the residual.
  int polish_steps = 3;
};

/// Damped Newton on E = 0. Throws SingularSystemError on a singular Jacobian,
/// SignFlipError if an amplitude changes sign, ConvergenceError when the
/// iteration budget or the line search is exhausted. Roots failing
/// certification are returned with certified = false.
ContinuousSolution newton_solve(const ExtremalitySystem& sys, const Eigen::VectorXd& init_a,
                                const Eigen::VectorXd& init_x, double lambda, const NewtonOptions& opts = {});

/// Dual certification of a candidate solution.
void certify_solution(const ExtremalitySystem& sys, ContinuousSolution& sol);

struct ContinuationResult {
  std::vector<ContinuousSolution> points;
  bool truncated = false;
  std::string diagnostic;
};

/// Follows the root of E along a strictly decreasing positive lambda grid,
/// warm-starting each Newton solve from the previous point. The path stops at
/// the first failed or uncertified point (which is kept, flagged, when it
/// exists). Without a start, the first point is seeded from the grid Lasso on
/// the dyadic level-12 grid.
ContinuationResult continuation_path(const ExtremalitySystem& sys, const std::vector<double>& lambdas,
                                     const std::optional<DiscreteMeasure>& start = std::nullopt,
                                     const NewtonOptions& opts = {});

/// Clusters lighter than this fraction of the heaviest are ignored when
/// seeding from a grid solution.
inline constexpr double kSeedClusterFraction = 1e-2;

/// Grid-based initial guess at lambda: dominant clusters of the grid Lasso
/// solution, which must match the sign pattern of sys.
DiscreteMeasure seed_from_grid(const ExtremalitySystem& sys, double lambda, int grid_level = 12);

}  // namespace spikelab
