#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "spikelab/kernel.hpp"
#include "spikelab/torus.hpp"
#include "spikelab/trig_poly.hpp"

namespace spikelab {

/// Finite set of candidate spike locations, strictly increasing in [0, 1).
class Grid {
 public:
  static constexpr Eigen::Index kMaxPoints = 4096;

  explicit Grid(std::vector<double> points);
  /// The points j / 2^n, j = 0..2^n - 1.
  static Grid dyadic(int level);

  const Eigen::VectorXd& points() const { return points_; }
  Eigen::Index size() const { return points_.size(); }
  double operator[](Eigen::Index j) const { return points_[j]; }
  std::optional<int> dyadic_level() const { return level_; }

  /// Index of the closest grid point (torus distance).
  Eigen::Index nearest(double t) const;
  /// Indices (lo, hi) of the cyclic grid neighbours with g_lo <= t < g_hi.
  std::pair<Eigen::Index, Eigen::Index> bracket(double t) const;

 private:
  Eigen::VectorXd points_;
  std::optional<int> level_;
};

/// The grid dictionary Psi a = Phi(sum_j a_j delta_{g_j}) together with the
/// kernel it came from. Columns of `dictionary()` are the atoms phi(g_j - .)
/// in orthonormal trigonometric coordinates, so Psi^* Psi is their Gram.
class GramBundle {
 public:
  GramBundle(const Grid& grid, const Kernel& kernel);

  const Grid& grid() const { return grid_; }
  const Kernel& kernel() const { return kernel_; }
  const Eigen::MatrixXd& dictionary() const { return dict_; }
  Eigen::Index size() const { return grid_.size(); }
  int dim() const { return static_cast<int>(dict_.rows()); }

  /// phi~(g_i - g_j), from the kernel's autocorrelation.
  double gram_entry(Eigen::Index i, Eigen::Index j) const;
  /// Full P x P Gram; only sensible for moderate P.
  Eigen::MatrixXd gram() const;
  Eigen::MatrixXd gram_block(const std::vector<Eigen::Index>& idx) const;

  /// Psi^* r, i.e. (Phi^* r)(g_j) for every grid point.
  Eigen::VectorXd correlate(const TrigPoly& r) const;
  Eigen::VectorXd correlate(const Eigen::VectorXd& r_coeffs) const;
  /// Psi a.
  TrigPoly synthesize(const Eigen::VectorXd& a) const;

 private:
  Grid grid_;
  Kernel kernel_;
  Eigen::MatrixXd dict_;
};

GramBundle gram_setup(const Grid& grid, const Kernel& kernel);

/// max_j |(Phi^* y)(g_j)|: the smallest lambda for which a = 0 solves the
/// grid Lasso.
double lambda_max(const TrigPoly& y, const Grid& grid, const Kernel& kernel);
double lambda_max(const TrigPoly& y, const GramBundle& bundle);

/// One affine piece of the Lasso path: on [lambda_lo, lambda_hi] the active
/// coefficients are a_J(lambda) = offset + lambda * slope with fixed signs.
struct PathSegment {
  double lambda_hi = 0.0;
  double lambda_lo = 0.0;
  std::vector<Eigen::Index> active;
  Eigen::VectorXd signs;
  Eigen::VectorXd offset;
  Eigen::VectorXd slope;

  Eigen::VectorXd active_values(double lambda) const { return offset + lambda * slope; }
};

struct LassoPath {
  double lambda_max = 0.0;
  Eigen::Index grid_size = 0;
  std::vector<PathSegment> segments;  // ordered by decreasing lambda
  /// True when no event occurs below the last segment, so the last segment
  /// extends down to lambda -> 0+.
  bool reaches_zero = false;
  /// lim_{lambda->0+} (y - Psi a_lambda) / lambda, when it exists.
  std::optional<TrigPoly> dual_limit;
  /// The limit was taken for the projection of y onto Im Psi.
  bool dual_limit_projected = false;

  /// Breakpoints lambda_max = b_0 > b_1 > ... (segment upper ends, then the
  /// last lower end).
  std::vector<double> breakpoints() const;
  const PathSegment* segment_at(double lambda) const;
  /// Full coefficient vector at lambda (zero above lambda_max).
  Eigen::VectorXd coefficients(double lambda) const;
};

/// Relative (to lambda_max) level below which path events are attributed to
/// rounding and ignored; the last segment then extends to lambda -> 0+.
inline constexpr double kPathResolution = 1e-11;

struct HomotopyOptions {
  double lambda_min = 0.0;
  /// Follow the path until no further event exists (lambda -> 0+).
  bool to_zero = false;
  /// Relative window in lambda within which events are treated as a tie.
  double tie_tolerance = 1e-9;
  int max_segments = 200000;
};

/// Exact piecewise-affine solution path of
///   min_a 1/2 ||y - Psi a||^2 + lambda ||a||_1
/// from lambda_max down to lambda_min > 0.
LassoPath homotopy_path(const TrigPoly& y, const Grid& grid, const Kernel& kernel, double lambda_min);
LassoPath homotopy_path(const TrigPoly& y, const GramBundle& bundle, const HomotopyOptions& opts);

/// Objective 1/2 ||y - Psi a||^2 + lambda ||a||_1.
double lasso_objective(const TrigPoly& y, const GramBundle& bundle, double lambda,
                       const Eigen::VectorXd& a);

struct ProximalResult {
  Eigen::VectorXd coefficients;
  double objective = 0.0;
  double duality_gap = 0.0;
  int iterations = 0;
};

/// Accelerated proximal gradient (FISTA with adaptive restart), stopped on a
/// relative duality gap <= tol. Throws ConvergenceError after max_iter.
ProximalResult proximal_solve(const TrigPoly& y, const Grid& grid, const Kernel& kernel, double lambda,
                              int max_iter = 200000, double tol = 1e-12);
ProximalResult proximal_solve(const TrigPoly& y, const GramBundle& bundle, double lambda,
                              int max_iter = 200000, double tol = 1e-12);

struct KktReport {
  Eigen::VectorXd eta;                 // (Phi^*(y - Psi a) / lambda)(g_j)
  double max_dual_violation = 0.0;     // max_j (|eta_j| - 1)_+
  double max_support_violation = 0.0;  // max over a_j != 0 of |eta_j - sign a_j|
  double max_violation() const { return std::max(max_dual_violation, max_support_violation); }
};

KktReport kkt_check(const TrigPoly& y, const GramBundle& bundle, double lambda, const Eigen::VectorXd& a);
KktReport kkt_check(const TrigPoly& y, const Grid& grid, const Kernel& kernel, double lambda,
                    const Eigen::VectorXd& a);

struct DiscreteCertificate {
  TrigPoly dual;  // p_0^G
  TrigPoly eta;   // eta_0^G = Phi^* p_0^G
  SignedSupport extended_support;
  std::vector<Eigen::Index> extended_indices;
  std::vector<int> extended_signs;
  /// y was not in the span of the grid atoms and its projection was used.
  bool projected = false;
};

/// Saturation threshold for the extended support.
inline constexpr double kExtendedSupportTolerance = 1e-7;

DiscreteCertificate discrete_min_norm_certificate(const TrigPoly& y, const Grid& grid, const Kernel& kernel);

/// Groups the nonzero grid coefficients into runs of cyclically adjacent
/// same-sign points (gaps of at most `max_gap` empty points allowed); each
/// run becomes one spike carrying the summed amplitude at the
/// amplitude-weighted mean position.
DiscreteMeasure cluster_grid_solution(const Grid& grid, const Eigen::VectorXd& a, int max_gap = 0);

/// Spikes of m with |a| >= fraction * max |a|.
DiscreteMeasure dominant_spikes(const DiscreteMeasure& m, double fraction);

}  // namespace spikelab
