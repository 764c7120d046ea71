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

/// A local maximum of |eta|.
struct Extremum {
  TorusPoint position;
  double value = 0.0;    // eta at the extremum (signed)
  bool polished = true;  // false when Newton refinement fell back to the sample
};

struct SupNormResult {
  double sup = 0.0;
  std::vector<Extremum> extrema;  // empty for a constant polynomial
  bool fallback_used = false;
};

/// sup |eta| over the torus: 64 (2d+1) equispaced samples bracket every local
/// maximum of |eta|, which Newton on eta' then refines to |eta'| < 1e-12 (in
/// units of 2 pi d sup|eta|).
SupNormResult sup_norm_analysis(const TrigPoly& eta);

/// Tolerances of the non-degenerate source condition.
struct NdscTolerances {
  double saturation = 1e-6;  // |eta| <= 1 - saturation away from the support
  double curvature = 1e-6;   // |eta''(x_i)| >= curvature
};

struct CertificateReport {
  std::string kind;
  TrigPoly eta;
  std::optional<TrigPoly> dual;  // p with eta = Phi^* p, when eta is in Im Phi^*
  double sup_norm = 0.0;
  std::vector<Extremum> extrema;
  std::vector<SignedPoint> saturation_points;  // extrema with |eta| >= 1 - 1e-7
  Eigen::VectorXd second_derivatives;          // eta''(x_i)
  double interpolation_residual = 0.0;         // max_i |eta(x_i) - s_i|
  double derivative_residual = 0.0;            // max_i |eta'(x_i)|
  bool is_certificate = false;
  bool ndsc = false;
  bool polish_fallback = false;
  /// max |eta(g)| over grid points off the support, when a grid was given.
  std::optional<double> grid_sup_off_support;
};

inline constexpr double kCertificateSupTolerance = 1e-9;
inline constexpr double kInterpolationTolerance = 1e-8;
inline constexpr double kSaturationTolerance = 1e-7;

/// eta_V = Phi^* Gamma_x (Gamma_x^* Gamma_x)^{-1} (s, 0): interpolates the
/// signs with vanishing derivative at the spikes.
CertificateReport vanishing_derivative_precert(const DiscreteMeasure& m0, const Kernel& k);

/// eta_F = Phi^* Phi_I (Phi_I^* Phi_I)^{-1} s: minimal-norm interpolant of the
/// signs alone. With a grid, also reports the sup over off-support grid points.
CertificateReport fuchs_precert(const DiscreteMeasure& m0, const Kernel& k,
                                const std::optional<Grid>& grid = std::nullopt);

/// Interpolant of the signs with vanishing derivative built from translates of
/// the squared Fejer kernel K and its derivative (not in Im Phi^* in general).
CertificateReport fejer_precert(const DiscreteMeasure& m0, int fc);

/// Evaluates interpolation, sup norm and the non-degenerate source condition
/// for an arbitrary candidate eta. Neighbourhoods have radius min_sep / 4
/// (1/4 for a single spike).
CertificateReport analyse_certificate(const TrigPoly& eta, const DiscreteMeasure& m0, const std::string& kind,
                                      const NdscTolerances& tol = {});

/// Non-degenerate source condition for eta_V.
CertificateReport check_ndsc(const DiscreteMeasure& m0, const Kernel& k, const NdscTolerances& tol = {});

/// Tangent of the solution path at lambda = 0 along the direction of w = 0:
/// (a_dot, x_dot) = -[I, 0; 0, diag(a0)^{-1}] (Gamma^* Gamma)^{-1} (s, 0).
struct FirstOrderExpansion {
  Eigen::VectorXd a_dot;
  Eigen::VectorXd x_dot;
};
FirstOrderExpansion first_order_expansion(const DiscreteMeasure& m0, const Kernel& k);

struct MinNormEstimate {
  std::vector<double> lambdas;
  std::vector<TrigPoly> sequence;  // eta_lambda on the grid path, one per lambda
  TrigPoly estimate;               // the last element
};

/// Approximates the continuous minimal-norm certificate by
/// eta_lambda = Phi^* (y - Psi a_lambda) / lambda along the grid Lasso path on
/// the dyadic grid of level grid_n (requires 2^n >= 8 (2 fc + 1)).
MinNormEstimate estimate_min_norm_certificate(const TrigPoly& y, const Kernel& k, const std::vector<double>& lambdas,
                                              int grid_n);

}  // namespace spikelab
