#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <numbers>

#include "spikelab/kernel.hpp"
#include "spikelab/torus.hpp"
#include "spikelab/trig_poly.hpp"

namespace spikelab {

/// The function t -> d^order/dx^order phi(x - t), i.e. the image of the
/// order-th derivative of a Dirac at x, in orthonormal coordinates.
template <typename Scalar>
TrigPolyT<Scalar> atom(const KernelT<Scalar>& k, Scalar x, int order = 0) {
  const int d = k.degree();
  TrigPolyT<Scalar> p(d);
  const Scalar root2 = std::numbers::sqrt2_v<Scalar>;
  if (order == 0) p.coeffs()[0] = k.coeffs()[0];
  for (int j = 1; j <= d; ++j) {
    const auto [c, s] = detail::rotated_phase<Scalar>(j, x, order);
    const Scalar w = root2 * k.coeffs()[j] * detail::angular_power<Scalar>(j, order);
    p.cos_coeff(j) = w * c;
    p.sin_coeff(j) = w * s;
  }
  return p;
}

/// Phi m : t -> int phi(x - t) dm(x).
inline TrigPoly forward(const DiscreteMeasure& m, const Kernel& k) {
  TrigPoly y(k.degree());
  for (const auto& s : m.spikes()) y += s.amplitude * atom(k, s.position.value(), 0);
  return y;
}

/// Phi_x a + Phi'_x b for positions x (first-derivative atoms weighted by b).
inline TrigPoly synthesize(const Kernel& k, const Eigen::VectorXd& x, const Eigen::VectorXd& a,
                           const Eigen::VectorXd& b) {
  TrigPoly y(k.degree());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (a.size() > 0 && a[i] != 0.0) y += a[i] * atom(k, x[i], 0);
    if (b.size() > 0 && b[i] != 0.0) y += b[i] * atom(k, x[i], 1);
  }
  return y;
}

/// Phi* p : t -> int phi(t - x) p(x) dx, which is again a trigonometric
/// polynomial: each frequency is weighted by c_k.
template <typename Scalar>
TrigPolyT<Scalar> adjoint(const TrigPolyT<Scalar>& p, const KernelT<Scalar>& k) {
  if (p.degree() != k.degree()) throw std::invalid_argument("dual variable degree must match the kernel");
  TrigPolyT<Scalar> eta = p;
  eta.coeffs()[0] *= k.coeffs()[0];
  for (int j = 1; j <= k.degree(); ++j) {
    eta.cos_coeff(j) *= k.coeffs()[j];
    eta.sin_coeff(j) *= k.coeffs()[j];
  }
  return eta;
}

template <typename Scalar>
Scalar adjoint_eval(const TrigPolyT<Scalar>& p, const KernelT<Scalar>& k, Scalar t, int order = 0) {
  if (order < 0 || order > 2) throw std::invalid_argument("adjoint derivative order must be in 0..2");
  return adjoint(p, k)(t, order);
}

/// Gamma_x = (Phi_x, Phi'_x) as a (2K+1) x 2N matrix of atom coordinates.
Eigen::MatrixXd gamma_matrix(const Eigen::VectorXd& x, const Kernel& k);

/// Gamma_x^* Gamma_x with blocks [[Phi*Phi, Phi*Phi'], [Phi'*Phi, Phi'*Phi']].
struct GammaGram {
  Eigen::MatrixXd matrix;
  Eigen::Index spikes() const { return matrix.rows() / 2; }
};

/// Assembles the Gram from kernel derivative inner products. Throws
/// std::invalid_argument on duplicate positions.
GammaGram build_gamma_gram(const Eigen::VectorXd& x, const Kernel& k);

/// Smallest singular value of Gamma_x, computed from an SVD of Gamma_x itself
/// so that near-coincident positions keep their (tiny) singular value.
double gamma_min_singular(const Eigen::VectorXd& x, const Kernel& k);
/// Ratio of largest to smallest singular value of Gamma_x.
double gamma_condition(const Eigen::VectorXd& x, const Kernel& k);

/// Pseudo-random element of Im Phi with exact L2 norm, reproducible from seed.
TrigPoly synthesize_noise(const Kernel& k, double l2_norm, std::uint64_t seed);

/// Solves a symmetric system with an LDLT factorisation. Throws
/// SingularSystemError when the reciprocal condition estimate is below
/// `min_rcond`.
Eigen::VectorXd solve_symmetric(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                double min_rcond = 1e-12, const char* what = "symmetric system");

}  // namespace spikelab
