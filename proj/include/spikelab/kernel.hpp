#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace spikelab {

namespace detail {

/// Returns (cos, sin) of 2*pi*frac(k*t) + order*pi/2, i.e. the real and
/// imaginary parts of i^order e^{2 pi i k t}.
template <typename Scalar>
std::pair<Scalar, Scalar> rotated_phase(int k, Scalar t, int order) {
  using std::cos;
  using std::floor;
  using std::sin;
  Scalar kt = Scalar(k) * t;
  kt -= floor(kt);
  const Scalar theta = Scalar(2) * std::numbers::pi_v<Scalar> * kt;
  const Scalar c = cos(theta), s = sin(theta);
  switch (((order % 4) + 4) % 4) {
    case 0: return {c, s};
    case 1: return {-s, c};
    case 2: return {-c, -s};
    default: return {s, -c};
  }
}

template <typename Scalar>
Scalar angular_power(int k, int order) {
  Scalar w = Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(k);
  Scalar r = Scalar(1);
  for (int i = 0; i < order; ++i) r *= w;
  return r;
}

}  // namespace detail

/// Real even periodic kernel phi(t) = sum_{|k|<=K} c_k e^{2 pi i k t}, stored
/// as c_0..c_K. All evaluation goes through the Fourier sum, so every
/// derivative order is handled the same way and t = 0 is not special.
template <typename Scalar>
class KernelT {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit KernelT(Vector coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.size() < 2) throw std::invalid_argument("kernel degree must be at least 1");
  }

  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  const Vector& coeffs() const { return coeffs_; }
  Scalar coeff(int k) const {
    k = k < 0 ? -k : k;
    return k > degree() ? Scalar(0) : coeffs_[k];
  }

  /// phi^{(order)}(t) for order in 0..4.
  Scalar operator()(Scalar t, int order = 0) const {
    if (order < 0 || order > 4) throw std::invalid_argument("kernel derivative order must be in 0..4");
    Scalar acc = order == 0 ? coeffs_[0] : Scalar(0);
    for (int k = 1; k <= degree(); ++k) {
      if (coeffs_[k] == Scalar(0)) continue;
      acc += Scalar(2) * coeffs_[k] * detail::angular_power<Scalar>(k, order) *
             detail::rotated_phase<Scalar>(k, t, order).first;
    }
    return acc;
  }

  /// The autocorrelation kernel t -> int phi(x) phi(x - t) dx, with Fourier
  /// coefficients c_k^2.
  KernelT autocorrelation() const { return KernelT(coeffs_.array().square().matrix()); }

  template <typename Other>
  KernelT<Other> cast() const {
    return KernelT<Other>(coeffs_.template cast<Other>());
  }

 private:
  Vector coeffs_;
};

using Kernel = KernelT<double>;

/// Ideal low-pass filter: c_k = 1 for |k| <= fc, so phi(0) = 2 fc + 1.
template <typename Scalar = double>
KernelT<Scalar> dirichlet(int fc) {
  if (fc < 1) throw std::invalid_argument("cutoff frequency must be >= 1");
  return KernelT<Scalar>(KernelT<Scalar>::Vector::Ones(fc + 1));
}

/// Fourth power of the normalised Fejer-type kernel
/// sin((fc/2+1) pi t) / ((fc/2+1) sin(pi t)). Its square is the Fejer kernel
/// with triangular coefficients (M - |j|) / M^2, M = fc/2 + 1; squaring again
/// convolves that sequence with itself, landing exactly on |k| <= fc.
template <typename Scalar = double>
KernelT<Scalar> fejer_squared(int fc) {
  if (fc < 2 || fc % 2 != 0) throw std::invalid_argument("squared Fejer kernel needs an even fc >= 2");
  const int m = fc / 2 + 1;
  const int half = m - 1;
  typename KernelT<Scalar>::Vector tri(2 * half + 1);
  for (int j = -half; j <= half; ++j)
    tri[j + half] = Scalar(m - (j < 0 ? -j : j)) / Scalar(m * m);
  typename KernelT<Scalar>::Vector c = KernelT<Scalar>::Vector::Zero(fc + 1);
  for (int i = 0; i < tri.size(); ++i)
    for (int j = 0; j < tri.size(); ++j) {
      const int k = (i - half) + (j - half);
      if (k >= 0) c[k] += tri[i] * tri[j];
    }
  return KernelT<Scalar>(std::move(c));
}

template <typename Scalar>
Scalar eval(const KernelT<Scalar>& k, Scalar t, int order = 0) {
  return k(t, order);
}

/// int phi^{(a)}(x - s) phi^{(b)}(x' - s) ds for delta = x - x'. By Parseval
/// this is (-1)^b times the (a+b)-th derivative of the autocorrelation kernel
/// at delta.
template <typename Scalar>
Scalar deriv_inner_product(const KernelT<Scalar>& k, int a, int b, Scalar delta) {
  if (a < 0 || b < 0 || a + b > 4) throw std::invalid_argument("derivative orders must satisfy a + b <= 4");
  Scalar acc = (a + b) == 0 ? k.coeffs()[0] * k.coeffs()[0] : Scalar(0);
  for (int j = 1; j <= k.degree(); ++j) {
    const Scalar c2 = k.coeffs()[j] * k.coeffs()[j];
    if (c2 == Scalar(0)) continue;
    acc += Scalar(2) * c2 * detail::angular_power<Scalar>(j, a + b) *
           detail::rotated_phase<Scalar>(j, delta, a + b).first;
  }
  return (b % 2 == 0) ? acc : -acc;
}

}  // namespace spikelab
