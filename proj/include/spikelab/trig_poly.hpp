#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "spikelab/kernel.hpp"

namespace spikelab {

/// Real trigonometric polynomial of degree <= d in the orthonormal basis
/// (1, sqrt2 cos 2pi t, ..., sqrt2 cos 2pi d t, sqrt2 sin 2pi t, ..., sqrt2 sin 2pi d t).
/// The coefficient vector therefore has length 2d + 1 and its Euclidean norm
/// is the L2(T) norm of the function.
template <typename Scalar>
class TrigPolyT {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  TrigPolyT() : TrigPolyT(0) {}
  explicit TrigPolyT(int degree) : degree_(degree), coeffs_(Vector::Zero(2 * degree + 1)) {
    if (degree < 0) throw std::invalid_argument("trigonometric degree must be >= 0");
  }
  TrigPolyT(int degree, Vector coeffs) : degree_(degree), coeffs_(std::move(coeffs)) {
    if (degree < 0 || coeffs_.size() != 2 * degree + 1)
      throw std::invalid_argument("trigonometric polynomial needs 2*degree+1 coefficients");
  }

  static TrigPolyT zero(int degree) { return TrigPolyT(degree); }

  int degree() const { return degree_; }
  const Vector& coeffs() const { return coeffs_; }
  Vector& coeffs() { return coeffs_; }

  Scalar constant() const { return coeffs_[0]; }
  Scalar cos_coeff(int k) const { return coeffs_[k]; }
  Scalar sin_coeff(int k) const { return coeffs_[degree_ + k]; }
  Scalar& cos_coeff(int k) { return coeffs_[k]; }
  Scalar& sin_coeff(int k) { return coeffs_[degree_ + k]; }

  /// Value of the order-th derivative at t.
  Scalar operator()(Scalar t, int order = 0) const {
    if (order < 0) throw std::invalid_argument("derivative order must be >= 0");
    const Scalar root2 = std::numbers::sqrt2_v<Scalar>;
    Scalar acc = order == 0 ? coeffs_[0] : Scalar(0);
    for (int k = 1; k <= degree_; ++k) {
      const auto [c, s] = detail::rotated_phase<Scalar>(k, t, order);
      Scalar w = Scalar(1);
      const Scalar step = Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(k);
      for (int i = 0; i < order; ++i) w *= step;
      acc += root2 * w * (coeffs_[k] * c + coeffs_[degree_ + k] * s);
    }
    return acc;
  }

  Scalar norm() const { return coeffs_.norm(); }
  Scalar dot(const TrigPolyT& o) const {
    check_same(o);
    return coeffs_.dot(o.coeffs_);
  }

  TrigPolyT& operator+=(const TrigPolyT& o) {
    check_same(o);
    coeffs_ += o.coeffs_;
    return *this;
  }
  TrigPolyT& operator-=(const TrigPolyT& o) {
    check_same(o);
    coeffs_ -= o.coeffs_;
    return *this;
  }
  TrigPolyT& operator*=(Scalar s) {
    coeffs_ *= s;
    return *this;
  }
  friend TrigPolyT operator+(TrigPolyT a, const TrigPolyT& b) { return a += b; }
  friend TrigPolyT operator-(TrigPolyT a, const TrigPolyT& b) { return a -= b; }
  friend TrigPolyT operator*(TrigPolyT a, Scalar s) { return a *= s; }
  friend TrigPolyT operator*(Scalar s, TrigPolyT a) { return a *= s; }
  friend TrigPolyT operator/(TrigPolyT a, Scalar s) { return a *= Scalar(1) / s; }
  TrigPolyT operator-() const { return TrigPolyT(degree_, -coeffs_); }

 private:
  void check_same(const TrigPolyT& o) const {
    if (o.degree_ != degree_) throw std::invalid_argument("trigonometric polynomial degrees differ");
  }

  int degree_;
  Vector coeffs_;
};

using TrigPoly = TrigPolyT<double>;

/// Samples p at n equispaced points j/n.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sample(const TrigPolyT<Scalar>& p, int n, int order = 0) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(n);
  for (int j = 0; j < n; ++j) v[j] = p(Scalar(j) / Scalar(n), order);
  return v;
}

/// Max over n equispaced samples of |p - q|.
template <typename Scalar>
Scalar sampled_distance(const TrigPolyT<Scalar>& p, const TrigPolyT<Scalar>& q, int n) {
  return (sample(p, n) - sample(q, n)).cwiseAbs().maxCoeff();
}

}  // namespace spikelab
