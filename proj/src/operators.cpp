#include "spikelab/operators.hpp"

#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "spikelab/errors.hpp"

namespace spikelab {

namespace {

void require_distinct(const Eigen::VectorXd& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i)
    for (Eigen::Index j = i + 1; j < x.size(); ++j)
      if (torus_dist(TorusPoint(x[i]), TorusPoint(x[j])) == 0.0)
        throw std::invalid_argument("positions must be pairwise distinct");
}

}  // namespace

Eigen::MatrixXd gamma_matrix(const Eigen::VectorXd& x, const Kernel& k) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd g(2 * k.degree() + 1, 2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    g.col(i) = atom(k, x[i], 0).coeffs();
    g.col(n + i) = atom(k, x[i], 1).coeffs();
  }
  return g;
}

GammaGram build_gamma_gram(const Eigen::VectorXd& x, const Kernel& k) {
  require_distinct(x);
  const Eigen::Index n = x.size();
  Eigen::MatrixXd g(2 * n, 2 * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = x[i] - x[j];
      g(i, j) = deriv_inner_product(k, 0, 0, d);
      g(i, n + j) = deriv_inner_product(k, 0, 1, d);
      g(n + i, j) = deriv_inner_product(k, 1, 0, d);
      g(n + i, n + j) = deriv_inner_product(k, 1, 1, d);
    }
  return {g};
}

double gamma_min_singular(const Eigen::VectorXd& x, const Kernel& k) {
  require_distinct(x);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(gamma_matrix(x, k));
  const auto& s = svd.singularValues();
  // Fewer rows than columns: the missing singular values are zero.
  if (s.size() < 2 * x.size()) return 0.0;
  return s[s.size() - 1];
}

double gamma_condition(const Eigen::VectorXd& x, const Kernel& k) {
  require_distinct(x);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(gamma_matrix(x, k));
  const auto& s = svd.singularValues();
  if (s.size() < 2 * x.size() || s[s.size() - 1] == 0.0)
    return std::numeric_limits<double>::infinity();
  return s[0] / s[s.size() - 1];
}

TrigPoly synthesize_noise(const Kernel& k, double l2_norm, std::uint64_t seed) {
  if (!(l2_norm >= 0.0)) throw std::invalid_argument("noise level must be >= 0");
  TrigPoly w(k.degree());
  if (l2_norm == 0.0) return w;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index i = 0; i < w.coeffs().size(); ++i) w.coeffs()[i] = gauss(rng);
  return w * (l2_norm / w.norm());
}

Eigen::VectorXd solve_symmetric(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                double min_rcond, const char* what) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success)
    throw SingularSystemError(std::string(what) + ": factorisation failed");
  // LDLT::rcond treats exactly zero pivots as pseudo-inverse entries, so check D too.
  const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
  const double rc = d.size() && d.maxCoeff() > 0 ? std::min(ldlt.rcond(), d.minCoeff() / d.maxCoeff()) : 0.0;
  if (!(rc >= min_rcond))
    throw SingularSystemError(std::string(what) + ": reciprocal condition " + std::to_string(rc) +
                              " below threshold");
  return ldlt.solve(b);
}

}  // namespace spikelab
