#include <doctest.h>

#include <complex>
#include <random>

#include "oracles.hpp"
#include "spikelab/errors.hpp"
#include "spikelab/operators.hpp"

using namespace spikelab;
using oracle::kPi;

TEST_CASE("forward of a centred Dirac is the kernel") {
  const Kernel k = dirichlet(5);
  const TrigPoly y = forward(DiscreteMeasure(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)), k);
  CHECK(y.constant() == 1.0);
  for (int j = 1; j <= 5; ++j) {
    CHECK(y.cos_coeff(j) == doctest::Approx(std::sqrt(2.0)));
    CHECK(std::abs(y.sin_coeff(j)) < 1e-15);
  }
  for (double t : {0.0, 0.13, 0.5, 0.77}) CHECK(oracle::poly_value(y, t) == doctest::Approx(k(t)).scale(11));
  CHECK(forward(DiscreteMeasure{}, k).norm() == 0.0);
}

TEST_CASE("forward of an antisymmetric pair") {
  const int fc = 8;
  const Kernel k = dirichlet(fc);
  Eigen::VectorXd x(2), a(2);
  x << 0.25, 0.75;
  a << 1.0, -1.0;
  const TrigPoly y = forward(DiscreteMeasure(x, a), k);
  // Complex coefficient of e^{2 pi i k t} is e^{-i pi k / 2} - e^{-3 i pi k / 2}.
  for (int j = 0; j <= fc; ++j) {
    const std::complex<double> yhat =
        std::exp(std::complex<double>(0, -kPi * j / 2)) - std::exp(std::complex<double>(0, -3 * kPi * j / 2));
    if (j == 0) {
      CHECK(std::abs(y.constant() - yhat.real()) < 1e-14);
      continue;
    }
    CHECK(std::abs(y.cos_coeff(j) - std::sqrt(2.0) * yhat.real()) < 1e-13);
    CHECK(std::abs(y.sin_coeff(j) + std::sqrt(2.0) * yhat.imag()) < 1e-13);
    if (j % 2 == 0) {
      CHECK(std::abs(y.cos_coeff(j)) < 1e-13);
      CHECK(std::abs(y.sin_coeff(j)) < 1e-13);
    }
  }
}

TEST_CASE("adjoint examples") {
  const int fc = 9;
  const Kernel k = dirichlet(fc);
  const TrigPoly phi = atom(k, 0.0);
  const TrigPoly p = phi / phi.norm();
  CHECK(adjoint_eval(p, k, 0.0) == doctest::Approx(std::sqrt(2.0 * fc + 1)));
  const TrigPoly zero(fc);
  for (int order = 0; order <= 2; ++order) CHECK(adjoint_eval(zero, k, 0.37, order) == 0.0);
  CHECK_THROWS_AS(adjoint(TrigPoly(3), k), std::invalid_argument);
  CHECK_THROWS_AS(adjoint_eval(p, k, 0.0, 3), std::invalid_argument);
}

TEST_CASE("adjoint derivative vanishes at a maximiser") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  const Kernel k = dirichlet(6);
  for (int trial = 0; trial < 10; ++trial) {
    TrigPoly p(6);
    for (auto& c : p.coeffs()) c = g(rng);
    const TrigPoly eta = adjoint(p, k);
    int best = 0;
    const int n = 4096;
    for (int j = 1; j < n; ++j)
      if (eta(j / double(n)) > eta(best / double(n))) best = j;
    // Bisection on the derivative between the neighbouring samples.
    double lo = (best - 1) / double(n), hi = (best + 1) / double(n);
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
      const double mid = 0.5 * (lo + hi);
      (oracle::poly_value(eta, mid, 1) > 0 ? lo : hi) = mid;
    }
    CHECK(std::abs(adjoint_eval(p, k, 0.5 * (lo + hi), 1)) < 1e-8);
  }
}

TEST_CASE("adjoint identity and reproducing identity") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g;
  for (const Kernel& k : {dirichlet(7), fejer_squared(8)}) {
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd x(4), a(4);
      for (int i = 0; i < 4; ++i) {
        x[i] = u(rng);
        a[i] = g(rng);
      }
      const DiscreteMeasure m(x, a);
      TrigPoly p(k.degree());
      for (auto& c : p.coeffs()) c = g(rng);
      // <Phi m, p> by quadrature of the function values.
      const TrigPoly y = forward(m, k);
      const double lhs = oracle::trapezoid(
          [&](double t) { return oracle::poly_value(y, t) * oracle::poly_value(p, t); }, 8 * (2 * k.degree() + 1));
      double rhs = 0.0;
      for (const auto& s : m.spikes()) rhs += s.amplitude * adjoint_eval(p, k, s.position.value());
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10).scale(10));
      CHECK(y.dot(p) == doctest::Approx(rhs).epsilon(1e-10).scale(10));

      const double x1 = u(rng), x2 = u(rng);
      CHECK(atom(k, x1).dot(atom(k, x2)) ==
            doctest::Approx(deriv_inner_product(k, 0, 0, x1 - x2)).epsilon(1e-12).scale(10));
    }
  }
}

TEST_CASE("Gamma Gram against quadrature") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const Kernel& k : {dirichlet(6), fejer_squared(6)}) {
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::VectorXd x(3);
      for (auto& v : x) v = u(rng);
      const Eigen::MatrixXd g = build_gamma_gram(x, k).matrix;
      const Eigen::MatrixXd ref = oracle::gamma_gram_quadrature(x, k);
      for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j)
          CHECK(std::abs(g(i, j) - ref(i, j)) <= 1e-10 * std::max(1.0, std::abs(ref(i, j))));
      CHECK((g - g.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * g.cwiseAbs().maxCoeff());
      const Eigen::MatrixXd gm = gamma_matrix(x, k);
      CHECK((gm.transpose() * gm - g).cwiseAbs().maxCoeff() <= 1e-10 * g.cwiseAbs().maxCoeff());
    }
  }
}

TEST_CASE("Gamma Gram of one spike is diagonal") {
  const int fc = 10;
  const Kernel k = dirichlet(fc);
  const Eigen::MatrixXd g = build_gamma_gram(Eigen::VectorXd::Constant(1, 0.3), k).matrix;
  const double curv = -k.autocorrelation()(0.0, 2);
  CHECK(g(0, 0) == doctest::Approx(2 * fc + 1));
  CHECK(g(1, 1) == doctest::Approx(curv));
  CHECK(std::abs(g(0, 1)) < 1e-10);
  CHECK(std::abs(g(1, 0)) < 1e-10);
  CHECK(gamma_min_singular(Eigen::VectorXd::Constant(1, 0.3), k) ==
        doctest::Approx(std::min(std::sqrt(2.0 * fc + 1), std::sqrt(curv))));
  CHECK_THROWS_AS(build_gamma_gram(Eigen::Vector2d(0.2, 0.2), k), std::invalid_argument);
}

TEST_CASE("Gamma has full rank for distinct positions") {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Kernel k = dirichlet(10);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x(3);
    for (auto& v : x) v = u(rng);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(gamma_matrix(x, k));
    CHECK(svd.singularValues().minCoeff() > 0.0);
    CHECK(gamma_min_singular(x, k) == doctest::Approx(svd.singularValues().minCoeff()).epsilon(1e-8));
    CHECK(std::isfinite(gamma_condition(x, k)));
  }
  const Eigen::Vector2d close(0.4, 0.4 + 1e-9);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(gamma_matrix(close, k));
  CHECK(gamma_min_singular(close, k) < 1e-6 * svd.singularValues().maxCoeff());
}

TEST_CASE("noise synthesis") {
  const Kernel k = dirichlet(10);
  CHECK(synthesize_noise(k, 0.0, 3).norm() == 0.0);
  const TrigPoly a = synthesize_noise(k, 0.7, 42), b = synthesize_noise(k, 0.7, 42);
  CHECK((a.coeffs().array() == b.coeffs().array()).all());
  CHECK(std::abs(a.norm() - 0.7) < 1e-12);
  CHECK((synthesize_noise(k, 0.7, 43).coeffs() - a.coeffs()).norm() > 0.1);
  CHECK_THROWS_AS(synthesize_noise(k, -1.0, 1), std::invalid_argument);
}

TEST_CASE("symmetric solve reports singular systems") {
  Eigen::Matrix2d a;
  a << 1, 1, 1, 1;
  CHECK_THROWS_AS(solve_symmetric(a, Eigen::Vector2d(1, 2)), SingularSystemError);
  a << 2, 1, 1, 3;
  const Eigen::VectorXd x = solve_symmetric(a, Eigen::Vector2d(1, 2));
  CHECK((a * x - Eigen::Vector2d(1, 2)).norm() < 1e-14);
}

TEST_CASE("synthesize combines value and derivative atoms") {
  const Kernel k = dirichlet(4);
  const Eigen::Vector2d x(0.1, 0.6), a(1.5, -0.5), b(0.2, 0.3);
  const TrigPoly y = synthesize(k, x, a, b);
  for (double t : {0.0, 0.33, 0.9}) {
    double ref = 0.0;
    for (int i = 0; i < 2; ++i) ref += a[i] * oracle::kernel_value(k, x[i] - t) + b[i] * oracle::kernel_value(k, x[i] - t, 1);
    CHECK(oracle::poly_value(y, t) == doctest::Approx(ref).scale(10));
  }
}
