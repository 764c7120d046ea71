#include <doctest.h>

#include <limits>
#include <random>

#include "oracles.hpp"
#include "spikelab/errors.hpp"
#include "spikelab/grid_solvers.hpp"
#include "spikelab/operators.hpp"

using namespace spikelab;
using Eigen::Index;
using Eigen::VectorXd;

namespace {

Grid random_grid(std::mt19937_64& rng, int p) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> pts;
  while (static_cast<int>(pts.size()) < p) {
    pts.push_back(u(rng));
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  }
  return Grid(pts);
}

TrigPoly random_observation(std::mt19937_64& rng, const Kernel& k, int spikes) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  VectorXd x(spikes);
  for (auto& v : x) v = u(rng);
  const DiscreteMeasure m(x, oracle::random_amplitudes(rng, spikes));
  return forward(m, k) + synthesize_noise(k, 0.1 * forward(m, k).norm(), rng());
}

// Two opposite spikes 0.6 / fc apart on the level-7 grid, possibly shifted
// off the grid by `offset` grid steps.
DiscreteMeasure opposite_pair(int fc, double offset) {
  const double h = 1.0 / 128;
  const long steps = static_cast<long>(std::floor(0.6 / fc / h));
  return DiscreteMeasure(Eigen::Vector2d((64 + offset) * h, (64 + steps + offset) * h), Eigen::Vector2d(1, -1));
}

}  // namespace

TEST_CASE("grid construction") {
  const Grid g = Grid::dyadic(3);
  CHECK(g.size() == 8);
  CHECK(g[3] == 0.375);
  CHECK(g.dyadic_level() == 3);
  CHECK(g.nearest(0.99) == 0);
  CHECK(g.bracket(0.3) == std::pair<Index, Index>(2, 3));
  CHECK(g.bracket(0.95) == std::pair<Index, Index>(7, 0));
  CHECK_THROWS_AS(Grid({0.2, 0.1}), std::invalid_argument);
  CHECK_THROWS_AS(Grid({0.2, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(Grid(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(Grid::dyadic(13), std::invalid_argument);
}

TEST_CASE("Gram setup") {
  const int fc = 5;
  const Kernel k = dirichlet(fc);
  const GramBundle b = gram_setup(Grid::dyadic(5), k);
  const Eigen::MatrixXd g = b.gram();
  CHECK((g.diagonal().array() - (2 * fc + 1)).abs().maxCoeff() < 1e-12);
  CHECK((g - g.transpose()).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10 * g.trace());
  CHECK((b.dictionary().transpose() * b.dictionary() - g).cwiseAbs().maxCoeff() < 1e-10);

  const Index j = 7;
  const TrigPoly y = forward(DiscreteMeasure(VectorXd::Constant(1, b.grid()[j]), VectorXd::Ones(1)), k);
  const VectorXd c = b.correlate(y);
  CHECK(c[j] == doctest::Approx(2 * fc + 1));
  for (Index i = 0; i < b.size(); ++i)
    CHECK(c[i] == doctest::Approx(oracle::kernel_value(k, b.grid()[i] - b.grid()[j])).scale(11));
}

TEST_CASE("lambda max") {
  const int fc = 6;
  const Kernel k = dirichlet(fc);
  const Grid g = Grid::dyadic(6);
  CHECK(lambda_max(TrigPoly(fc), g, k) == 0.0);
  const TrigPoly y = forward(DiscreteMeasure(VectorXd::Constant(1, g[10]), VectorXd::Ones(1)), k);
  CHECK(lambda_max(y, g, k) == doctest::Approx(2 * fc + 1));
  CHECK(lambda_max(3.5 * y, g, k) == doctest::Approx(3.5 * (2 * fc + 1)));
}

TEST_CASE("homotopy on a single on-grid spike") {
  const int fc = 6;
  const Kernel k = dirichlet(fc);
  const Grid g = Grid::dyadic(6);
  const double a0 = 1.7;
  const TrigPoly y = forward(DiscreteMeasure(VectorXd::Constant(1, g[20]), VectorXd::Constant(1, a0)), k);
  const LassoPath p = homotopy_path(y, g, k, 1e-3);
  REQUIRE(p.segments.size() == 1);
  CHECK(p.lambda_max == doctest::Approx(a0 * (2 * fc + 1)));
  const PathSegment& s = p.segments[0];
  REQUIRE(s.active.size() == 1);
  CHECK(s.active[0] == 20);
  CHECK(s.offset[0] == doctest::Approx(a0));
  CHECK(s.slope[0] == doctest::Approx(-1.0 / (2 * fc + 1)));
  for (double lam : {0.5, 3.0, 10.0}) CHECK(p.coefficients(lam)[20] == doctest::Approx(a0 - lam / (2 * fc + 1)));
  CHECK(p.coefficients(p.lambda_max * 1.01).norm() == 0.0);

  const LassoPath z = homotopy_path(TrigPoly(fc), g, k, 1e-3);
  CHECK(z.segments.empty());
  CHECK(z.coefficients(0.1).norm() == 0.0);
}

TEST_CASE("homotopy path: KKT at midpoints and continuity") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 12; ++trial) {
    const int fc = 3 + trial % 8;
    const Kernel k = dirichlet(fc);
    const Grid g = trial % 2 ? Grid::dyadic(5 + trial % 3) : random_grid(rng, 40 + 10 * trial);
    const GramBundle b(g, k);
    const TrigPoly y = random_observation(rng, k, 1 + trial % 4);
    HomotopyOptions opts;
    opts.lambda_min = 1e-4 * lambda_max(y, b);
    const LassoPath path = homotopy_path(y, b, opts);
    REQUIRE_FALSE(path.segments.empty());
    for (const auto& s : path.segments) {
      const double mid = 0.5 * (s.lambda_hi + s.lambda_lo);
      CHECK(kkt_check(y, b, mid, path.coefficients(mid)).max_violation() < 1e-8);
    }
    for (std::size_t i = 1; i < path.segments.size(); ++i) {
      const PathSegment& up = path.segments[i - 1];
      const PathSegment& lo = path.segments[i];
      const double lam = up.lambda_lo;
      VectorXd above = VectorXd::Zero(g.size()), below = VectorXd::Zero(g.size());
      for (std::size_t q = 0; q < up.active.size(); ++q) above[up.active[q]] = up.active_values(lam)[Index(q)];
      for (std::size_t q = 0; q < lo.active.size(); ++q) below[lo.active[q]] = lo.active_values(lam)[Index(q)];
      // Both sides solve normal equations, so rounding scales with cond(G_J).
      Eigen::MatrixXd pj(b.dim(), static_cast<Index>(lo.active.size()));
      for (std::size_t q = 0; q < lo.active.size(); ++q) pj.col(Index(q)) = b.dictionary().col(lo.active[q]);
      const VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(pj).singularValues();
      const double cond_g = std::pow(sv[0] / sv[sv.size() - 1], 2);
      const double tol = 100 * std::numeric_limits<double>::epsilon() * cond_g * std::max(1.0, above.cwiseAbs().maxCoeff());
      CHECK((above - below).cwiseAbs().maxCoeff() <= tol);
    }
  }
}

TEST_CASE("homotopy against exhaustive search on tiny grids") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    const Kernel k = dirichlet(2 + trial % 2);
    const GramBundle b(random_grid(rng, 8), k);
    const TrigPoly y = random_observation(rng, k, 2);
    const double lmax = lambda_max(y, b);
    HomotopyOptions opts;
    opts.lambda_min = 1e-3 * lmax;
    const LassoPath path = homotopy_path(y, b, opts);
    const Eigen::MatrixXd g = b.gram();
    const VectorXd c = b.correlate(y);
    for (double r : {0.9, 0.5, 0.1, 0.01}) {
      const double lam = r * lmax;
      const oracle::BruteForceLasso bf = oracle::lasso_bruteforce(g, c, lam);
      const double obj = lasso_objective(y, b, lam, path.coefficients(lam)) - 0.5 * y.norm() * y.norm();
      CHECK(obj == doctest::Approx(bf.objective).epsilon(1e-9));
    }
  }
}

TEST_CASE("proximal solver") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 4; ++trial) {
    const int fc = 4 + 3 * trial;
    const Kernel k = dirichlet(fc);
    const GramBundle b(Grid::dyadic(6), k);
    const TrigPoly y = random_observation(rng, k, 3);
    const double lmax = lambda_max(y, b);
    HomotopyOptions opts;
    opts.lambda_min = 1e-3 * lmax;
    const LassoPath path = homotopy_path(y, b, opts);
    std::uniform_real_distribution<double> u(-3.0, 0.0);
    for (int i = 0; i < 5; ++i) {
      const double lam = lmax * std::pow(10.0, u(rng));
      const ProximalResult pr = proximal_solve(y, b, lam);
      const double ref = lasso_objective(y, b, lam, path.coefficients(lam));
      CHECK(std::abs(pr.objective - ref) <= 1e-8 * ref);
    }
  }
  const int fc = 6;
  const Kernel k = dirichlet(fc);
  const Grid g = Grid::dyadic(5);
  const TrigPoly y = forward(DiscreteMeasure(VectorXd::Constant(1, g[3]), VectorXd::Ones(1)), k);
  CHECK(proximal_solve(y, g, k, lambda_max(y, g, k)).coefficients.norm() == 0.0);
  CHECK(proximal_solve(y, g, k, 2 * lambda_max(y, g, k)).coefficients.norm() == 0.0);
  const VectorXd half = proximal_solve(y, g, k, (2 * fc + 1) / 2.0).coefficients;
  CHECK(half[3] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(half.lpNorm<1>() == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("KKT report") {
  std::mt19937_64 rng(44);
  const Kernel k = dirichlet(5);
  const GramBundle b(Grid::dyadic(6), k);
  const TrigPoly y = random_observation(rng, k, 3);
  const double lam = 0.05 * lambda_max(y, b);
  const LassoPath path = homotopy_path(y, b, HomotopyOptions{lam});
  VectorXd a = path.coefficients(lam);
  CHECK(kkt_check(y, b, lam, a).max_violation() < 1e-9);
  CHECK(kkt_check(y, b, lam, VectorXd::Zero(b.size())).max_dual_violation > 0.0);
  Index j = 0;
  while (a[j] == 0.0) ++j;
  a[j] += 1e-3;
  const KktReport r = kkt_check(y, b, lam, a);
  // Moving a_j by e changes eta_j by e G_jj / lambda.
  CHECK(r.max_support_violation >= 0.5 * 1e-3 * b.gram_entry(j, j) / lam);
}

TEST_CASE("discrete minimal norm certificate") {
  const int fc = 6;
  const Kernel k = dirichlet(fc);
  const Grid g = Grid::dyadic(7);

  SUBCASE("single on-grid spike") {
    const TrigPoly y = forward(DiscreteMeasure(VectorXd::Constant(1, g[30]), VectorXd::Ones(1)), k);
    const DiscreteCertificate c = discrete_min_norm_certificate(y, g, k);
    REQUIRE(c.extended_indices.size() == 1);
    CHECK(c.extended_indices[0] == 30);
    CHECK(c.extended_signs[0] == 1);
    CHECK(sampled_distance(c.eta, atom(k, g[30]) / (2.0 * fc + 1), 1024) < 1e-9);
  }
  SUBCASE("dyadic opposite pair") {
    const DiscreteMeasure m = opposite_pair(fc, 0.0);
    const DiscreteCertificate c = discrete_min_norm_certificate(forward(m, k), g, k);
    CHECK(m.signed_support().subset_of(c.extended_support, 1e-12));
    std::vector<int> extra(2, 0);
    for (std::size_t q = 0; q < c.extended_indices.size(); ++q) {
      const double t = g[c.extended_indices[q]];
      int which = -1;
      for (int i = 0; i < 2; ++i) {
        const double d = torus_dist(TorusPoint(t), m.spikes()[static_cast<std::size_t>(i)].position);
        if (d < 1e-12) which = -2;
        else if (std::abs(d - 1.0 / 128) < 1e-12) which = i;
      }
      REQUIRE(which != -1);
      if (which >= 0) {
        ++extra[static_cast<std::size_t>(which)];
        CHECK(c.extended_signs[q] == (m.spikes()[static_cast<std::size_t>(which)].amplitude > 0 ? 1 : -1));
      }
    }
    CHECK(extra[0] <= 1);
    CHECK(extra[1] <= 1);
  }
  SUBCASE("non-dyadic pair is bracketed") {
    const DiscreteMeasure m = opposite_pair(fc, 0.37);
    const DiscreteCertificate c = discrete_min_norm_certificate(forward(m, k), g, k);
    for (const auto& s : m.spikes()) {
      const auto [lo, hi] = g.bracket(s.position.value());
      const int sg = s.amplitude > 0 ? 1 : -1;
      CHECK(c.extended_support.contains({TorusPoint(g[lo]), sg}));
      CHECK(c.extended_support.contains({TorusPoint(g[hi]), sg}));
    }
  }
}

TEST_CASE("exact support recovery in the Fuchs regime") {
  std::mt19937_64 rng(45);
  int tested = 0;
  for (int trial = 0; trial < 40 && tested < 6; ++trial) {
    const int fc = 8;
    const Kernel k = dirichlet(fc);
    const Grid g = Grid::dyadic(6);
    std::uniform_int_distribution<int> pick(0, 63);
    std::vector<Index> idx;
    while (idx.size() < 2) {
      const Index j = pick(rng);
      bool far = true;
      for (Index i : idx) far = far && std::min((j - i + 64) % 64, (i - j + 64) % 64) >= 10;
      if (far) idx.push_back(j);
    }
    std::sort(idx.begin(), idx.end());
    VectorXd x(2);
    for (int i = 0; i < 2; ++i) x[i] = g[idx[static_cast<std::size_t>(i)]];
    const VectorXd a = oracle::random_amplitudes(rng, 2);
    const DiscreteMeasure m(x, a);
    const TrigPoly y = forward(m, k);
    const TrigPoly w = synthesize_noise(k, 1e-4, rng());
    const GramBundle b(g, k);
    // Irrepresentability: the Fuchs interpolant stays below 1 off the support.
    Eigen::MatrixXd phi(2 * fc + 1, 2);
    for (int i = 0; i < 2; ++i) phi.col(i) = atom(k, x[i]).coeffs();
    const Eigen::MatrixXd gi = phi.transpose() * phi;
    const VectorXd s = m.signs();
    const double lam = 1e-3;
    // The candidate solves the problem iff its correlations stay strictly
    // inside (-lam, lam) off the support: eta_F plus the projected noise term.
    const VectorXd pw = w.coeffs() - phi * gi.ldlt().solve(phi.transpose() * w.coeffs());
    const VectorXd eta = b.dictionary().transpose() * (phi * gi.ldlt().solve(s) + pw / lam);
    double off = 0.0;
    for (Index j = 0; j < g.size(); ++j)
      if (j != idx[0] && j != idx[1]) off = std::max(off, std::abs(eta[j]));
    if (!(off < 1.0)) continue;
    const LassoPath path = homotopy_path(y + w, b, HomotopyOptions{lam});
    const VectorXd sol = path.coefficients(lam);
    const VectorXd ref = a + gi.ldlt().solve(phi.transpose() * w.coeffs()) - lam * gi.ldlt().solve(s);
    if (!(ref.array() * s.array() > 0).all()) continue;
    ++tested;
    for (Index j = 0; j < g.size(); ++j) {
      if (j == idx[0]) CHECK(std::abs(sol[j] - ref[0]) < 1e-8);
      else if (j == idx[1]) CHECK(std::abs(sol[j] - ref[1]) < 1e-8);
      else CHECK(sol[j] == 0.0);
    }
  }
  CHECK(tested >= 3);
}

TEST_CASE("clustering grid solutions") {
  const Grid g = Grid::dyadic(4);
  VectorXd a = VectorXd::Zero(16);
  a[15] = 1.0;
  a[0] = 3.0;  // wraps through 0
  a[5] = -2.0;
  a[7] = -2.0;
  const DiscreteMeasure c0 = cluster_grid_solution(g, a, 0);
  REQUIRE(c0.size() == 3);
  // Ordered by position: 5/16, 7/16, then the wrapped cluster.
  CHECK(c0.spikes()[0].amplitude == doctest::Approx(-2.0));
  CHECK(c0.spikes()[2].amplitude == doctest::Approx(4.0));
  CHECK(c0.spikes()[2].position.value() == doctest::Approx(TorusPoint::wrap(-0.25 / 16)));
  const DiscreteMeasure c1 = cluster_grid_solution(g, a, 1);
  REQUIRE(c1.size() == 2);
  CHECK(c1.spikes()[0].amplitude == doctest::Approx(-4.0));
  CHECK(c1.spikes()[0].position.value() == doctest::Approx(6.0 / 16));
  CHECK(cluster_grid_solution(g, VectorXd::Zero(16)).empty());

  const DiscreteMeasure d = dominant_spikes(c0, 0.6);
  REQUIRE(d.size() == 1);
  CHECK(d.spikes()[0].amplitude == doctest::Approx(4.0));
}
