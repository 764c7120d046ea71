#include "spikelab/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "spikelab/kernel.hpp"
#include "spikelab/operators.hpp"

namespace spikelab {

using Eigen::Vector3d;

Polytope build_polytope(int fc, int level) {
  if (fc < 1) throw std::invalid_argument("cutoff frequency must be >= 1");
  if (level < 1 || level > 12) throw std::invalid_argument("grid level must be in 1..12");
  const Kernel k = dirichlet(fc);
  Polytope poly;
  poly.fc = fc;
  poly.level = level;
  const int n = 1 << level;
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd a = atom(k, static_cast<double>(j) / n, 0).coeffs();
    poly.halfspaces.push_back({a, 1.0});
    poly.halfspaces.push_back({-a, 1.0});
  }
  if (fc == 1) poly.vertices = enumerate_vertices_3d(poly.halfspaces);
  return poly;
}

double max_violation(const std::vector<Halfspace>& hs, const Eigen::VectorXd& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& h : hs) m = std::max(m, h.normal.dot(v) - h.offset);
  return m;
}

std::vector<int> tight_planes(const std::vector<Halfspace>& hs, const Eigen::VectorXd& v, double tol) {
  std::vector<int> out;
  for (std::size_t i = 0; i < hs.size(); ++i)
    if (std::abs(hs[i].normal.dot(v) - hs[i].offset) <= tol) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<Vector3d> enumerate_vertices_3d(const std::vector<Halfspace>& hs, double tol) {
  for (const auto& h : hs)
    if (h.normal.size() != 3) throw std::invalid_argument("vertex enumeration needs 3-D halfspaces");
  const std::size_t m = hs.size();
  std::vector<Vector3d> normals(m);
  for (std::size_t i = 0; i < m; ++i) normals[i] = hs[i].normal;

  std::vector<Vector3d> found;
  auto feasible = [&](const Vector3d& p) {
    for (std::size_t i = 0; i < m; ++i)
      if (normals[i].dot(p) - hs[i].offset > 1e3 * tol) return false;
    return true;
  };
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b) {
      const Vector3d ab = normals[a].cross(normals[b]);
      if (ab.norm() < 1e-12) continue;
      for (std::size_t c = b + 1; c < m; ++c) {
        const double det = ab.dot(normals[c]);
        if (std::abs(det) < 1e-10) continue;
        // Cramer's rule via cross products.
        const Vector3d p = (hs[a].offset * normals[b].cross(normals[c]) + hs[b].offset * normals[c].cross(normals[a]) +
                            hs[c].offset * ab) /
                           det;
        if (!feasible(p)) continue;
        const bool dup = std::any_of(found.begin(), found.end(), [&](const Vector3d& q) { return (q - p).norm() < 1e-7; });
        if (!dup) found.push_back(p);
      }
    }

  std::vector<Vector3d> out;
  for (const Vector3d& p : found) {
    const std::vector<int> tight = tight_planes(hs, p, 1e-7);
    if (tight.size() < 3) continue;
    Eigen::MatrixXd a(static_cast<Eigen::Index>(tight.size()), 3);
    Eigen::VectorXd b(static_cast<Eigen::Index>(tight.size()));
    for (std::size_t r = 0; r < tight.size(); ++r) {
      a.row(static_cast<Eigen::Index>(r)) = normals[static_cast<std::size_t>(tight[r])].transpose();
      b[static_cast<Eigen::Index>(r)] = hs[static_cast<std::size_t>(tight[r])].offset;
    }
    const Vector3d q = a.colPivHouseholderQr().solve(b);
    if (max_violation(hs, q) > tol) continue;
    const bool dup = std::any_of(out.begin(), out.end(), [&](const Vector3d& o) { return (o - q).norm() < 1e-7; });
    if (!dup) out.push_back(q);
  }
  std::sort(out.begin(), out.end(), [](const Vector3d& u, const Vector3d& v) {
    return std::lexicographical_compare(u.data(), u.data() + 3, v.data(), v.data() + 3);
  });
  return out;
}

Eigen::MatrixXd shift_rotation(int fc, double shift) {
  // Phi^*p(t + shift) in coordinates: each (cos_k, sin_k) pair rotates by
  // -2 pi k shift.
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(2 * fc + 1, 2 * fc + 1);
  r(0, 0) = 1.0;
  for (int k = 1; k <= fc; ++k) {
    const double th = 2.0 * std::numbers::pi * k * shift;
    r(k, k) = std::cos(th);
    r(k, fc + k) = std::sin(th);
    r(fc + k, k) = -std::sin(th);
    r(fc + k, fc + k) = std::cos(th);
  }
  return r;
}

}  // namespace spikelab
