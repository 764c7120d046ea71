#pragma once

#include <Eigen/Dense>
#include <vector>

namespace spikelab {

/// { p : <normal, p> <= offset }.
struct Halfspace {
  Eigen::VectorXd normal;
  double offset = 1.0;
};

/// Dual feasible set of the grid problem on the dyadic grid of level n for
/// the Dirichlet kernel of cutoff fc:
///   C_n = { p : |(Phi^* p)(j / 2^n)| <= 1 for all j },
/// described by the 2^{n+1} halfspaces +-phi(j/2^n - .) . p <= 1 (ordered j,
/// then sign + before -). Vertices are only enumerated in dimension 3 (fc = 1).
struct Polytope {
  int fc = 0;
  int level = 0;
  std::vector<Halfspace> halfspaces;
  std::vector<Eigen::Vector3d> vertices;  // sorted lexicographically
};

Polytope build_polytope(int fc, int level);

/// All vertices of a bounded 3-D polyhedron given by halfspaces, found by
/// intersecting every triple of planes, keeping the feasible points and
/// merging duplicates. Each vertex is refined by least squares over its tight
/// planes.
std::vector<Eigen::Vector3d> enumerate_vertices_3d(const std::vector<Halfspace>& hs, double tol = 1e-9);

/// max_j (<normal_j, v> - offset_j) over the halfspaces: <= 0 means v is in
/// the polyhedron.
double max_violation(const std::vector<Halfspace>& hs, const Eigen::VectorXd& v);

/// Indices of the halfspaces tight at v (|<normal, v> - offset| <= tol).
std::vector<int> tight_planes(const std::vector<Halfspace>& hs, const Eigen::VectorXd& v, double tol = 1e-9);

/// Rotation of the dual coordinates induced by the shift t -> t + 1/2^n of
/// the torus (acts on each frequency pair as a planar rotation).
Eigen::MatrixXd shift_rotation(int fc, double shift);

}  // namespace spikelab
