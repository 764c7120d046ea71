#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <json.hpp>
#include <string>
#include <vector>

#include "spikelab/certificates.hpp"
#include "spikelab/continuous_solver.hpp"
#include "spikelab/grid_solvers.hpp"
#include "spikelab/kernel.hpp"
#include "spikelab/polytope.hpp"
#include "spikelab/torus.hpp"
#include "spikelab/trig_poly.hpp"

namespace spikelab {

using json = nlohmann::ordered_json;

/// Kernel from a "dirichlet:fc=10" or "fejer:fc=6" style string.
Kernel parse_kernel_spec(const std::string& spec);
/// Kernel from {"type": "dirichlet", "fc": 10}.
Kernel kernel_from_json(const json& j);

/// {"spikes": [{"x": 0.25, "a": 1.0}, ...]}
DiscreteMeasure measure_from_json(const json& j);
json to_json(const DiscreteMeasure& m);

/// {"degree": d, "coeffs": [c0, cos..., sin...]}
json to_json(const TrigPoly& p);
TrigPoly trig_poly_from_json(const json& j);

json to_json(const CertificateReport& r);
json to_json(const Polytope& p);

/// Deterministic decimal form of a double (round-trippable).
std::string fmt(double v);

/// Minimal CSV writer: a header line, then rows of already formatted cells.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header);
  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
  CsvWriter& cell(const std::string& v);
  void end_row();

 private:
  std::ostream& out_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

/// One row per (segment, active grid index): lambda interval, grid point,
/// sign and the affine coefficients a = offset + lambda slope.
void write_path_csv(std::ostream& out, const LassoPath& path, const Grid& grid);

/// One row per (lambda, spike) with the certification flag.
void write_continuation_csv(std::ostream& out, const ContinuationResult& res);

/// eta sampled at n equispaced points, one column per polynomial.
void write_samples_csv(std::ostream& out, const std::vector<std::string>& names, const std::vector<TrigPoly>& polys,
                       int n);

}  // namespace spikelab
