#include "spikelab/io.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace spikelab {

Kernel parse_kernel_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string type = spec.substr(0, colon);
  if (colon == std::string::npos || spec.compare(colon + 1, 3, "fc=") != 0)
    throw std::invalid_argument("kernel spec must look like dirichlet:fc=10");
  int fc = 0;
  try {
    std::size_t used = 0;
    fc = std::stoi(spec.substr(colon + 4), &used);
    if (colon + 4 + used != spec.size()) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw std::invalid_argument("bad cutoff in kernel spec '" + spec + "'");
  }
  json j = {{"type", type}, {"fc", fc}};
  return kernel_from_json(j);
}

Kernel kernel_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  const int fc = j.at("fc").get<int>();
  if (type == "dirichlet") return dirichlet(fc);
  if (type == "fejer") return fejer_squared(fc);
  throw std::invalid_argument("unknown kernel type '" + type + "'");
}

DiscreteMeasure measure_from_json(const json& j) {
  std::vector<Spike> spikes;
  for (const auto& s : j.at("spikes")) spikes.push_back({TorusPoint(s.at("x").get<double>()), s.at("a").get<double>()});
  return DiscreteMeasure(std::move(spikes));
}

json to_json(const DiscreteMeasure& m) {
  json arr = json::array();
  for (const auto& s : m.spikes()) arr.push_back({{"x", s.position.value()}, {"a", s.amplitude}});
  return {{"spikes", arr}};
}

json to_json(const TrigPoly& p) {
  return {{"degree", p.degree()}, {"coeffs", std::vector<double>(p.coeffs().data(), p.coeffs().data() + p.coeffs().size())}};
}

TrigPoly trig_poly_from_json(const json& j) {
  const int d = j.at("degree").get<int>();
  const auto c = j.at("coeffs").get<std::vector<double>>();
  return TrigPoly(d, Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size())));
}

json to_json(const CertificateReport& r) {
  json extrema = json::array();
  for (const auto& e : r.extrema) extrema.push_back({{"t", e.position.value()}, {"value", e.value}, {"polished", e.polished}});
  json sat = json::array();
  for (const auto& s : r.saturation_points) sat.push_back({{"t", s.position.value()}, {"sign", s.sign}});
  json out = {{"kind", r.kind},
              {"sup_norm", r.sup_norm},
              {"is_certificate", r.is_certificate},
              {"ndsc", r.ndsc},
              {"interpolation_residual", r.interpolation_residual},
              {"derivative_residual", r.derivative_residual},
              {"second_derivatives", std::vector<double>(r.second_derivatives.data(),
                                                         r.second_derivatives.data() + r.second_derivatives.size())},
              {"polish_fallback", r.polish_fallback},
              {"saturation_points", sat},
              {"extrema", extrema},
              {"eta", to_json(r.eta)}};
  if (r.dual) out["dual"] = to_json(*r.dual);
  if (r.grid_sup_off_support) out["grid_sup_off_support"] = *r.grid_sup_off_support;
  return out;
}

json to_json(const Polytope& p) {
  json hs = json::array();
  for (const auto& h : p.halfspaces)
    hs.push_back({{"normal", std::vector<double>(h.normal.data(), h.normal.data() + h.normal.size())}, {"offset", h.offset}});
  json vs = json::array();
  for (const auto& v : p.vertices) vs.push_back({v[0], v[1], v[2]});
  return {{"fc", p.fc}, {"level", p.level}, {"halfspaces", hs}, {"vertices", vs}};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(out), columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

CsvWriter& CsvWriter::cell(double v) { return cell(fmt(v)); }

CsvWriter& CsvWriter::cell(long long v) { return cell(std::to_string(v)); }

CsvWriter& CsvWriter::cell(const std::string& v) {
  if (in_row_ >= columns_) throw std::logic_error("CSV row has too many cells");
  out_ << (in_row_++ ? "," : "") << v;
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_) throw std::logic_error("CSV row has too few cells");
  out_ << '\n';
  in_row_ = 0;
}

void write_path_csv(std::ostream& out, const LassoPath& path, const Grid& grid) {
  CsvWriter w(out, {"segment", "lambda_hi", "lambda_lo", "index", "position", "sign", "offset", "slope"});
  for (std::size_t s = 0; s < path.segments.size(); ++s) {
    const PathSegment& seg = path.segments[s];
    for (std::size_t q = 0; q < seg.active.size(); ++q) {
      const auto qi = static_cast<Eigen::Index>(q);
      w.cell(static_cast<long long>(s)).cell(seg.lambda_hi).cell(seg.lambda_lo);
      w.cell(static_cast<long long>(seg.active[q])).cell(grid[seg.active[q]]);
      w.cell(seg.signs[qi] > 0 ? 1 : -1).cell(seg.offset[qi]).cell(seg.slope[qi]);
      w.end_row();
    }
  }
}

void write_continuation_csv(std::ostream& out, const ContinuationResult& res) {
  CsvWriter w(out, {"lambda", "spike", "position", "amplitude", "residual", "dual_sup", "certified"});
  for (const auto& p : res.points)
    for (Eigen::Index i = 0; i < p.a.size(); ++i) {
      w.cell(p.lambda).cell(static_cast<long long>(i)).cell(p.x[i]).cell(p.a[i]);
      w.cell(p.residual).cell(p.dual_sup).cell(p.certified ? 1 : 0);
      w.end_row();
    }
}

void write_samples_csv(std::ostream& out, const std::vector<std::string>& names, const std::vector<TrigPoly>& polys,
                       int n) {
  if (names.size() != polys.size()) throw std::invalid_argument("one name per polynomial");
  std::vector<std::string> header{"t"};
  header.insert(header.end(), names.begin(), names.end());
  CsvWriter w(out, header);
  for (int j = 0; j < n; ++j) {
    const double t = static_cast<double>(j) / n;
    w.cell(t);
    for (const auto& p : polys) w.cell(p(t));
    w.end_row();
  }
}

}  // namespace spikelab
