#include "spikelab/torus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

namespace spikelab {

double TorusPoint::wrap(double t) {
  if (!std::isfinite(t)) throw std::invalid_argument("torus point must be finite");
  double r = t - std::floor(t);
  // floor() can round a tiny negative t up to exactly 1.
  if (r >= 1.0) r = 0.0;
  return r;
}

double torus_dist(TorusPoint t, TorusPoint u) {
  const double d = std::abs(t.value() - u.value());
  return std::min(d, 1.0 - d);
}

double torus_offset(TorusPoint t, TorusPoint u) {
  double d = t.value() - u.value();
  if (d >= 0.5) d -= 1.0;
  if (d < -0.5) d += 1.0;
  return d;
}

SignedSupport::SignedSupport(std::vector<SignedPoint> entries) : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(),
            [](const SignedPoint& a, const SignedPoint& b) { return a.position < b.position; });
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].sign != 1 && entries_[i].sign != -1)
      throw std::invalid_argument("signed support entries need sign +1 or -1");
    for (std::size_t j = i + 1; j < entries_.size(); ++j)
      if (torus_dist(entries_[i].position, entries_[j].position) == 0.0)
        throw std::invalid_argument("signed support positions must be distinct");
  }
}

bool SignedSupport::contains(const SignedPoint& p, double tol) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const SignedPoint& e) {
    return e.sign == p.sign && torus_dist(e.position, p.position) <= tol;
  });
}

bool SignedSupport::subset_of(const SignedSupport& other, double tol) const {
  return std::all_of(entries_.begin(), entries_.end(),
                     [&](const SignedPoint& e) { return other.contains(e, tol); });
}

DiscreteMeasure::DiscreteMeasure(std::vector<Spike> spikes) {
  for (const auto& s : spikes) {
    if (!std::isfinite(s.amplitude) || std::abs(s.amplitude) < kMinAmplitude)
      throw std::invalid_argument("spike amplitudes must be nonzero (|a| >= 1e-14)");
  }
  std::sort(spikes.begin(), spikes.end(),
            [](const Spike& a, const Spike& b) { return a.position < b.position; });
  for (const auto& s : spikes) {
    auto hit = std::find_if(spikes_.begin(), spikes_.end(), [&](const Spike& e) {
      return torus_dist(e.position, s.position) < kMergeDistance;
    });
    if (hit != spikes_.end())
      hit->amplitude += s.amplitude;
    else
      spikes_.push_back(s);
  }
  // Merging can cancel mass exactly.
  std::erase_if(spikes_, [](const Spike& s) { return std::abs(s.amplitude) < kMinAmplitude; });
}

DiscreteMeasure::DiscreteMeasure(const Eigen::VectorXd& positions,
                                 const Eigen::VectorXd& amplitudes)
    : DiscreteMeasure([&] {
        if (positions.size() != amplitudes.size())
          throw std::invalid_argument("positions and amplitudes differ in length");
        std::vector<Spike> s;
        for (Eigen::Index i = 0; i < positions.size(); ++i)
          s.push_back({TorusPoint(positions[i]), amplitudes[i]});
        return s;
      }()) {}

Eigen::VectorXd DiscreteMeasure::positions() const {
  Eigen::VectorXd x(spikes_.size());
  for (std::size_t i = 0; i < spikes_.size(); ++i) x[i] = spikes_[i].position.value();
  return x;
}

Eigen::VectorXd DiscreteMeasure::amplitudes() const {
  Eigen::VectorXd a(spikes_.size());
  for (std::size_t i = 0; i < spikes_.size(); ++i) a[i] = spikes_[i].amplitude;
  return a;
}

Eigen::VectorXd DiscreteMeasure::signs() const {
  return amplitudes().unaryExpr([](double v) { return v > 0 ? 1.0 : -1.0; });
}

SignedSupport DiscreteMeasure::signed_support() const {
  std::vector<SignedPoint> e;
  for (const auto& s : spikes_) e.push_back({s.position, s.amplitude > 0 ? 1 : -1});
  return SignedSupport(std::move(e));
}

DiscreteMeasure DiscreteMeasure::operator-() const {
  DiscreteMeasure m = *this;
  for (auto& s : m.spikes_) s.amplitude = -s.amplitude;
  return m;
}

DiscreteMeasure operator+(const DiscreteMeasure& m, const DiscreteMeasure& n) {
  std::vector<Spike> all = m.spikes_;
  all.insert(all.end(), n.spikes_.begin(), n.spikes_.end());
  DiscreteMeasure out;
  for (const auto& s : all) {
    auto hit = std::find_if(out.spikes_.begin(), out.spikes_.end(), [&](const Spike& e) {
      return torus_dist(e.position, s.position) < DiscreteMeasure::kMergeDistance;
    });
    if (hit != out.spikes_.end())
      hit->amplitude += s.amplitude;
    else
      out.spikes_.push_back(s);
  }
  std::erase_if(out.spikes_, [](const Spike& s) {
    return std::abs(s.amplitude) < DiscreteMeasure::kMinAmplitude;
  });
  std::sort(out.spikes_.begin(), out.spikes_.end(),
            [](const Spike& a, const Spike& b) { return a.position < b.position; });
  return out;
}

DiscreteMeasure DiscreteMeasure::rotated(double shift) const {
  std::vector<Spike> s = spikes_;
  for (auto& e : s) e.position = e.position + shift;
  return DiscreteMeasure(std::move(s));
}

double min_separation(const Eigen::VectorXd& x) {
  if (x.size() < 2) throw std::invalid_argument("minimum separation needs at least two spikes");
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i)
    for (Eigen::Index j = i + 1; j < x.size(); ++j)
      best = std::min(best, torus_dist(TorusPoint(x[i]), TorusPoint(x[j])));
  return best;
}

double min_separation(const DiscreteMeasure& m) { return min_separation(m.positions()); }

double tv_norm(const DiscreteMeasure& m) {
  double s = 0.0;
  for (const auto& e : m.spikes()) s += std::abs(e.amplitude);
  return s;
}

MatchReport match_spikes(const DiscreteMeasure& m, const DiscreteMeasure& ref, double radius) {
  if (ref.size() >= 2 && !(radius < min_separation(ref) / 2))
    throw std::invalid_argument("match radius must be below half the reference separation");
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < ref.size(); ++j) {
      const double d = torus_dist(m.spikes()[i].position, ref.spikes()[j].position);
      if (d <= radius) pairs.emplace_back(d, i, j);
    }
  std::sort(pairs.begin(), pairs.end());

  MatchReport r;
  std::vector<bool> used_m(m.size(), false), used_ref(ref.size(), false);
  for (const auto& [d, i, j] : pairs) {
    if (used_m[i] || used_ref[j]) continue;
    used_m[i] = used_ref[j] = true;
    const double a = m.spikes()[i].amplitude, b = ref.spikes()[j].amplitude;
    SpikeMatch s{i, j, d, std::abs(a - b), (a > 0) == (b > 0)};
    r.max_position_error = std::max(r.max_position_error, s.position_error);
    r.max_amplitude_error = std::max(r.max_amplitude_error, s.amplitude_error);
    r.all_signs_agree = r.all_signs_agree && s.sign_agrees;
    r.matches.push_back(s);
  }
  std::sort(r.matches.begin(), r.matches.end(),
            [](const SpikeMatch& a, const SpikeMatch& b) { return a.ref_index < b.ref_index; });
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!used_m[i]) r.unmatched.push_back(i);
  for (std::size_t j = 0; j < ref.size(); ++j)
    if (!used_ref[j]) r.unmatched_ref.push_back(j);
  return r;
}

}  // namespace spikelab
