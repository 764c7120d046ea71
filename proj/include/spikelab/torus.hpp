#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <utility>
#include <vector>

namespace spikelab {

/// A point of the circle R/Z, always stored as its representative in [0, 1).
class TorusPoint {
 public:
  TorusPoint() = default;
  explicit TorusPoint(double t) : value_(wrap(t)) {}

  double value() const { return value_; }

  /// Reduces any real number to [0, 1).
  static double wrap(double t);

  friend TorusPoint operator+(TorusPoint p, double shift) { return TorusPoint(p.value_ + shift); }
  friend TorusPoint operator-(TorusPoint p, double shift) { return TorusPoint(p.value_ - shift); }
  friend bool operator==(TorusPoint, TorusPoint) = default;
  friend auto operator<=>(TorusPoint a, TorusPoint b) { return a.value_ <=> b.value_; }

 private:
  double value_ = 0.0;
};

/// Shortest distance on the torus, in [0, 1/2].
double torus_dist(TorusPoint t, TorusPoint u);

/// Signed representative of t - u in [-1/2, 1/2).
double torus_offset(TorusPoint t, TorusPoint u);

struct Spike {
  TorusPoint position;
  double amplitude = 0.0;
};

struct SignedPoint {
  TorusPoint position;
  int sign = 1;
};

/// Set of (position, sign) pairs with pairwise distinct positions.
class SignedSupport {
 public:
  SignedSupport() = default;
  explicit SignedSupport(std::vector<SignedPoint> entries);

  const std::vector<SignedPoint>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool contains(const SignedPoint& p, double tol = 1e-12) const;
  /// True when every entry of this support also appears (same sign) in `other`.
  bool subset_of(const SignedSupport& other, double tol = 1e-12) const;

 private:
  std::vector<SignedPoint> entries_;
};

/// Finite signed combination of Dirac masses on the torus. Spikes are kept
/// sorted by position; amplitudes are nonzero and positions distinct.
class DiscreteMeasure {
 public:
  static constexpr double kMinAmplitude = 1e-14;
  static constexpr double kMergeDistance = 1e-12;

  DiscreteMeasure() = default;
  /// Throws std::invalid_argument on an amplitude below kMinAmplitude; spikes
  /// closer than kMergeDistance are merged (amplitudes added).
  explicit DiscreteMeasure(std::vector<Spike> spikes);
  DiscreteMeasure(const Eigen::VectorXd& positions, const Eigen::VectorXd& amplitudes);

  const std::vector<Spike>& spikes() const { return spikes_; }
  std::size_t size() const { return spikes_.size(); }
  bool empty() const { return spikes_.empty(); }

  Eigen::VectorXd positions() const;
  Eigen::VectorXd amplitudes() const;
  Eigen::VectorXd signs() const;
  SignedSupport signed_support() const;

  DiscreteMeasure operator-() const;
  /// Sum of measures with coinciding positions merged.
  friend DiscreteMeasure operator+(const DiscreteMeasure& m, const DiscreteMeasure& n);
  DiscreteMeasure rotated(double shift) const;

 private:
  std::vector<Spike> spikes_;
};

/// Minimum pairwise torus distance; throws std::invalid_argument with fewer
/// than two spikes.
double min_separation(const DiscreteMeasure& m);
double min_separation(const Eigen::VectorXd& positions);

/// Total variation, i.e. the l1 norm of the amplitudes.
double tv_norm(const DiscreteMeasure& m);

struct SpikeMatch {
  std::size_t index = 0;      // spike of the estimate
  std::size_t ref_index = 0;  // spike of the reference
  double position_error = 0.0;
  double amplitude_error = 0.0;
  bool sign_agrees = true;
};

struct MatchReport {
  std::vector<SpikeMatch> matches;
  std::vector<std::size_t> unmatched;      // estimate spikes with no partner
  std::vector<std::size_t> unmatched_ref;  // reference spikes with no partner
  double max_position_error = 0.0;
  double max_amplitude_error = 0.0;
  bool all_signs_agree = true;
};

/// Greedy nearest-neighbour assignment of the spikes of `m` to those of `ref`
/// within `radius`. Requires radius < min_separation(ref) / 2.
MatchReport match_spikes(const DiscreteMeasure& m, const DiscreteMeasure& ref, double radius);

}  // namespace spikelab
