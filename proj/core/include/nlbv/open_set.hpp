#pragma once

#include <vector>

namespace nlbv {

struct Interval1D {
  double lo = 0.0;
  double hi = 0.0;  // open interval (lo, hi); lo may be -inf, hi may be +inf
  double length() const { return hi - lo; }
};

// Finite union of disjoint open intervals, kept sorted. Touching endpoints
// (b_i == a_{i+1}) are allowed and represent genuinely distinct components.
class OpenSet1D {
 public:
  OpenSet1D() = default;
  explicit OpenSet1D(std::vector<Interval1D> parts);  // validates and sorts
  static OpenSet1D interval(double lo, double hi);

  const std::vector<Interval1D>& parts() const { return parts_; }
  bool empty() const { return parts_.empty(); }

  bool contains(double x) const;
  bool closure_contains(double x) const;
  // Total length; unbounded components are clipped to (-radius, radius).
  double length(double radius = 1e308) const;

  double inf() const;  // leftmost endpoint (may be -inf)
  double sup() const;  // rightmost endpoint (may be +inf)

  bool subset_of(const OpenSet1D& other) const;
  OpenSet1D intersect(double lo, double hi) const;
  // Clip unbounded components to (-radius, radius).
  OpenSet1D truncated(double radius) const;

 private:
  std::vector<Interval1D> parts_;
};

}  // namespace nlbv
