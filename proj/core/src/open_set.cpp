#include "nlbv/open_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nlbv {

OpenSet1D::OpenSet1D(std::vector<Interval1D> parts) : parts_(std::move(parts)) {
  std::sort(parts_.begin(), parts_.end(),
            [](const Interval1D& a, const Interval1D& b) { return a.lo < b.lo; });
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    if (!(parts_[i].lo < parts_[i].hi))
      throw std::invalid_argument("OpenSet1D: interval with lo >= hi");
    if (i > 0 && parts_[i].lo < parts_[i - 1].hi)
      throw std::invalid_argument("OpenSet1D: overlapping intervals");
  }
}

OpenSet1D OpenSet1D::interval(double lo, double hi) {
  return OpenSet1D(std::vector<Interval1D>{{lo, hi}});
}

bool OpenSet1D::contains(double x) const {
  for (const auto& p : parts_)
    if (x > p.lo && x < p.hi) return true;
  return false;
}

bool OpenSet1D::closure_contains(double x) const {
  for (const auto& p : parts_)
    if (x >= p.lo && x <= p.hi) return true;
  return false;
}

double OpenSet1D::length(double radius) const {
  double total = 0.0;
  for (const auto& p : parts_) {
    double lo = std::max(p.lo, -radius);
    double hi = std::min(p.hi, radius);
    if (hi > lo) total += hi - lo;
  }
  return total;
}

double OpenSet1D::inf() const {
  if (parts_.empty()) return std::numeric_limits<double>::quiet_NaN();
  return parts_.front().lo;
}

double OpenSet1D::sup() const {
  if (parts_.empty()) return std::numeric_limits<double>::quiet_NaN();
  return parts_.back().hi;
}

bool OpenSet1D::subset_of(const OpenSet1D& other) const {
  for (const auto& p : parts_) {
    bool covered = false;
    for (const auto& q : other.parts_) {
      if (p.lo >= q.lo && p.hi <= q.hi) {
        covered = true;
        break;
      }
    }
    if (!covered) return false;
  }
  return true;
}

OpenSet1D OpenSet1D::intersect(double lo, double hi) const {
  std::vector<Interval1D> out;
  for (const auto& p : parts_) {
    double a = std::max(p.lo, lo);
    double b = std::min(p.hi, hi);
    if (b > a) out.push_back({a, b});
  }
  OpenSet1D r;
  r.parts_ = std::move(out);
  return r;
}

OpenSet1D OpenSet1D::truncated(double radius) const { return intersect(-radius, radius); }

}  // namespace nlbv
