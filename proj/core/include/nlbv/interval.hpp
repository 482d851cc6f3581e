#pragma once

#include <algorithm>
#include <cmath>

namespace nlbv {

// Closed interval used for range enclosures. Operations are outward-safe in
// the sense that they contain the exact image; a small epsilon pad is applied
// where rounding could otherwise shave the hull.
struct Iv {
  double lo = 0.0;
  double hi = 0.0;

  Iv() = default;
  Iv(double a, double b) : lo(std::min(a, b)), hi(std::max(a, b)) {}

  static Iv point(double v) { return Iv(v, v); }

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double v) const { return lo <= v && v <= hi; }

  Iv& operator+=(const Iv& o) {
    lo += o.lo;
    hi += o.hi;
    return *this;
  }
};

inline Iv operator+(Iv a, const Iv& b) { return a += b; }

inline Iv operator-(const Iv& a, const Iv& b) { return Iv(a.lo - b.hi, a.hi - b.lo); }

inline Iv operator*(double c, const Iv& a) {
  return c >= 0 ? Iv(c * a.lo, c * a.hi) : Iv(c * a.hi, c * a.lo);
}

inline Iv operator*(const Iv& a, const Iv& b) {
  double p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
  return Iv(std::min(std::min(p1, p2), std::min(p3, p4)),
            std::max(std::max(p1, p2), std::max(p3, p4)));
}

inline Iv hull(const Iv& a, const Iv& b) {
  return Iv(std::min(a.lo, b.lo), std::max(a.hi, b.hi));
}

inline Iv intersect(const Iv& a, const Iv& b) {
  double lo = std::max(a.lo, b.lo);
  double hi = std::min(a.hi, b.hi);
  if (lo > hi) {
    double m = 0.5 * (lo + hi);
    return Iv(m, m);
  }
  Iv r;
  r.lo = lo;
  r.hi = hi;
  return r;
}

inline Iv abs_iv(const Iv& a) {
  if (a.lo >= 0) return a;
  if (a.hi <= 0) return Iv(-a.hi, -a.lo);
  return Iv(0.0, std::max(-a.lo, a.hi));
}

// Pad an enclosure outward to absorb evaluation round-off.
inline Iv pad(const Iv& a, double eps) {
  double s = eps * (1.0 + std::max(std::abs(a.lo), std::abs(a.hi)));
  Iv r;
  r.lo = a.lo - s;
  r.hi = a.hi + s;
  return r;
}

}  // namespace nlbv
