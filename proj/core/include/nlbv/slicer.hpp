#pragma once
// Planar BV functions assembled from sliceable parts, their exact 1D
// restrictions along lines, and the reduction of the 2D functional to an
// integral of 1D evaluations:
//
//   F(u, Omega) = 1/2 int_{S^1} int_z F_1d(u_{sigma,z}, Omega_{sigma,z}) dz dsigma
//
// where u_{sigma,z}(t) = u(z*perp(sigma) + t*sigma). The |x-y| factor from
// the change of variables is absorbed by evaluating the slices with the 1D
// kernel exponent gamma-1, so no correction terms appear. Directions are
// folded onto [0,pi) (a slice and its reversal carry the same functional).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "nlbv/bv1d.hpp"
#include "nlbv/evaluator1d.hpp"

namespace nlbv {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline Vec2 perp(Vec2 v) { return {-v.y, v.x}; }
inline Vec2 unit_dir(double angle) { return {std::cos(angle), std::sin(angle)}; }

// Rectangle or disk; the shapes whose line sections are single intervals.
struct Domain2D {
  enum class Kind { Rect, Disk };
  Kind kind = Kind::Rect;
  double x0 = 0, y0 = 0, x1 = 1, y1 = 1;  // rect corners, x0<x1, y0<y1
  Vec2 center{0.0, 0.0};
  double radius = 1.0;

  static Domain2D rect(double x0, double y0, double x1, double y1);
  static Domain2D disk(double cx, double cy, double r);

  double area() const;
  bool contains(Vec2 p) const;
  // {t : z*perp(sigma) + t*sigma in domain} as (t0,t1); false if empty.
  bool chord(Vec2 sigma, double z, double& t0, double& t1) const;
  // offsets z for which the chord is nonempty
  Iv offset_span(Vec2 sigma) const;
};

// One sliceable summand. Which fields matter depends on kind:
//   Ridge       profile(dot(dir, p)); profile domain must cover the image
//               of the 2D domain under that coordinate
//   Radial      profile(|p - center|); profile domain must cover the radii
//               seen from center, and must carry no Cantor part (the sqrt
//               pullback of a Cantor window leaves the representation)
//   DiskInd     height * indicator of the disk (center, radius)
//   PolyInd     height * indicator of the convex polygon (verts, ccw)
//   Sheet       mass * cantor(s) in s = dot(axis, p), ramp from s0 to s1
struct BV2DTerm {
  enum class Kind { Ridge, Radial, DiskInd, PolyInd, Sheet };
  Kind kind = Kind::Ridge;
  BV1D profile = BV1D::make(OpenSet1D::interval(0.0, 1.0), {});
  Vec2 dir{1.0, 0.0};  // ridge direction / sheet axis, unit
  Vec2 center{0.0, 0.0};
  double radius = 0.0;
  double height = 0.0;
  double mass = 0.0;
  double s0 = 0.0, s1 = 1.0;
  std::vector<Vec2> verts;
};

class BV2D {
 public:
  // Validates profiles against the domain (coverage, no Cantor mass under
  // radial pullbacks, convexity of polygons) so that slice() cannot fail.
  static BV2D make(Domain2D domain, std::vector<BV2DTerm> terms);

  const Domain2D& domain() const { return dom_; }
  const std::vector<BV2DTerm>& terms() const { return terms_; }

  double eval(Vec2 p) const;  // pointwise; indicator boundaries count as inside
  BV2D scaled(double c) const;

 private:
  Domain2D dom_;
  std::vector<BV2DTerm> terms_;
};

struct Slice {
  bool hit = false;  // false when the line misses the domain
  OpenSet1D domain;  // Omega_{sigma,z}, one interval
  BV1D u;
};

// Exact restriction along t -> z*perp(sigma) + t*sigma. sigma must be unit.
Slice slice(const BV2D& u, Vec2 sigma, double z);

struct SliceQuadrature {
  int n_directions = 64;  // uniform angles on [0,pi)
  double tol_rel = 5e-3;  // target for the combined relative error bound
  EvalOptions eval;       // per-slice evaluator settings; tol_rel scaled down
  int threads = 1;        // directions processed in parallel, reduced in order
};

struct Estimate2D {
  double value = 0.0;
  double error_bound = 0.0;  // angular estimate + offset estimate + slice bounds
  std::size_t n_directions = 0;
  std::size_t n_offsets = 0;  // total 1D evaluations
  bool tolerance_met = false;
};

// Angular trapezoid (periodic, so spectrally accurate for smooth direction
// dependence) around adaptive Simpson in the offset, with breakpoints at
// tangency offsets where slices change character.
Estimate2D f_eval_2d(const BV2D& u, double gamma, double lambda,
                     const SliceQuadrature& quad = {});

// Direct 4D Monte Carlo of lambda nu(E) with kernel exponent gamma-2; the
// cross-check that bypasses slicing entirely. error_bound is three standard
// errors. Deterministic for fixed seed independently of threads. The weight
// has finite variance for gamma > 1/2 on indicator-type functions; treat
// smaller gamma as indicative.
Estimate2D f_eval_2d_mc(const BV2D& u, double gamma, double lambda,
                        std::size_t samples, std::uint64_t seed, int threads = 1);

// 2 * volume of the unit ball in dimension n-1: the sphere average that
// converts sliced 1D variation into n-dimensional variation.
double c_n(int n);

// Exact decomposition where the geometry permits (indicators strictly inside
// the domain, ridges/sheets via chord-width weighting); radial terms whose
// profile support leaves the domain fall back to slicing quadrature / c_n.
Variation variation_decomposition_2d(const BV2D& u);

// Variation by the slicing identity itself: directional 1D decompositions
// integrated over angles and offsets, divided by c_n(2). Agreement with the
// exact decomposition is the numerical form of the change-of-variable fact.
Variation variation_by_slicing(const BV2D& u, int n_directions = 64,
                               double tol = 1e-4);

// Rotation about the origin; rect domains only for multiples of pi/2.
BV2D rotated(const BV2D& u, double angle);

}  // namespace nlbv
