#pragma once
// Exact piecewise representation of 1D BV functions: smooth pieces tiling an
// open domain, derived jump points, and windowed Cantor components.  The
// decomposition |Du| = |D^a u| + |D^j u| + |D^c u| is available in closed
// form, which is what makes the limit checks in the test suite meaningful.

#include <cstddef>
#include <vector>

#include "nlbv/interval.hpp"
#include "nlbv/open_set.hpp"
#include "nlbv/smooth_form.hpp"

namespace nlbv {

// Jump discontinuity with one-sided limits of the full function (smooth
// piece plus Cantor contributions).  Derived by BV1D::make, not user input.
struct JumpPoint {
  double loc = 0.0;
  double left = 0.0;
  double right = 0.0;
  double height() const { return right - left; }
};

// Scaled copy of the Cantor function mapped onto [a,b], restricted to the
// parameter window [w0,w1].  Windows make truncation exact: clamping at a
// plateau coordinate freezes the value without resampling the function.
// Outside the active region the part is constant (0 left, mass() right).
struct CantorPart {
  double a = 0.0, b = 1.0;    // support of the parameterization
  double scale = 1.0;         // multiplier of the unit Cantor function
  double w0 = 0.0, w1 = 1.0;  // window, 0 <= w0 < w1 <= 1

  double param(double x) const { return (x - a) / (b - a); }
  double x_lo() const { return a + w0 * (b - a); }
  double x_hi() const { return a + w1 * (b - a); }
  double eval(double x) const;
  double mass() const;                          // signed increment over the window
  double variation() const;
  double measure(double lo, double hi) const;   // signed D^c mass of (lo,hi)
  Iv range(double lo, double hi) const;         // exact by monotonicity
};

// Smooth piece on (lo,hi).  The form is evaluated on the closed interval.
struct Piece {
  double lo = 0.0, hi = 1.0;
  SmoothForm form = SmoothForm::constant(0.0);
};

struct Variation {
  double ac = 0.0;
  double jump = 0.0;
  double cantor = 0.0;
  double total() const { return ac + jump + cantor; }
};

class BV1D {
 public:
  // Validates and assembles.  Pieces must each lie inside a single domain
  // part and not overlap; uncovered spans are filled with constants that
  // continue the neighboring piece value (zero if the part has no pieces).
  // Jumps are derived at interior junctions where the one-sided form values
  // disagree by more than 1e-9 relative; smaller mismatches are treated as
  // continuous junctions.  Cantor active regions must be pairwise disjoint
  // and contained in one part each, so the variation split stays exact.
  static BV1D make(OpenSet1D domain, std::vector<Piece> pieces,
                   std::vector<CantorPart> cantors = {});

  const OpenSet1D& domain() const { return dom_; }
  const std::vector<Piece>& pieces() const { return pieces_; }
  const std::vector<JumpPoint>& jumps() const { return jumps_; }
  const std::vector<CantorPart>& cantor_parts() const { return cantors_; }

  // Pointwise evaluation on the closure of the domain.  At a jump the
  // midpoint value is returned; at touching part boundaries the right part
  // wins.  Throws std::domain_error outside the closure.
  double eval(double x) const;
  double eval_left(double x) const;   // left limit (inside limit at part start)
  double eval_right(double x) const;  // right limit (inside limit at part end)

  // Rigorous enclosure of u over [lo,hi], which must lie in the closure of
  // one domain part.  One-sided limits at interior jumps are included.
  Iv range_on(double lo, double hi) const;
  // Enclosure of the derivative of the smooth part only.
  Iv ac_deriv_range_on(double lo, double hi) const;
  // Total |D^c u| mass of (lo,hi).
  double cantor_measure_on(double lo, double hi) const;
  bool has_jump_in(double lo, double hi) const;  // open interval
  // Appends breakpoints interior to (lo,hi): junctions, jump locations,
  // Cantor active-region endpoints, spline knots.  Caller sorts.
  void breakpoints(double lo, double hi, std::vector<double>& out) const;

  Variation variation_decomposition() const;
  // Du((a,b]) for a <= b in the closure of one part.
  double signed_measure(double a, double b) const;
  // Graph area: integral of sqrt(1+u'^2) over the smooth part plus the
  // total mass of the singular parts.
  double area_functional() const;
  Iv range_hint() const { return range_hint_; }

  BV1D scaled(double c) const;
  BV1D plus_const(double c) const;
  // Same pointwise values on domain() intersected with (lo,hi). Cantor parts
  // cut on the left collapse their hidden rise into a constant.
  BV1D restrict_to(double lo, double hi) const;
  static BV1D sum(const BV1D& u, const BV1D& v);  // identical domains
  // t -> u(a t + b) on the pulled-back domain; a != 0.  Reflections flip
  // Cantor parts via c(1-s) = 1-c(s), compensated by a constant offset.
  BV1D reparam_affine(double a, double b) const;

 private:
  OpenSet1D dom_;
  std::vector<Piece> pieces_;
  std::vector<JumpPoint> jumps_;
  std::vector<CantorPart> cantors_;
  std::vector<std::size_t> part_first_;  // index of each part's first piece
  Iv range_hint_{0.0, 0.0};

  double cantor_sum(double x) const;
  Iv cantor_range_sum(double lo, double hi) const;
  // candidate piece indices for x: {left-limit piece, right-limit piece};
  // npos when absent
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  void locate(double x, std::size_t& ileft, std::size_t& iright) const;
  const JumpPoint* jump_at(double x) const;
};

// Integral of |u - v| over the (shared) domain.
double l1_distance(const BV1D& u, const BV1D& v, double tol = 1e-9);
// l1 distance plus the area functional gap; the quantity driving the
// area-strict convergence checks.
double area_strict_gap(const BV1D& u, const BV1D& v, double tol = 1e-9);

}  // namespace nlbv
