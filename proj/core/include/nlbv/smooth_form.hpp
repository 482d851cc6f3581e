#pragma once

#include <vector>

#include "nlbv/interval.hpp"

namespace nlbv {

// Closed catalog of smooth (C^1) forms for the absolutely continuous part of
// a function. The catalog is closed so that range enclosures of values and
// derivatives are exact up to round-off padding; arbitrary user callables are
// not representable by design.
//
//   Affine : coef = {intercept, slope}
//   Poly   : coef = {c0, c1, ...},   sum c_i x^i
//   Sine   : amp * sin(freq * x + phase)
//   Spline : monotonicity-limited cubic Hermite interpolant (knots kx, values
//            ky, slopes kd); constant extension outside the knot span
//   Sum    : pointwise sum of sub-forms
//   Radial : terms[0] evaluated at sqrt((x - coef[0])^2 + coef[1]^2); how a
//            profile in r looks along a line at distance coef[1] from the
//            center. Closed under affine reparametrization, which is what
//            keeps slices of radial 2D functions inside the catalog.
enum class FormKind { Affine, Poly, Sine, Spline, Sum, Radial };

struct SmoothForm {
  FormKind kind = FormKind::Affine;
  std::vector<double> coef{0.0, 0.0};
  double amp = 0.0, freq = 0.0, phase = 0.0;
  std::vector<double> kx, ky, kd;
  std::vector<SmoothForm> terms;

  static SmoothForm affine(double slope, double intercept);
  static SmoothForm constant(double c) { return affine(0.0, c); }
  static SmoothForm poly(std::vector<double> coefficients);
  static SmoothForm sine(double amp, double freq, double phase);
  // Builds slopes with the Fritsch-Carlson limiter (monotone data give a
  // monotone interpolant). Knots must be strictly increasing.
  static SmoothForm spline(std::vector<double> knots, std::vector<double> values);
  static SmoothForm spline_with_slopes(std::vector<double> knots, std::vector<double> values,
                                       std::vector<double> slopes);
  static SmoothForm sum(std::vector<SmoothForm> parts);
  // inner(sqrt((x-center)^2 + offset^2)); constants pass through unchanged.
  static SmoothForm radial_pullback(SmoothForm inner, double center, double offset);

  double eval(double x) const;
  double deriv(double x) const;

  // Rigorous enclosures of f([lo,hi]) and f'([lo,hi]).
  Iv range(double lo, double hi) const;
  Iv deriv_range(double lo, double hi) const;

  // Positions in (lo,hi) where the form changes analytic character
  // (spline knots); used to pre-split quadratures and cell grids.
  void natural_breaks(double lo, double hi, std::vector<double>& out) const;

  // Value algebra (exact, stays in the catalog).
  SmoothForm scaled(double c) const;
  SmoothForm plus_const(double c) const;
  // g(t) = f(a*t + b)
  SmoothForm reparam(double a, double b) const;
};

struct MonoSpan {
  double lo = 0, hi = 0;
  int sign = 0;  // +1 nondecreasing, -1 nonincreasing, 0 unresolved sliver
};

// Partition [a,b] into maximal spans of one derivative sign, found by
// derivative-enclosure subdivision. Unresolved slivers (tangencies of f')
// are reported with sign 0 and width below eps.
std::vector<MonoSpan> monotone_partition(const SmoothForm& f, double a, double b,
                                         double eps = 1e-12);

// Total variation of f over [a,b]: telescoped endpoint differences over the
// monotone partition (exact on resolved spans).
double form_variation(const SmoothForm& f, double a, double b);

// Real roots of sum c_i x^i in [lo,hi], found by recursive critical-point
// isolation plus bisection. Complete for sign-changing roots.
std::vector<double> poly_real_roots(const std::vector<double>& coef, double lo, double hi);

// Coefficient-vector product, used when blending forms multiplies
// polynomial pieces.
std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace nlbv
