#pragma once
// Closed forms for the weight |x-y|^(gamma-1) in one dimension: cell
// measures for the quadtree and exact segment integrals for the in-cell
// resolver.  Everything here is pure arithmetic; no state.

namespace nlbv {

// Second antiderivative of |t|^(gamma-1): |t|^(gamma+1) / (gamma (gamma+1)).
double kernel_second_antideriv(double gamma, double t);

// First antiderivative: sign(t) |t|^gamma / gamma.
double kernel_first_antideriv(double gamma, double t);

// Integral of |x-y|^(gamma-1) over [a,b] x [c,d].  Uses the four-corner
// antiderivative difference near the diagonal; off-diagonal cells switch to
// a two-term midpoint expansion once its certified remainder drops below
// 1e-13 of the value, which sidesteps the cancellation in the differences.
// Never negative.
double nu_gamma_cell(double gamma, double a, double b, double c, double d);

// Integral of |x-y|^(gamma-1) dy over [c,d] for fixed x.  Stable for x far
// outside [c,d] via expm1/log1p; exact split at y = x when x is interior.
double kernel_segment_integral(double gamma, double x, double c, double d);

}  // namespace nlbv
