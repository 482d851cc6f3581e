#pragma once

#include <functional>
#include <vector>

namespace nlbv {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // conservative estimate, not a hard bound
};

// Adaptive Simpson with Richardson error control. `tol` is an absolute
// target for the whole interval; the estimate returned in `error` carries a
// safety factor over the raw |S2-S1|/15 increments.
QuadResult adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                            double tol, int max_depth = 32);

// Same, but the integration starts from a fixed breakpoint partition
// (function kinks, knots, jump locations); each cell gets a share of `tol`.
QuadResult adaptive_simpson_cells(const std::function<double(double)>& f,
                                  const std::vector<double>& breaks, double tol,
                                  int max_depth = 32);

// 16-point Gauss-Legendre on [a,b]; no error estimate.
double gauss16(const std::function<double(double)>& f, double a, double b);

}  // namespace nlbv
