#pragma once

namespace nlbv {

// Cantor-Lebesgue function on [0,1], evaluated by the ternary digit
// algorithm: walk ternary digits of x; digit 1 ends the walk on a plateau,
// digit 2 contributes the matching binary digit. Digits are extracted from a
// 96-bit fixed-point image of x, so the walk itself is exact; truncating
// after `depth` digits leaves an error of at most 2^-depth. Inputs outside
// [0,1] throw.
double cantor_value(double x, int depth = 48);

// Cantor measure of (a,b) intersected with [0,1]. The Cantor function is the
// CDF of its measure and has no atoms, so open/closed endpoints are
// indistinguishable: this is cantor_value(b) - cantor_value(a) with clamping.
double cantor_measure(double a, double b, int depth = 48);

}  // namespace nlbv
