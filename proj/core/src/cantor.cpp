#include "nlbv/cantor.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace nlbv {

namespace {

using u128 = unsigned __int128;

constexpr int kFracBits = 96;

// Exact 96-bit fixed-point image of x in [0,1]. Doubles with exponent >= -43
// are represented exactly; smaller ones lose bits below 2^-96, which is far
// under the Hoelder modulus of the Cantor function at that scale.
u128 to_fixed(double x) {
  int e = 0;
  double m = std::frexp(x, &e);  // x = m * 2^e, m in [0.5, 1)
  auto mi = static_cast<std::uint64_t>(std::ldexp(m, 53));
  int shift = e + kFracBits - 53;
  if (shift >= 0) return static_cast<u128>(mi) << shift;
  if (shift <= -64) return 0;
  return static_cast<u128>(mi >> -shift);
}

}  // namespace

double cantor_value(double x, int depth) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("cantor_value: x outside [0,1]");
  if (depth < 1) throw std::invalid_argument("cantor_value: depth must be positive");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;

  const u128 one = static_cast<u128>(1) << kFracBits;
  u128 f = to_fixed(x);
  double y = 0.0;
  double w = 0.5;
  for (int k = 0; k < depth; ++k) {
    f *= 3;
    int digit = static_cast<int>(f >> kFracBits);
    f &= one - 1;
    if (digit == 1) return y + w;  // middle-third plateau, value exact
    if (digit == 2) y += w;
    w *= 0.5;
    if (f == 0) return y;  // ternary expansion terminated
  }
  return y;
}

double cantor_measure(double a, double b, int depth) {
  if (b < a) throw std::invalid_argument("cantor_measure: b < a");
  double lo = std::fmin(std::fmax(a, 0.0), 1.0);
  double hi = std::fmin(std::fmax(b, 0.0), 1.0);
  if (hi <= lo) return 0.0;
  return cantor_value(hi, depth) - cantor_value(lo, depth);
}

}  // namespace nlbv
