#include "nlbv/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nlbv {

namespace {
void check_gamma(double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("kernel: gamma must be positive");
}
}  // namespace

double kernel_second_antideriv(double gamma, double t) {
  check_gamma(gamma);
  return std::pow(std::abs(t), gamma + 1.0) / (gamma * (gamma + 1.0));
}

double kernel_first_antideriv(double gamma, double t) {
  check_gamma(gamma);
  double v = std::pow(std::abs(t), gamma) / gamma;
  return t < 0.0 ? -v : v;
}

double nu_gamma_cell(double gamma, double a, double b, double c, double d) {
  check_gamma(gamma);
  if (!(b >= a) || !(d >= c)) throw std::invalid_argument("nu_gamma_cell: bad cell");
  if (b == a || d == c) return 0.0;
  double w1 = b - a, w2 = d - c;

  // off-diagonal midpoint expansion, guarded by the explicit remainder
  if (a - d > 0.0 || b - c < 0.0) {
    double D = std::abs(0.5 * (a + b) - 0.5 * (c + d));
    double near = D - 0.5 * (w1 + w2);  // min |x-y| on the cell
    if (near > 0.0) {
      double mu2 = (w1 * w1 + w2 * w2) / 12.0;
      double mu4 = (w1 * w1 * w1 * w1) / 80.0 + (w1 * w1 * w2 * w2) / 24.0 +
                   (w2 * w2 * w2 * w2) / 80.0;
      double c2 = (gamma - 1.0) * (gamma - 2.0);
      double c4 = c2 * (gamma - 3.0) * (gamma - 4.0);
      double val = w1 * w2 * std::pow(D, gamma - 1.0) * (1.0 + 0.5 * c2 * mu2 / (D * D));
      double rem = std::abs(c4) * std::pow(near, gamma - 5.0) * mu4 / 24.0 * w1 * w2;
      if (rem <= 1e-13 * std::abs(val)) return std::max(0.0, val);
    }
  }

  double g = kernel_second_antideriv(gamma, b - c) - kernel_second_antideriv(gamma, a - c) -
             kernel_second_antideriv(gamma, b - d) + kernel_second_antideriv(gamma, a - d);
  return std::max(0.0, g);
}

double kernel_segment_integral(double gamma, double x, double c, double d) {
  check_gamma(gamma);
  if (!(d >= c)) throw std::invalid_argument("kernel_segment_integral: bad segment");
  if (d == c) return 0.0;
  if (x >= c && x <= d) {
    return (std::pow(x - c, gamma) + std::pow(d - x, gamma)) / gamma;
  }
  // one-sided: (far^gamma - near^gamma)/gamma without cancellation
  double near = (x > d) ? x - d : c - x;
  double width = d - c;
  return std::pow(near, gamma) / gamma * std::expm1(gamma * std::log1p(width / near));
}

}  // namespace nlbv
