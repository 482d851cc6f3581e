#include "nlbv/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace nlbv {

namespace {

struct SimpsonWorker {
  const std::function<double(double)>& f;
  int max_depth;

  QuadResult recurse(double a, double fa, double m, double fm, double b, double fb,
                     double whole, double tol, int depth) const {
    double lm = 0.5 * (a + m);
    double rm = 0.5 * (m + b);
    double flm = f(lm);
    double frm = f(rm);
    double h6 = (b - a) / 12.0;
    double left = h6 * (fa + 4.0 * flm + fm);
    double right = h6 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth >= max_depth || std::abs(delta) <= 15.0 * tol) {
      QuadResult r;
      r.value = left + right + delta / 15.0;
      // conservative: keep the raw Richardson increment as the error share
      r.error = std::abs(delta) / 15.0 + 1e-300;
      if (depth >= max_depth && std::abs(delta) > 15.0 * tol) r.error = std::abs(delta);
      return r;
    }
    QuadResult rl = recurse(a, fa, lm, flm, m, fm, left, 0.5 * tol, depth + 1);
    QuadResult rr = recurse(m, fm, rm, frm, b, fb, right, 0.5 * tol, depth + 1);
    rl.value += rr.value;
    rl.error += rr.error;
    return rl;
  }
};

}  // namespace

QuadResult adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                            double tol, int max_depth) {
  if (!(b > a)) return {};
  double m = 0.5 * (a + b);
  double fa = f(a);
  double fm = f(m);
  double fb = f(b);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  SimpsonWorker w{f, max_depth};
  return w.recurse(a, fa, m, fm, b, fb, whole, std::max(tol, 1e-16), 0);
}

QuadResult adaptive_simpson_cells(const std::function<double(double)>& f,
                                  const std::vector<double>& breaks, double tol,
                                  int max_depth) {
  QuadResult total;
  if (breaks.size() < 2) return total;
  double span = breaks.back() - breaks.front();
  if (!(span > 0)) return total;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    double a = breaks[i];
    double b = breaks[i + 1];
    if (!(b > a)) continue;
    double share = tol * std::max((b - a) / span, 1e-6);
    QuadResult r = adaptive_simpson(f, a, b, share, max_depth);
    total.value += r.value;
    total.error += r.error;
  }
  return total;
}

double gauss16(const std::function<double(double)>& f, double a, double b) {
  // nodes/weights for [-1,1]
  static const double x[8] = {0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
                              0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
                              0.9445750230732326, 0.9894009349916499};
  static const double w[8] = {0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
                              0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
                              0.0622535239386479, 0.0271524594117541};
  double c = 0.5 * (a + b);
  double h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 8; ++i) s += w[i] * (f(c - h * x[i]) + f(c + h * x[i]));
  return s * h;
}

}  // namespace nlbv
