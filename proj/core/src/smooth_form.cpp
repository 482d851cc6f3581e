#include "nlbv/smooth_form.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nlbv {

namespace {

constexpr double kPadEps = 4e-16;
constexpr double kTwoPi = 6.283185307179586476925286766559;

double poly_eval(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) v = v * x + c[i];
  return v;
}

std::vector<double> poly_deriv(const std::vector<double>& c) {
  if (c.size() <= 1) return {0.0};
  std::vector<double> d(c.size() - 1);
  for (std::size_t i = 1; i < c.size(); ++i) d[i - 1] = c[i] * static_cast<double>(i);
  return d;
}

// Range of sum c_i x^i over [lo,hi] via endpoints + derivative sign changes.
Iv poly_range(const std::vector<double>& c, double lo, double hi) {
  if (c.size() <= 1) return Iv::point(c.empty() ? 0.0 : c[0]);  // constants eval exactly
  Iv r = hull(Iv::point(poly_eval(c, lo)), Iv::point(poly_eval(c, hi)));
  if (c.size() > 2) {
    for (double t : poly_real_roots(poly_deriv(c), lo, hi))
      r = hull(r, Iv::point(poly_eval(c, t)));
  }
  return pad(r, kPadEps);
}

// Range of A*sin(theta) for theta in [t0,t1].
Iv sine_theta_range(double A, double t0, double t1) {
  if (t1 < t0) std::swap(t0, t1);
  if (t1 - t0 >= kTwoPi) return Iv(-std::abs(A), std::abs(A));
  double s0 = std::sin(t0), s1 = std::sin(t1);
  Iv r = hull(Iv::point(A * s0), Iv::point(A * s1));
  // peaks at pi/2 + k*pi inside [t0,t1]
  double half_pi = 1.5707963267948966;
  double k0 = std::ceil((t0 - half_pi) / 3.141592653589793);
  for (double k = k0; half_pi + k * 3.141592653589793 <= t1; k += 1.0) {
    double peak = (std::fmod(k, 2.0) == 0.0) ? 1.0 : -1.0;
    r = hull(r, Iv::point(A * peak));
  }
  return pad(r, kPadEps);
}

struct Cubic {
  double c0, c1, c2, c3;  // value in local dx: c0 + c1 dx + c2 dx^2 + c3 dx^3
  double eval(double dx) const { return ((c3 * dx + c2) * dx + c1) * dx + c0; }
  double deriv(double dx) const { return (3.0 * c3 * dx + 2.0 * c2) * dx + c1; }
};

}  // namespace

std::vector<double> poly_real_roots(const std::vector<double>& coef, double lo, double hi) {
  std::vector<double> c = coef;
  while (c.size() > 1 && c.back() == 0.0) c.pop_back();
  std::vector<double> roots;
  if (c.size() <= 1) return roots;  // constant: treat as root-free
  if (c.size() == 2) {
    double r = -c[0] / c[1];
    if (r >= lo && r <= hi) roots.push_back(r);
    return roots;
  }
  if (c.size() == 3) {
    double a = c[2], b = c[1], d = c[0];
    double disc = b * b - 4.0 * a * d;
    if (disc >= 0.0) {
      double sq = std::sqrt(disc);
      double q = -0.5 * (b + (b >= 0 ? sq : -sq));
      double r1 = q / a;
      double r2 = (q != 0.0) ? d / q : r1;
      if (r1 > r2) std::swap(r1, r2);
      if (r1 >= lo && r1 <= hi) roots.push_back(r1);
      if (r2 >= lo && r2 <= hi && r2 != r1) roots.push_back(r2);
    }
    return roots;
  }
  // isolate by critical points, then bisect sign changes
  std::vector<double> nodes = poly_real_roots(poly_deriv(c), lo, hi);
  nodes.push_back(lo);
  nodes.push_back(hi);
  std::sort(nodes.begin(), nodes.end());
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    double a = nodes[i], b = nodes[i + 1];
    if (!(b > a)) continue;
    double fa = poly_eval(c, a), fb = poly_eval(c, b);
    if (fa == 0.0 && (roots.empty() || roots.back() != a)) roots.push_back(a);
    if (fa * fb < 0.0) {
      for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
        double m = 0.5 * (a + b);
        double fm = poly_eval(c, m);
        if (fm == 0.0) {
          a = b = m;
          break;
        }
        if ((fa < 0.0) != (fm < 0.0))
          b = m;
        else {
          a = m;
          fa = fm;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
  }
  double fb = poly_eval(c, hi);
  if (fb == 0.0 && (roots.empty() || roots.back() != hi)) roots.push_back(hi);
  std::sort(roots.begin(), roots.end());
  return roots;
}

std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {0.0};
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

SmoothForm SmoothForm::affine(double slope, double intercept) {
  if (slope == 0.0) return poly({intercept});  // exact point ranges
  SmoothForm f;
  f.kind = FormKind::Affine;
  f.coef = {intercept, slope};
  return f;
}

SmoothForm SmoothForm::poly(std::vector<double> coefficients) {
  if (coefficients.empty()) coefficients.push_back(0.0);
  while (coefficients.size() > 1 && coefficients.back() == 0.0) coefficients.pop_back();
  SmoothForm f;
  f.kind = FormKind::Poly;
  f.coef = std::move(coefficients);
  return f;
}

SmoothForm SmoothForm::sine(double amp, double freq, double phase) {
  SmoothForm f;
  f.kind = FormKind::Sine;
  f.amp = amp;
  f.freq = freq;
  f.phase = phase;
  f.coef.clear();
  return f;
}

SmoothForm SmoothForm::spline_with_slopes(std::vector<double> knots, std::vector<double> values,
                                          std::vector<double> slopes) {
  if (knots.size() < 2 || knots.size() != values.size() || knots.size() != slopes.size())
    throw std::invalid_argument("spline: need matching knots/values/slopes, at least 2");
  for (std::size_t i = 0; i + 1 < knots.size(); ++i)
    if (!(knots[i] < knots[i + 1]))
      throw std::invalid_argument("spline: knots must be strictly increasing");
  SmoothForm f;
  f.kind = FormKind::Spline;
  f.kx = std::move(knots);
  f.ky = std::move(values);
  f.kd = std::move(slopes);
  f.coef.clear();
  return f;
}

SmoothForm SmoothForm::spline(std::vector<double> knots, std::vector<double> values) {
  const std::size_t n = knots.size();
  if (n < 2 || values.size() != n)
    throw std::invalid_argument("spline: need matching knots/values, at least 2");
  std::vector<double> h(n - 1), delta(n - 1), d(n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = knots[i + 1] - knots[i];
    if (!(h[i] > 0)) throw std::invalid_argument("spline: knots must be strictly increasing");
    delta[i] = (values[i + 1] - values[i]) / h[i];
  }
  if (n == 2) {
    d[0] = d[1] = delta[0];
  } else {
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] <= 0.0) {
        d[i] = 0.0;
      } else {
        double w1 = 2.0 * h[i] + h[i - 1];
        double w2 = h[i] + 2.0 * h[i - 1];
        d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
      }
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
      double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
      if (s * d0 <= 0.0) return 0.0;
      if (d0 * d1 <= 0.0 && std::abs(s) > 3.0 * std::abs(d0)) return 3.0 * d0;
      return s;
    };
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }
  return spline_with_slopes(std::move(knots), std::move(values), std::move(d));
}

SmoothForm SmoothForm::sum(std::vector<SmoothForm> parts) {
  std::vector<SmoothForm> flat;
  for (auto& p : parts) {
    if (p.kind == FormKind::Sum)
      for (auto& t : p.terms) flat.push_back(std::move(t));
    else
      flat.push_back(std::move(p));
  }
  // fold polynomial terms together; a sum that collapses to a single
  // polynomial keeps exact point ranges, which the evaluator relies on to
  // discard diagonal cells
  std::vector<double> pc;
  std::vector<SmoothForm> rest;
  for (auto& t : flat) {
    if (t.kind == FormKind::Affine || t.kind == FormKind::Poly) {
      if (pc.size() < t.coef.size()) pc.resize(t.coef.size(), 0.0);
      for (std::size_t i = 0; i < t.coef.size(); ++i) pc[i] += t.coef[i];
    } else {
      rest.push_back(std::move(t));
    }
  }
  if (rest.empty()) return poly(std::move(pc));
  bool pc_zero = true;
  for (double v : pc) pc_zero = pc_zero && v == 0.0;
  if (!pc_zero) rest.push_back(poly(std::move(pc)));
  if (rest.size() == 1) return rest.front();
  SmoothForm f;
  f.kind = FormKind::Sum;
  f.terms = std::move(rest);
  f.coef.clear();
  return f;
}

SmoothForm SmoothForm::radial_pullback(SmoothForm inner, double center, double offset) {
  if (inner.kind == FormKind::Poly && inner.coef.size() <= 1) return inner;
  SmoothForm f;
  f.kind = FormKind::Radial;
  f.coef = {center, std::abs(offset)};
  f.terms = {std::move(inner)};
  return f;
}

namespace {

// distance to the pullback center and its interval image
double radial_r(const SmoothForm& f, double x) {
  return std::hypot(x - f.coef[0], f.coef[1]);
}

Iv radial_r_range(const SmoothForm& f, double lo, double hi) {
  double s0 = lo - f.coef[0], s1 = hi - f.coef[0];
  double b = f.coef[1];
  double rhi = std::hypot(std::max(std::abs(s0), std::abs(s1)), b);
  double rlo = (s0 <= 0.0 && s1 >= 0.0) ? b : std::hypot(std::min(std::abs(s0), std::abs(s1)), b);
  return Iv(rlo, rhi);
}

// s/sqrt(s^2+b^2), the chain-rule factor; increasing in s
double radial_slope_factor(double s, double b) {
  if (b != 0.0) return s / std::hypot(s, b);
  return s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
}

// spline helpers operating on a form known to be a spline
std::size_t spline_segment(const SmoothForm& f, double x) {
  const auto& kx = f.kx;
  if (x <= kx.front()) return 0;
  if (x >= kx.back()) return kx.size() - 2;
  std::size_t i = static_cast<std::size_t>(
      std::upper_bound(kx.begin(), kx.end(), x) - kx.begin());
  return i - 1;
}

Cubic spline_cubic(const SmoothForm& f, std::size_t i) {
  double h = f.kx[i + 1] - f.kx[i];
  double delta = (f.ky[i + 1] - f.ky[i]) / h;
  Cubic c;
  c.c0 = f.ky[i];
  c.c1 = f.kd[i];
  c.c2 = (3.0 * delta - 2.0 * f.kd[i] - f.kd[i + 1]) / h;
  c.c3 = (f.kd[i] + f.kd[i + 1] - 2.0 * delta) / (h * h);
  return c;
}

Iv cubic_range(const Cubic& c, double dx0, double dx1) {
  Iv r = hull(Iv::point(c.eval(dx0)), Iv::point(c.eval(dx1)));
  // critical points: roots of c1 + 2 c2 dx + 3 c3 dx^2
  double A = 3.0 * c.c3, B = 2.0 * c.c2, C = c.c1;
  if (A == 0.0) {
    if (B != 0.0) {
      double t = -C / B;
      if (t > dx0 && t < dx1) r = hull(r, Iv::point(c.eval(t)));
    }
  } else {
    double disc = B * B - 4.0 * A * C;
    if (disc >= 0.0) {
      double sq = std::sqrt(disc);
      for (double t : {(-B - sq) / (2.0 * A), (-B + sq) / (2.0 * A)})
        if (t > dx0 && t < dx1) r = hull(r, Iv::point(c.eval(t)));
    }
  }
  return r;
}

Iv cubic_deriv_range(const Cubic& c, double dx0, double dx1) {
  Iv r = hull(Iv::point(c.deriv(dx0)), Iv::point(c.deriv(dx1)));
  if (c.c3 != 0.0) {
    double t = -c.c2 / (3.0 * c.c3);  // vertex of the derivative parabola
    if (t > dx0 && t < dx1) r = hull(r, Iv::point(c.deriv(t)));
  }
  return r;
}

}  // namespace

double SmoothForm::eval(double x) const {
  switch (kind) {
    case FormKind::Affine:
      return coef[0] + coef[1] * x;
    case FormKind::Poly:
      return poly_eval(coef, x);
    case FormKind::Sine:
      return amp * std::sin(freq * x + phase);
    case FormKind::Spline: {
      double xc = std::clamp(x, kx.front(), kx.back());
      std::size_t i = spline_segment(*this, xc);
      return spline_cubic(*this, i).eval(xc - kx[i]);
    }
    case FormKind::Sum: {
      double s = 0.0;
      for (const auto& t : terms) s += t.eval(x);
      return s;
    }
    case FormKind::Radial:
      return terms[0].eval(radial_r(*this, x));
  }
  return 0.0;
}

double SmoothForm::deriv(double x) const {
  switch (kind) {
    case FormKind::Affine:
      return coef[1];
    case FormKind::Poly:
      return poly_eval(poly_deriv(coef), x);
    case FormKind::Sine:
      return amp * freq * std::cos(freq * x + phase);
    case FormKind::Spline: {
      if (x < kx.front() || x > kx.back()) return 0.0;
      std::size_t i = spline_segment(*this, x);
      return spline_cubic(*this, i).deriv(x - kx[i]);
    }
    case FormKind::Sum: {
      double s = 0.0;
      for (const auto& t : terms) s += t.deriv(x);
      return s;
    }
    case FormKind::Radial: {
      double r = radial_r(*this, x);
      if (r == 0.0) return 0.0;  // symmetric kink; pieces split here
      return terms[0].deriv(r) * radial_slope_factor(x - coef[0], coef[1]);
    }
  }
  return 0.0;
}

Iv SmoothForm::range(double lo, double hi) const {
  if (hi < lo) std::swap(lo, hi);
  switch (kind) {
    case FormKind::Affine: {
      double a = coef[0] + coef[1] * lo;
      double b = coef[0] + coef[1] * hi;
      return pad(Iv(a, b), kPadEps);
    }
    case FormKind::Poly:
      return poly_range(coef, lo, hi);
    case FormKind::Sine:
      return sine_theta_range(amp, freq * lo + phase, freq * hi + phase);
    case FormKind::Spline: {
      double a = std::clamp(lo, kx.front(), kx.back());
      double b = std::clamp(hi, kx.front(), kx.back());
      std::size_t i0 = spline_segment(*this, a);
      std::size_t i1 = spline_segment(*this, b);
      Iv r = Iv::point(eval(a));
      for (std::size_t i = i0; i <= i1; ++i) {
        double d0 = std::max(a, kx[i]) - kx[i];
        double d1 = std::min(b, kx[i + 1]) - kx[i];
        if (d1 < d0) continue;
        r = hull(r, cubic_range(spline_cubic(*this, i), d0, d1));
      }
      return pad(r, kPadEps);
    }
    case FormKind::Sum: {
      Iv raw = Iv::point(0.0);
      for (const auto& t : terms) raw += t.range(lo, hi);
      // centered refinement tightens sums on small windows
      Iv dr = deriv_range(lo, hi);
      double half = 0.5 * (hi - lo);
      double c = eval(0.5 * (lo + hi));
      double m = std::max(std::abs(dr.lo), std::abs(dr.hi));
      Iv centered(c - m * half, c + m * half);
      return pad(intersect(raw, centered), kPadEps);
    }
    case FormKind::Radial: {
      Iv rr = radial_r_range(*this, lo, hi);
      return pad(terms[0].range(rr.lo, rr.hi), kPadEps);
    }
  }
  return Iv();
}

Iv SmoothForm::deriv_range(double lo, double hi) const {
  if (hi < lo) std::swap(lo, hi);
  switch (kind) {
    case FormKind::Affine:
      return Iv::point(coef[1]);
    case FormKind::Poly:
      return poly_range(poly_deriv(coef), lo, hi);
    case FormKind::Sine:
      // derivative amp*freq*cos(t) = amp*freq*sin(t + pi/2)
      return sine_theta_range(amp * freq, freq * lo + phase + 1.5707963267948966,
                              freq * hi + phase + 1.5707963267948966);
    case FormKind::Spline: {
      double a = std::clamp(lo, kx.front(), kx.back());
      double b = std::clamp(hi, kx.front(), kx.back());
      std::size_t i0 = spline_segment(*this, a);
      std::size_t i1 = spline_segment(*this, b);
      Iv r = Iv::point(deriv(0.5 * (a + b)));
      for (std::size_t i = i0; i <= i1; ++i) {
        double d0 = std::max(a, kx[i]) - kx[i];
        double d1 = std::min(b, kx[i + 1]) - kx[i];
        if (d1 < d0) continue;
        r = hull(r, cubic_deriv_range(spline_cubic(*this, i), d0, d1));
      }
      if (lo < kx.front() || hi > kx.back()) r = hull(r, Iv::point(0.0));
      return pad(r, kPadEps);
    }
    case FormKind::Sum: {
      Iv r = Iv::point(0.0);
      for (const auto& t : terms) r += t.deriv_range(lo, hi);
      return r;
    }
    case FormKind::Radial: {
      Iv rr = radial_r_range(*this, lo, hi);
      Iv d = terms[0].deriv_range(rr.lo, rr.hi);
      Iv g(radial_slope_factor(lo - coef[0], coef[1]),
           radial_slope_factor(hi - coef[0], coef[1]));
      return pad(d * g, kPadEps);
    }
  }
  return Iv();
}

void SmoothForm::natural_breaks(double lo, double hi, std::vector<double>& out) const {
  switch (kind) {
    case FormKind::Spline:
      for (double x : kx)
        if (x > lo && x < hi) out.push_back(x);
      break;
    case FormKind::Sum:
      for (const auto& t : terms) t.natural_breaks(lo, hi, out);
      break;
    case FormKind::Radial: {
      double c = coef[0], b = coef[1];
      if (c > lo && c < hi) out.push_back(c);
      Iv rr = radial_r_range(*this, lo, hi);
      std::vector<double> rb;
      terms[0].natural_breaks(rr.lo, rr.hi, rb);
      for (double r : rb) {
        if (!(r > b)) continue;
        double dt = std::sqrt(r * r - b * b);
        for (double t : {c - dt, c + dt})
          if (t > lo && t < hi) out.push_back(t);
      }
      break;
    }
    default:
      break;
  }
}

SmoothForm SmoothForm::scaled(double c) const {
  SmoothForm f = *this;
  switch (kind) {
    case FormKind::Affine:
    case FormKind::Poly:
      for (auto& v : f.coef) v *= c;
      break;
    case FormKind::Sine:
      f.amp *= c;
      break;
    case FormKind::Spline:
      for (auto& v : f.ky) v *= c;
      for (auto& v : f.kd) v *= c;
      break;
    case FormKind::Sum:
    case FormKind::Radial:
      for (auto& t : f.terms) t = t.scaled(c);
      break;
  }
  return f;
}

SmoothForm SmoothForm::plus_const(double c) const {
  if (c == 0.0) return *this;
  SmoothForm f = *this;
  switch (kind) {
    case FormKind::Affine:
    case FormKind::Poly:
      f.coef[0] += c;
      break;
    case FormKind::Sine:
      return sum({*this, constant(c)});
    case FormKind::Spline:
      for (auto& v : f.ky) v += c;
      break;
    case FormKind::Sum:
      return sum({*this, constant(c)});
    case FormKind::Radial:
      f.terms[0] = f.terms[0].plus_const(c);
      break;
  }
  return f;
}

SmoothForm SmoothForm::reparam(double a, double b) const {
  if (a == 0.0) return constant(eval(b));
  switch (kind) {
    case FormKind::Affine:
      return affine(coef[1] * a, coef[0] + coef[1] * b);
    case FormKind::Poly: {
      // Horner in (a t + b)
      std::vector<double> r{coef.back()};
      for (std::size_t i = coef.size() - 1; i-- > 0;) {
        std::vector<double> next(r.size() + 1, 0.0);
        for (std::size_t j = 0; j < r.size(); ++j) {
          next[j] += r[j] * b;
          next[j + 1] += r[j] * a;
        }
        next[0] += coef[i];
        r = std::move(next);
      }
      return poly(std::move(r));
    }
    case FormKind::Sine:
      return sine(amp, freq * a, freq * b + phase);
    case FormKind::Spline: {
      std::vector<double> nx(kx.size()), ny(ky), nd(kd.size());
      for (std::size_t i = 0; i < kx.size(); ++i) nx[i] = (kx[i] - b) / a;
      for (std::size_t i = 0; i < kd.size(); ++i) nd[i] = kd[i] * a;
      if (a < 0) {
        std::reverse(nx.begin(), nx.end());
        std::reverse(ny.begin(), ny.end());
        std::reverse(nd.begin(), nd.end());
      }
      return spline_with_slopes(std::move(nx), std::move(ny), std::move(nd));
    }
    case FormKind::Sum: {
      std::vector<SmoothForm> parts;
      parts.reserve(terms.size());
      for (const auto& t : terms) parts.push_back(t.reparam(a, b));
      return sum(std::move(parts));
    }
    case FormKind::Radial: {
      // sqrt((a t + b - c)^2 + off^2) = |a| sqrt((t - (c-b)/a)^2 + (off/a)^2)
      double aa = std::abs(a);
      return radial_pullback(terms[0].reparam(aa, 0.0), (coef[0] - b) / a, coef[1] / aa);
    }
  }
  return *this;
}

std::vector<MonoSpan> monotone_partition(const SmoothForm& f, double a, double b, double eps) {
  std::vector<MonoSpan> out;
  if (!(b > a)) return out;
  double width_floor = std::max(eps, 1e-14 * (b - a));
  std::vector<std::pair<double, double>> stack{{a, b}};
  std::vector<MonoSpan> raw;
  while (!stack.empty()) {
    auto [lo, hi] = stack.back();
    stack.pop_back();
    Iv dr = f.deriv_range(lo, hi);
    int sign = 0;
    // derivative enclosures are padded; a bound this close to zero is noise,
    // not a sign change, and chasing it would subdivide plateaus forever
    double slop = 1e-11 * (1.0 + std::max(std::abs(dr.lo), std::abs(dr.hi)));
    if (dr.lo >= -slop)
      sign = 1;
    else if (dr.hi <= slop)
      sign = -1;
    double m = 0.5 * (lo + hi);
    if (sign != 0 || hi - lo <= width_floor || !(m > lo && m < hi)) {
      raw.push_back({lo, hi, sign});
      continue;
    }
    stack.push_back({m, hi});
    stack.push_back({lo, m});
  }
  std::sort(raw.begin(), raw.end(),
            [](const MonoSpan& u, const MonoSpan& v) { return u.lo < v.lo; });
  for (const auto& s : raw) {
    if (!out.empty() && out.back().sign == s.sign) {
      out.back().hi = s.hi;
    } else {
      out.push_back(s);
    }
  }
  return out;
}

double form_variation(const SmoothForm& f, double a, double b) {
  double total = 0.0;
  for (const auto& s : monotone_partition(f, a, b)) total += std::abs(f.eval(s.hi) - f.eval(s.lo));
  return total;
}

}  // namespace nlbv
