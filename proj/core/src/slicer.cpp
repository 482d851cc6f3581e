#include "nlbv/slicer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "nlbv/cantor.hpp"
#include "nlbv/rng.hpp"

namespace nlbv {

namespace {

constexpr double kTinyDir = 1e-14;

double length(Vec2 v) { return std::hypot(v.x, v.y); }

Vec2 normalized(Vec2 v, const char* what) {
  double n = length(v);
  if (!(n > 0.0) || !std::isfinite(n))
    throw std::invalid_argument(std::string(what) + ": zero direction");
  return {v.x / n, v.y / n};
}

// Intersect {t : m0 <= a*t + b <= m1} into [lo, hi]; false when empty.
bool clip_linear(double a, double b, double m0, double m1, double& lo, double& hi) {
  if (std::abs(a) < kTinyDir) return b >= m0 && b <= m1;
  double t0 = (m0 - b) / a, t1 = (m1 - b) / a;
  if (t0 > t1) std::swap(t0, t1);
  lo = std::max(lo, t0);
  hi = std::min(hi, t1);
  return lo < hi;
}

}  // namespace

// ===== Domain2D =====

Domain2D Domain2D::rect(double x0, double y0, double x1, double y1) {
  if (!(x0 < x1) || !(y0 < y1)) throw std::invalid_argument("Domain2D: rect corners out of order");
  Domain2D d;
  d.kind = Kind::Rect;
  d.x0 = x0;
  d.y0 = y0;
  d.x1 = x1;
  d.y1 = y1;
  return d;
}

Domain2D Domain2D::disk(double cx, double cy, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("Domain2D: disk radius must be positive");
  Domain2D d;
  d.kind = Kind::Disk;
  d.center = {cx, cy};
  d.radius = r;
  d.x0 = cx - r;
  d.y0 = cy - r;
  d.x1 = cx + r;
  d.y1 = cy + r;
  return d;
}

double Domain2D::area() const {
  if (kind == Kind::Rect) return (x1 - x0) * (y1 - y0);
  return 3.14159265358979323846 * radius * radius;
}

bool Domain2D::contains(Vec2 p) const {
  if (kind == Kind::Rect) return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
  return std::hypot(p.x - center.x, p.y - center.y) <= radius;
}

bool Domain2D::chord(Vec2 sigma, double z, double& t0, double& t1) const {
  Vec2 pp = perp(sigma);
  if (kind == Kind::Rect) {
    double lo = -1e308, hi = 1e308;
    // q(t) = z*pp + t*sigma componentwise inside the box
    if (!clip_linear(sigma.x, z * pp.x, x0, x1, lo, hi)) return false;
    if (!clip_linear(sigma.y, z * pp.y, y0, y1, lo, hi)) return false;
    if (!(lo < hi) || lo <= -1e307 || hi >= 1e307) return false;
    t0 = lo;
    t1 = hi;
    return true;
  }
  double d = z - dot(center, pp);
  double h2 = radius * radius - d * d;
  if (!(h2 > 0.0)) return false;
  double half = std::sqrt(h2);
  double tc = dot(center, sigma);
  t0 = tc - half;
  t1 = tc + half;
  return true;
}

Iv Domain2D::offset_span(Vec2 sigma) const {
  Vec2 pp = perp(sigma);
  if (kind == Kind::Disk) {
    double zc = dot(center, pp);
    return Iv(zc - radius, zc + radius);
  }
  double z1 = dot({x0, y0}, pp), z2 = dot({x1, y0}, pp);
  double z3 = dot({x0, y1}, pp), z4 = dot({x1, y1}, pp);
  return Iv(std::min(std::min(z1, z2), std::min(z3, z4)),
            std::max(std::max(z1, z2), std::max(z3, z4)));
}

// ===== BV2D =====

namespace {

// range of dot(d, p) over the domain
Iv coord_span(const Domain2D& dom, Vec2 d) {
  if (dom.kind == Domain2D::Kind::Disk) {
    double c = dot(dom.center, d);
    return Iv(c - dom.radius, c + dom.radius);
  }
  double z1 = dot({dom.x0, dom.y0}, d), z2 = dot({dom.x1, dom.y0}, d);
  double z3 = dot({dom.x0, dom.y1}, d), z4 = dot({dom.x1, dom.y1}, d);
  return Iv(std::min(std::min(z1, z2), std::min(z3, z4)),
            std::max(std::max(z1, z2), std::max(z3, z4)));
}

// largest |p - c| over the domain (attained at a corner / far side)
double max_radius_from(const Domain2D& dom, Vec2 c) {
  if (dom.kind == Domain2D::Kind::Disk)
    return std::hypot(c.x - dom.center.x, c.y - dom.center.y) + dom.radius;
  double m = 0.0;
  for (double px : {dom.x0, dom.x1})
    for (double py : {dom.y0, dom.y1}) m = std::max(m, std::hypot(px - c.x, py - c.y));
  return m;
}

// single-part domain covering [lo,hi] (with slack tol)
bool covers(const OpenSet1D& d, double lo, double hi, double tol) {
  if (d.parts().size() != 1) return false;
  const auto& p = d.parts().front();
  return p.lo <= lo + tol && p.hi >= hi - tol;
}

double polygon_cross(Vec2 a, Vec2 b, Vec2 c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

}  // namespace

BV2D BV2D::make(Domain2D domain, std::vector<BV2DTerm> terms) {
  for (auto& t : terms) {
    switch (t.kind) {
      case BV2DTerm::Kind::Ridge: {
        t.dir = normalized(t.dir, "ridge");
        Iv s = coord_span(domain, t.dir);
        double tol = 1e-9 * (1.0 + std::abs(s.lo) + std::abs(s.hi));
        if (!covers(t.profile.domain(), s.lo, s.hi, tol))
          throw std::invalid_argument(
              "BV2D: ridge profile domain must cover the directional span");
        break;
      }
      case BV2DTerm::Kind::Radial: {
        double rmax = max_radius_from(domain, t.center);
        if (!covers(t.profile.domain(), 0.0, rmax, 1e-9 * (1.0 + rmax)))
          throw std::invalid_argument(
              "BV2D: radial profile domain must cover (0, max radius)");
        if (!t.profile.cantor_parts().empty())
          throw std::invalid_argument(
              "BV2D: radial profiles with Cantor parts do not slice inside the "
              "catalog; put Cantor mass in a sheet term");
        break;
      }
      case BV2DTerm::Kind::DiskInd:
        if (!(t.radius > 0.0)) throw std::invalid_argument("BV2D: disk radius must be positive");
        break;
      case BV2DTerm::Kind::PolyInd: {
        if (t.verts.size() < 3) throw std::invalid_argument("BV2D: polygon needs 3 vertices");
        const auto& v = t.verts;
        for (std::size_t i = 0; i < v.size(); ++i) {
          Vec2 a = v[i], b = v[(i + 1) % v.size()], c = v[(i + 2) % v.size()];
          if (polygon_cross(a, b, c) <= 0.0)
            throw std::invalid_argument("BV2D: polygon must be strictly convex, ccw");
        }
        break;
      }
      case BV2DTerm::Kind::Sheet:
        t.dir = normalized(t.dir, "sheet");
        if (!(t.s0 < t.s1)) throw std::invalid_argument("BV2D: sheet ramp needs s0 < s1");
        break;
    }
  }
  BV2D u;
  u.dom_ = domain;
  u.terms_ = std::move(terms);
  return u;
}

double BV2D::eval(Vec2 p) const {
  double s = 0.0;
  for (const auto& t : terms_) {
    switch (t.kind) {
      case BV2DTerm::Kind::Ridge: {
        double c = dot(t.dir, p);
        const auto& part = t.profile.domain().parts().front();
        s += t.profile.eval(std::clamp(c, part.lo, part.hi));
        break;
      }
      case BV2DTerm::Kind::Radial: {
        double r = std::hypot(p.x - t.center.x, p.y - t.center.y);
        const auto& part = t.profile.domain().parts().front();
        s += t.profile.eval(std::clamp(r, part.lo, part.hi));
        break;
      }
      case BV2DTerm::Kind::DiskInd:
        if (std::hypot(p.x - t.center.x, p.y - t.center.y) <= t.radius) s += t.height;
        break;
      case BV2DTerm::Kind::PolyInd: {
        bool in = true;
        for (std::size_t i = 0; in && i < t.verts.size(); ++i)
          in = polygon_cross(t.verts[i], t.verts[(i + 1) % t.verts.size()], p) >= 0.0;
        if (in) s += t.height;
        break;
      }
      case BV2DTerm::Kind::Sheet: {
        double c = (dot(t.dir, p) - t.s0) / (t.s1 - t.s0);
        s += t.mass * cantor_value(std::clamp(c, 0.0, 1.0));
        break;
      }
    }
  }
  return s;
}

BV2D BV2D::scaled(double c) const {
  BV2D u = *this;
  for (auto& t : u.terms_) {
    switch (t.kind) {
      case BV2DTerm::Kind::Ridge:
      case BV2DTerm::Kind::Radial:
        t.profile = t.profile.scaled(c);
        break;
      case BV2DTerm::Kind::DiskInd:
      case BV2DTerm::Kind::PolyInd:
        t.height *= c;
        break;
      case BV2DTerm::Kind::Sheet:
        t.mass *= c;
        break;
    }
  }
  return u;
}

// ===== slicing =====

namespace {

// snap a coordinate onto the slice boundary when rounding put it within hair
double snap_to(double v, double t0, double t1) {
  double s = 1e-9 * (1.0 + std::abs(t0) + std::abs(t1));
  if (std::abs(v - t0) <= s) return t0;
  if (std::abs(v - t1) <= s) return t1;
  return v;
}

// profile(alpha*t + beta) restricted to (t0,t1): the ridge pullback, written
// directly so the result lives on exactly (t0,t1) whatever rounding does.
BV1D pullback_affine(const BV1D& profile, double alpha, double beta, double t0, double t1) {
  OpenSet1D sdom = OpenSet1D::interval(t0, t1);
  if (std::abs(alpha) < kTinyDir) {
    const auto& part = profile.domain().parts().front();
    double v = profile.eval(std::clamp(beta, part.lo, part.hi));
    return BV1D::make(sdom, {{t0, t1, SmoothForm::constant(v)}});
  }
  auto to_t = [&](double s) { return (s - beta) / alpha; };

  std::vector<Piece> ps;
  for (const auto& p : profile.pieces()) {
    double a = to_t(p.lo), b = to_t(p.hi);
    if (a > b) std::swap(a, b);
    a = std::max(snap_to(a, t0, t1), t0);
    b = std::min(snap_to(b, t0, t1), t1);
    if (b > a) ps.push_back({a, b, p.form.reparam(alpha, beta)});
  }

  double offset = 0.0;
  std::vector<CantorPart> cs;
  for (const auto& cp : profile.cantor_parts()) {
    CantorPart nc = cp;
    if (alpha > 0.0) {
      nc.a = to_t(cp.a);
      nc.b = to_t(cp.b);
    } else {
      nc.a = to_t(cp.b);
      nc.b = to_t(cp.a);
      nc.w0 = 1.0 - cp.w1;
      nc.w1 = 1.0 - cp.w0;
      nc.scale = -cp.scale;
      offset += cp.mass();  // c(1-s) = 1-c(s) leaves this constant behind
    }
    // clip the window to the visible span; the hidden left rise is constant
    double base = nc.w0;
    nc.w0 = std::clamp(nc.param(t0), nc.w0, nc.w1);
    nc.w1 = std::clamp(nc.param(t1), nc.w0, nc.w1);
    // pull the active region inside (t0,t1) against round-off
    while (nc.w0 < nc.w1 && nc.x_lo() < t0) nc.w0 = std::nextafter(nc.w0, 1.0);
    while (nc.w1 > nc.w0 && nc.x_hi() > t1) nc.w1 = std::nextafter(nc.w1, 0.0);
    offset += nc.scale * (cantor_value(nc.w0) - cantor_value(base));
    if (nc.w1 > nc.w0) cs.push_back(nc);
  }
  if (offset != 0.0)
    for (auto& p : ps) p.form = p.form.plus_const(offset);
  return BV1D::make(sdom, std::move(ps), std::move(cs));
}

// indicator slice: value h on (a,b) clipped to (t0,t1), 0 elsewhere
BV1D indicator_slice(double h, double a, double b, double t0, double t1) {
  OpenSet1D sdom = OpenSet1D::interval(t0, t1);
  a = std::max(snap_to(a, t0, t1), t0);
  b = std::min(snap_to(b, t0, t1), t1);
  std::vector<Piece> ps;
  if (!(b > a))  // missed or grazed: zero
    return BV1D::make(sdom, {{t0, t1, SmoothForm::constant(0.0)}});
  if (a > t0) ps.push_back({t0, a, SmoothForm::constant(0.0)});
  ps.push_back({a, b, SmoothForm::constant(h)});
  if (b < t1) ps.push_back({b, t1, SmoothForm::constant(0.0)});
  return BV1D::make(sdom, std::move(ps));
}

BV1D radial_slice(const BV1D& profile, Vec2 center, Vec2 sigma, double z, double t0,
                  double t1) {
  double tc = dot(center, sigma);
  double b = z - dot(center, perp(sigma));
  double babs = std::abs(b);

  // breakpoints: the closest-approach point and pullbacks of piece edges
  std::vector<double> cuts{t0, t1};
  if (tc > t0 && tc < t1) cuts.push_back(tc);
  auto push_r = [&](double r) {
    if (!(r > babs)) return;
    double dt = std::sqrt(r * r - b * b);
    for (double t : {tc - dt, tc + dt}) {
      double ts = snap_to(t, t0, t1);
      if (ts > t0 && ts < t1) cuts.push_back(ts);
    }
  };
  for (const auto& p : profile.pieces()) {
    push_r(p.lo);
    push_r(p.hi);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const auto& pd = profile.domain().parts().front();
  std::vector<Piece> ps;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double a = cuts[i], c = cuts[i + 1];
    double rm = std::clamp(std::hypot(0.5 * (a + c) - tc, b), pd.lo, pd.hi);
    // locate the profile piece owning this radius band
    const Piece* owner = &profile.pieces().back();
    for (const auto& p : profile.pieces())
      if (rm >= p.lo && rm <= p.hi) {
        owner = &p;
        break;
      }
    ps.push_back({a, c, SmoothForm::radial_pullback(owner->form, tc, b)});
  }
  return BV1D::make(OpenSet1D::interval(t0, t1), std::move(ps));
}

BV1D term_slice(const BV2DTerm& t, Vec2 sigma, double z, double t0, double t1) {
  switch (t.kind) {
    case BV2DTerm::Kind::Ridge:
      return pullback_affine(t.profile, dot(t.dir, sigma), z * dot(t.dir, perp(sigma)), t0, t1);
    case BV2DTerm::Kind::Radial:
      return radial_slice(t.profile, t.center, sigma, z, t0, t1);
    case BV2DTerm::Kind::DiskInd: {
      double d = z - dot(t.center, perp(sigma));
      double h2 = t.radius * t.radius - d * d;
      if (!(h2 > 0.0)) return indicator_slice(t.height, 0.0, -1.0, t0, t1);  // miss
      double half = std::sqrt(h2);
      double tc = dot(t.center, sigma);
      return indicator_slice(t.height, tc - half, tc + half, t0, t1);
    }
    case BV2DTerm::Kind::PolyInd: {
      double lo = -1e308, hi = 1e308;
      bool ok = true;
      Vec2 pp = perp(sigma);
      for (std::size_t i = 0; ok && i < t.verts.size(); ++i) {
        Vec2 a = t.verts[i], bv = t.verts[(i + 1) % t.verts.size()];
        Vec2 e{bv.x - a.x, bv.y - a.y};
        Vec2 n{-e.y, e.x};  // inward for ccw
        // dot(n, z*pp + t*sigma - a) >= 0
        double at = dot(n, sigma);
        double bt = z * dot(n, pp) - dot(n, a);
        if (std::abs(at) < kTinyDir)
          ok = bt >= 0.0;
        else if (at > 0.0)
          lo = std::max(lo, -bt / at);
        else
          hi = std::min(hi, -bt / at);
      }
      if (!ok || !(lo < hi)) return indicator_slice(t.height, 0.0, -1.0, t0, t1);
      return indicator_slice(t.height, lo, hi, t0, t1);
    }
    case BV2DTerm::Kind::Sheet: {
      // ramp profile on a span comfortably covering the pullback image
      double alpha = dot(t.dir, sigma), beta = z * dot(t.dir, perp(sigma));
      double i0 = alpha * t0 + beta, i1 = alpha * t1 + beta;
      if (i0 > i1) std::swap(i0, i1);
      double m0 = std::min(i0, t.s0) - 1.0, m1 = std::max(i1, t.s1) + 1.0;
      BV1D prof = BV1D::make(
          OpenSet1D::interval(m0, m1), {{m0, m1, SmoothForm::constant(0.0)}},
          {CantorPart{t.s0, t.s1, t.mass, 0.0, 1.0}});
      return pullback_affine(prof, alpha, beta, t0, t1);
    }
  }
  throw std::logic_error("term_slice: unhandled kind");
}

}  // namespace

Slice slice(const BV2D& u, Vec2 sigma, double z) {
  sigma = normalized(sigma, "slice");
  Slice s;
  double t0, t1;
  if (!u.domain().chord(sigma, z, t0, t1)) return s;
  s.hit = true;
  s.domain = OpenSet1D::interval(t0, t1);
  bool first = true;
  for (const auto& t : u.terms()) {
    BV1D ts = term_slice(t, sigma, z, t0, t1);
    s.u = first ? std::move(ts) : BV1D::sum(s.u, ts);
    first = false;
  }
  if (first)
    s.u = BV1D::make(s.domain, {{t0, t1, SmoothForm::constant(0.0)}});
  return s;
}

// ===== 2D functional via slices =====

namespace {

// tangency offsets for direction sigma: where some slice changes character
std::vector<double> offset_breaks(const BV2D& u, Vec2 sigma, double z0, double z1) {
  Vec2 pp = perp(sigma);
  std::vector<double> out{z0, z1};
  auto push = [&](double z) {
    if (z > z0 && z < z1) out.push_back(z);
  };
  if (u.domain().kind == Domain2D::Kind::Rect) {
    push(dot({u.domain().x0, u.domain().y0}, pp));
    push(dot({u.domain().x1, u.domain().y0}, pp));
    push(dot({u.domain().x0, u.domain().y1}, pp));
    push(dot({u.domain().x1, u.domain().y1}, pp));
  }
  for (const auto& t : u.terms()) {
    switch (t.kind) {
      case BV2DTerm::Kind::DiskInd: {
        double zc = dot(t.center, pp);
        push(zc - t.radius);
        push(zc + t.radius);
        break;
      }
      case BV2DTerm::Kind::PolyInd:
        for (const auto& v : t.verts) push(dot(v, pp));
        break;
      case BV2DTerm::Kind::Radial: {
        double zc = dot(t.center, pp);
        for (const auto& p : t.profile.pieces()) {
          for (double r : {p.lo, p.hi}) {
            push(zc - r);
            push(zc + r);
          }
        }
        break;
      }
      default:
        break;  // ridge/sheet kinks are soft; adaptivity absorbs them
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct OffsetIntegral {
  double value = 0.0;
  double quad_err = 0.0;   // Simpson estimate
  double slice_err = 0.0;  // accumulated per-slice error bounds
  std::size_t evals = 0;
};

struct DirCtx {
  const BV2D* u;
  double gamma, lambda;
  EvalOptions opts;
  Vec2 sigma;
  double tol;  // absolute tolerance for this direction's z-integral
  std::size_t eval_cap = 60000;
};

double eval_slice(DirCtx& c, double z, OffsetIntegral& acc) {
  Slice s = slice(*c.u, c.sigma, z);
  ++acc.evals;
  if (!s.hit) return 0.0;
  FunctionalEstimate e = f_eval(s.u, c.gamma, c.lambda, c.opts);
  acc.slice_err += e.error_bound;  // weighted later by the local panel width
  return e.value;
}

// plain adaptive Simpson; slice errors are tracked separately as a mean
// bound times the panel measure
void simpson_z(DirCtx& c, OffsetIntegral& acc, double a, double b, double fa, double fm,
               double fb, double budget, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = eval_slice(c, lm, acc), frm = eval_slice(c, rm, acc);
  double h = b - a;
  double s1 = h / 6.0 * (fa + 4.0 * fm + fb);
  double s2 = h / 12.0 * (fa + 4.0 * flm + 2.0 * fm + 4.0 * frm + fb);
  double delta = s2 - s1;
  if (depth > 0 && (std::abs(delta) > budget) && h > 1e-12 * (1.0 + std::abs(b)) &&
      acc.evals < c.eval_cap) {
    simpson_z(c, acc, a, m, fa, flm, fm, 0.5 * budget, depth - 1);
    simpson_z(c, acc, m, b, fm, frm, fb, 0.5 * budget, depth - 1);
    return;
  }
  acc.value += s2 + delta / 15.0;
  acc.quad_err += std::abs(delta);
}

OffsetIntegral integrate_direction(DirCtx c) {
  OffsetIntegral acc;
  Iv span = c.u->domain().offset_span(c.sigma);
  auto breaks = offset_breaks(*c.u, c.sigma, span.lo, span.hi);
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    double a = breaks[i], b = breaks[i + 1];
    if (!(b > a)) continue;
    double share = c.tol * (b - a) / (span.hi - span.lo);
    double fa = eval_slice(c, a + 1e-12 * (b - a), acc);
    double fm = eval_slice(c, 0.5 * (a + b), acc);
    double fb = eval_slice(c, b - 1e-12 * (b - a), acc);
    simpson_z(c, acc, a, b, fa, fm, fb, share, 24);
  }
  return acc;
}

}  // namespace

Estimate2D f_eval_2d(const BV2D& u, double gamma, double lambda, const SliceQuadrature& quad) {
  if (!(gamma > 0.0)) throw std::invalid_argument("f_eval_2d: gamma must be positive");
  if (!(lambda > 0.0)) throw std::invalid_argument("f_eval_2d: lambda must be positive");
  int n = std::max(4, quad.n_directions);
  const double pi = 3.14159265358979323846;

  // pilot: coarse midpoint scan to set absolute budgets per direction
  double scale = 0.0;
  {
    DirCtx c{&u, gamma, lambda, quad.eval, {1.0, 0.0}, 1.0, 400};
    c.opts.tol_rel = std::max(quad.eval.tol_rel, 1e-3);
    for (int j = 0; j < 4; ++j) {
      c.sigma = unit_dir(pi * (j + 0.5) / 4.0);
      Iv span = u.domain().offset_span(c.sigma);
      OffsetIntegral probe;
      double mid = eval_slice(c, span.mid(), probe);
      scale = std::max(scale, std::abs(mid) * span.width());
    }
    if (scale == 0.0) scale = 1.0;
  }

  std::vector<OffsetIntegral> per(n);
  double dir_tol = 0.3 * quad.tol_rel * scale;
  auto work = [&](int j) {
    DirCtx c{&u, gamma, lambda, quad.eval, unit_dir(pi * j / n), dir_tol};
    per[j] = integrate_direction(c);
  };
  int nt = std::max(1, quad.threads);
  if (nt <= 1) {
    for (int j = 0; j < n; ++j) work(j);
  } else {
    std::vector<std::thread> pool;
    std::size_t stride = static_cast<std::size_t>(nt);
    for (int w = 0; w < nt; ++w)
      pool.emplace_back([&, w] {
        for (int j = w; j < n; j += static_cast<int>(stride)) work(j);
      });
    for (auto& th : pool) th.join();
  }

  // periodic trapezoid over [0,pi); the half-grid difference estimates the
  // angular error (zero for rotation-invariant data)
  double full = 0.0, half = 0.0, qerr = 0.0, slice_term = 0.0;
  std::size_t evals = 0;
  for (int j = 0; j < n; ++j) {
    full += per[j].value;
    if (j % 2 == 0) half += per[j].value;
    qerr += per[j].quad_err;
    evals += per[j].evals;
    if (per[j].evals > 0) {
      // mean per-slice bound times the offset measure of this direction
      double span_w = u.domain().offset_span(unit_dir(pi * j / n)).width();
      slice_term += per[j].slice_err / static_cast<double>(per[j].evals) * span_w;
    }
  }
  double w = pi / n;
  Estimate2D out;
  out.value = w * full;
  double ang_err = (n >= 8 && n % 2 == 0) ? std::abs(w * full - (2.0 * w) * half) : 0.0;
  out.error_bound = w * (qerr + slice_term) + ang_err;
  out.n_directions = static_cast<std::size_t>(n);
  out.n_offsets = evals;
  out.tolerance_met = out.error_bound <= quad.tol_rel * std::max(std::abs(out.value), 1e-300);
  return out;
}

// ===== direct Monte Carlo =====

Estimate2D f_eval_2d_mc(const BV2D& u, double gamma, double lambda, std::size_t samples,
                        std::uint64_t seed, int threads) {
  if (!(gamma > 0.0)) throw std::invalid_argument("f_eval_2d_mc: gamma must be positive");
  if (!(lambda > 0.0)) throw std::invalid_argument("f_eval_2d_mc: lambda must be positive");
  if (samples == 0) throw std::invalid_argument("f_eval_2d_mc: need samples");
  const Domain2D& dom = u.domain();
  const double area = dom.area();
  const double pi2 = 6.28318530717958647692;

  constexpr std::size_t kShards = 64;
  struct ShardSum {
    double s = 0.0, s2 = 0.0;
    std::size_t n = 0;
  };
  std::vector<ShardSum> shard(kShards);

  auto draw_point = [&](Xoshiro256& g) -> Vec2 {
    if (dom.kind == Domain2D::Kind::Rect)
      return {g.uniform(dom.x0, dom.x1), g.uniform(dom.y0, dom.y1)};
    double r = dom.radius * std::sqrt(g.next_double());
    double phi = pi2 * g.next_double();
    return {dom.center.x + r * std::cos(phi), dom.center.y + r * std::sin(phi)};
  };

  auto run_shard = [&](std::size_t k) {
    Xoshiro256 g = substream(seed, k);
    std::size_t n = samples / kShards + (k < samples % kShards ? 1 : 0);
    ShardSum acc;
    acc.n = n;
    for (std::size_t i = 0; i < n; ++i) {
      Vec2 p = draw_point(g), q = draw_point(g);
      double r = std::hypot(p.x - q.x, p.y - q.y);
      if (r <= 0.0) continue;
      double du = std::abs(u.eval(p) - u.eval(q));
      if (du > lambda * std::pow(r, 1.0 + gamma)) {
        double w = lambda * area * area * std::pow(r, gamma - 2.0);
        acc.s += w;
        acc.s2 += w * w;
      }
    }
    shard[k] = acc;
  };

  int nt = std::max(1, threads);
  if (nt <= 1) {
    for (std::size_t k = 0; k < kShards; ++k) run_shard(k);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nt; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t k = static_cast<std::size_t>(w); k < kShards;
             k += static_cast<std::size_t>(nt))
          run_shard(k);
      });
    for (auto& th : pool) th.join();
  }

  double s = 0.0, s2 = 0.0;
  std::size_t n = 0;
  for (const auto& sh : shard) {  // fixed order: thread-count independent
    s += sh.s;
    s2 += sh.s2;
    n += sh.n;
  }
  double mean = s / static_cast<double>(n);
  double var = std::max(0.0, s2 / static_cast<double>(n) - mean * mean);
  Estimate2D out;
  out.value = mean;
  out.error_bound = 3.0 * std::sqrt(var / static_cast<double>(n));
  out.tolerance_met = true;
  return out;
}

// ===== constants and variation =====

double c_n(int n) {
  if (n < 1) throw std::invalid_argument("c_n: dimension must be at least 1");
  // 2 * volume of the unit ball in dimension n-1
  double m = 0.5 * (n - 1);
  return 2.0 * std::pow(3.14159265358979323846, m) / std::tgamma(m + 1.0);
}

namespace {

// chord width of the domain measured along lines {dot(dir,x) = s}
double chord_width(const Domain2D& dom, Vec2 dir, double s) {
  double t0, t1;
  // lines with normal dir are the lines along sigma = perp(dir) at offset
  // z with dot(dir, q) = -z (since perp(sigma) = -dir)
  if (!dom.chord(perp(dir), -s, t0, t1)) return 0.0;
  return t1 - t0;
}

// integral of |f'| * width over [a,b] by monotone spans and Simpson panels
double weighted_ac_mass(const SmoothForm& f, double a, double b, const Domain2D& dom,
                        Vec2 dir, const std::vector<double>& kinks) {
  double total = 0.0;
  for (const auto& span : monotone_partition(f, a, b)) {
    std::vector<double> cuts{span.lo, span.hi};
    for (double k : kinks)
      if (k > span.lo && k < span.hi) cuts.push_back(k);
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      // fixed-depth refinement; integrand is smooth between kinks
      double lo = cuts[i], hi = cuts[i + 1];
      int m = 64;
      double acc = 0.0;
      double h = (hi - lo) / m;
      for (int j = 0; j < m; ++j) {
        double x0 = lo + j * h, x2 = x0 + h, x1 = 0.5 * (x0 + x2);
        auto g = [&](double x) { return std::abs(f.deriv(x)) * chord_width(dom, dir, x); };
        acc += h / 6.0 * (g(x0) + 4.0 * g(x1) + g(x2));
      }
      total += acc;
    }
  }
  return total;
}

// integral of width against the Cantor measure of cp, dyadic refinement
double weighted_cantor_mass(const CantorPart& cp, const Domain2D& dom, Vec2 dir) {
  struct Seg {
    double lo, hi;
  };
  double total = 0.0;
  std::vector<Seg> stack{{cp.x_lo(), cp.x_hi()}};
  while (!stack.empty()) {
    Seg s = stack.back();
    stack.pop_back();
    double m = std::abs(cp.measure(s.lo, s.hi));
    if (m == 0.0) continue;
    double w0 = chord_width(dom, dir, s.lo), w1 = chord_width(dom, dir, s.hi);
    double wm = chord_width(dom, dir, 0.5 * (s.lo + s.hi));
    double wmin = std::min({w0, w1, wm}), wmax = std::max({w0, w1, wm});
    if ((wmax - wmin) * m < 1e-12 * (1.0 + total) || s.hi - s.lo < 1e-13) {
      total += 0.5 * (wmax + wmin) * m;
      continue;
    }
    double mid = 0.5 * (s.lo + s.hi);
    stack.push_back({s.lo, mid});
    stack.push_back({mid, s.hi});
  }
  return total;
}

bool ball_inside(const Domain2D& dom, Vec2 c, double r) {
  if (dom.kind == Domain2D::Kind::Rect)
    return c.x - r >= dom.x0 && c.x + r <= dom.x1 && c.y - r >= dom.y0 && c.y + r <= dom.y1;
  return std::hypot(c.x - dom.center.x, c.y - dom.center.y) + r <= dom.radius;
}

bool polygon_inside(const Domain2D& dom, const std::vector<Vec2>& verts) {
  for (const auto& v : verts)
    if (!dom.contains(v)) return false;
  return true;  // domains are convex
}

std::vector<double> domain_kinks(const Domain2D& dom, Vec2 dir) {
  std::vector<double> out;
  if (dom.kind == Domain2D::Kind::Rect) {
    out.push_back(dot({dom.x0, dom.y0}, dir));
    out.push_back(dot({dom.x1, dom.y0}, dir));
    out.push_back(dot({dom.x0, dom.y1}, dir));
    out.push_back(dot({dom.x1, dom.y1}, dir));
  }
  return out;
}

}  // namespace

Variation variation_by_slicing(const BV2D& u, int n_directions, double tol) {
  const double pi = 3.14159265358979323846;
  int n = std::max(4, n_directions);
  Variation total;
  for (int j = 0; j < n; ++j) {
    Vec2 sigma = unit_dir(pi * j / n);
    Iv span = u.domain().offset_span(sigma);
    // adaptive trapezoid in z on the slice variation; refine on disagreement
    struct Node {
      double a, b;
      Variation va, vb;
      int depth;
    };
    auto slice_var = [&](double z) -> Variation {
      Slice s = slice(u, sigma, z);
      return s.hit ? s.u.variation_decomposition() : Variation{};
    };
    std::vector<Node> stack{{span.lo + 1e-12 * span.width(), span.hi - 1e-12 * span.width(),
                             slice_var(span.lo + 1e-12 * span.width()),
                             slice_var(span.hi - 1e-12 * span.width()), 0}};
    Variation dir_total;
    while (!stack.empty()) {
      Node nd = stack.back();
      stack.pop_back();
      double m = 0.5 * (nd.a + nd.b);
      Variation vm = slice_var(m);
      double t_ends = 0.5 * (nd.va.total() + nd.vb.total());
      double t_mid = vm.total();
      if (nd.depth >= 14 ||
          std::abs(t_mid - t_ends) * (nd.b - nd.a) < tol * (1.0 + dir_total.total())) {
        double w = 0.25 * (nd.b - nd.a);
        dir_total.ac += w * (nd.va.ac + 2.0 * vm.ac + nd.vb.ac);
        dir_total.jump += w * (nd.va.jump + 2.0 * vm.jump + nd.vb.jump);
        dir_total.cantor += w * (nd.va.cantor + 2.0 * vm.cantor + nd.vb.cantor);
        continue;
      }
      stack.push_back({nd.a, m, nd.va, vm, nd.depth + 1});
      stack.push_back({m, nd.b, vm, nd.vb, nd.depth + 1});
    }
    total.ac += dir_total.ac;
    total.jump += dir_total.jump;
    total.cantor += dir_total.cantor;
  }
  // directions were folded onto [0,pi); the full circle doubles the integral
  double w = 2.0 * pi / n / c_n(2);
  total.ac *= w;
  total.jump *= w;
  total.cantor *= w;
  return total;
}

Variation variation_decomposition_2d(const BV2D& u) {
  Variation total;
  for (const auto& t : u.terms()) {
    switch (t.kind) {
      case BV2DTerm::Kind::Ridge: {
        auto kinks = domain_kinks(u.domain(), t.dir);
        Iv s = coord_span(u.domain(), t.dir);
        for (const auto& p : t.profile.pieces()) {
          double a = std::max(p.lo, s.lo), b = std::min(p.hi, s.hi);
          if (b > a) total.ac += weighted_ac_mass(p.form, a, b, u.domain(), t.dir, kinks);
        }
        for (const auto& j : t.profile.jumps())
          total.jump += std::abs(j.height()) * chord_width(u.domain(), t.dir, j.loc);
        for (const auto& cp : t.profile.cantor_parts())
          total.cantor += weighted_cantor_mass(cp, u.domain(), t.dir);
        break;
      }
      case BV2DTerm::Kind::Radial: {
        double rmax = max_radius_from(u.domain(), t.center);
        double rtop = 0.0;
        for (const auto& p : t.profile.pieces()) {
          double b = std::min(p.hi, rmax);
          if (!(b > p.lo)) continue;
          if (form_variation(p.form, p.lo, b) > 0.0 || t.profile.has_jump_in(p.lo, p.hi))
            rtop = std::max(rtop, b);
        }
        for (const auto& j : t.profile.jumps()) rtop = std::max(rtop, j.loc);
        if (ball_inside(u.domain(), t.center, rtop)) {
          const double pi2 = 6.28318530717958647692;
          for (const auto& p : t.profile.pieces()) {
            double a = p.lo, b = std::min(p.hi, rmax);
            if (!(b > a)) continue;
            for (const auto& span : monotone_partition(p.form, a, b)) {
              // integral of |f'(r)| 2 pi r dr over a monotone span
              int m = 256;
              double h = (span.hi - span.lo) / m;
              double acc = 0.0;
              for (int i = 0; i < m; ++i) {
                double x0 = span.lo + i * h, x2 = x0 + h, x1 = 0.5 * (x0 + x2);
                auto g = [&](double x) { return std::abs(p.form.deriv(x)) * pi2 * x; };
                acc += h / 6.0 * (g(x0) + 4.0 * g(x1) + g(x2));
              }
              total.ac += acc;
            }
          }
          for (const auto& j : t.profile.jumps())
            total.jump += std::abs(j.height()) * pi2 * j.loc;
        } else {
          // profile variation reaches outside the domain: measure by slicing
          BV2D single = BV2D::make(u.domain(), {t});
          Variation v = variation_by_slicing(single);
          total.ac += v.ac;
          total.jump += v.jump;
          total.cantor += v.cantor;
        }
        break;
      }
      case BV2DTerm::Kind::DiskInd: {
        if (ball_inside(u.domain(), t.center, t.radius)) {
          total.jump += std::abs(t.height) * 6.28318530717958647692 * t.radius;
        } else {
          BV2D single = BV2D::make(u.domain(), {t});
          total.jump += variation_by_slicing(single).jump;
        }
        break;
      }
      case BV2DTerm::Kind::PolyInd: {
        if (polygon_inside(u.domain(), t.verts)) {
          double per = 0.0;
          for (std::size_t i = 0; i < t.verts.size(); ++i) {
            Vec2 a = t.verts[i], b = t.verts[(i + 1) % t.verts.size()];
            per += std::hypot(b.x - a.x, b.y - a.y);
          }
          total.jump += std::abs(t.height) * per;
        } else {
          BV2D single = BV2D::make(u.domain(), {t});
          total.jump += variation_by_slicing(single).jump;
        }
        break;
      }
      case BV2DTerm::Kind::Sheet: {
        CantorPart cp{t.s0, t.s1, t.mass, 0.0, 1.0};
        total.cantor += weighted_cantor_mass(cp, u.domain(), t.dir);
        break;
      }
    }
  }
  return total;
}

BV2D rotated(const BV2D& u, double angle) {
  double cs = std::cos(angle), sn = std::sin(angle);
  auto rot = [&](Vec2 v) -> Vec2 { return {cs * v.x - sn * v.y, sn * v.x + cs * v.y}; };

  Domain2D nd = u.domain();
  if (nd.kind == Domain2D::Kind::Disk) {
    Vec2 c = rot(nd.center);
    nd = Domain2D::disk(c.x, c.y, nd.radius);
  } else {
    if (std::abs(cs * sn) > 1e-12)
      throw std::invalid_argument("rotated: rect domains rotate by multiples of pi/2 only");
    Vec2 a = rot({nd.x0, nd.y0}), b = rot({nd.x1, nd.y1});
    nd = Domain2D::rect(std::min(a.x, b.x), std::min(a.y, b.y), std::max(a.x, b.x),
                        std::max(a.y, b.y));
  }
  std::vector<BV2DTerm> terms = u.terms();
  for (auto& t : terms) {
    t.dir = rot(t.dir);
    t.center = rot(t.center);
    for (auto& v : t.verts) v = rot(v);
  }
  return BV2D::make(nd, std::move(terms));
}

}  // namespace nlbv
