#include "nlbv/bv1d.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nlbv/cantor.hpp"
#include "nlbv/quadrature.hpp"

namespace nlbv {

// ===== CantorPart =====

double CantorPart::eval(double x) const {
  double s = std::clamp(param(x), w0, w1);
  return scale * (cantor_value(s) - cantor_value(w0));
}

double CantorPart::mass() const {
  return scale * (cantor_value(w1) - cantor_value(w0));
}

double CantorPart::variation() const { return std::abs(mass()); }

double CantorPart::measure(double lo, double hi) const {
  double s0 = std::clamp(param(lo), w0, w1);
  double s1 = std::clamp(param(hi), w0, w1);
  return scale * (cantor_value(s1) - cantor_value(s0));
}

Iv CantorPart::range(double lo, double hi) const {
  return Iv(eval(lo), eval(hi));
}

// ===== construction =====

BV1D BV1D::make(OpenSet1D domain, std::vector<Piece> pieces,
                std::vector<CantorPart> cantors) {
  if (domain.empty()) throw std::invalid_argument("BV1D: empty domain");
  for (const auto& p : pieces)
    if (!(p.lo < p.hi)) throw std::invalid_argument("BV1D: piece endpoints out of order");
  std::sort(pieces.begin(), pieces.end(),
            [](const Piece& a, const Piece& b) { return a.lo < b.lo; });

  BV1D u;
  std::size_t idx = 0;
  for (const auto& part : domain.parts()) {
    u.part_first_.push_back(u.pieces_.size());
    std::vector<Piece> local;
    while (idx < pieces.size() && pieces[idx].lo < part.hi) {
      Piece& p = pieces[idx];
      if (p.lo < part.lo || p.hi > part.hi)
        throw std::invalid_argument("BV1D: piece not inside a single domain part");
      if (!local.empty() && p.lo < local.back().hi)
        throw std::invalid_argument("BV1D: overlapping pieces");
      local.push_back(std::move(p));
      ++idx;
    }
    if (local.empty()) {
      u.pieces_.push_back({part.lo, part.hi, SmoothForm::constant(0.0)});
      continue;
    }
    if (local.front().lo > part.lo)
      u.pieces_.push_back({part.lo, local.front().lo,
                           SmoothForm::constant(local.front().form.eval(local.front().lo))});
    for (std::size_t i = 0; i < local.size(); ++i) {
      double tail = (i + 1 < local.size()) ? local[i + 1].lo : part.hi;
      double hi = local[i].hi;
      const SmoothForm& f = local[i].form;
      double cont = f.eval(hi);
      u.pieces_.push_back(std::move(local[i]));
      if (hi < tail) u.pieces_.push_back({hi, tail, SmoothForm::constant(cont)});
    }
  }
  if (idx < pieces.size())
    throw std::invalid_argument("BV1D: piece not inside a single domain part");

  for (const auto& cp : cantors) {
    if (!(cp.a < cp.b) || !(cp.w0 >= 0.0) || !(cp.w0 < cp.w1) || !(cp.w1 <= 1.0) ||
        !std::isfinite(cp.scale))
      throw std::invalid_argument("BV1D: malformed cantor part");
    bool inside = false;
    for (const auto& part : domain.parts())
      if (cp.x_lo() >= part.lo && cp.x_hi() <= part.hi) {
        inside = true;
        break;
      }
    if (!inside)
      throw std::invalid_argument("BV1D: cantor active region must lie in one domain part");
  }
  std::sort(cantors.begin(), cantors.end(),
            [](const CantorPart& a, const CantorPart& b) { return a.x_lo() < b.x_lo(); });
  for (std::size_t i = 0; i + 1 < cantors.size(); ++i)
    if (cantors[i + 1].x_lo() < cantors[i].x_hi())
      throw std::invalid_argument("BV1D: overlapping cantor active regions");
  u.cantors_ = std::move(cantors);
  u.dom_ = std::move(domain);

  // derive jumps at interior junctions
  const auto& parts = u.dom_.parts();
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    std::size_t f = u.part_first_[pi];
    std::size_t l = (pi + 1 < parts.size()) ? u.part_first_[pi + 1] : u.pieces_.size();
    for (std::size_t i = f; i + 1 < l; ++i) {
      double x = u.pieces_[i].hi;
      double fl = u.pieces_[i].form.eval(x);
      double fr = u.pieces_[i + 1].form.eval(x);
      double sc = std::max({1.0, std::abs(fl), std::abs(fr)});
      if (std::abs(fr - fl) > 1e-9 * sc) {
        double cs = u.cantor_sum(x);
        u.jumps_.push_back({x, fl + cs, fr + cs});
      }
    }
  }

  bool first = true;
  for (const auto& part : parts) {
    Iv r = u.range_on(part.lo, part.hi);
    u.range_hint_ = first ? r : hull(u.range_hint_, r);
    first = false;
  }
  return u;
}

// ===== evaluation =====

double BV1D::cantor_sum(double x) const {
  double s = 0.0;
  for (const auto& cp : cantors_) s += cp.eval(x);
  return s;
}

void BV1D::locate(double x, std::size_t& ileft, std::size_t& iright) const {
  ileft = iright = npos;
  // right candidate: last piece with lo <= x, accepting x <= hi
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), x,
                             [](double v, const Piece& p) { return v < p.lo; });
  if (it != pieces_.begin()) {
    std::size_t i = static_cast<std::size_t>(it - pieces_.begin()) - 1;
    if (x <= pieces_[i].hi) iright = i;
    // left candidate: previous piece when x sits exactly on a junction
    if (x == pieces_[i].lo && i > 0 && pieces_[i - 1].hi == x)
      ileft = i - 1;
    else if (x > pieces_[i].lo && x <= pieces_[i].hi)
      ileft = i;
  }
  if (ileft == npos && iright == npos)
    throw std::domain_error("BV1D: point outside domain closure");
}

const JumpPoint* BV1D::jump_at(double x) const {
  auto it = std::lower_bound(jumps_.begin(), jumps_.end(), x,
                             [](const JumpPoint& j, double v) { return j.loc < v; });
  if (it != jumps_.end() && it->loc == x) return &*it;
  return nullptr;
}

double BV1D::eval(double x) const {
  std::size_t il, ir;
  locate(x, il, ir);
  if (il != npos && ir != npos && il != ir) {
    if (const JumpPoint* j = jump_at(x)) return 0.5 * (j->left + j->right);
  }
  std::size_t i = (ir != npos) ? ir : il;
  return pieces_[i].form.eval(x) + cantor_sum(x);
}

double BV1D::eval_left(double x) const {
  std::size_t il, ir;
  locate(x, il, ir);
  std::size_t i = (il != npos) ? il : ir;
  return pieces_[i].form.eval(x) + cantor_sum(x);
}

double BV1D::eval_right(double x) const {
  std::size_t il, ir;
  locate(x, il, ir);
  std::size_t i = (ir != npos) ? ir : il;
  return pieces_[i].form.eval(x) + cantor_sum(x);
}

// ===== enclosures =====

Iv BV1D::cantor_range_sum(double lo, double hi) const {
  Iv r = Iv::point(0.0);
  for (const auto& cp : cantors_) {
    if (cp.x_hi() <= lo || cp.x_lo() >= hi) {
      r += Iv::point(cp.eval(lo));  // constant there
    } else {
      r += cp.range(lo, hi);
    }
  }
  return r;
}

// Essential range: pieces meeting [lo,hi] in a single point are skipped
// whenever some piece overlaps with positive length.  The integrals driven
// by these enclosures ignore null sets, and keeping the stray one-sided
// limit of a jump sitting exactly on a query endpoint would stop cells next
// to that jump from ever classifying.
Iv BV1D::range_on(double lo, double hi) const {
  if (hi < lo) std::swap(lo, hi);
  bool first = true;
  Iv r;
  // pieces are sorted and disjoint, so the window covers a contiguous run
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), lo,
                             [](double v, const Piece& p) { return v < p.hi; });
  for (; it != pieces_.end() && it->lo < hi; ++it) {
    double s0 = std::max(lo, it->lo);
    double s1 = std::min(hi, it->hi);
    if (!(s1 > s0)) continue;
    Iv piece_r = it->form.range(s0, s1) + cantor_range_sum(s0, s1);
    r = first ? piece_r : hull(r, piece_r);
    first = false;
  }
  if (first) return Iv::point(eval(lo));  // degenerate query
  return r;
}

Iv BV1D::ac_deriv_range_on(double lo, double hi) const {
  if (hi < lo) std::swap(lo, hi);
  bool first = true;
  Iv r;
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), lo,
                             [](double v, const Piece& p) { return v < p.hi; });
  for (; it != pieces_.end() && it->lo < hi; ++it) {
    double s0 = std::max(lo, it->lo);
    double s1 = std::min(hi, it->hi);
    if (!(s1 > s0)) continue;
    Iv d = it->form.deriv_range(s0, s1);
    r = first ? d : hull(r, d);
    first = false;
  }
  if (first) {
    std::size_t il, ir;
    locate(lo, il, ir);
    return Iv::point(pieces_[(ir != npos) ? ir : il].form.deriv(lo));
  }
  return r;
}

double BV1D::cantor_measure_on(double lo, double hi) const {
  double total = 0.0;
  for (const auto& cp : cantors_) total += std::abs(cp.measure(lo, hi));
  return total;
}

bool BV1D::has_jump_in(double lo, double hi) const {
  auto it = std::upper_bound(jumps_.begin(), jumps_.end(), lo,
                             [](double v, const JumpPoint& j) { return v < j.loc; });
  return it != jumps_.end() && it->loc < hi;
}

void BV1D::breakpoints(double lo, double hi, std::vector<double>& out) const {
  for (const auto& p : pieces_) {
    if (p.hi <= lo || p.lo >= hi) continue;
    if (p.lo > lo) out.push_back(p.lo);
    if (p.hi < hi) out.push_back(p.hi);
    p.form.natural_breaks(std::max(lo, p.lo), std::min(hi, p.hi), out);
  }
  for (const auto& cp : cantors_) {
    if (cp.x_lo() > lo && cp.x_lo() < hi) out.push_back(cp.x_lo());
    if (cp.x_hi() > lo && cp.x_hi() < hi) out.push_back(cp.x_hi());
  }
}

// ===== measures and functionals =====

Variation BV1D::variation_decomposition() const {
  Variation v;
  for (const auto& p : pieces_) v.ac += form_variation(p.form, p.lo, p.hi);
  for (const auto& j : jumps_) v.jump += std::abs(j.height());
  for (const auto& cp : cantors_) v.cantor += cp.variation();
  return v;
}

double BV1D::signed_measure(double a, double b) const {
  if (b < a) throw std::invalid_argument("BV1D: signed_measure needs a <= b");
  return eval_right(b) - eval_right(a);
}

double BV1D::area_functional() const {
  double total = 0.0;
  for (const auto& p : pieces_) {
    std::vector<double> breaks{p.lo, p.hi};
    p.form.natural_breaks(p.lo, p.hi, breaks);
    std::sort(breaks.begin(), breaks.end());
    auto integrand = [&](double x) {
      double d = p.form.deriv(x);
      return std::sqrt(1.0 + d * d);
    };
    total += adaptive_simpson_cells(integrand, breaks, 1e-10).value;
  }
  for (const auto& j : jumps_) total += std::abs(j.height());
  for (const auto& cp : cantors_) total += cp.variation();
  return total;
}

// ===== algebra =====

BV1D BV1D::scaled(double c) const {
  std::vector<Piece> ps;
  ps.reserve(pieces_.size());
  for (const auto& p : pieces_) ps.push_back({p.lo, p.hi, p.form.scaled(c)});
  std::vector<CantorPart> cs = cantors_;
  for (auto& cp : cs) cp.scale *= c;
  return make(dom_, std::move(ps), std::move(cs));
}

BV1D BV1D::plus_const(double c) const {
  std::vector<Piece> ps;
  ps.reserve(pieces_.size());
  for (const auto& p : pieces_) ps.push_back({p.lo, p.hi, p.form.plus_const(c)});
  return make(dom_, std::move(ps), cantors_);
}

BV1D BV1D::restrict_to(double lo, double hi) const {
  OpenSet1D nd = dom_.intersect(lo, hi);
  if (nd.empty()) throw std::invalid_argument("BV1D: restriction misses the domain");
  std::vector<Piece> ps;
  for (const auto& p : pieces_) {
    double a = std::max(p.lo, lo), b = std::min(p.hi, hi);
    if (b > a) ps.push_back({a, b, p.form});
  }
  double offset = 0.0;
  std::vector<CantorPart> cs;
  for (const auto& cp : cantors_) {
    double w0 = std::clamp(cp.param(lo), cp.w0, cp.w1);
    double w1 = std::clamp(cp.param(hi), cp.w0, cp.w1);
    offset += cp.scale * (cantor_value(w0) - cantor_value(cp.w0));
    if (w1 > w0) {
      CantorPart nc = cp;
      nc.w0 = w0;
      nc.w1 = w1;
      cs.push_back(nc);
    }
  }
  if (offset != 0.0)
    for (auto& p : ps) p.form = p.form.plus_const(offset);
  return make(std::move(nd), std::move(ps), std::move(cs));
}

BV1D BV1D::sum(const BV1D& u, const BV1D& v) {
  const auto& pu = u.dom_.parts();
  const auto& pv = v.dom_.parts();
  if (pu.size() != pv.size())
    throw std::invalid_argument("BV1D: sum needs identical domains");
  for (std::size_t i = 0; i < pu.size(); ++i)
    if (pu[i].lo != pv[i].lo || pu[i].hi != pv[i].hi)
      throw std::invalid_argument("BV1D: sum needs identical domains");

  std::vector<Piece> ps;
  for (const auto& part : pu) {
    std::vector<double> cuts{part.lo, part.hi};
    for (const auto& p : u.pieces_)
      if (p.lo > part.lo && p.lo < part.hi) cuts.push_back(p.lo);
    for (const auto& p : v.pieces_)
      if (p.lo > part.lo && p.lo < part.hi) cuts.push_back(p.lo);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      double m = 0.5 * (cuts[i] + cuts[i + 1]);
      std::size_t il, ir;
      u.locate(m, il, ir);
      const SmoothForm& fu = u.pieces_[(ir != npos) ? ir : il].form;
      v.locate(m, il, ir);
      const SmoothForm& fv = v.pieces_[(ir != npos) ? ir : il].form;
      ps.push_back({cuts[i], cuts[i + 1], SmoothForm::sum({fu, fv})});
    }
  }
  std::vector<CantorPart> cs = u.cantors_;
  cs.insert(cs.end(), v.cantors_.begin(), v.cantors_.end());
  return make(u.dom_, std::move(ps), std::move(cs));
}

BV1D BV1D::reparam_affine(double a, double b) const {
  if (a == 0.0) throw std::invalid_argument("BV1D: reparam needs a != 0");
  std::vector<Interval1D> parts;
  for (const auto& part : dom_.parts()) {
    double t0 = (part.lo - b) / a;
    double t1 = (part.hi - b) / a;
    parts.push_back({std::min(t0, t1), std::max(t0, t1)});
  }
  std::vector<Piece> ps;
  ps.reserve(pieces_.size());
  for (const auto& p : pieces_) {
    double t0 = (p.lo - b) / a;
    double t1 = (p.hi - b) / a;
    ps.push_back({std::min(t0, t1), std::max(t0, t1), p.form.reparam(a, b)});
  }
  std::vector<CantorPart> cs;
  cs.reserve(cantors_.size());
  double offset = 0.0;
  for (const auto& cp : cantors_) {
    CantorPart nc = cp;
    if (a > 0.0) {
      nc.a = (cp.a - b) / a;
      nc.b = (cp.b - b) / a;
    } else {
      nc.a = (cp.b - b) / a;
      nc.b = (cp.a - b) / a;
      nc.w0 = 1.0 - cp.w1;
      nc.w1 = 1.0 - cp.w0;
      nc.scale = -cp.scale;
      offset += cp.mass();  // c(1-s) = 1-c(s) leaves this constant behind
    }
    cs.push_back(nc);
  }
  if (offset != 0.0)
    for (auto& p : ps) p.form = p.form.plus_const(offset);
  return make(OpenSet1D(std::move(parts)), std::move(ps), std::move(cs));
}

// ===== distances =====

double l1_distance(const BV1D& u, const BV1D& v, double tol) {
  const auto& pu = u.domain().parts();
  const auto& pv = v.domain().parts();
  if (pu.size() != pv.size())
    throw std::invalid_argument("l1_distance: domains differ");
  for (std::size_t i = 0; i < pu.size(); ++i)
    if (pu[i].lo != pv[i].lo || pu[i].hi != pv[i].hi)
      throw std::invalid_argument("l1_distance: domains differ");
  double span = u.domain().length();
  double total = 0.0;
  for (const auto& part : pu) {
    std::vector<double> breaks{part.lo, part.hi};
    u.breakpoints(part.lo, part.hi, breaks);
    v.breakpoints(part.lo, part.hi, breaks);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    auto integrand = [&](double x) { return std::abs(u.eval(x) - v.eval(x)); };
    total += adaptive_simpson_cells(integrand, breaks, tol * part.length() / span).value;
  }
  return total;
}

double area_strict_gap(const BV1D& u, const BV1D& v, double tol) {
  return l1_distance(u, v, tol) + std::abs(u.area_functional() - v.area_functional());
}

}  // namespace nlbv
