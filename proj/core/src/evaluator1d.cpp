#include "nlbv/evaluator1d.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <thread>

#include "nlbv/kernel.hpp"
#include "nlbv/quadrature.hpp"
#include "nlbv/rng.hpp"

namespace nlbv {

namespace {

// slicing needs gamma bounded away from 0 so root-bracket kernel mass
// stays negligible; below this we fall back to plain subdivision
constexpr double kSliceGammaMin = 0.35;
constexpr int kIsolationDepthMax = 60;
constexpr int kIsolationSpanBudget = 20000;
constexpr int kSliceDepthCap = 26;
constexpr int kSliceEvalCap = 30000;

struct Cell {
  double x0, x1, y0, y1;
  double nu;      // kernel mass of the cell
  double weight;  // 1 on diagonal part pairs, 2 for mirrored off-diagonal
  int depth;
  std::uint64_t id;
};

// Heap entries are either fresh cells (undecided, removable error is half
// their mass) or sliced cells carrying a resolved estimate whose error can
// be shrunk by re-slicing at a tighter tolerance.
struct Entry {
  Cell cell;
  bool sliced = false;
  double sval = 0.0, serr = 0.0;  // weighted, lambda-scaled
  double prio = 0.0;
};

struct EntryOrder {
  bool operator()(const Entry& a, const Entry& b) const {
    if (a.prio != b.prio) return a.prio < b.prio;
    return a.cell.id > b.cell.id;
  }
};

enum class CellClass { Inside, Outside, Boundary };

struct SliceOut {
  double value = 0.0;
  double err = 0.0;
};

struct Engine {
  const BV1D& u;
  double gamma, lambda;
  const EvalOptions& opts;

  std::priority_queue<Entry, std::vector<Entry>, EntryOrder> heap;
  double nu_in_w = 0.0;     // weighted kernel mass certified inside E
  double fresh_mass = 0.0;  // weighted lambda*nu of fresh heap entries
  double slice_val = 0.0, slice_err = 0.0;  // over sliced heap entries
  double frozen_val = 0.0, frozen_err = 0.0;
  std::size_t processed = 0;
  std::size_t n_inside = 0, n_fresh_stuck = 0, n_sliced = 0;
  int depth_max = 0;
  std::uint64_t next_id = 0;

  Engine(const BV1D& f, double g, double l, const EvalOptions& o)
      : u(f), gamma(g), lambda(l), opts(o) {}

  double thr(double s) const { return lambda * std::pow(s, 1.0 + gamma); }

  CellClass classify_rect(double x0, double x1, double y0, double y1) const {
    Iv a = abs_iv(u.range_on(x0, x1) - u.range_on(y0, y1));
    double smin = std::max({0.0, x0 - y1, y0 - x1});
    double smax = std::max(x1 - y0, y1 - x0);
    double t_lo = thr(smin) * (1.0 - 1e-15);
    double t_hi = thr(smax) * (1.0 + 1e-15);
    if (a.lo > t_hi) return CellClass::Inside;
    if (a.hi <= t_lo) return CellClass::Outside;
    return CellClass::Boundary;
  }

  CellClass classify(const Cell& c) const {
    return classify_rect(c.x0, c.x1, c.y0, c.y1);
  }

  void admit(double x0, double x1, double y0, double y1, double weight, int depth) {
    double nu = nu_gamma_cell(gamma, x0, x1, y0, y1);
    if (nu <= 0.0) return;
    Cell c{x0, x1, y0, y1, nu, weight, depth, next_id++};
    depth_max = std::max(depth_max, depth);
    switch (classify(c)) {
      case CellClass::Inside:
        nu_in_w += weight * nu;
        ++n_inside;
        break;
      case CellClass::Outside:
        break;
      case CellClass::Boundary: {
        Entry e;
        e.cell = c;
        e.prio = 0.5 * weight * lambda * nu;
        fresh_mass += weight * lambda * nu;
        heap.push(e);
        break;
      }
    }
  }

  double current_value() const {
    return lambda * nu_in_w + slice_val + frozen_val + 0.5 * fresh_mass;
  }
  double current_error() const { return slice_err + frozen_err + 0.5 * fresh_mass; }
  double target_abs() const {
    return opts.tol_rel * std::max(std::abs(current_value()), 1e-12);
  }

  bool slice_gate(const Cell& c) const {
    if (gamma < kSliceGammaMin) return false;
    // per-x root isolation cannot outpace plain subdivision over a singular
    // set in y; jumps in range are handled by the initial cuts instead
    if (u.cantor_measure_on(c.y0, c.y1) != 0.0) return false;
    if (u.has_jump_in(c.y0, c.y1) || u.has_jump_in(c.x0, c.x1)) return false;
    return true;
  }

  // ----- per-x root isolation -----

  // kernel mass of {y in [c,d] : sgn*(u(y)-ux) > lambda s^(1+gamma)} where
  // s = y-x (dir=+1, spans right of x) or x-y (dir=-1, spans left of x)
  void scan_branch(double x, double ux, double sgn, double dir, double c, double d,
                   SliceOut& out, int& span_budget) const {
    struct Span {
      double c, d;
      int depth;
    };
    std::vector<Span> stack{{c, d, 0}};
    while (!stack.empty()) {
      Span sp = stack.back();
      stack.pop_back();
      if (!(sp.d > sp.c)) continue;
      double s_lo = (dir > 0) ? sp.c - x : x - sp.d;
      double s_hi = (dir > 0) ? sp.d - x : x - sp.c;
      if (s_lo < 0.0) s_lo = 0.0;
      double th_lo = thr(s_lo) * (1.0 - 1e-15);
      double th_hi = thr(s_hi) * (1.0 + 1e-15);

      Iv ur = u.range_on(sp.c, sp.d);
      double g_hi = (sgn > 0 ? ur.hi - ux : ux - ur.lo) - th_lo;
      double g_lo = (sgn > 0 ? ur.lo - ux : ux - ur.hi) - th_hi;
      if (g_hi <= 0.0) continue;  // certified out everywhere
      if (g_lo > 0.0) {           // certified in everywhere
        out.value += kernel_segment_integral(gamma, x, sp.c, sp.d);
        continue;
      }

      auto g_at = [&](double y, double uy) {
        double s = (dir > 0) ? y - x : x - y;
        if (s < 0.0) s = 0.0;
        return sgn * (uy - ux) - thr(s);
      };

      // monotone certificate: g' = sgn u' - dir lambda (1+gamma) s^gamma;
      // cantor mass widens the slope enclosure (difference quotients)
      Iv du = u.ac_deriv_range_on(sp.c, sp.d);
      double cmass = u.cantor_measure_on(sp.c, sp.d);
      if (cmass != 0.0) {
        double cw = cmass / (sp.d - sp.c);
        du.lo -= cw;
        du.hi += cw;
      }
      double dt_lo = lambda * (1.0 + gamma) * std::pow(s_lo, gamma);
      double dt_hi = lambda * (1.0 + gamma) * std::pow(s_hi, gamma);
      double gp_lo = (sgn > 0 ? du.lo : -du.hi);
      double gp_hi = (sgn > 0 ? du.hi : -du.lo);
      if (dir > 0) {
        gp_lo -= dt_hi;
        gp_hi -= dt_lo;
      } else {
        gp_lo += dt_lo;
        gp_hi += dt_hi;
      }

      if (gp_lo >= 0.0 || gp_hi <= 0.0) {
        double gc = g_at(sp.c, u.eval_right(sp.c));
        double gd = g_at(sp.d, u.eval_left(sp.d));
        if (gc > 0.0 && gd > 0.0) {
          out.value += kernel_segment_integral(gamma, x, sp.c, sp.d);
          continue;
        }
        if (gc <= 0.0 && gd <= 0.0) continue;
        // monotone + one endpoint exactly on the boundary: the cut sits at
        // that endpoint (the diagonal touch y = x lands here), no residual
        if (gc == 0.0 || gd == 0.0) {
          out.value += kernel_segment_integral(gamma, x, sp.c, sp.d);
          continue;
        }
        double lo = sp.c, hi = sp.d, glo = gc;
        for (int it = 0; it < 90 && hi - lo > 1e-15 * (1.0 + std::abs(hi)); ++it) {
          double m = 0.5 * (lo + hi);
          double gm = g_at(m, u.eval(m));
          if ((glo > 0.0) == (gm > 0.0)) {
            lo = m;
            glo = gm;
          } else {
            hi = m;
          }
        }
        double cut = 0.5 * (lo + hi);
        out.err += kernel_segment_integral(gamma, x, lo, hi);
        if (gc > 0.0)
          out.value += kernel_segment_integral(gamma, x, sp.c, cut);
        else
          out.value += kernel_segment_integral(gamma, x, cut, sp.d);
        continue;
      }

      double width_floor = 1e-15 * (1.0 + std::abs(sp.d));
      if (sp.depth >= kIsolationDepthMax || sp.d - sp.c <= width_floor ||
          --span_budget <= 0) {
        double m = kernel_segment_integral(gamma, x, sp.c, sp.d);
        out.value += 0.5 * m;
        out.err += 0.5 * m;
        continue;
      }
      double m = 0.5 * (sp.c + sp.d);
      stack.push_back({sp.c, m, sp.depth + 1});
      stack.push_back({m, sp.d, sp.depth + 1});
    }
  }

  SliceOut k_eval(double x, double ux, double y0, double y1) const {
    SliceOut out;
    int budget = kIsolationSpanBudget;
    double right_lo = std::max(x, y0);
    if (y1 > right_lo)
      for (double sgn : {1.0, -1.0}) scan_branch(x, ux, sgn, +1.0, right_lo, y1, out, budget);
    double left_hi = std::min(x, y1);
    if (left_hi > y0)
      for (double sgn : {1.0, -1.0}) scan_branch(x, ux, sgn, -1.0, y0, left_hi, out, budget);
    return out;
  }

  // ----- slice integration over x -----

  // upper bound of the kernel mass of E inside the x-strip [a,b] x ybox:
  // a budget-capped quadtree whose undecided leaves count in full.  Used to
  // keep invisible support from slipping past the quadrature when the
  // sampled values are all zero.
  double strip_mass_upper(const Cell& cl, double a, double b) const {
    struct Rect {
      double x0, x1, y0, y1;
      int depth;
    };
    double total = 0.0;
    int budget = 300;
    std::vector<Rect> stack{{a, b, cl.y0, cl.y1, 0}};
    while (!stack.empty()) {
      Rect r = stack.back();
      stack.pop_back();
      double nu = nu_gamma_cell(gamma, r.x0, r.x1, r.y0, r.y1);
      if (nu <= 0.0) continue;
      CellClass k = classify_rect(r.x0, r.x1, r.y0, r.y1);
      if (k == CellClass::Outside) continue;
      if (k == CellClass::Inside || r.depth >= 48 || --budget <= 0) {
        total += nu;
        continue;
      }
      if (r.x1 - r.x0 >= r.y1 - r.y0) {
        double m = 0.5 * (r.x0 + r.x1);
        stack.push_back({r.x0, m, r.y0, r.y1, r.depth + 1});
        stack.push_back({m, r.x1, r.y0, r.y1, r.depth + 1});
      } else {
        double m = 0.5 * (r.y0 + r.y1);
        stack.push_back({r.x0, r.x1, r.y0, m, r.depth + 1});
        stack.push_back({r.x0, r.x1, m, r.y1, r.depth + 1});
      }
    }
    return total;
  }

  // x-locations where the E-boundary of one branch crosses the horizontal
  // cell edge y = yc; these are the kinks of K
  void edge_kinks(const Cell& cl, double yc, double uyc, std::vector<double>& out) const {
    struct Span {
      double a, b;
      int depth;
    };
    for (double sgn : {1.0, -1.0}) {
      std::vector<Span> stack;
      if (yc > cl.x0 && yc < cl.x1) {
        stack.push_back({cl.x0, yc, 0});
        stack.push_back({yc, cl.x1, 0});
      } else {
        stack.push_back({cl.x0, cl.x1, 0});
      }
      int budget = 600;
      while (!stack.empty()) {
        Span sp = stack.back();
        stack.pop_back();
        if (!(sp.b > sp.a)) continue;
        double s_lo, s_hi;
        double dsign;  // d|x-yc|/dx
        if (sp.a >= yc) {
          s_lo = sp.a - yc;
          s_hi = sp.b - yc;
          dsign = 1.0;
        } else {
          s_lo = yc - sp.b;
          s_hi = yc - sp.a;
          dsign = -1.0;
        }
        if (s_lo < 0.0) s_lo = 0.0;
        Iv ur = u.range_on(sp.a, sp.b);
        double g_hi = (sgn > 0 ? ur.hi - uyc : uyc - ur.lo) - thr(s_lo) * (1.0 - 1e-15);
        double g_lo = (sgn > 0 ? ur.lo - uyc : uyc - ur.hi) - thr(s_hi) * (1.0 + 1e-15);
        if (g_hi <= 0.0 || g_lo > 0.0) continue;  // sign-definite, no crossing

        auto g_at = [&](double x, double uxv) {
          return sgn * (uxv - uyc) - thr(std::abs(x - yc));
        };
        Iv du = u.ac_deriv_range_on(sp.a, sp.b);
        double cmass = u.cantor_measure_on(sp.a, sp.b);
        if (cmass != 0.0) {
          double cw = cmass / (sp.b - sp.a);
          du.lo -= cw;
          du.hi += cw;
        }
        double dt_lo = lambda * (1.0 + gamma) * std::pow(s_lo, gamma);
        double dt_hi = lambda * (1.0 + gamma) * std::pow(s_hi, gamma);
        double gp_lo = (sgn > 0 ? du.lo : -du.hi);
        double gp_hi = (sgn > 0 ? du.hi : -du.lo);
        if (dsign > 0) {
          gp_lo -= dt_hi;
          gp_hi -= dt_lo;
        } else {
          gp_lo += dt_lo;
          gp_hi += dt_hi;
        }
        if (gp_lo >= 0.0 || gp_hi <= 0.0) {
          double ga = g_at(sp.a, u.eval_right(sp.a));
          double gb = g_at(sp.b, u.eval_left(sp.b));
          if ((ga > 0.0) == (gb > 0.0)) continue;
          double lo = sp.a, hi = sp.b, glo = ga;
          for (int it = 0; it < 80 && hi - lo > 1e-13 * (1.0 + std::abs(hi)); ++it) {
            double m = 0.5 * (lo + hi);
            double gm = g_at(m, u.eval(m));
            if ((glo > 0.0) == (gm > 0.0)) {
              lo = m;
              glo = gm;
            } else {
              hi = m;
            }
          }
          out.push_back(0.5 * (lo + hi));
          continue;
        }
        double width_floor = 1e-13 * (1.0 + std::abs(sp.b));
        if (sp.depth >= 36 || sp.b - sp.a <= width_floor || --budget <= 0) {
          out.push_back(0.5 * (sp.a + sp.b));  // unresolved: break anyway
          continue;
        }
        double m = 0.5 * (sp.a + sp.b);
        stack.push_back({sp.a, m, sp.depth + 1});
        stack.push_back({m, sp.b, sp.depth + 1});
      }
    }
  }

  struct KCtx {
    double pw_err = 0.0;
    int evals = 0;
  };

  double K_at(const Cell& c, double x, KCtx& ctx) const {
    double ux = (x == c.x0)   ? u.eval_right(c.x0)
                : (x == c.x1) ? u.eval_left(c.x1)
                              : u.eval(x);
    SliceOut r = k_eval(x, ux, c.y0, c.y1);
    ctx.pw_err = std::max(ctx.pw_err, r.err);
    ++ctx.evals;
    return r.value;
  }

  void simpson_rec(const Cell& c, double a, double fa, double m, double fm, double b,
                   double fb, double budget, int depth, SliceOut& acc, KCtx& ctx) const {
    if (ctx.evals > kSliceEvalCap) {
      double ub = strip_mass_upper(c, a, b);
      acc.value += 0.5 * ub;
      acc.err += 0.5 * ub;
      return;
    }
    double m1 = 0.5 * (a + m), m2 = 0.5 * (m + b);
    double f1 = K_at(c, m1, ctx), f2 = K_at(c, m2, ctx);
    double h = b - a;
    double s1 = h / 6.0 * (fa + 4.0 * fm + fb);
    double s2 = h / 12.0 * (fa + 4.0 * f1 + 2.0 * fm + 4.0 * f2 + fb);
    double delta = s2 - s1;
    bool want_accept = (depth >= 1 && std::abs(delta) <= budget) ||
                       depth >= kSliceDepthCap || h <= 1e-14 * (1.0 + std::abs(b));
    if (want_accept) {
      double extra = 0.0;
      // all samples zero: support may hide between them (K >= 0, so s2 == 0
      // means every sample was 0); positive samples leave accuracy to |delta|
      if (s2 == 0.0 && fa == 0.0 && fm == 0.0) {
        double miss = strip_mass_upper(c, a, b);
        if (miss > budget && depth < kSliceDepthCap &&
            h > 1e-14 * (1.0 + std::abs(b))) {
          want_accept = false;
        } else {
          extra = miss;
        }
      }
      if (want_accept) {
        acc.value += s2 + delta / 15.0;
        acc.err += std::abs(delta) + extra;
        return;
      }
    }
    simpson_rec(c, a, fa, m1, f1, m, fm, 0.5 * budget, depth + 1, acc, ctx);
    simpson_rec(c, m, fm, m2, f2, b, fb, 0.5 * budget, depth + 1, acc, ctx);
  }

  // kernel mass of E inside the cell with an error estimate; no lambda or
  // mirror weight applied
  SliceOut slice_cell(const Cell& c, double tol_nu) const {
    std::vector<double> breaks{c.x0, c.x1};
    u.breakpoints(c.x0, c.x1, breaks);
    if (c.y0 > c.x0 && c.y0 < c.x1) breaks.push_back(c.y0);
    if (c.y1 > c.x0 && c.y1 < c.x1) breaks.push_back(c.y1);
    edge_kinks(c, c.y0, u.eval_right(c.y0), breaks);
    edge_kinks(c, c.y1, u.eval_left(c.y1), breaks);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    while (breaks.front() < c.x0) breaks.erase(breaks.begin());
    while (breaks.back() > c.x1) breaks.pop_back();

    KCtx ctx;
    SliceOut acc;
    double span = c.x1 - c.x0;
    std::vector<double> kv(breaks.size());
    for (std::size_t i = 0; i < breaks.size(); ++i) kv[i] = K_at(c, breaks[i], ctx);
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
      double a = breaks[i], b = breaks[i + 1];
      if (!(b > a)) continue;
      double m = 0.5 * (a + b);
      double fm = K_at(c, m, ctx);
      simpson_rec(c, a, kv[i], m, fm, b, kv[i + 1], tol_nu * (b - a) / span, 0, acc,
                  ctx);
    }
    acc.err += ctx.pw_err * span;
    return acc;
  }

  // ----- main loop -----

  void slice_entry(const Cell& c, double tol_nu) {
    SliceOut r = slice_cell(c, std::max(tol_nu, 1e-14 * c.nu));
    Entry e;
    e.cell = c;
    e.sliced = true;
    e.sval = c.weight * lambda * r.value;
    e.serr = c.weight * lambda * r.err;
    e.prio = e.serr;
    slice_val += e.sval;
    slice_err += e.serr;
    ++n_sliced;
    heap.push(e);
  }

  FunctionalEstimate run() {
    const auto& parts = u.domain().parts();
    for (std::size_t i = 0; i < parts.size(); ++i) {
      std::vector<double> ci{parts[i].lo, parts[i].hi};
      u.breakpoints(parts[i].lo, parts[i].hi, ci);
      std::sort(ci.begin(), ci.end());
      ci.erase(std::unique(ci.begin(), ci.end()), ci.end());
      for (std::size_t j = i; j < parts.size(); ++j) {
        std::vector<double> cj{parts[j].lo, parts[j].hi};
        u.breakpoints(parts[j].lo, parts[j].hi, cj);
        std::sort(cj.begin(), cj.end());
        cj.erase(std::unique(cj.begin(), cj.end()), cj.end());
        double w = (i == j) ? 1.0 : 2.0;
        for (std::size_t a = 0; a + 1 < ci.size(); ++a)
          for (std::size_t b = 0; b + 1 < cj.size(); ++b)
            admit(ci[a], ci[a + 1], cj[b], cj[b + 1], w, 0);
      }
    }

    while (!heap.empty()) {
      if (current_error() <= target_abs()) break;
      if (processed >= opts.max_cells) break;
      Entry e = heap.top();
      heap.pop();
      ++processed;

      if (e.sliced) {
        slice_val -= e.sval;
        slice_err -= e.serr;
        double tol_nu = 0.25 * e.serr / (lambda * e.cell.weight);
        SliceOut r = slice_cell(e.cell, std::max(tol_nu, 1e-14 * e.cell.nu));
        double nval = e.cell.weight * lambda * r.value;
        double nerr = e.cell.weight * lambda * r.err;
        ++n_sliced;
        if (nerr >= 0.9 * e.serr) {  // no progress; freeze the better one
          if (nerr > e.serr) {
            nval = e.sval;
            nerr = e.serr;
          }
          frozen_val += nval;
          frozen_err += nerr;
        } else {
          Entry ne = e;
          ne.sval = nval;
          ne.serr = nerr;
          ne.prio = nerr;
          slice_val += nval;
          slice_err += nerr;
          heap.push(ne);
        }
        continue;
      }

      const Cell& c = e.cell;
      fresh_mass -= c.weight * lambda * c.nu;
      if (opts.allow_slicing && c.depth >= opts.slice_min_depth && slice_gate(c)) {
        double share = e.prio / std::max(current_error(), e.prio);
        double tol_nu = 0.35 * target_abs() * share / (lambda * c.weight);
        slice_entry(c, tol_nu);
        continue;
      }
      if (c.depth >= opts.max_depth) {
        double half = 0.5 * c.weight * lambda * c.nu;
        frozen_val += half;
        frozen_err += half;
        ++n_fresh_stuck;
        continue;
      }
      if (c.x1 - c.x0 >= c.y1 - c.y0) {
        double m = 0.5 * (c.x0 + c.x1);
        admit(c.x0, m, c.y0, c.y1, c.weight, c.depth + 1);
        admit(m, c.x1, c.y0, c.y1, c.weight, c.depth + 1);
      } else {
        double m = 0.5 * (c.y0 + c.y1);
        admit(c.x0, c.x1, c.y0, m, c.weight, c.depth + 1);
        admit(c.x0, c.x1, m, c.y1, c.weight, c.depth + 1);
      }
    }

    FunctionalEstimate est;
    est.value = current_value();
    est.error_bound = current_error();
    est.cells_inside = n_inside;
    std::size_t fresh_left = 0;
    // drain to count fresh cells still undecided
    while (!heap.empty()) {
      if (!heap.top().sliced) ++fresh_left;
      heap.pop();
    }
    est.cells_boundary = fresh_left + n_fresh_stuck;
    est.cells_sliced = n_sliced;
    est.depth_max = depth_max;
    est.tolerance_met = est.error_bound <= opts.tol_rel * std::max(std::abs(est.value), 1e-12);
    return est;
  }
};

}  // namespace

FunctionalEstimate f_eval(const BV1D& u, double gamma, double lambda,
                          const EvalOptions& opts) {
  if (!(gamma > 0.0)) throw std::invalid_argument("f_eval: gamma must be positive");
  if (!(lambda > 0.0)) throw std::invalid_argument("f_eval: lambda must be positive");
  Engine e(u, gamma, lambda, opts);
  return e.run();
}

FunctionalEstimate f_eval_mc(const BV1D& u, double gamma, double lambda,
                             std::size_t samples, std::uint64_t seed, int threads) {
  if (!(gamma > 0.0) || !(lambda > 0.0))
    throw std::invalid_argument("f_eval_mc: gamma and lambda must be positive");
  const auto& parts = u.domain().parts();
  double total_len = u.domain().length();
  std::vector<double> prefix{0.0};
  for (const auto& p : parts) prefix.push_back(prefix.back() + p.length());

  constexpr int kShards = 64;
  std::vector<double> shard_sum(kShards, 0.0), shard_sum2(kShards, 0.0);
  std::vector<std::size_t> shard_n(kShards, 0);
  for (int s = 0; s < kShards; ++s)
    shard_n[s] = samples / kShards + (static_cast<std::size_t>(s) < samples % kShards ? 1 : 0);

  auto sample_point = [&](Xoshiro256& rng) {
    double r = rng.uniform(0.0, total_len);
    std::size_t i = 0;
    while (i + 1 < parts.size() && r >= prefix[i + 1]) ++i;
    return std::min(parts[i].lo + (r - prefix[i]), parts[i].hi);
  };

  auto work = [&](int shard) {
    Xoshiro256 rng(substream(seed, static_cast<std::uint64_t>(shard)));
    double sum = 0.0, sum2 = 0.0;
    double scale = lambda * total_len * total_len;
    for (std::size_t k = 0; k < shard_n[shard]; ++k) {
      double x = sample_point(rng);
      double y = sample_point(rng);
      double s = std::abs(x - y);
      double h = 0.0;
      if (s > 0.0 && std::abs(u.eval(x) - u.eval(y)) > lambda * std::pow(s, 1.0 + gamma))
        h = scale * std::pow(s, gamma - 1.0);
      sum += h;
      sum2 += h * h;
    }
    shard_sum[shard] = sum;
    shard_sum2[shard] = sum2;
  };

  int nt = std::max(1, threads);
  if (nt == 1) {
    for (int s = 0; s < kShards; ++s) work(s);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t)
      pool.emplace_back([&] {
        for (int s = next.fetch_add(1); s < kShards; s = next.fetch_add(1)) work(s);
      });
    for (auto& t : pool) t.join();
  }

  double sum = 0.0, sum2 = 0.0;
  std::size_t n = 0;
  for (int s = 0; s < kShards; ++s) {  // fixed order keeps the result exact
    sum += shard_sum[s];
    sum2 += shard_sum2[s];
    n += shard_n[s];
  }
  FunctionalEstimate est;
  if (n == 0) return est;
  double mean = sum / static_cast<double>(n);
  double var = std::max(0.0, sum2 / static_cast<double>(n) - mean * mean);
  if (n > 1) var *= static_cast<double>(n) / static_cast<double>(n - 1);
  est.value = mean;
  est.error_bound = 3.0 * std::sqrt(var / static_cast<double>(n));
  est.tolerance_met = true;
  return est;
}

std::vector<SweepRow> lambda_sweep(const BV1D& u, double gamma,
                                   const std::vector<double>& lambdas,
                                   const EvalOptions& opts) {
  std::vector<SweepRow> rows(lambdas.size());
  auto run_row = [&](std::size_t i) {
    auto t0 = std::chrono::steady_clock::now();
    FunctionalEstimate est = f_eval(u, gamma, lambdas[i], opts);
    auto t1 = std::chrono::steady_clock::now();
    rows[i].lambda = lambdas[i];
    rows[i].est = est;
    rows[i].runtime_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  };
  int nt = std::max(1, opts.threads);
  if (nt == 1 || rows.size() <= 1) {
    for (std::size_t i = 0; i < rows.size(); ++i) run_row(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < rows.size(); i = next.fetch_add(1))
          run_row(i);
      });
    for (auto& t : pool) t.join();
  }
  return rows;
}

SweepTail sweep_tail(const std::vector<SweepRow>& rows) {
  SweepTail t;
  if (rows.empty()) return t;
  std::size_t q = std::max<std::size_t>(1, rows.size() / 4);
  std::size_t from = rows.size() - q;
  t.min = t.max = rows[from].est.value;
  for (std::size_t i = from; i < rows.size(); ++i) {
    t.min = std::min(t.min, rows[i].est.value);
    t.max = std::max(t.max, rows[i].est.value);
  }
  t.last = rows.back().est.value;
  return t;
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("geometric_grid: bad range");
  if (count == 0) return {};
  if (count == 1) return {lo};
  std::vector<double> g(count);
  double ratio = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i)
    g[i] = lo * std::exp(ratio * static_cast<double>(i));
  g.back() = hi;
  return g;
}

}  // namespace nlbv
