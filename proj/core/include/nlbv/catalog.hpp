#pragma once
// Text grammar for the function catalog. Configs name functions in a small
// closed language; parse/print round-trip losslessly (%.17g) so that a config
// echoed into a report rebuilds the identical function.
//
// 1D:   function := term (';' term)*
//       term     := affine(slope, intercept)
//                 | poly(c0, c1, ...)
//                 | sine(amplitude, frequency, phase)
//                 | spline(x0:y0, x1:y1, ...)
//                 | step(h@loc, ...)
//                 | cantor(mass, lo, hi[, w0, w1])
//                 | sum(term; ...)          accepted on input, spliced
//       domain   := (a,b) ['u' (a,b) ...]
//       combined := domain ':' function     used where both travel together
//
// 2D:   function := term2 (';' term2)*
//       term2    := ridge(dx, dy, "combined 1D")
//                 | radial(cx, cy, "combined 1D in r")
//                 | disk(cx, cy, radius, height)
//                 | polygon(height, x0:y0, x1:y1, ...)
//                 | sheet(mass, ax, ay[, s0, s1])
//       domain2  := rect(x0, y0, x1, y1) | disk(cx, cy, r)
//
// step compiles to constant pieces accumulating its heights; everything else
// maps one term to one summand.

#include <cstdint>
#include <string>
#include <vector>

#include "nlbv/bv1d.hpp"
#include "nlbv/slicer.hpp"

namespace nlbv {

struct Catalog1D {
  struct Term {
    enum class Kind { Affine, Poly, Sine, Spline, Step, Cantor };
    Kind kind = Kind::Affine;
    std::vector<double> a;  // parameters, flattened in the order written
  };
  OpenSet1D domain = OpenSet1D::interval(0.0, 1.0);
  std::vector<Term> terms;

  BV1D compile() const;
  std::string print() const;         // combined form, canonical spacing
  std::string print_function() const;  // terms only
  std::string print_domain() const;

  // Accepts the combined form, or terms-only with the domain passed apart.
  static Catalog1D parse(const std::string& text);
  static Catalog1D parse(const std::string& function, const std::string& domain);
};

struct Catalog2D {
  struct Term {
    enum class Kind { Ridge, Radial, Disk, Polygon, Sheet };
    Kind kind = Kind::Ridge;
    std::vector<double> a;
    Catalog1D profile;  // ridge/radial only
  };
  Domain2D domain = Domain2D::rect(0.0, 0.0, 1.0, 1.0);
  std::vector<Term> terms;

  BV2D compile() const;
  std::string print_function() const;
  std::string print_domain() const;

  static Catalog2D parse(const std::string& function, const std::string& domain);
};

// True if the text denotes a 2D function (leading 2D term keyword).
bool catalog_is_2d(const std::string& function);

// Named shorthands accepted wherever a function is expected: linear, step,
// mixed, cantor, cantor_linear, sine, disk, ridge_linear. Returns the pair
// (function, domain); unknown names pass through unchanged with empty domain.
std::pair<std::string, std::string> catalog_preset(const std::string& name);

// Seeded generator for property tests: bounded staircases, polynomials,
// splines, sines and cantor windows over (0,1), with jumps kept clear of the
// endpoints. Same seed, same function, on every platform.
Catalog1D random_catalog_1d(std::uint64_t seed);

// %.17g formatting shared by the printers and the CSV writers.
std::string format_double(double v);

}  // namespace nlbv
