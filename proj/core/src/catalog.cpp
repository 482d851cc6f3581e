#include "nlbv/catalog.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string_view>

#include "nlbv/rng.hpp"

namespace nlbv {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

[[noreturn]] void bad(const std::string& what) {
  throw std::invalid_argument("catalog: " + what);
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// split at top level: separators inside parentheses or quotes do not count
std::vector<std::string> split_top(std::string_view s, char sep) {
  std::vector<std::string> out;
  int depth = 0;
  bool quoted = false;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (quoted) {
      if (c == '"') quoted = false;
      continue;
    }
    if (c == '"') quoted = true;
    else if (c == '(') ++depth;
    else if (c == ')') --depth;
    else if (c == sep && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
    if (depth < 0) bad("unbalanced ')'");
  }
  if (quoted) bad("unterminated quote");
  if (depth != 0) bad("unbalanced '('");
  out.push_back(trim(s.substr(start)));
  return out;
}

double parse_number(const std::string& s) {
  std::string t = trim(s);
  if (t.empty()) bad("expected a number");
  double v = 0.0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || p != t.data() + t.size()) bad("bad number '" + t + "'");
  return v;
}

// name(args) -> {name, args}; the closing paren must end the text
std::pair<std::string, std::string> split_call(const std::string& text) {
  std::size_t open = text.find('(');
  if (open == std::string::npos || text.back() != ')') bad("expected name(...) in '" + text + "'");
  return {trim(std::string_view(text).substr(0, open)),
          std::string(text.begin() + open + 1, text.end() - 1)};
}

std::vector<std::string> call_args(const std::string& inner) {
  auto parts = split_top(inner, ',');
  if (parts.size() == 1 && parts[0].empty()) parts.clear();
  return parts;
}

// x:y pairs (spline knots, polygon vertices)
void parse_pair(const std::string& s, char sep, double& a, double& b) {
  auto pos = s.find(sep);
  if (pos == std::string::npos) bad("expected '" + std::string(1, sep) + "' in '" + s + "'");
  a = parse_number(s.substr(0, pos));
  b = parse_number(s.substr(pos + 1));
}

void parse_terms_1d(const std::string& text, std::vector<Catalog1D::Term>& out) {
  for (const auto& t : split_top(text, ';')) {
    if (t.empty()) bad("empty term");
    auto [name, inner] = split_call(t);
    if (name == "sum") {  // spliced: the compiled function is a sum anyway
      parse_terms_1d(inner, out);
      continue;
    }
    auto args = call_args(inner);
    Catalog1D::Term term;
    if (name == "affine") {
      term.kind = Catalog1D::Term::Kind::Affine;
      if (args.size() != 2) bad("affine takes (slope, intercept)");
      for (const auto& a : args) term.a.push_back(parse_number(a));
    } else if (name == "poly") {
      term.kind = Catalog1D::Term::Kind::Poly;
      if (args.empty()) bad("poly needs coefficients");
      for (const auto& a : args) term.a.push_back(parse_number(a));
    } else if (name == "sine") {
      term.kind = Catalog1D::Term::Kind::Sine;
      if (args.size() != 3) bad("sine takes (amplitude, frequency, phase)");
      for (const auto& a : args) term.a.push_back(parse_number(a));
    } else if (name == "spline") {
      term.kind = Catalog1D::Term::Kind::Spline;
      if (args.size() < 2) bad("spline needs at least two knots");
      for (const auto& a : args) {
        double x, y;
        parse_pair(a, ':', x, y);
        term.a.push_back(x);
        term.a.push_back(y);
      }
    } else if (name == "step") {
      term.kind = Catalog1D::Term::Kind::Step;
      if (args.empty()) bad("step needs h@loc entries");
      for (const auto& a : args) {
        double h, loc;
        parse_pair(a, '@', h, loc);
        term.a.push_back(h);
        term.a.push_back(loc);
      }
    } else if (name == "cantor") {
      term.kind = Catalog1D::Term::Kind::Cantor;
      if (args.size() != 3 && args.size() != 5) bad("cantor takes (mass, lo, hi[, w0, w1])");
      for (const auto& a : args) term.a.push_back(parse_number(a));
    } else {
      bad("unknown term '" + name + "'");
    }
    out.push_back(std::move(term));
  }
}

OpenSet1D parse_domain_1d(const std::string& text) {
  std::vector<Interval1D> parts;
  for (const auto& piece : split_top(text, 'u')) {
    std::string p = trim(piece);
    if (p.size() < 2 || p.front() != '(' || p.back() != ')') bad("domain wants (a,b)");
    auto nums = split_top(std::string_view(p).substr(1, p.size() - 2), ',');
    if (nums.size() != 2) bad("domain wants (a,b)");
    parts.push_back({parse_number(nums[0]), parse_number(nums[1])});
  }
  return OpenSet1D(std::move(parts));
}

std::string print_term_1d(const Catalog1D::Term& t) {
  using K = Catalog1D::Term::Kind;
  std::string s;
  auto join_nums = [&](std::size_t from, std::size_t to) {
    for (std::size_t i = from; i < to; ++i) {
      if (i > from) s += ", ";
      s += format_double(t.a[i]);
    }
  };
  switch (t.kind) {
    case K::Affine:
      s = "affine(";
      join_nums(0, t.a.size());
      break;
    case K::Poly:
      s = "poly(";
      join_nums(0, t.a.size());
      break;
    case K::Sine:
      s = "sine(";
      join_nums(0, t.a.size());
      break;
    case K::Spline:
      s = "spline(";
      for (std::size_t i = 0; i + 1 < t.a.size(); i += 2) {
        if (i) s += ", ";
        s += format_double(t.a[i]) + ":" + format_double(t.a[i + 1]);
      }
      break;
    case K::Step:
      s = "step(";
      for (std::size_t i = 0; i + 1 < t.a.size(); i += 2) {
        if (i) s += ", ";
        s += format_double(t.a[i]) + "@" + format_double(t.a[i + 1]);
      }
      break;
    case K::Cantor:
      s = "cantor(";
      join_nums(0, t.a.size());
      break;
  }
  return s + ")";
}

}  // namespace

// ===== Catalog1D =====

Catalog1D Catalog1D::parse(const std::string& text) {
  // combined form: the first top-level ':' splits domain from function
  int depth = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '(') ++depth;
    else if (c == ')') --depth;
    else if (c == ':' && depth == 0)
      return parse(text.substr(i + 1), text.substr(0, i));
  }
  bad("combined form wants 'domain : function'");
}

Catalog1D Catalog1D::parse(const std::string& function, const std::string& domain) {
  Catalog1D c;
  c.domain = parse_domain_1d(domain);
  parse_terms_1d(function, c.terms);
  if (c.terms.empty()) bad("no terms");
  return c;
}

std::string Catalog1D::print_function() const {
  std::string s;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) s += "; ";
    s += print_term_1d(terms[i]);
  }
  return s;
}

std::string Catalog1D::print_domain() const {
  std::string s;
  for (std::size_t i = 0; i < domain.parts().size(); ++i) {
    if (i) s += " u ";
    s += "(" + format_double(domain.parts()[i].lo) + "," +
         format_double(domain.parts()[i].hi) + ")";
  }
  return s;
}

std::string Catalog1D::print() const { return print_domain() + ": " + print_function(); }

BV1D Catalog1D::compile() const {
  using K = Term::Kind;
  std::vector<SmoothForm> forms;
  std::vector<std::pair<double, double>> steps;  // (loc, height)
  std::vector<CantorPart> cantors;
  for (const auto& t : terms) {
    switch (t.kind) {
      case K::Affine:
        forms.push_back(SmoothForm::affine(t.a[0], t.a[1]));
        break;
      case K::Poly:
        forms.push_back(SmoothForm::poly(t.a));
        break;
      case K::Sine:
        forms.push_back(SmoothForm::sine(t.a[0], t.a[1], t.a[2]));
        break;
      case K::Spline: {
        std::vector<double> kx, ky;
        for (std::size_t i = 0; i + 1 < t.a.size(); i += 2) {
          kx.push_back(t.a[i]);
          ky.push_back(t.a[i + 1]);
        }
        forms.push_back(SmoothForm::spline(std::move(kx), std::move(ky)));
        break;
      }
      case K::Step:
        for (std::size_t i = 0; i + 1 < t.a.size(); i += 2)
          steps.emplace_back(t.a[i + 1], t.a[i]);
        break;
      case K::Cantor: {
        CantorPart cp;
        cp.scale = t.a[0];  // equals the transported mass for the full window
        cp.a = t.a[1];
        cp.b = t.a[2];
        if (t.a.size() == 5) {
          cp.w0 = t.a[3];
          cp.w1 = t.a[4];
        }
        cantors.push_back(cp);
        break;
      }
    }
  }
  std::sort(steps.begin(), steps.end());

  SmoothForm base = forms.empty()    ? SmoothForm::constant(0.0)
                    : forms.size() == 1 ? forms.front()
                                        : SmoothForm::sum(std::move(forms));
  auto accumulated = [&](double x) {
    double s = 0.0;
    for (const auto& [loc, h] : steps)
      if (loc < x) s += h;
    return s;
  };

  std::vector<Piece> pieces;
  for (const auto& part : domain.parts()) {
    std::vector<double> cuts{part.lo};
    for (const auto& [loc, h] : steps)
      if (loc > part.lo && loc < part.hi && loc != cuts.back()) cuts.push_back(loc);
    cuts.push_back(part.hi);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      double off = accumulated(0.5 * (cuts[i] + cuts[i + 1]));
      pieces.push_back({cuts[i], cuts[i + 1], off == 0.0 ? base : base.plus_const(off)});
    }
  }
  return BV1D::make(domain, std::move(pieces), std::move(cantors));
}

// ===== Catalog2D =====

namespace {

std::string unquote(const std::string& s) {
  std::string t = trim(s);
  if (t.size() < 2 || t.front() != '"' || t.back() != '"') bad("expected a quoted profile");
  return t.substr(1, t.size() - 2);
}

}  // namespace

Catalog2D Catalog2D::parse(const std::string& function, const std::string& domain) {
  Catalog2D c;
  {
    auto [name, inner] = split_call(trim(domain));
    auto args = call_args(inner);
    if (name == "rect") {
      if (args.size() != 4) bad("rect takes (x0, y0, x1, y1)");
      c.domain = Domain2D::rect(parse_number(args[0]), parse_number(args[1]),
                                parse_number(args[2]), parse_number(args[3]));
    } else if (name == "disk") {
      if (args.size() != 3) bad("disk domain takes (cx, cy, r)");
      c.domain =
          Domain2D::disk(parse_number(args[0]), parse_number(args[1]), parse_number(args[2]));
    } else {
      bad("unknown 2D domain '" + name + "'");
    }
  }
  for (const auto& t : split_top(function, ';')) {
    if (t.empty()) bad("empty term");
    auto [name, inner] = split_call(t);
    auto args = call_args(inner);
    Term term;
    if (name == "ridge" || name == "radial") {
      term.kind = name == "ridge" ? Term::Kind::Ridge : Term::Kind::Radial;
      if (args.size() != 3) bad(name + " takes (a, b, \"profile\")");
      term.a = {parse_number(args[0]), parse_number(args[1])};
      term.profile = Catalog1D::parse(unquote(args[2]));
    } else if (name == "disk") {
      term.kind = Term::Kind::Disk;
      if (args.size() != 4) bad("disk takes (cx, cy, radius, height)");
      for (const auto& a : args) term.a.push_back(parse_number(a));
    } else if (name == "polygon") {
      term.kind = Term::Kind::Polygon;
      if (args.size() < 4) bad("polygon takes (height, three or more x:y)");
      term.a.push_back(parse_number(args[0]));
      for (std::size_t i = 1; i < args.size(); ++i) {
        double x, y;
        parse_pair(args[i], ':', x, y);
        term.a.push_back(x);
        term.a.push_back(y);
      }
    } else if (name == "sheet") {
      term.kind = Term::Kind::Sheet;
      if (args.size() != 3 && args.size() != 5) bad("sheet takes (mass, ax, ay[, s0, s1])");
      for (const auto& a : args) term.a.push_back(parse_number(a));
      if (term.a.size() == 3) {
        term.a.push_back(0.0);
        term.a.push_back(1.0);
      }
    } else {
      bad("unknown 2D term '" + name + "'");
    }
    c.terms.push_back(std::move(term));
  }
  if (c.terms.empty()) bad("no terms");
  return c;
}

std::string Catalog2D::print_function() const {
  using K = Term::Kind;
  std::string s;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const Term& t = terms[i];
    if (i) s += "; ";
    switch (t.kind) {
      case K::Ridge:
      case K::Radial:
        s += (t.kind == K::Ridge ? "ridge(" : "radial(");
        s += format_double(t.a[0]) + ", " + format_double(t.a[1]) + ", \"" +
             t.profile.print() + "\")";
        break;
      case K::Disk:
        s += "disk(" + format_double(t.a[0]) + ", " + format_double(t.a[1]) + ", " +
             format_double(t.a[2]) + ", " + format_double(t.a[3]) + ")";
        break;
      case K::Polygon: {
        s += "polygon(" + format_double(t.a[0]);
        for (std::size_t j = 1; j + 1 < t.a.size(); j += 2)
          s += ", " + format_double(t.a[j]) + ":" + format_double(t.a[j + 1]);
        s += ")";
        break;
      }
      case K::Sheet:
        s += "sheet(" + format_double(t.a[0]) + ", " + format_double(t.a[1]) + ", " +
             format_double(t.a[2]) + ", " + format_double(t.a[3]) + ", " +
             format_double(t.a[4]) + ")";
        break;
    }
  }
  return s;
}

std::string Catalog2D::print_domain() const {
  if (domain.kind == Domain2D::Kind::Rect)
    return "rect(" + format_double(domain.x0) + ", " + format_double(domain.y0) + ", " +
           format_double(domain.x1) + ", " + format_double(domain.y1) + ")";
  return "disk(" + format_double(domain.center.x) + ", " + format_double(domain.center.y) +
         ", " + format_double(domain.radius) + ")";
}

BV2D Catalog2D::compile() const {
  using K = Term::Kind;
  std::vector<BV2DTerm> out;
  for (const auto& t : terms) {
    BV2DTerm b;
    switch (t.kind) {
      case K::Ridge: {
        b.kind = BV2DTerm::Kind::Ridge;
        b.dir = {t.a[0], t.a[1]};
        b.profile = t.profile.compile();
        // the slicer normalizes directions; keep profile(dot(dir,p)) exact
        // for non-unit axes by absorbing the length into the profile
        double n = std::hypot(t.a[0], t.a[1]);
        if (std::abs(n - 1.0) > 1e-12) b.profile = b.profile.reparam_affine(n, 0.0);
        break;
      }
      case K::Radial:
        b.kind = BV2DTerm::Kind::Radial;
        b.center = {t.a[0], t.a[1]};
        b.profile = t.profile.compile();
        break;
      case K::Disk:
        b.kind = BV2DTerm::Kind::DiskInd;
        b.center = {t.a[0], t.a[1]};
        b.radius = t.a[2];
        b.height = t.a[3];
        break;
      case K::Polygon:
        b.kind = BV2DTerm::Kind::PolyInd;
        b.height = t.a[0];
        for (std::size_t j = 1; j + 1 < t.a.size(); j += 2)
          b.verts.push_back({t.a[j], t.a[j + 1]});
        break;
      case K::Sheet: {
        b.kind = BV2DTerm::Kind::Sheet;
        b.mass = t.a[0];
        b.dir = {t.a[1], t.a[2]};
        double n = std::hypot(t.a[1], t.a[2]);
        if (!(n > 0.0)) bad("sheet axis is zero");
        b.s0 = t.a[3] / n;  // ramp endpoints in the normalized coordinate
        b.s1 = t.a[4] / n;
        break;
      }
    }
    out.push_back(std::move(b));
  }
  return BV2D::make(domain, std::move(out));
}

// ===== helpers =====

bool catalog_is_2d(const std::string& function) {
  std::string t = trim(function);
  std::size_t open = t.find('(');
  if (open == std::string::npos || open == 0) return false;  // combined 1D or malformed
  std::string name = trim(std::string_view(t).substr(0, open));
  return name == "ridge" || name == "radial" || name == "disk" || name == "polygon" ||
         name == "sheet";
}

std::pair<std::string, std::string> catalog_preset(const std::string& name) {
  if (name == "linear") return {"affine(1, 0)", "(0,1)"};
  if (name == "step") return {"step(1@0.5)", "(0,1)"};
  if (name == "mixed") return {"affine(1, 0); step(1@0.5)", "(0,1)"};
  if (name == "cantor") return {"cantor(1, 0, 1)", "(0,1)"};
  if (name == "cantor_linear") return {"affine(1, 0); cantor(1, 0, 1)", "(0,1)"};
  if (name == "sine") return {"sine(0.25, 12.566370614359172, 0)", "(0,1)"};
  if (name == "disk") return {"disk(0, 0, 0.3, 1)", "rect(-1, -1, 1, 1)"};
  if (name == "ridge_linear")
    return {"ridge(0.70710678118654757, 0.70710678118654757, \"(-1.5,1.5): affine(1, 0)\")",
            "rect(-1, -1, 1, 1)"};
  return {name, ""};
}

Catalog1D random_catalog_1d(std::uint64_t seed) {
  Xoshiro256 g(seed ^ 0x9d2c5680u);
  Catalog1D c;
  c.domain = OpenSet1D::interval(0.0, 1.0);

  auto pick = [&](int n) { return static_cast<int>(g.next_double() * n); };

  // always a staircase (jump mass keeps the functional away from zero),
  // plus up to two smooth or singular extras
  {
    Catalog1D::Term t;
    t.kind = Catalog1D::Term::Kind::Step;
    int njump = 1 + pick(3);
    std::vector<double> locs;
    for (int i = 0; i < njump; ++i) locs.push_back(g.uniform(0.12, 0.88));
    std::sort(locs.begin(), locs.end());
    for (int i = 0; i < njump; ++i) {
      double h = g.uniform(0.25, 1.25) * (g.next_double() < 0.5 ? -1.0 : 1.0);
      t.a.push_back(h);
      t.a.push_back(locs[i]);
    }
    c.terms.push_back(std::move(t));
  }
  int extras = pick(3);
  bool used_cantor = false;
  for (int e = 0; e < extras; ++e) {
    Catalog1D::Term t;
    switch (pick(used_cantor ? 3 : 4)) {
      case 0: {
        t.kind = Catalog1D::Term::Kind::Poly;
        int deg = 1 + pick(3);
        for (int i = 0; i <= deg; ++i) t.a.push_back(g.uniform(-0.8, 0.8));
        break;
      }
      case 1:
        t.kind = Catalog1D::Term::Kind::Sine;
        t.a = {g.uniform(0.05, 0.4), g.uniform(3.0, 18.0), g.uniform(0.0, 6.28)};
        break;
      case 2: {
        t.kind = Catalog1D::Term::Kind::Spline;
        int nk = 4 + pick(3);
        for (int i = 0; i < nk; ++i) {
          t.a.push_back(i / static_cast<double>(nk - 1));
          t.a.push_back(g.uniform(-0.7, 0.7));
        }
        break;
      }
      default: {
        t.kind = Catalog1D::Term::Kind::Cantor;
        used_cantor = true;
        double lo = g.uniform(0.1, 0.4);
        t.a = {g.uniform(0.3, 1.2), lo, lo + g.uniform(0.2, 0.5)};
        break;
      }
    }
    c.terms.push_back(std::move(t));
  }
  return c;
}

}  // namespace nlbv
