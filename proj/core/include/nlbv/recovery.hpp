#pragma once
// Constructive approximation: value truncation, coarea staircases, bump
// mollification, cutoff gluing, and the lambda-indexed recovery families
// whose certified evaluations realize the upper limit bounds. Staircases are
// the workhorse: they carry all singular mass as finitely many jumps, where
// the large-lambda behavior of the functional is exactly the jump term.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nlbv/bv1d.hpp"
#include "nlbv/evaluator1d.hpp"

namespace nlbv {

// max{min{u, N}, -N}. Stays in the catalog: pieces are clipped along exact
// crossing points, jump and Cantor mass falling outside the band is dropped
// (Cantor parts by window clamping, which is what the windows are for).
// Never increases variation.
BV1D truncate(const BV1D& u, double N);

// Number of essential boundary points of {u > t} in the domain. nullopt when
// t is degenerate (u sits exactly at t on a set of positive measure), in
// which case the caller resamples t.
std::optional<int> level_crossings(const BV1D& u, double t);

// Sorted interior locations where {u > t} switches; degenerate t -> nullopt.
std::optional<std::vector<double>> level_crossing_points(const BV1D& u, double t);

struct StaircaseParams {
  double M = 1.0;         // truncation level, sup|u| <= M
  int k = 16;             // number of level slots on (-M, M)
  int level_samples = 33; // candidates per slot, argmin of the crossing count
  std::uint64_t seed = 1; // candidate jitter
};

// u_eps = -M + sum_j (2M/k) 1_{u > t_j}, t_j sampled per slot. Jump-only
// output; integral |u_eps - u| <= |Omega| 2M/k and |D u_eps| <= |Du| by the
// coarea Riemann sum (level_samples stratified candidates keep the selected
// sum under the coarea integral).
BV1D staircase(const BV1D& u, const StaircaseParams& p);

// Convolution with the unit-mass bump exp(-1/(1-t^2))/Z scaled to width
// delta, sampled onto a monotone spline (2048 samples across the domain plus
// delta-windows around breakpoints). u is extended by its one-sided limits
// across the domain boundary, so monotone u keeps its full rise:
// |Dv| = |Du| exactly in that case.
BV1D mollify(const BV1D& u, double delta);

// eta*w + (1-eta)*v with eta smooth in [0,1]. Exact products require
// polynomial pieces where eta varies; where eta is locally constant any
// catalog content passes through. Cantor parts under varying eta leave the
// representation and are rejected.
BV1D glue(const SmoothForm& eta, const BV1D& w, const BV1D& v);

struct RecoveryStage {
  int k = 0;
  double lambda_k = 0.0;
  BV1D u_k;
  double f_value = 0.0;       // f_eval at (gamma, lambda_k)
  double f_error = 0.0;
  double f_target = 0.0;      // c1/gamma |D^a u_k| + c1/(gamma+1) |D^j u_k| + 1/k
  double l1_gap = 0.0;        // integral |u_k - u|
  double area_gap = 0.0;      // area-strict gap to u
  bool verified = false;      // f_value - f_error <= ... <= f_target found
};

struct RecoveryOptions {
  int k_max = 32;
  double lambda_max = 1e9;       // doubling search cap; beyond -> unverified
  int levels_per_stage = 24;     // staircase slots at stage k: this * k
  int level_samples = 33;
  std::uint64_t seed = 1;
  EvalOptions eval;
  // Area-strict mode keeps the absolutely continuous part and staircases
  // only the singular remainder; the L1 mode staircases everything, trading
  // the AC term for the smaller jump constant.
  enum class Mode { AreaStrict, FullStaircase } mode = Mode::AreaStrict;
};

struct RecoveryFamily {
  std::vector<RecoveryStage> stages;
  double gamma = 1.0;
  // stage with the largest lambda_k <= lambda (first stage below all)
  const RecoveryStage& at_lambda(double lambda) const;
  bool all_verified() const;
  std::string to_json() const;  // per-stage numbers, reloadable for plots
};

// Stage k: approximate u by a jump-carrying u_k (per mode), then double
// lambda from max(prev, k+1) until the evaluator certifies
// f_value + f_error <= f_target. Stages run sequentially; the evaluator may
// thread internally via options.eval.threads.
RecoveryFamily build_recovery_family(const BV1D& u, double gamma,
                                     const RecoveryOptions& opts = {});

}  // namespace nlbv
