#pragma once
// Experiment plumbing: config parsing (key=value or JSON), the mode
// dispatcher behind the CLI, artifact writers (CSV, JSON summary, gnuplot
// script), and the acceptance suite that turns every headline limit into a
// pass/fail row.

#include <cstdint>
#include <string>
#include <vector>

#include "nlbv/evaluator1d.hpp"
#include "nlbv/recovery.hpp"
#include "nlbv/slicer.hpp"

namespace nlbv {

struct LambdaGrid {
  double start = 1e2;
  double stop = 1e6;
  int points = 17;  // geometric spacing throughout
};

struct ExperimentConfig {
  std::string mode = "sweep";  // sweep | recover | slice2d | verify | oracle
  std::string function = "linear";
  std::string domain;          // optional; presets and combined forms carry one
  double gamma = 1.0;
  LambdaGrid lambda_grid;
  double tol = 1e-4;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = ".";
  // mode knobs
  std::uint64_t mc_samples = 1'000'000;  // oracle
  int recover_k_max = 32;                // recover
  int n_directions = 64;                 // slice2d
  bool full_staircase = false;           // recover: L1-mode family

  // key=value lines (# comments) or a JSON object with the same keys;
  // lambda_grid splits into lambda_start / lambda_stop / lambda_points.
  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_text(const std::string& text);
  std::string to_json() const;  // canonical echo, embedded in every summary

  void validate() const;  // throws std::invalid_argument with the field name
};

struct ReportRow {
  std::string claim;      // stable id, names the mathematical statement
  std::string statement;  // one-line human form with the numbers in it
  double computed = 0.0;
  double target = 0.0;
  double tolerance = 0.0;  // |computed-target| <= tolerance, or bound direction
  std::string relation = "abs";  // abs | le | ge
  bool pass = false;
  double runtime_ms = 0.0;
};

// Executes one config; writes <out>/rows.csv, <out>/summary.json and
// <out>/plot.gp. Returns 0 on success, 2 on usage errors, 1 when a verify
// mode finds a failing row. Deterministic for fixed seed and thread count
// (and for sweeps, independent of thread count).
int run_experiment(const ExperimentConfig& cfg);

struct ClaimOptions {
  int threads = 1;
  std::uint64_t seed = 1;
  std::string out_dir;      // empty: no artifacts, stdout only
  bool quick = false;       // trimmed grids; for iterating on the suite itself
  // Negative control: shifts the jump-term constant in every target so the
  // suite must fail; proves the checks are live.
  double jump_constant_override = 0.0;
};

// The full acceptance matrix (closed-form limits, recovery certificates, 2D
// slicing agreement, property packs), one row per check, printed as it runs.
std::vector<ReportRow> claim_suite(const ClaimOptions& opts = {});

// Writers shared by run_experiment and the CLI.
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);
void write_sweep_csv_2d(const std::string& path,
                        const std::vector<std::pair<double, Estimate2D>>& rows);
void write_gnuplot(const std::string& path, const std::string& csv_name,
                   const std::string& title, double target);
std::string report_json(const ExperimentConfig& cfg, const std::vector<ReportRow>& rows);

}  // namespace nlbv
