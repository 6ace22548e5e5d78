#pragma once

#include <iosfwd>

#include "lbkin/diagnostics.hpp"
#include "lbkin/solver.hpp"

namespace lbkin {

struct GridConfig {
  int d_x = 1, n_x = 1;
  int d_v = 2, n_v = 32;
  double v_max = 8.0;

  TorusGrid torus() const { return TorusGrid{d_x, n_x}; }
  VelocityGrid velocity() const { return VelocityGrid(d_v, n_v, v_max); }
};

struct PotentialConfig {
  std::string kind = "debye";
  double amplitude = 1.0;
  double screening = 1.0;  // debye kappa / gaussian sigma
  double k_max = 6.0;

  InteractionPotential make() const;
};

struct InitialConfig {
  std::string kind = "zero";  // zero | random-micro | snapshot
  std::uint64_t seed = 1;
  double amplitude = 1e-3;
  std::string file;
};

struct DiagnosticsConfig {
  int n_used = 2;
};

struct RunConfig {
  GridConfig grid;
  PotentialConfig potential;
  KernelQuadrature kernel;
  SolverConfig solver;
  NonlinConfig nonlin;
  InitialConfig initial;
  DiagnosticsConfig diagnostics;
  std::string out_dir = ".";
  std::uint64_t seed = 1;

  void validate() const;
};

// Strict-schema JSON: unknown keys are rejected by name, defaults fill the
// rest, and all referenced-type invariants are checked eagerly.
RunConfig load_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);
std::string canonical_config(const RunConfig& cfg);  // sorted keys, round-trip stable

// Binary snapshot: magic "LBKF", version 1, dims, then doubles x-major.
void write_snapshot(const PhaseSpaceField& f, const std::string& path);
PhaseSpaceField read_snapshot(const std::string& path);

// CSV of one velocity slice: columns v_1..v_{d_v}, value.
void write_velocity_csv(const VelocityGrid& vel, const double* values, const std::string& path);

struct SeriesRow {
  double t = 0;
  Moments inv;
  double l2 = 0, entropy = 0, e_n = 0, d_n = 0;
  double min_abs_eps = 0, projection_correction = 0;
};

struct RunSummary {
  std::vector<SeriesRow> rows;
  double dt_bound = 0;
  i64 steps = 0;
  i64 entropy_floored = 0;
  PhaseSpaceField final_field;
  std::string series_path;

  RunSummary(const TorusGrid& t, const VelocityGrid& v) : final_field(t, v) {}
};

std::string series_header(int d_v);
void append_series_row(std::ostream& os, const SeriesRow& row, int d_v);

// Builds grids, potential, dielectric and collision tables from the config,
// prepares the initial state, and time-steps to t_end, emitting series.csv
// and periodic state_<step>.lbkf snapshots under cfg.out_dir.
RunSummary run_simulation(const RunConfig& cfg, std::ostream* log = nullptr);

// Deterministic micro-mode initial data: smoothed seeded noise carried by
// sqrt(mu), fluid components removed at every x-node.
PhaseSpaceField random_micro_field(const TorusGrid& torus, const VelocityGrid& vel,
                                   std::uint64_t seed, double amplitude);

}  // namespace lbkin
