#pragma once

#include "lbkin/linop.hpp"

namespace lbkin {

struct NonlinConfig {
  enum class Mode { frozen, field };
  Mode eps_mode = Mode::frozen;
  int table_refresh = 10;         // steps between dielectric-table rebuilds (field mode)
  double smallness_guard = 0.1;   // bound on the weighted Sobolev proxy of f

  void validate() const {
    if (table_refresh < 1) throw ConfigError("NonlinConfig: table_refresh must be >= 1");
    if (!(smallness_guard > 0)) throw ConfigError("NonlinConfig: smallness_guard must be positive");
  }
};

// Quadratic collision term at one x-node:
//   N = (grad-v).( Bf[f] grad f - Bf[grad f] f )
//     + (grad-v).( (A_f - A_mu) (grad+v) f )
//     - (grad-v).( sqrt(mu) (Bf[(grad+v)f] - Bmu[(grad+v)f]) )
// t_field carries the dielectric of the evolving background; pass t_field = t_mu
// for the frozen mode, which zeroes the last two summands identically.
void apply_N(const CollisionTables& t_mu, const CollisionTables& t_field, const double* f,
             double* out);

// Dielectric non-degeneracy proxy per x-node: || <v>^-2 (I - lap_h) f(x,.) ||_2,
// maximized over x. The field mode requires this below the configured guard.
double smallness_proxy(const PhaseSpaceField& f);
void check_guard(const PhaseSpaceField& f, const NonlinConfig& cfg);

// Full collision operator Q(F) = grad . integral B(v,v-v*) (F* grad F - F grad F*) dv*
// on a velocity array, with B taken from the tables (their mode decides the
// dielectric). Plain divergence; pair kernels evaluated directly. Throws on
// negative F nodes.
void apply_Q(const CollisionTables& t, const double* F, double* out);

}  // namespace lbkin
