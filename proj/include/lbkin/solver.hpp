#pragma once

#include "lbkin/nonlin.hpp"

namespace lbkin {

struct SolverConfig {
  enum class Scheme { strang, lie };
  enum class Integrator { rk4, rk2 };
  enum class Mode { linear, nonlinear, homogeneous };

  double dt = 1e-3;
  double t_end = 1.0;
  Scheme scheme = Scheme::strang;
  Integrator integrator = Integrator::rk4;
  Mode mode = Mode::linear;
  int output_every = 10;
  bool conservation_projection = false;

  void validate() const {
    if (!(dt > 0)) throw ConfigError("SolverConfig: dt must be positive");
    if (!(t_end > 0)) throw ConfigError("SolverConfig: t_end must be positive");
    if (output_every < 1) throw ConfigError("SolverConfig: output_every must be >= 1");
  }
};

// Exact free transport of the grid representation: each spatial Fourier mode
// of each velocity node is rotated by exp(-i k.v dt). The unpaired highest
// mode keeps only its cosine projection, which is what sampling the shifted
// signal on the grid produces.
void transport_step(PhaseSpaceField& f, double dt);

// One explicit RK step of the collision right-hand side at every x-node.
// t_field may equal &t_mu (frozen dielectric) and is only read in nonlinear
// mode. Throws on non-finite stage values, reporting the step index.
void collision_step(PhaseSpaceField& f, double dt, const CollisionTables& t_mu,
                    const CollisionTables* t_field, const SolverConfig& cfg, i64 step_index);

// Restores the global mass/momentum/energy functionals to their target values
// by shifting the x-uniform kernel component; returns the L2 size of the shift.
double conservation_projection(PhaseSpaceField& f, const Moments& target);

// dt bound estimate for the explicit integrator from a power-iteration
// estimate of the stiffest collision eigenvalue.
double dt_stability_bound(const CollisionTables& t_mu, const SolverConfig& cfg);

}  // namespace lbkin
