#pragma once

#include <map>

#include "lbkin/kernel.hpp"

namespace lbkin {

// Coefficients of the kernel projection per x-node: Pf = a chi_0 + b.chi + c chi_{d+1}.
struct MacroState {
  std::vector<double> a, c;  // [xn]
  std::vector<double> b;     // [xn*d_v + i]
};

struct ProjectionResult {
  MacroState macro;
  PhaseSpaceField micro;
};

// Projection onto span{chi_0..chi_{d+1}} using the discretely orthonormalized
// basis (Gram solve), so P is idempotent to roundoff on any grid.
ProjectionResult project_P(const PhaseSpaceField& f);
// velocity-array variant; coef has d_v+2 entries; micro may be null
void project_P_v(const VelocityGrid& vel, const double* f, double* coef, double* micro);

// First-order factor (grad_v + v) discretized as sqrt(mu) grad_h (g / sqrt(mu))
// per axis, and its negative weighted adjoint for the divergence factor
// (grad_v - v). The factored form annihilates ker L basis to roundoff and
// makes the discrete L exactly symmetric.
struct FactoredDeriv {
  VelocityGrid vel;
  std::vector<DerivBand> Gs;   // per axis: diag(s) G diag(1/s), folded bands
  std::vector<DerivBand> GsT;  // per axis: adjoint wrt trapezoid weights

  explicit FactoredDeriv(const VelocityGrid& v);
  // out[vn*d+i] = ((grad+v) g)_i
  void dplus(const double* g, double* out) const;
  // out = (grad - v) . h  = minus the weighted adjoint of dplus
  void dminus_div(const double* h, double* out) const;
};
const FactoredDeriv& factored_deriv(const VelocityGrid& vel);

// L[g] = (grad-v) . ( A (grad+v)g - sqrt(mu) B0[(grad+v)g] )
void apply_L(const CollisionTables& t, const double* g, double* out);

// -<g, Lg> in first-order form: <Dg, A Dg>_w - <Dg, sqrt(mu) B0[Dg]>_w
double dirichlet_form(const CollisionTables& t, const double* g);

struct GapResult {
  double value = 0;
  int iterations = 0;  // trial-space dimension
  std::string method;
};
// Coercivity constant of the pencil (-L, G_D) on the complement of the
// collision invariants: Rayleigh-Ritz minimum of dirichlet_form(g)/|g|_D^2
// over a fixed trial space of sampled tensor Hermite functions, so the
// estimate is positive and comparable across grid refinements.
GapResult spectral_gap(const CollisionTables& t);

struct Burnett {
  std::vector<std::vector<double>> A;  // nsym entries (i<=j pairs)
  std::vector<std::vector<double>> B;  // d entries
};
Burnett burnett(const VelocityGrid& vel);

struct NormReport {
  double l2 = 0;      // unweighted L2 over phase space
  double a_norm = 0;  // A-norm of the vector field v f
  double d_norm = 0;  // sqrt(|v f|_A^2 + |grad_v f|_A^2)
  double e_N = 0;
  double d_N = 0;
  int n_used = 0;
  std::map<std::pair<int, int>, double> e_contrib;  // (N1,N2) block -> value
  std::map<std::pair<int, int>, double> d_contrib;
};
NormReport norms(const PhaseSpaceField& f, int n_used, const CollisionTables& t);

// A-weighted L2 of a vector field h[xn][vn*d+i] over nx x-blocks.
double a_norm_vec(const CollisionTables& t, const double* h, i64 nx, double x_weight);

// Largest eigenvalue estimate of -L by power iteration (stability reporting).
double l_max_estimate(const CollisionTables& t, int iters = 40, std::uint64_t seed = 17);

}  // namespace lbkin
