#pragma once

#include <memory>

#include "lbkin/dispersion.hpp"
#include "lbkin/grid.hpp"
#include "lbkin/potential.hpp"

namespace lbkin {

enum class EpsMode { unity, maxwellian, field };

struct KernelQuadrature {
  int n_r = 257;        // radial Simpson points (forced odd)
  int n_dir = 16;       // in-plane angles (d_v=3); d_v=2 uses the sign pair
  double r_max = 0;     // 0 = potential k_max
  double diag_exclusion = 0;  // 0 = one grid spacing
  int cache_n_u = 2049;       // phase-velocity nodes of the radial cache

  void validate(double k_max) const;
};

// (1/|w|) * integral over the hyperplane w-perp of (k x k) vhat(|k|)^2 / |eps(k, k.v)|^2.
// The Dirac delta(k.w) is integrated out analytically. eps == nullptr means
// unity mode (Landau limit). Throws on |w| below the exclusion threshold.
MatV collision_matrix(const VecV& v, const VecV& w, const DispersionTable* eps,
                      const InteractionPotential& pot, const KernelQuadrature& quad);

// Radial profile R(dir, u) = integral of r^{d_v} vhat(r)^2 / |1 + vhat(r) W(dir,u)|^2 dr,
// tabulated on the dispersion table's direction lattice; collapses the kernel
// quadrature's radial dimension. Constant in unity mode.
struct RadialCache {
  bool constant = false;
  double value = 0;  // unity mode
  DirLattice dirs;
  double u_min = 0, u_max = 0;
  int n_u = 0;
  std::vector<double> R;  // [dir * n_u + iu]

  double at(const VecV& dir, double u) const;  // cubic in u, linear over dirs
};

// Immutable per-background collision data: the matrix field A(v) and the
// assembled convolution matrices used by the linear and nonlinear operators.
// Kvec applies to vector arrays h[vn*d+i]; Kmat maps a scalar array to the
// distinct entries of a symmetric matrix field, out[vn*nsym+c]. Both carry
// the v*-quadrature weight and the sqrt-Maxwellian factor of the integrand.
struct CollisionTables {
  VelocityGrid vel;
  InteractionPotential pot;
  KernelQuadrature quad;
  EpsMode mode = EpsMode::maxwellian;
  std::shared_ptr<const DispersionTable> disp;
  RadialCache rcache;
  double rho = 0;  // effective diagonal exclusion radius

  std::vector<double> A;     // [vn * d*d], row-major symmetric
  std::vector<double> Kvec;  // [(vn*d+i) * (N*d) + (vsn*d+j)]
  std::vector<double> Kmat;  // [(vn*nsym+c) * N + vsn]
  std::vector<double> mu, smu;

  int d() const { return vel.d_v; }
  i64 N() const { return vel.num_nodes(); }
  int nsym() const { return vel.d_v * (vel.d_v + 1) / 2; }
  double min_abs_eps() const { return disp ? disp->min_abs_eps : 1.0; }
  MatV A_at(i64 vn) const;
  bool has_matrices() const { return !Kvec.empty(); }
};

struct BuildOptions {
  bool assemble_matrices = true;
};

// mode unity ignores disp; maxwellian/field require a table built on the
// matching background. A is produced by applying the assembled scalar kernel
// to sqrt(mu) (or accumulated directly when matrices are skipped).
CollisionTables build_tables(const VelocityGrid& vel, const InteractionPotential& pot,
                             std::shared_ptr<const DispersionTable> disp,
                             KernelQuadrature quad, EpsMode mode, BuildOptions opt = {});

// out[vn*d+i] = sum over v* of K[(v,i),(v*,j)] h[v**d+j]
void b0_apply_vec(const CollisionTables& t, const double* h, double* out);
// out[vn*nsym+c]: symmetric matrix field from scalar g
void b0_apply_mat(const CollisionTables& t, const double* g, double* out);
// expand a [vn*nsym+c] array into the full matrix at one node
MatV sym_expand(const CollisionTables& t, const double* m, i64 vn);

// symmetric index pairs for d=2: (00,01,11); d=3: (00,01,02,11,12,22)
inline void sym_indices(int d, int c, int& i, int& j) {
  static const int i2[] = {0, 0, 1}, j2[] = {0, 1, 1};
  static const int i3[] = {0, 0, 0, 1, 1, 2}, j3[] = {0, 1, 2, 1, 2, 2};
  if (d == 2) {
    i = i2[c];
    j = j2[c];
  } else {
    i = i3[c];
    j = j3[c];
  }
}

}  // namespace lbkin
