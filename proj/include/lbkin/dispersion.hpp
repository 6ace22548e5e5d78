#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "lbkin/grid.hpp"
#include "lbkin/potential.hpp"

namespace lbkin {

// Density of the background integrated over hyperplanes orthogonal to a
// direction: phi(s) = integral of F over {khat . v = s}, with phi' on the
// same uniform s-grid. Carries everything the Plemelj split needs.
struct LineMarginal {
  VecV direction;
  double s_min = 0, s_max = 0;
  std::vector<double> phi, dphi;

  int n() const { return static_cast<int>(phi.size()); }
  double ds() const { return (s_max - s_min) / (n() - 1); }
  double s_node(int i) const { return s_min + ds() * i; }
  double dphi_at(double u) const;   // cubic 4-point interpolation
  double ddphi_at(double u) const;  // derivative of the same cubic
};

// Marginal of gridded data by multilinear interpolation onto slice
// quadrature points; phi' by 4th-order differences of phi.
LineMarginal line_marginal(const VelocityGrid& vel, const std::vector<double>& F,
                           const VecV& khat, int n_s);

// Marginal of the continuum Maxwellian along any direction (closed form).
LineMarginal maxwellian_marginal(const VecV& khat, double s_half, int n_s);

// p.v. integral of phi'(s)/(u-s) by singularity subtraction; the subtracted
// constant integrates to an explicit log boundary term.
double hilbert_pv(const LineMarginal& m, double u);

// eps = 1 + vhat(|k|) [ p.v. + i pi phi'(u) ]
std::complex<double> epsilon(const InteractionPotential& pot, const VecV& k, double u,
                             const LineMarginal& m);

// Interpolatable set of unit directions: uniform angles on the circle
// (d_v = 2) or a polar-azimuthal product grid on the sphere (d_v = 3).
struct DirLattice {
  int d_v = 2;
  int n_ang = 32;             // d_v = 2
  int n_polar = 4, n_azim = 8;  // d_v = 3

  int count() const { return d_v == 2 ? n_ang : (n_polar + 1) * n_azim; }
  VecV direction(int idx) const;
  // Writes up to 4 (index, weight) pairs for interpolation at khat.
  int interp(const VecV& khat, int* idx, double* wt) const;
};

struct TableLattice {
  int n_u = 0;   // 0 = preset chosen by builder
  int n_s = 0;
  DirLattice dirs;
  int n_k = 33;
  double k_min = 0.05;
  double k_max = 0;  // 0 = potential k_max
};

// Cached dielectric over (radius x direction x phase velocity). The radial
// dependence is exact: eps - 1 factors as vhat(|k|) W(khat, u), so only W is
// tabulated and |k| enters through vhat at evaluation time.
struct DispersionTable {
  InteractionPotential pot;
  DirLattice dirs;
  double u_min = 0, u_max = 0;
  int n_u = 0;
  std::vector<std::complex<double>> W;  // [dir * n_u + iu]
  double k_min = 0, k_max = 0;
  int n_k = 0;
  std::vector<LineMarginal> marginals;  // one per direction
  double min_abs_eps = 0;               // scan over the full lattice

  double u_node(int iu) const { return u_min + (u_max - u_min) * iu / (n_u - 1); }
  double k_radius(int ik) const { return k_min + (k_max - k_min) * ik / (n_k - 1); }
  std::complex<double> W_node(int idir, int iu) const {
    return W[static_cast<size_t>(idir) * static_cast<size_t>(n_u) + static_cast<size_t>(iu)];
  }
  std::complex<double> W_at(const VecV& khat, double u) const;
  std::complex<double> eps(const VecV& k, double u) const;
  std::complex<double> eps_node(int ik, int idir, int iu) const;
};

// F null -> analytic Maxwellian background (isotropic, one marginal shared
// across the direction lattice). Interpolation accessor validated to 1e-6
// against direct evaluation at the default lattice density.
std::shared_ptr<const DispersionTable> build_dispersion_table(
    const InteractionPotential& pot, const VelocityGrid& vel,
    const std::vector<double>* F, TableLattice lat);

struct ScanRange {
  double lo = 0, hi = 0;
  int n = 0;
};
struct PenroseScan {
  double min_abs = 0;
  double k = 0, u = 0;
  VecV dir;
};
PenroseScan penrose_scan(const DispersionTable& table, ScanRange k_range, ScanRange u_range);

// Multilinear interpolation of a velocity array at an arbitrary point;
// returns 0 outside the box.
double interp_v(const VelocityGrid& vel, const std::vector<double>& F, const VecV& p);

}  // namespace lbkin
