#pragma once

#include <complex>
#include <string>
#include <vector>

#include "lbkin/common.hpp"

namespace lbkin {

// Periodic box [0,2pi)^{d_x} with n_x nodes per dimension. n_x = 1 is the
// degenerate homogeneous case (no transport, no spectral ops); otherwise
// n_x is a power of two >= 4.
struct TorusGrid {
  int d_x = 1;
  int n_x = 16;

  i64 num_nodes() const {
    i64 n = 1;
    for (int i = 0; i < d_x; ++i) n *= n_x;
    return n;
  }
  double node_weight() const;
  double coord1(int i) const { return 2.0 * M_PI * i / n_x; }
  // signed wavenumber of mode index j in [0, n_x)
  int wavenumber(int j) const { return j <= n_x / 2 ? j : j - n_x; }
  void validate() const;
};

// Uniform tensor lattice on [-v_max, v_max]^{d_v} with trapezoid weights.
struct VelocityGrid {
  int d_v = 2;
  int n_v = 32;
  double v_max = 8.0;

  std::vector<double> nodes1;    // n_v 1-D nodes
  std::vector<double> weights1;  // n_v 1-D trapezoid weights
  std::vector<double> node_weight;  // full tensor weights, length n_v^{d_v}

  VelocityGrid() = default;
  VelocityGrid(int dv, int nv, double vmax);

  double h() const { return 2.0 * v_max / (n_v - 1); }
  i64 num_nodes() const {
    i64 n = 1;
    for (int i = 0; i < d_v; ++i) n *= n_v;
    return n;
  }
  VecV coords(i64 vn) const {
    VecV v(d_v);
    for (int a = d_v - 1; a >= 0; --a) {
      v[a] = nodes1[static_cast<size_t>(vn % n_v)];
      vn /= n_v;
    }
    return v;
  }
  i64 index(const int* digits) const {
    i64 vn = 0;
    for (int a = 0; a < d_v; ++a) vn = vn * n_v + digits[a];
    return vn;
  }
  void validate() const;
};

struct PhaseSpaceField {
  TorusGrid torus;
  VelocityGrid vel;
  std::vector<double> values;  // index = xn * vel.num_nodes() + vn

  PhaseSpaceField() = default;
  PhaseSpaceField(TorusGrid t, VelocityGrid v)
      : torus(t), vel(std::move(v)),
        values(static_cast<size_t>(torus.num_nodes() * vel.num_nodes()), 0.0) {}

  double& at(i64 xn, i64 vn) { return values[static_cast<size_t>(xn * vel.num_nodes() + vn)]; }
  double at(i64 xn, i64 vn) const { return values[static_cast<size_t>(xn * vel.num_nodes() + vn)]; }
  double* xblock(i64 xn) { return values.data() + xn * vel.num_nodes(); }
  const double* xblock(i64 xn) const { return values.data() + xn * vel.num_nodes(); }
};

std::vector<double> maxwellian(const VelocityGrid& vel);
std::vector<double> sqrt_maxwellian(const VelocityGrid& vel);

// chi_0 = sqrt(mu), chi_i = sqrt(2) v_i sqrt(mu), chi_{d+1} = (2|v|^2-d)/sqrt(2d) sqrt(mu)
std::vector<std::vector<double>> kernel_basis(const VelocityGrid& vel);

struct Moments {
  double mass = 0;
  VecV momentum;
  double energy = 0;
};
// discrete (integral over x and v) of (1, v, |v|^2) sqrt(mu) f
Moments moments(const PhaseSpaceField& f);
Moments moments_v(const VelocityGrid& vel, const double* f, double x_measure);

struct MomentIdentity {
  std::string name;
  double discrete = 0;
  double analytic = 0;
};
std::vector<MomentIdentity> moment_table(const VelocityGrid& vel);

// 4th-order finite difference along a velocity axis; one-sided at box edges.
void d_dv_array(const VelocityGrid& vel, const double* in, double* out, int axis);
PhaseSpaceField d_dv(const PhaseSpaceField& f, int axis);

// Spectrally exact derivative along a spatial axis (Nyquist mode dropped).
PhaseSpaceField d_dx(const PhaseSpaceField& f, int axis);

// Shared FFT machinery over the torus; plans are cached per (d_x, n_x).
struct SpectralX {
  int d_x, n_x;
  i64 nodes;
  void forward(std::complex<double>* buf) const;   // in place
  void backward(std::complex<double>* buf) const;  // in place, unnormalized
  static const SpectralX& get(const TorusGrid& t);

 private:
  void* plan_f = nullptr;
  void* plan_b = nullptr;
  SpectralX(int dx, int nx);
};

// Applies a 1-D line operation along the given velocity axis of one velocity
// array: out_line = op(in_line). Lines are enumerated deterministically.
void for_each_v_line(const VelocityGrid& vel, int axis,
                     const std::function<void(const double*, double*, i64 /*stride*/)>& op,
                     const double* in, double* out);

}  // namespace lbkin
