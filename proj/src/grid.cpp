#include "lbkin/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

namespace lbkin {

double TorusGrid::node_weight() const {
  double w = 1.0;
  for (int i = 0; i < d_x; ++i) w *= 2.0 * M_PI / n_x;
  return w;
}

void TorusGrid::validate() const {
  if (d_x != 1 && d_x != 2) throw ConfigError("torus dimension must be 1 or 2, got " + std::to_string(d_x));
  if (n_x == 1) return;  // homogeneous: single node, no spectral ops
  if (n_x < 4 || (n_x & (n_x - 1)) != 0)
    throw ConfigError("torus points per dimension must be a power of two >= 4 (or 1 for homogeneous), got " +
                      std::to_string(n_x));
}

VelocityGrid::VelocityGrid(int dv, int nv, double vmax) : d_v(dv), n_v(nv), v_max(vmax) {
  if (dv != 2 && dv != 3) throw ConfigError("velocity dimension must be 2 or 3, got " + std::to_string(dv));
  if (nv < 6) throw ConfigError("velocity grid needs >= 6 points per dimension, got " + std::to_string(nv));
  if (!(vmax > 0.0) || !std::isfinite(vmax)) throw ConfigError("v_max must be a positive finite real");
  nodes1.resize(static_cast<size_t>(nv));
  weights1.resize(static_cast<size_t>(nv));
  double hh = h();
  for (int i = 0; i < nv; ++i) {
    nodes1[static_cast<size_t>(i)] = -vmax + hh * i;
    weights1[static_cast<size_t>(i)] = (i == 0 || i == nv - 1) ? hh / 2.0 : hh;
  }
  i64 nn = num_nodes();
  node_weight.resize(static_cast<size_t>(nn));
  for (i64 vn = 0; vn < nn; ++vn) {
    double w = 1.0;
    i64 r = vn;
    for (int a = d_v - 1; a >= 0; --a) {
      w *= weights1[static_cast<size_t>(r % n_v)];
      r /= n_v;
    }
    node_weight[static_cast<size_t>(vn)] = w;
  }
  validate();
}

void VelocityGrid::validate() const {
  // Discrete Maxwellian mass stays within the truncation + aliasing envelope
  // of 1: truncation removes ~erfc(v_max) per dimension, trapezoid aliasing
  // contributes ~e^{-pi^2/h^2} of either sign (Poisson summation).
  auto mu = maxwellian(*this);
  double mass = pairwise_sum(num_nodes(), [&](i64 vn) {
    return node_weight[static_cast<size_t>(vn)] * mu[static_cast<size_t>(vn)];
  });
  double hh = h();
  double alias = 3.0 * d_v * std::exp(-M_PI * M_PI / (hh * hh));
  double trunc = 2.0 * d_v * std::erfc(v_max);
  if (mass < 1.0 - trunc - alias - 1e-12 || mass > 1.0 + alias + 1e-12)
    throw ConfigError("velocity grid cannot represent the Maxwellian: discrete mass " +
                      std::to_string(mass) + " outside tolerance of 1");
}

std::vector<double> maxwellian(const VelocityGrid& vel) {
  i64 n = vel.num_nodes();
  std::vector<double> mu(static_cast<size_t>(n));
  double c = std::pow(M_PI, -vel.d_v / 2.0);
  for (i64 vn = 0; vn < n; ++vn) {
    VecV v = vel.coords(vn);
    mu[static_cast<size_t>(vn)] = c * std::exp(-dot(v, v));
  }
  return mu;
}

std::vector<double> sqrt_maxwellian(const VelocityGrid& vel) {
  i64 n = vel.num_nodes();
  std::vector<double> s(static_cast<size_t>(n));
  double c = std::pow(M_PI, -vel.d_v / 4.0);
  for (i64 vn = 0; vn < n; ++vn) {
    VecV v = vel.coords(vn);
    s[static_cast<size_t>(vn)] = c * std::exp(-0.5 * dot(v, v));
  }
  return s;
}

std::vector<std::vector<double>> kernel_basis(const VelocityGrid& vel) {
  i64 n = vel.num_nodes();
  int d = vel.d_v;
  auto smu = sqrt_maxwellian(vel);
  std::vector<std::vector<double>> chi(static_cast<size_t>(d + 2),
                                       std::vector<double>(static_cast<size_t>(n)));
  double s2 = std::sqrt(2.0), s2d = std::sqrt(2.0 * d);
  for (i64 vn = 0; vn < n; ++vn) {
    VecV v = vel.coords(vn);
    double s = smu[static_cast<size_t>(vn)];
    chi[0][static_cast<size_t>(vn)] = s;
    for (int i = 0; i < d; ++i) chi[static_cast<size_t>(1 + i)][static_cast<size_t>(vn)] = s2 * v[i] * s;
    chi[static_cast<size_t>(d + 1)][static_cast<size_t>(vn)] = (2.0 * dot(v, v) - d) / s2d * s;
  }
  return chi;
}

Moments moments_v(const VelocityGrid& vel, const double* f, double x_measure) {
  i64 n = vel.num_nodes();
  auto smu = sqrt_maxwellian(vel);
  Moments m;
  m.momentum = VecV(vel.d_v);
  m.mass = x_measure * pairwise_sum(n, [&](i64 vn) {
    return vel.node_weight[static_cast<size_t>(vn)] * smu[static_cast<size_t>(vn)] * f[vn];
  });
  for (int i = 0; i < vel.d_v; ++i)
    m.momentum[i] = x_measure * pairwise_sum(n, [&](i64 vn) {
      return vel.node_weight[static_cast<size_t>(vn)] * smu[static_cast<size_t>(vn)] *
             vel.coords(vn)[i] * f[vn];
    });
  m.energy = x_measure * pairwise_sum(n, [&](i64 vn) {
    VecV v = vel.coords(vn);
    return vel.node_weight[static_cast<size_t>(vn)] * smu[static_cast<size_t>(vn)] * dot(v, v) * f[vn];
  });
  return m;
}

Moments moments(const PhaseSpaceField& f) {
  i64 nx = f.torus.num_nodes(), nv = f.vel.num_nodes();
  auto smu = sqrt_maxwellian(f.vel);
  double wx = f.torus.node_weight();
  Moments m;
  m.momentum = VecV(f.vel.d_v);
  auto total = [&](const std::function<double(i64)>& vw) {
    return pairwise_sum(nx * nv, [&](i64 idx) {
      i64 vn = idx % nv;
      return wx * f.vel.node_weight[static_cast<size_t>(vn)] * smu[static_cast<size_t>(vn)] *
             vw(vn) * f.values[static_cast<size_t>(idx)];
    });
  };
  m.mass = total([](i64) { return 1.0; });
  for (int i = 0; i < f.vel.d_v; ++i)
    m.momentum[i] = total([&](i64 vn) { return f.vel.coords(vn)[i]; });
  m.energy = total([&](i64 vn) {
    VecV v = f.vel.coords(vn);
    return dot(v, v);
  });
  return m;
}

std::vector<MomentIdentity> moment_table(const VelocityGrid& vel) {
  int d = vel.d_v;
  i64 n = vel.num_nodes();
  auto mu = maxwellian(vel);
  auto smu = sqrt_maxwellian(vel);
  auto chi = kernel_basis(vel);
  auto integ = [&](const std::function<double(const VecV&, i64)>& g) {
    return pairwise_sum(n, [&](i64 vn) {
      return vel.node_weight[static_cast<size_t>(vn)] * g(vel.coords(vn), vn);
    });
  };
  std::vector<MomentIdentity> out;
  auto push = [&](std::string name, double disc, double exact) {
    out.push_back({std::move(name), disc, exact});
  };

  push("int v1^4 mu", integ([&](const VecV& v, i64 vn) {
         return v[0] * v[0] * v[0] * v[0] * mu[static_cast<size_t>(vn)];
       }),
       0.75);
  push("int v1^2 v2^2 mu", integ([&](const VecV& v, i64 vn) {
         return v[0] * v[0] * v[1] * v[1] * mu[static_cast<size_t>(vn)];
       }),
       0.25);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      double diag = (i == j) ? 1.0 : 0.0;
      std::string ij = std::to_string(i + 1) + std::to_string(j + 1);
      push("<v" + ij + " |v|^2 smu, chi0>", integ([&](const VecV& v, i64 vn) {
             return v[i] * v[j] * dot(v, v) * smu[static_cast<size_t>(vn)] * chi[0][static_cast<size_t>(vn)];
           }),
           diag * (d + 2) / 4.0);
      push("<v" + ij + " smu, chi0>", integ([&](const VecV& v, i64 vn) {
             return v[i] * v[j] * smu[static_cast<size_t>(vn)] * chi[0][static_cast<size_t>(vn)];
           }),
           diag * 0.5);
      push("<v" + ij + " |v|^2 smu, chiE>", integ([&](const VecV& v, i64 vn) {
             return v[i] * v[j] * dot(v, v) * smu[static_cast<size_t>(vn)] *
                    chi[static_cast<size_t>(d + 1)][static_cast<size_t>(vn)];
           }),
           diag * (d + 2) / std::sqrt(2.0 * d));
      push("<v" + ij + " smu, chiE>", integ([&](const VecV& v, i64 vn) {
             return v[i] * v[j] * smu[static_cast<size_t>(vn)] *
                    chi[static_cast<size_t>(d + 1)][static_cast<size_t>(vn)];
           }),
           diag / std::sqrt(2.0 * d));
    }
  return out;
}

void for_each_v_line(const VelocityGrid& vel, int axis,
                     const std::function<void(const double*, double*, i64)>& op,
                     const double* in, double* out) {
  int n = vel.n_v;
  i64 sa = 1;
  for (int t = vel.d_v - 1; t > axis; --t) sa *= n;
  i64 block = sa * n;
  i64 outer = vel.num_nodes() / block;
  for (i64 hi = 0; hi < outer; ++hi)
    for (i64 lo = 0; lo < sa; ++lo) {
      i64 base = hi * block + lo;
      op(in + base, out + base, sa);
    }
}

void d_dv_array(const VelocityGrid& vel, const double* in, double* out, int axis) {
  if (axis < 0 || axis >= vel.d_v) throw ConfigError("d_dv axis out of range");
  static std::mutex mtx;
  static std::map<std::pair<int, long long>, DerivBand> cache;
  const DerivBand* band = nullptr;
  {
    std::lock_guard<std::mutex> g(mtx);
    auto key = std::make_pair(vel.n_v, static_cast<long long>(vel.h() * 1e15));
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, DerivBand::fourth_order(vel.n_v, vel.h())).first;
    band = &it->second;
  }
  for_each_v_line(vel, axis,
                  [&](const double* i, double* o, i64 s) { band->apply(i, o, static_cast<int>(s)); },
                  in, out);
}

PhaseSpaceField d_dv(const PhaseSpaceField& f, int axis) {
  PhaseSpaceField g(f.torus, f.vel);
  i64 nx = f.torus.num_nodes(), nv = f.vel.num_nodes();
  parallel_for(nx, [&](i64 b, i64 e) {
    for (i64 xn = b; xn < e; ++xn)
      d_dv_array(f.vel, f.values.data() + xn * nv, g.values.data() + xn * nv, axis);
  });
  return g;
}

// ---- spectral x ------------------------------------------------------------

SpectralX::SpectralX(int dx, int nx) : d_x(dx), n_x(nx) {
  nodes = 1;
  for (int i = 0; i < dx; ++i) nodes *= nx;
  std::vector<std::complex<double>> tmp(static_cast<size_t>(nodes));
  auto* p = reinterpret_cast<fftw_complex*>(tmp.data());
  unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  if (dx == 1) {
    plan_f = fftw_plan_dft_1d(nx, p, p, FFTW_FORWARD, flags);
    plan_b = fftw_plan_dft_1d(nx, p, p, FFTW_BACKWARD, flags);
  } else {
    plan_f = fftw_plan_dft_2d(nx, nx, p, p, FFTW_FORWARD, flags);
    plan_b = fftw_plan_dft_2d(nx, nx, p, p, FFTW_BACKWARD, flags);
  }
  if (!plan_f || !plan_b) throw NumericalError("FFT plan creation failed");
}

void SpectralX::forward(std::complex<double>* buf) const {
  auto* p = reinterpret_cast<fftw_complex*>(buf);
  fftw_execute_dft(static_cast<fftw_plan>(plan_f), p, p);
}

void SpectralX::backward(std::complex<double>* buf) const {
  auto* p = reinterpret_cast<fftw_complex*>(buf);
  fftw_execute_dft(static_cast<fftw_plan>(plan_b), p, p);
}

const SpectralX& SpectralX::get(const TorusGrid& t) {
  if (t.n_x == 1) throw ConfigError("spectral operations undefined on the homogeneous single-node torus");
  static std::mutex mtx;
  static std::map<std::pair<int, int>, SpectralX*> cache;
  std::lock_guard<std::mutex> g(mtx);
  auto key = std::make_pair(t.d_x, t.n_x);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, new SpectralX(t.d_x, t.n_x)).first;
  return *it->second;
}

PhaseSpaceField d_dx(const PhaseSpaceField& f, int axis) {
  if (axis < 0 || axis >= f.torus.d_x) throw ConfigError("d_dx axis out of range");
  const SpectralX& sp = SpectralX::get(f.torus);
  PhaseSpaceField g(f.torus, f.vel);
  i64 nx = f.torus.num_nodes(), nv = f.vel.num_nodes();
  int n = f.torus.n_x;
  parallel_for(nv, [&](i64 b, i64 e) {
    std::vector<std::complex<double>> buf(static_cast<size_t>(nx));
    for (i64 vn = b; vn < e; ++vn) {
      for (i64 xn = 0; xn < nx; ++xn) buf[static_cast<size_t>(xn)] = f.values[static_cast<size_t>(xn * nv + vn)];
      sp.forward(buf.data());
      for (i64 xn = 0; xn < nx; ++xn) {
        int j = (f.torus.d_x == 1) ? static_cast<int>(xn)
                                   : (axis == 0 ? static_cast<int>(xn) / n : static_cast<int>(xn) % n);
        int k = f.torus.wavenumber(j);
        if (j == n / 2) k = 0;  // odd derivative: drop the unsigned Nyquist mode
        buf[static_cast<size_t>(xn)] *= std::complex<double>(0.0, static_cast<double>(k));
      }
      sp.backward(buf.data());
      double scale = 1.0 / static_cast<double>(nx);
      for (i64 xn = 0; xn < nx; ++xn)
        g.values[static_cast<size_t>(xn * nv + vn)] = buf[static_cast<size_t>(xn)].real() * scale;
    }
  });
  return g;
}

}  // namespace lbkin
