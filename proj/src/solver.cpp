#include "lbkin/solver.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

namespace lbkin {

void transport_step(PhaseSpaceField& f, double dt) {
  const TorusGrid& torus = f.torus;
  if (torus.n_x == 1 || dt == 0.0) return;
  const VelocityGrid& vel = f.vel;
  const SpectralX& sp = SpectralX::get(torus);
  i64 nx = torus.num_nodes(), nv = vel.num_nodes();
  int n = torus.n_x;

  parallel_for(nv, [&](i64 b, i64 e) {
    std::vector<std::complex<double>> buf(static_cast<size_t>(nx));
    for (i64 vn = b; vn < e; ++vn) {
      VecV v = vel.coords(vn);
      for (i64 xn = 0; xn < nx; ++xn) buf[static_cast<size_t>(xn)] = f.at(xn, vn);
      sp.forward(buf.data());
      if (torus.d_x == 1) {
        for (int j = 0; j < n; ++j) {
          double ph = torus.wavenumber(j) * v[0] * dt;
          if (2 * j == n)
            buf[static_cast<size_t>(j)] *= std::cos(ph);
          else
            buf[static_cast<size_t>(j)] *= std::complex<double>(std::cos(ph), -std::sin(ph));
        }
      } else {
        for (int j1 = 0; j1 < n; ++j1)
          for (int j2 = 0; j2 < n; ++j2) {
            size_t idx = static_cast<size_t>(j1) * n + j2;
            bool ny1 = (2 * j1 == n), ny2 = (2 * j2 == n);
            double p1 = torus.wavenumber(j1) * v[0] * dt;
            double p2 = torus.wavenumber(j2) * v[1] * dt;
            std::complex<double> m(1.0, 0.0);
            if (ny1)
              m *= std::cos(p1);
            else
              m *= std::complex<double>(std::cos(p1), -std::sin(p1));
            if (ny2)
              m *= std::cos(p2);
            else
              m *= std::complex<double>(std::cos(p2), -std::sin(p2));
            buf[idx] *= m;
          }
      }
      sp.backward(buf.data());
      double inv = 1.0 / static_cast<double>(nx);
      for (i64 xn = 0; xn < nx; ++xn) f.at(xn, vn) = buf[static_cast<size_t>(xn)].real() * inv;
    }
  });
}

namespace {

void rhs_at_node(const CollisionTables& t_mu, const CollisionTables* t_field,
                 const SolverConfig& cfg, const double* g, double* out) {
  apply_L(t_mu, g, out);
  if (cfg.mode == SolverConfig::Mode::nonlinear) {
    i64 N = t_mu.N();
    std::vector<double> nl(static_cast<size_t>(N));
    apply_N(t_mu, t_field ? *t_field : t_mu, g, nl.data());
    for (i64 i = 0; i < N; ++i) out[i] += nl[static_cast<size_t>(i)];
  }
}

}  // namespace

void collision_step(PhaseSpaceField& f, double dt, const CollisionTables& t_mu,
                    const CollisionTables* t_field, const SolverConfig& cfg, i64 step_index) {
  i64 nx = f.torus.num_nodes();
  i64 N = t_mu.N();
  bool rk4 = cfg.integrator == SolverConfig::Integrator::rk4;
  for (i64 xn = 0; xn < nx; ++xn) {
    double* g = f.xblock(xn);
    std::vector<double> k1(static_cast<size_t>(N)), k2(static_cast<size_t>(N)), tmp(static_cast<size_t>(N));
    rhs_at_node(t_mu, t_field, cfg, g, k1.data());
    if (!rk4) {
      for (i64 i = 0; i < N; ++i) tmp[static_cast<size_t>(i)] = g[i] + 0.5 * dt * k1[static_cast<size_t>(i)];
      rhs_at_node(t_mu, t_field, cfg, tmp.data(), k2.data());
      for (i64 i = 0; i < N; ++i) g[i] += dt * k2[static_cast<size_t>(i)];
    } else {
      std::vector<double> k3(static_cast<size_t>(N)), k4(static_cast<size_t>(N));
      for (i64 i = 0; i < N; ++i) tmp[static_cast<size_t>(i)] = g[i] + 0.5 * dt * k1[static_cast<size_t>(i)];
      rhs_at_node(t_mu, t_field, cfg, tmp.data(), k2.data());
      for (i64 i = 0; i < N; ++i) tmp[static_cast<size_t>(i)] = g[i] + 0.5 * dt * k2[static_cast<size_t>(i)];
      rhs_at_node(t_mu, t_field, cfg, tmp.data(), k3.data());
      for (i64 i = 0; i < N; ++i) tmp[static_cast<size_t>(i)] = g[i] + dt * k3[static_cast<size_t>(i)];
      rhs_at_node(t_mu, t_field, cfg, tmp.data(), k4.data());
      for (i64 i = 0; i < N; ++i)
        g[i] += dt / 6.0 *
                (k1[static_cast<size_t>(i)] + 2.0 * k2[static_cast<size_t>(i)] +
                 2.0 * k3[static_cast<size_t>(i)] + k4[static_cast<size_t>(i)]);
    }
    if (!all_finite(g, N)) {
      std::ostringstream os;
      os << "collision step blew up (non-finite values) at step " << step_index << ", x-node " << xn;
      throw NumericalError(os.str());
    }
  }
}

double conservation_projection(PhaseSpaceField& f, const Moments& target) {
  const VelocityGrid& vel = f.vel;
  int d = vel.d_v, m = d + 2;
  i64 nx = f.torus.num_nodes(), nv = vel.num_nodes();
  double wx = f.torus.node_weight();
  Moments cur = moments(f);

  Eigen::VectorXd delta(m);
  delta(0) = target.mass - cur.mass;
  for (int i = 0; i < d; ++i) delta(1 + i) = target.momentum[i] - cur.momentum[i];
  delta(m - 1) = target.energy - cur.energy;

  // observables (1, v, |v|^2) sqrt(mu) against the kernel basis, x-integrated
  auto chi = kernel_basis(vel);
  auto smu = sqrt_maxwellian(vel);
  Eigen::MatrixXd M(m, m);
  for (int q = 0; q < m; ++q)
    for (int k = 0; k < m; ++k) {
      double s = pairwise_sum(nv, [&](i64 vn) {
        VecV v = vel.coords(vn);
        double obs = (q == 0) ? 1.0 : (q <= d ? v[q - 1] : dot(v, v));
        return vel.node_weight[static_cast<size_t>(vn)] * obs * smu[static_cast<size_t>(vn)] *
               chi[static_cast<size_t>(k)][static_cast<size_t>(vn)];
      });
      M(q, k) = s * wx * static_cast<double>(nx);
    }
  Eigen::VectorXd c = M.fullPivLu().solve(delta);

  for (i64 xn = 0; xn < nx; ++xn) {
    double* g = f.xblock(xn);
    for (i64 vn = 0; vn < nv; ++vn) {
      double p = 0;
      for (int k = 0; k < m; ++k) p += c(k) * chi[static_cast<size_t>(k)][static_cast<size_t>(vn)];
      g[vn] += p;
    }
  }
  double size2 = 0;
  for (int k = 0; k < m; ++k) size2 += c(k) * c(k);  // chi are orthonormal in L2_v
  return std::sqrt(size2 * wx * static_cast<double>(nx));
}

double dt_stability_bound(const CollisionTables& t_mu, const SolverConfig& cfg) {
  double lmax = l_max_estimate(t_mu);
  if (!(lmax > 0)) return std::numeric_limits<double>::infinity();
  double reach = cfg.integrator == SolverConfig::Integrator::rk4 ? 2.785 : 2.0;
  return reach / lmax;
}

}  // namespace lbkin
