#include "lbkin/nonlin.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace lbkin {

void apply_N(const CollisionTables& t_mu, const CollisionTables& t_field, const double* f,
             double* out) {
  const VelocityGrid& vel = t_mu.vel;
  i64 N = vel.num_nodes();
  int d = vel.d_v, ns = t_mu.nsym();
  bool frozen = (&t_field == &t_mu);

  std::vector<double> grad(static_cast<size_t>(N * d)), tmp(static_cast<size_t>(N));
  for (int a = 0; a < d; ++a) {
    d_dv_array(vel, f, tmp.data(), a);
    for (i64 vn = 0; vn < N; ++vn) grad[static_cast<size_t>(vn * d + a)] = tmp[static_cast<size_t>(vn)];
  }

  std::vector<double> M1(static_cast<size_t>(N * ns));
  b0_apply_mat(t_field, f, M1.data());
  std::vector<double> K2(static_cast<size_t>(N * d));
  b0_apply_vec(t_field, grad.data(), K2.data());

  std::vector<double> flux(static_cast<size_t>(N * d));
  for (i64 vn = 0; vn < N; ++vn) {
    MatV B1 = sym_expand(t_field, M1.data(), vn);
    for (int i = 0; i < d; ++i) {
      double s = 0;
      for (int j = 0; j < d; ++j) s += B1(i, j) * grad[static_cast<size_t>(vn * d + j)];
      flux[static_cast<size_t>(vn * d + i)] = s - f[vn] * K2[static_cast<size_t>(vn * d + i)];
    }
  }

  if (!frozen) {
    const FactoredDeriv& D = factored_deriv(vel);
    std::vector<double> dp(static_cast<size_t>(N * d));
    D.dplus(f, dp.data());
    std::vector<double> kf(static_cast<size_t>(N * d)), km(static_cast<size_t>(N * d));
    b0_apply_vec(t_field, dp.data(), kf.data());
    b0_apply_vec(t_mu, dp.data(), km.data());
    for (i64 vn = 0; vn < N; ++vn) {
      double sm = t_mu.smu[static_cast<size_t>(vn)];
      for (int i = 0; i < d; ++i) {
        double da = 0;
        for (int j = 0; j < d; ++j)
          da += (t_field.A[static_cast<size_t>(vn) * d * d + i * d + j] -
                 t_mu.A[static_cast<size_t>(vn) * d * d + i * d + j]) *
                dp[static_cast<size_t>(vn * d + j)];
        flux[static_cast<size_t>(vn * d + i)] +=
            da - sm * (kf[static_cast<size_t>(vn * d + i)] - km[static_cast<size_t>(vn * d + i)]);
      }
    }
  }

  factored_deriv(vel).dminus_div(flux.data(), out);
}

double smallness_proxy(const PhaseSpaceField& f) {
  const VelocityGrid& vel = f.vel;
  i64 nx = f.torus.num_nodes(), nv = vel.num_nodes();
  int d = vel.d_v;
  std::vector<double> br(static_cast<size_t>(nv));
  for (i64 vn = 0; vn < nv; ++vn) {
    VecV v = vel.coords(vn);
    double b = 1.0 + dot(v, v);
    br[static_cast<size_t>(vn)] = 1.0 / (b * b);  // <v>^-2 squared inside the L2 sum
  }
  std::vector<double> lap(static_cast<size_t>(nv)), da(static_cast<size_t>(nv)),
      dda(static_cast<size_t>(nv));
  double worst = 0;
  for (i64 xn = 0; xn < nx; ++xn) {
    const double* g = f.xblock(xn);
    std::fill(lap.begin(), lap.end(), 0.0);
    for (int a = 0; a < d; ++a) {
      d_dv_array(vel, g, da.data(), a);
      d_dv_array(vel, da.data(), dda.data(), a);
      for (i64 vn = 0; vn < nv; ++vn) lap[static_cast<size_t>(vn)] += dda[static_cast<size_t>(vn)];
    }
    double s = pairwise_sum(nv, [&](i64 vn) {
      double q = g[vn] - lap[static_cast<size_t>(vn)];
      return vel.node_weight[static_cast<size_t>(vn)] * br[static_cast<size_t>(vn)] * q * q;
    });
    worst = std::max(worst, std::sqrt(std::max(0.0, s)));
  }
  return worst;
}

void check_guard(const PhaseSpaceField& f, const NonlinConfig& cfg) {
  if (cfg.eps_mode != NonlinConfig::Mode::field) return;
  double p = smallness_proxy(f);
  if (p > cfg.smallness_guard) {
    std::ostringstream os;
    os << "dielectric smallness guard violated: proxy " << p << " exceeds threshold "
       << cfg.smallness_guard << "; field-mode kernel non-degeneracy is not guaranteed";
    throw NumericalError(os.str());
  }
}

void apply_Q(const CollisionTables& t, const double* F, double* out) {
  const VelocityGrid& vel = t.vel;
  i64 N = vel.num_nodes();
  int d = vel.d_v;
  for (i64 vn = 0; vn < N; ++vn)
    if (F[vn] < 0) throw NumericalError("apply_Q: negative distribution value at a grid node");

  std::vector<double> grad(static_cast<size_t>(N * d)), tmp(static_cast<size_t>(N));
  for (int a = 0; a < d; ++a) {
    d_dv_array(vel, F, tmp.data(), a);
    for (i64 vn = 0; vn < N; ++vn) grad[static_cast<size_t>(vn * d + a)] = tmp[static_cast<size_t>(vn)];
  }

  double thresh = t.rho * (1.0 - 1e-9);
  const DispersionTable* eps = (t.mode == EpsMode::unity) ? nullptr : t.disp.get();
  std::vector<double> H(static_cast<size_t>(N * d), 0.0);
  parallel_for(N, [&](i64 b, i64 e) {
    for (i64 vn = b; vn < e; ++vn) {
      VecV v = vel.coords(vn);
      double acc[3] = {0, 0, 0};
      for (i64 vsn = 0; vsn < N; ++vsn) {
        VecV vs = vel.coords(vsn);
        VecV w = v - vs;
        if (norm(w) < thresh) continue;
        MatV B = collision_matrix(v, w, eps, t.pot, t.quad);
        double ws = vel.node_weight[static_cast<size_t>(vsn)];
        for (int i = 0; i < d; ++i) {
          double s = 0;
          for (int j = 0; j < d; ++j)
            s += B(i, j) * (F[vsn] * grad[static_cast<size_t>(vn * d + j)] -
                            F[vn] * grad[static_cast<size_t>(vsn * d + j)]);
          acc[i] += ws * s;
        }
      }
      for (int i = 0; i < d; ++i) H[static_cast<size_t>(vn * d + i)] = acc[i];
    }
  });

  std::vector<double> hi(static_cast<size_t>(N));
  std::fill(out, out + N, 0.0);
  for (int a = 0; a < d; ++a) {
    for (i64 vn = 0; vn < N; ++vn) hi[static_cast<size_t>(vn)] = H[static_cast<size_t>(vn * d + a)];
    d_dv_array(vel, hi.data(), tmp.data(), a);
    for (i64 vn = 0; vn < N; ++vn) out[vn] += tmp[static_cast<size_t>(vn)];
  }
}

}  // namespace lbkin
