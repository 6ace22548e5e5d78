#include "lbkin/kernel.hpp"

#include <algorithm>
#include <cmath>

namespace lbkin {

void KernelQuadrature::validate(double k_max) const {
  if (n_r < 16) throw ConfigError("kernel quadrature needs n_r >= 16, got " + std::to_string(n_r));
  if (n_dir < 3) throw ConfigError("kernel quadrature needs n_dir >= 3, got " + std::to_string(n_dir));
  if (r_max < 0 || (r_max > 0 && r_max > k_max + 1e-12))
    throw ConfigError("kernel quadrature r_max must lie in (0, potential k_max]");
  if (diag_exclusion < 0) throw ConfigError("diag_exclusion must be nonnegative");
  if (cache_n_u < 16) throw ConfigError("cache_n_u must be >= 16");
}

namespace {

// Simpson integral of r^{pow} vhat(r)^2 / |1 + vhat(r) W|^2 on [0, r_max].
double radial_integral(const InteractionPotential& pot, int n_r, double r_max, int pow,
                       const std::complex<double>* W) {
  if (n_r % 2 == 0) ++n_r;
  double h = r_max / (n_r - 1);
  double acc = 0;
  for (int i = 0; i < n_r; ++i) {
    double r = h * i;
    double v = pot.vhat(r);
    if (v == 0.0 && i > 0) continue;
    double num = v * v;
    for (int p = 0; p < pow; ++p) num *= r;
    double den = 1.0;
    if (W) {
      double re = 1.0 + v * W->real();
      double im = v * W->imag();
      den = re * re + im * im;
    }
    double wq = (i == 0 || i == n_r - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    acc += wq * num / den;
  }
  return acc * h / 3.0;
}

double effective_rmax(const InteractionPotential& pot, const KernelQuadrature& q) {
  return q.r_max > 0 ? q.r_max : pot.k_max;
}

}  // namespace

MatV collision_matrix(const VecV& v, const VecV& w, const DispersionTable* eps,
                      const InteractionPotential& pot, const KernelQuadrature& quad) {
  int d = v.dim;
  double wn = norm(w);
  double floor_r = quad.diag_exclusion > 0 ? quad.diag_exclusion * (1.0 - 1e-9) : 0.0;
  if (wn == 0.0 || wn < floor_r)
    throw NumericalError("collision_matrix: relative velocity below the exclusion threshold");
  double r_max = effective_rmax(pot, quad);
  auto basis = hyperplane_basis(w);

  MatV B(d);
  if (d == 3) {
    double dth = 2.0 * M_PI / quad.n_dir;
    for (int a = 0; a < quad.n_dir; ++a) {
      double th = dth * a;
      VecV u = std::cos(th) * basis[0] + std::sin(th) * basis[1];
      double s = dot(u, v);
      double rad;
      if (eps) {
        std::complex<double> W = eps->W_at(u, s);
        rad = radial_integral(pot, quad.n_r, r_max, 3, &W);
      } else {
        rad = radial_integral(pot, quad.n_r, r_max, 3, nullptr);
      }
      add_outer(B, dth * rad, u);
    }
  } else {
    const VecV& e = basis[0];
    for (int sgn = 0; sgn < 2; ++sgn) {
      VecV u = (sgn == 0 ? 1.0 : -1.0) * e;
      double s = dot(u, v);
      double rad;
      if (eps) {
        std::complex<double> W = eps->W_at(u, s);
        rad = radial_integral(pot, quad.n_r, r_max, 2, &W);
      } else {
        rad = radial_integral(pot, quad.n_r, r_max, 2, nullptr);
      }
      add_outer(B, rad, u);
    }
  }
  return (1.0 / wn) * B;
}

// ---- radial cache -----------------------------------------------------------

double RadialCache::at(const VecV& dir, double u) const {
  if (constant) return value;
  double du = (u_max - u_min) / (n_u - 1);
  double t = std::clamp((u - u_min) / du, 0.0, static_cast<double>(n_u - 1));
  int j = static_cast<int>(std::floor(t)) - 1;
  j = std::clamp(j, 0, n_u - 4);
  double x = t - j;  // in [0,3] local coordinate of the 4-point cubic
  double l0 = -(x - 1) * (x - 2) * (x - 3) / 6.0;
  double l1 = x * (x - 2) * (x - 3) / 2.0;
  double l2 = -x * (x - 1) * (x - 3) / 2.0;
  double l3 = x * (x - 1) * (x - 2) / 6.0;
  int di[4];
  double dw[4];
  int c = dirs.interp(dir, di, dw);
  double acc = 0;
  for (int q = 0; q < c; ++q) {
    const double* row = R.data() + static_cast<size_t>(di[q]) * static_cast<size_t>(n_u);
    acc += dw[q] * (l0 * row[j] + l1 * row[j + 1] + l2 * row[j + 2] + l3 * row[j + 3]);
  }
  // Cubic overshoot must not break positive semidefiniteness of the kernel.
  return acc > 0.0 ? acc : 0.0;
}

namespace {

RadialCache build_radial_cache(const InteractionPotential& pot, const KernelQuadrature& quad,
                               const DispersionTable* disp, int d_v) {
  RadialCache rc;
  double r_max = effective_rmax(pot, quad);
  if (!disp) {
    rc.constant = true;
    rc.value = radial_integral(pot, quad.n_r, r_max, d_v, nullptr);
    return rc;
  }
  rc.dirs = disp->dirs;
  rc.u_min = disp->u_min;
  rc.u_max = disp->u_max;
  rc.n_u = quad.cache_n_u;
  int nd = rc.dirs.count();
  rc.R.assign(static_cast<size_t>(nd) * static_cast<size_t>(rc.n_u), 0.0);
  parallel_for(nd, [&](i64 b, i64 e) {
    for (i64 dd = b; dd < e; ++dd) {
      double* row = rc.R.data() + dd * rc.n_u;
      for (int iu = 0; iu < rc.n_u; ++iu) {
        double u = rc.u_min + (rc.u_max - rc.u_min) * iu / (rc.n_u - 1);
        // W at this direction node, interpolated only along u
        double du = (disp->u_max - disp->u_min) / (disp->n_u - 1);
        double t = std::clamp((u - disp->u_min) / du, 0.0, static_cast<double>(disp->n_u - 1));
        int j = static_cast<int>(std::floor(t));
        if (j >= disp->n_u - 1) j = disp->n_u - 2;
        double fr = t - j;
        std::complex<double> W = (1.0 - fr) * disp->W_node(static_cast<int>(dd), j) +
                                 fr * disp->W_node(static_cast<int>(dd), j + 1);
        row[iu] = radial_integral(pot, quad.n_r, r_max, d_v, &W);
      }
    }
  });
  return rc;
}

// B(v, v - v*) with the dielectric argument taken at the pair midpoint:
// u = khat.(v+v*)/2 equals khat.v exactly on the hyperplane, and makes the
// computed matrix bitwise symmetric under v <-> v*.
MatV pair_kernel(const VecV& v, const VecV& vs, const RadialCache& rc,
                 const std::vector<VecV>& basis, double wn, int n_dir) {
  int d = v.dim;
  VecV mid = 0.5 * (v + vs);
  MatV B(d);
  if (d == 3) {
    double dth = 2.0 * M_PI / n_dir;
    for (int a = 0; a < n_dir; ++a) {
      double th = dth * a;
      VecV u = std::cos(th) * basis[0] + std::sin(th) * basis[1];
      add_outer(B, dth * rc.at(u, dot(u, mid)), u);
    }
  } else {
    const VecV& e = basis[0];
    double racc = rc.at(e, dot(e, mid)) + rc.at(-1.0 * e, -dot(e, mid));
    add_outer(B, racc, e);
  }
  return (1.0 / wn) * B;
}

}  // namespace

MatV CollisionTables::A_at(i64 vn) const {
  MatV m(d());
  for (int i = 0; i < d(); ++i)
    for (int j = 0; j < d(); ++j) m(i, j) = A[static_cast<size_t>(vn) * d() * d() + i * d() + j];
  return m;
}

MatV sym_expand(const CollisionTables& t, const double* m, i64 vn) {
  MatV out(t.d());
  for (int c = 0; c < t.nsym(); ++c) {
    int i, j;
    sym_indices(t.d(), c, i, j);
    double x = m[vn * t.nsym() + c];
    out(i, j) = x;
    out(j, i) = x;
  }
  return out;
}

CollisionTables build_tables(const VelocityGrid& vel, const InteractionPotential& pot,
                             std::shared_ptr<const DispersionTable> disp,
                             KernelQuadrature quad, EpsMode mode, BuildOptions opt) {
  quad.validate(pot.k_max);
  if (mode != EpsMode::unity && !disp)
    throw ConfigError("collision tables in maxwellian/field mode require a dispersion table");
  CollisionTables t;
  t.vel = vel;
  t.pot = pot;
  t.quad = quad;
  t.mode = mode;
  t.disp = (mode == EpsMode::unity) ? nullptr : std::move(disp);
  t.rho = quad.diag_exclusion > 0 ? quad.diag_exclusion : vel.h();
  if (t.rho < vel.h() * (1.0 - 1e-12))
    throw ConfigError("diag_exclusion must be at least one velocity grid spacing");
  t.mu = maxwellian(vel);
  t.smu = sqrt_maxwellian(vel);
  t.rcache = build_radial_cache(pot, quad, t.disp.get(), vel.d_v);

  const int d = vel.d_v;
  const i64 N = vel.num_nodes();
  const int ns = t.nsym();
  double rho_eff = t.rho * (1.0 - 1e-9);

  auto pair_B = [&](i64 vn, i64 vsn, const VecV& v, const VecV& vs, bool& ok) -> MatV {
    VecV w = v - vs;
    double wn = norm(w);
    if (!(wn >= rho_eff) || vn == vsn) {
      ok = false;
      return MatV(d);
    }
    ok = true;
    auto basis = hyperplane_basis(w);
    return pair_kernel(v, vs, t.rcache, basis, wn, quad.n_dir);
  };

  if (opt.assemble_matrices) {
    t.Kvec.assign(static_cast<size_t>(N) * d * static_cast<size_t>(N) * d, 0.0);
    t.Kmat.assign(static_cast<size_t>(N) * ns * static_cast<size_t>(N), 0.0);
    parallel_for(N, [&](i64 b, i64 e) {
      for (i64 vn = b; vn < e; ++vn) {
        VecV v = vel.coords(vn);
        for (i64 vsn = 0; vsn < N; ++vsn) {
          bool ok;
          VecV vs = vel.coords(vsn);
          MatV B = pair_B(vn, vsn, v, vs, ok);
          if (!ok) continue;
          double fac = vel.node_weight[static_cast<size_t>(vsn)] * t.smu[static_cast<size_t>(vsn)];
          for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
              t.Kvec[(static_cast<size_t>(vn) * d + i) * static_cast<size_t>(N) * d +
                     static_cast<size_t>(vsn) * d + j] = fac * B(i, j);
          for (int c = 0; c < ns; ++c) {
            int i, j;
            sym_indices(d, c, i, j);
            t.Kmat[(static_cast<size_t>(vn) * ns + c) * static_cast<size_t>(N) +
                   static_cast<size_t>(vsn)] = fac * B(i, j);
          }
        }
      }
    });
    // A(v) = integral of B mu* via the same assembled path that serves
    // b0_apply, so the definition coincidence is bitwise.
    t.A.assign(static_cast<size_t>(N) * d * d, 0.0);
    std::vector<double> am(static_cast<size_t>(N) * ns);
    b0_apply_mat(t, t.smu.data(), am.data());
    for (i64 vn = 0; vn < N; ++vn) {
      MatV m = sym_expand(t, am.data(), vn);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          t.A[static_cast<size_t>(vn) * d * d + i * d + j] = m(i, j);
    }
  } else {
    t.A.assign(static_cast<size_t>(N) * d * d, 0.0);
    parallel_for(N, [&](i64 b, i64 e) {
      for (i64 vn = b; vn < e; ++vn) {
        VecV v = vel.coords(vn);
        MatV acc(d);
        for (i64 vsn = 0; vsn < N; ++vsn) {
          bool ok;
          VecV vs = vel.coords(vsn);
          MatV B = pair_B(vn, vsn, v, vs, ok);
          if (!ok) continue;
          double fac = vel.node_weight[static_cast<size_t>(vsn)] * t.mu[static_cast<size_t>(vsn)];
          acc = acc + fac * B;
        }
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j)
            t.A[static_cast<size_t>(vn) * d * d + i * d + j] = acc(i, j);
      }
    });
  }
  return t;
}

void b0_apply_vec(const CollisionTables& t, const double* h, double* out) {
  if (!t.has_matrices()) throw ConfigError("collision tables were built without assembled matrices");
  i64 rows = t.N() * t.d();
  const double* K = t.Kvec.data();
  parallel_for(rows, [&](i64 b, i64 e) {
    for (i64 r = b; r < e; ++r) {
      const double* row = K + static_cast<size_t>(r) * static_cast<size_t>(rows);
      double acc = 0;
      for (i64 c = 0; c < rows; ++c) acc += row[c] * h[c];
      out[r] = acc;
    }
  });
}

void b0_apply_mat(const CollisionTables& t, const double* g, double* out) {
  if (!t.has_matrices()) throw ConfigError("collision tables were built without assembled matrices");
  i64 N = t.N();
  i64 rows = N * t.nsym();
  const double* K = t.Kmat.data();
  parallel_for(rows, [&](i64 b, i64 e) {
    for (i64 r = b; r < e; ++r) {
      const double* row = K + static_cast<size_t>(r) * static_cast<size_t>(N);
      double acc = 0;
      for (i64 c = 0; c < N; ++c) acc += row[c] * g[c];
      out[r] = acc;
    }
  });
}

}  // namespace lbkin
