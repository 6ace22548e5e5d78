#include "lbkin/linop.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <mutex>

namespace lbkin {

namespace {

double dotw(const VelocityGrid& vel, const double* a, const double* b) {
  return pairwise_sum(vel.num_nodes(), [&](i64 vn) {
    return vel.node_weight[static_cast<size_t>(vn)] * a[vn] * b[vn];
  });
}

struct KerBasisCache {
  std::vector<std::vector<double>> chi;
  std::vector<double> gram_inv;  // (d+2)^2 row-major
};

const KerBasisCache& ker_basis_cache(const VelocityGrid& vel) {
  static std::mutex mtx;
  static std::map<std::tuple<int, int, long long>, KerBasisCache> cache;
  std::lock_guard<std::mutex> g(mtx);
  auto key = std::make_tuple(vel.d_v, vel.n_v, static_cast<long long>(vel.v_max * 1e12));
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  KerBasisCache kb;
  kb.chi = kernel_basis(vel);
  int m = vel.d_v + 2;
  Eigen::MatrixXd G(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      G(i, j) = dotw(vel, kb.chi[static_cast<size_t>(i)].data(), kb.chi[static_cast<size_t>(j)].data());
  Eigen::MatrixXd Gi = G.inverse();
  kb.gram_inv.resize(static_cast<size_t>(m * m));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) kb.gram_inv[static_cast<size_t>(i * m + j)] = Gi(i, j);
  return cache.emplace(key, std::move(kb)).first->second;
}

}  // namespace

void project_P_v(const VelocityGrid& vel, const double* f, double* coef, double* micro) {
  const KerBasisCache& kb = ker_basis_cache(vel);
  int m = vel.d_v + 2;
  double rhs[5];
  for (int k = 0; k < m; ++k) rhs[k] = dotw(vel, kb.chi[static_cast<size_t>(k)].data(), f);
  for (int i = 0; i < m; ++i) {
    double s = 0;
    for (int j = 0; j < m; ++j) s += kb.gram_inv[static_cast<size_t>(i * m + j)] * rhs[j];
    coef[i] = s;
  }
  if (micro) {
    i64 n = vel.num_nodes();
    for (i64 vn = 0; vn < n; ++vn) {
      double p = 0;
      for (int k = 0; k < m; ++k) p += coef[k] * kb.chi[static_cast<size_t>(k)][static_cast<size_t>(vn)];
      micro[vn] = f[vn] - p;
    }
  }
}

ProjectionResult project_P(const PhaseSpaceField& f) {
  ProjectionResult r;
  i64 nx = f.torus.num_nodes(), nv = f.vel.num_nodes();
  int d = f.vel.d_v;
  r.macro.a.assign(static_cast<size_t>(nx), 0.0);
  r.macro.c.assign(static_cast<size_t>(nx), 0.0);
  r.macro.b.assign(static_cast<size_t>(nx * d), 0.0);
  r.micro = PhaseSpaceField(f.torus, f.vel);
  for (i64 xn = 0; xn < nx; ++xn) {
    double coef[5];
    project_P_v(f.vel, f.values.data() + xn * nv, coef, r.micro.values.data() + xn * nv);
    r.macro.a[static_cast<size_t>(xn)] = coef[0];
    for (int i = 0; i < d; ++i) r.macro.b[static_cast<size_t>(xn * d + i)] = coef[1 + i];
    r.macro.c[static_cast<size_t>(xn)] = coef[d + 1];
  }
  return r;
}

// ---- factored first-order factors ------------------------------------------

FactoredDeriv::FactoredDeriv(const VelocityGrid& v) : vel(v) {
  int n = v.n_v;
  std::vector<double> s1(static_cast<size_t>(n)), iw(static_cast<size_t>(n)), ws(static_cast<size_t>(n));
  double c = std::pow(M_PI, -0.25);
  for (int i = 0; i < n; ++i) {
    double x = v.nodes1[static_cast<size_t>(i)];
    s1[static_cast<size_t>(i)] = c * std::exp(-0.5 * x * x);
  }
  DerivBand G = DerivBand::fourth_order(n, v.h());
  DerivBand gs = G.scaled(s1);
  for (int i = 0; i < n; ++i) {
    iw[static_cast<size_t>(i)] = 1.0 / v.weights1[static_cast<size_t>(i)];
    ws[static_cast<size_t>(i)] = v.weights1[static_cast<size_t>(i)];
  }
  for (int a = 0; a < v.d_v; ++a) {
    Gs.push_back(gs);
    GsT.push_back(gs.weighted_transpose(iw, ws));
  }
}

const FactoredDeriv& factored_deriv(const VelocityGrid& vel) {
  static std::mutex mtx;
  static std::map<std::tuple<int, int, long long>, FactoredDeriv*> cache;
  std::lock_guard<std::mutex> g(mtx);
  auto key = std::make_tuple(vel.d_v, vel.n_v, static_cast<long long>(vel.v_max * 1e12));
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, new FactoredDeriv(vel)).first;
  return *it->second;
}

void FactoredDeriv::dplus(const double* g, double* out) const {
  int d = vel.d_v, n = vel.n_v;
  for (int a = 0; a < d; ++a) {
    const DerivBand& band = Gs[static_cast<size_t>(a)];
    i64 sa = 1;
    for (int t = d - 1; t > a; --t) sa *= n;
    i64 block = sa * n;
    i64 outer = vel.num_nodes() / block;
    for (i64 hi = 0; hi < outer; ++hi)
      for (i64 lo = 0; lo < sa; ++lo) {
        i64 base = hi * block + lo;
        for (int i = 0; i < n; ++i) {
          double acc = 0;
          for (auto [j, cv] : band.rows[static_cast<size_t>(i)]) acc += cv * g[base + j * sa];
          out[(base + i * sa) * d + a] = acc;
        }
      }
  }
}

void FactoredDeriv::dminus_div(const double* h, double* out) const {
  int d = vel.d_v, n = vel.n_v;
  i64 N = vel.num_nodes();
  std::fill(out, out + N, 0.0);
  for (int a = 0; a < d; ++a) {
    const DerivBand& band = GsT[static_cast<size_t>(a)];
    i64 sa = 1;
    for (int t = d - 1; t > a; --t) sa *= n;
    i64 block = sa * n;
    i64 outer = N / block;
    for (i64 hi = 0; hi < outer; ++hi)
      for (i64 lo = 0; lo < sa; ++lo) {
        i64 base = hi * block + lo;
        for (int i = 0; i < n; ++i) {
          double acc = 0;
          for (auto [j, cv] : band.rows[static_cast<size_t>(i)]) acc += cv * h[(base + j * sa) * d + a];
          out[base + i * sa] -= acc;
        }
      }
  }
}

// ---- linear operator ---------------------------------------------------------

namespace {
// J = A Dg - sqrt(mu) B0[Dg], shared by apply_L and dirichlet_form
void flux_field(const CollisionTables& t, const double* g, std::vector<double>& h,
                std::vector<double>& J) {
  const FactoredDeriv& D = factored_deriv(t.vel);
  i64 N = t.N();
  int d = t.d();
  h.assign(static_cast<size_t>(N * d), 0.0);
  D.dplus(g, h.data());
  J.assign(static_cast<size_t>(N * d), 0.0);
  b0_apply_vec(t, h.data(), J.data());
  for (i64 vn = 0; vn < N; ++vn) {
    double sm = t.smu[static_cast<size_t>(vn)];
    for (int i = 0; i < d; ++i) {
      double av = 0;
      for (int j = 0; j < d; ++j)
        av += t.A[static_cast<size_t>(vn) * d * d + i * d + j] * h[static_cast<size_t>(vn * d + j)];
      J[static_cast<size_t>(vn * d + i)] = av - sm * J[static_cast<size_t>(vn * d + i)];
    }
  }
}
}  // namespace

void apply_L(const CollisionTables& t, const double* g, double* out) {
  std::vector<double> h, J;
  flux_field(t, g, h, J);
  factored_deriv(t.vel).dminus_div(J.data(), out);
}

double dirichlet_form(const CollisionTables& t, const double* g) {
  std::vector<double> h, J;
  flux_field(t, g, h, J);
  i64 N = t.N();
  int d = t.d();
  return pairwise_sum(N, [&](i64 vn) {
    double s = 0;
    for (int i = 0; i < d; ++i) s += h[static_cast<size_t>(vn * d + i)] * J[static_cast<size_t>(vn * d + i)];
    return t.vel.node_weight[static_cast<size_t>(vn)] * s;
  });
}

// ---- burnett ------------------------------------------------------------------

Burnett burnett(const VelocityGrid& vel) {
  int d = vel.d_v;
  i64 n = vel.num_nodes();
  auto smu = sqrt_maxwellian(vel);
  Burnett bu;
  int ns = d * (d + 1) / 2;
  bu.A.assign(static_cast<size_t>(ns), std::vector<double>(static_cast<size_t>(n)));
  bu.B.assign(static_cast<size_t>(d), std::vector<double>(static_cast<size_t>(n)));
  for (i64 vn = 0; vn < n; ++vn) {
    VecV v = vel.coords(vn);
    double s = smu[static_cast<size_t>(vn)];
    double vv = dot(v, v);
    for (int c = 0; c < ns; ++c) {
      int i, j;
      sym_indices(d, c, i, j);
      bu.A[static_cast<size_t>(c)][static_cast<size_t>(vn)] =
          (v[i] * v[j] - (i == j ? vv / d : 0.0)) * s;
    }
    for (int i = 0; i < d; ++i)
      bu.B[static_cast<size_t>(i)][static_cast<size_t>(vn)] =
          v[i] * (2.0 * vv - (d + 2)) / std::sqrt(d + 2.0) * s;
  }
  return bu;
}

// ---- norms ----------------------------------------------------------------------

double a_norm_vec(const CollisionTables& t, const double* h, i64 nx, double x_weight) {
  i64 N = t.N();
  int d = t.d();
  double acc = pairwise_sum(nx * N, [&](i64 idx) {
    i64 vn = idx % N;
    const double* hv = h + idx * d;
    double s = 0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        s += hv[i] * t.A[static_cast<size_t>(vn) * d * d + i * d + j] * hv[j];
    return t.vel.node_weight[static_cast<size_t>(vn)] * s;
  });
  return std::sqrt(std::max(0.0, acc * x_weight));
}

namespace {

std::vector<std::vector<int>> multiindices(int dim, int max_order) {
  std::vector<std::vector<int>> out;
  out.push_back({});  // order 0
  if (max_order >= 1)
    for (int a = 0; a < dim; ++a) out.push_back({a});
  if (max_order >= 2)
    for (int a = 0; a < dim; ++a)
      for (int b = a; b < dim; ++b) out.push_back({a, b});
  return out;
}

struct DerivStack {
  // fields[ai][bi] = spatial multi-index ai then velocity multi-index bi
  std::vector<std::vector<PhaseSpaceField>> fields;
  std::vector<std::vector<int>> alphas, betas;
};

DerivStack build_stack(const PhaseSpaceField& f, int n_used) {
  DerivStack st;
  st.alphas = multiindices(f.torus.d_x, f.torus.n_x == 1 ? 0 : n_used);
  st.betas = multiindices(f.vel.d_v, n_used);
  st.fields.resize(st.alphas.size());
  for (size_t ai = 0; ai < st.alphas.size(); ++ai) {
    PhaseSpaceField fa = f;
    for (int ax : st.alphas[ai]) fa = d_dx(fa, ax);
    st.fields[ai].reserve(st.betas.size());
    for (size_t bi = 0; bi < st.betas.size(); ++bi) {
      PhaseSpaceField fb = fa;
      for (int ax : st.betas[bi]) fb = d_dv(fb, ax);
      st.fields[ai].push_back(std::move(fb));
    }
  }
  return st;
}

double weighted_l2_sq(const PhaseSpaceField& g, int wexp) {
  i64 nx = g.torus.num_nodes(), nv = g.vel.num_nodes();
  double wx = g.torus.node_weight();
  std::vector<double> wv(static_cast<size_t>(nv));
  for (i64 vn = 0; vn < nv; ++vn) {
    VecV v = g.vel.coords(vn);
    double br = 1.0 + dot(v, v);
    wv[static_cast<size_t>(vn)] =
        g.vel.node_weight[static_cast<size_t>(vn)] * std::pow(br, wexp / 2.0);
  }
  return wx * pairwise_sum(nx * nv, [&](i64 idx) {
    double x = g.values[static_cast<size_t>(idx)];
    return wv[static_cast<size_t>(idx % nv)] * x * x;
  });
}

// weighted D-seminorm squared: |<v>^{e/2} v g|_A^2 + sum_ax |<v>^{e/2} d_ax g|_A^2
double weighted_d_sq(const PhaseSpaceField& g, int wexp, const CollisionTables& t) {
  i64 nx = g.torus.num_nodes(), nv = g.vel.num_nodes();
  int d = g.vel.d_v;
  double wx = g.torus.node_weight();
  std::vector<PhaseSpaceField> grads;
  for (int a = 0; a < d; ++a) grads.push_back(d_dv(g, a));
  return wx * pairwise_sum(nx * nv, [&](i64 idx) {
    i64 vn = idx % nv;
    VecV v = g.vel.coords(vn);
    double br = std::pow(1.0 + dot(v, v), wexp / 2.0);
    const double* Av = t.A.data() + static_cast<size_t>(vn) * d * d;
    double x = g.values[static_cast<size_t>(idx)];
    double s = 0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double hi = v[i] * x, hj = v[j] * x;
        double gi = grads[static_cast<size_t>(i)].values[static_cast<size_t>(idx)];
        double gj = grads[static_cast<size_t>(j)].values[static_cast<size_t>(idx)];
        s += Av[i * d + j] * (hi * hj + gi * gj);
      }
    return g.vel.node_weight[static_cast<size_t>(vn)] * br * s;
  });
}

}  // namespace

NormReport norms(const PhaseSpaceField& f, int n_used, const CollisionTables& t) {
  if (n_used < 0 || n_used > 2) throw ConfigError("norms: derivative order must be 0, 1, or 2");
  NormReport r;
  r.n_used = n_used;
  r.l2 = std::sqrt(weighted_l2_sq(f, 0));

  // direct A/D norms of the undifferentiated field
  {
    i64 nx = f.torus.num_nodes(), nv = f.vel.num_nodes();
    int d = f.vel.d_v;
    std::vector<double> h(static_cast<size_t>(nx * nv * d));
    for (i64 idx = 0; idx < nx * nv; ++idx) {
      VecV v = f.vel.coords(idx % nv);
      for (int i = 0; i < d; ++i) h[static_cast<size_t>(idx * d + i)] = v[i] * f.values[static_cast<size_t>(idx)];
    }
    r.a_norm = a_norm_vec(t, h.data(), nx, f.torus.node_weight());
    r.d_norm = std::sqrt(weighted_d_sq(f, 0, t));
  }

  DerivStack st = build_stack(f, n_used);
  auto order_of = [](const std::vector<int>& m) { return static_cast<int>(m.size()); };
  for (int n1 = 0; n1 <= n_used; ++n1)
    for (int n2 = 0; n2 + n1 <= n_used; ++n2) {
      int wexp = 2 * (n_used - n1 - 2 * n2);
      double acc_e = 0, acc_d = 0;
      for (size_t ai = 0; ai < st.alphas.size(); ++ai) {
        if (order_of(st.alphas[ai]) > n1) continue;
        for (size_t bi = 0; bi < st.betas.size(); ++bi) {
          if (order_of(st.betas[bi]) > n2) continue;
          acc_e += weighted_l2_sq(st.fields[ai][bi], wexp);
          acc_d += weighted_d_sq(st.fields[ai][bi], wexp, t);
        }
      }
      r.e_contrib[{n1, n2}] = acc_e;
      r.d_contrib[{n1, n2}] = acc_d;
      r.e_N += acc_e;
      r.d_N += acc_d;
    }
  return r;
}

// ---- spectral gap -----------------------------------------------------------------

namespace {

// G_D g = (v.A v) g + sum_ax adj(d_ax)[ (A grad g)_ax ]  (plain FD gradient)
void apply_GD(const CollisionTables& t, const double* g, double* out) {
  const VelocityGrid& vel = t.vel;
  i64 N = vel.num_nodes();
  int d = vel.d_v;
  std::vector<double> grads(static_cast<size_t>(N * d));
  std::vector<double> tmp(static_cast<size_t>(N));
  for (int a = 0; a < d; ++a) {
    d_dv_array(vel, g, tmp.data(), a);
    for (i64 vn = 0; vn < N; ++vn) grads[static_cast<size_t>(vn * d + a)] = tmp[static_cast<size_t>(vn)];
  }
  std::vector<double> flux(static_cast<size_t>(N * d));
  for (i64 vn = 0; vn < N; ++vn) {
    VecV v = vel.coords(vn);
    const double* Av = t.A.data() + static_cast<size_t>(vn) * d * d;
    double q = 0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        q += v[i] * Av[i * d + j] * v[j];
        flux[static_cast<size_t>(vn * d + i)] =
            (j == 0 ? 0.0 : flux[static_cast<size_t>(vn * d + i)]) +
            Av[i * d + j] * grads[static_cast<size_t>(vn * d + j)];
      }
    out[vn] = q * g[vn];
  }
  // adjoint of the plain band wrt trapezoid weights, added per axis
  static std::mutex mtx;
  static std::map<std::tuple<int, int, long long>, DerivBand> cache;
  const DerivBand* bt = nullptr;
  {
    std::lock_guard<std::mutex> lk(mtx);
    auto key = std::make_tuple(vel.d_v, vel.n_v, static_cast<long long>(vel.v_max * 1e12));
    auto it = cache.find(key);
    if (it == cache.end()) {
      DerivBand G = DerivBand::fourth_order(vel.n_v, vel.h());
      std::vector<double> iw(static_cast<size_t>(vel.n_v)), ws(static_cast<size_t>(vel.n_v));
      for (int i = 0; i < vel.n_v; ++i) {
        iw[static_cast<size_t>(i)] = 1.0 / vel.weights1[static_cast<size_t>(i)];
        ws[static_cast<size_t>(i)] = vel.weights1[static_cast<size_t>(i)];
      }
      it = cache.emplace(key, G.weighted_transpose(iw, ws)).first;
    }
    bt = &it->second;
  }
  int n = vel.n_v;
  for (int a = 0; a < d; ++a) {
    i64 sa = 1;
    for (int tt = d - 1; tt > a; --tt) sa *= n;
    i64 block = sa * n;
    i64 outer = N / block;
    for (i64 hi = 0; hi < outer; ++hi)
      for (i64 lo = 0; lo < sa; ++lo) {
        i64 base = hi * block + lo;
        for (int i = 0; i < n; ++i) {
          double acc = 0;
          for (auto [j, cv] : bt->rows[static_cast<size_t>(i)]) acc += cv * flux[(base + j * sa) * d + a];
          out[base + i * sa] += acc;
        }
      }
  }
}

// Sampled 1-D Hermite functions h_k (orthonormal under the continuum weight):
// h_0 = pi^{-1/4} exp(-x^2/2), then the standard three-term recurrence.
std::vector<std::vector<double>> hermite_lines(const VelocityGrid& vel, int kmax) {
  int n = vel.n_v;
  std::vector<std::vector<double>> f(static_cast<size_t>(kmax) + 1,
                                     std::vector<double>(static_cast<size_t>(n)));
  for (int i = 0; i < n; ++i) {
    double x = vel.nodes1[static_cast<size_t>(i)];
    f[0][static_cast<size_t>(i)] = std::pow(M_PI, -0.25) * std::exp(-0.5 * x * x);
    if (kmax >= 1) f[1][static_cast<size_t>(i)] = std::sqrt(2.0) * x * f[0][static_cast<size_t>(i)];
    for (int k = 2; k <= kmax; ++k)
      f[static_cast<size_t>(k)][static_cast<size_t>(i)] =
          std::sqrt(2.0 / k) * x * f[static_cast<size_t>(k - 1)][static_cast<size_t>(i)] -
          std::sqrt((k - 1.0) / k) * f[static_cast<size_t>(k - 2)][static_cast<size_t>(i)];
  }
  return f;
}

}  // namespace

GapResult spectral_gap(const CollisionTables& t) {
  // Rayleigh-Ritz estimate: minimize dirichlet_form(g) / |g|_D^2 over sampled
  // tensor Hermite functions (total degree <= 6 in 2-D, <= 5 in 3-D) after
  // projecting out the discrete collision invariants. The trial fields are
  // grid-independent, so the estimate converges under refinement and stays
  // comparable across grids. The unrestricted minimum over all grid vectors
  // is not usable for that purpose: content at the cell scale (parity
  // oscillations, per-cell exponential profiles) passes through any local
  // derivative band and is penalized only by boundary rows whose Gaussian
  // weights are vanishingly small, so the bottom of the discrete spectrum is
  // a box-truncation artifact that collapses toward roundoff instead of the
  // coercivity constant.
  const VelocityGrid& vel = t.vel;
  i64 N = vel.num_nodes();
  int d = vel.d_v;
  if (vel.n_v < 8) throw NumericalError("spectral gap: need n_v >= 8 for the trial space");
  int kmax = d == 2 ? 6 : (d == 3 ? 5 : 8);
  auto lines = hermite_lines(vel, kmax);

  // tensor multi-indices with total degree <= kmax, lexicographic
  std::vector<std::vector<int>> multi;
  std::vector<int> idx(static_cast<size_t>(d), 0);
  for (;;) {
    int deg = 0;
    for (int a = 0; a < d; ++a) deg += idx[static_cast<size_t>(a)];
    if (deg <= kmax) multi.push_back(idx);
    int a = d - 1;
    while (a >= 0 && ++idx[static_cast<size_t>(a)] > kmax) {
      idx[static_cast<size_t>(a)] = 0;
      --a;
    }
    if (a < 0) break;
  }

  auto ip = [&](const std::vector<double>& x, const std::vector<double>& y) {
    return pairwise_sum(N, [&](i64 vn) {
      return vel.node_weight[static_cast<size_t>(vn)] * x[static_cast<size_t>(vn)] * y[static_cast<size_t>(vn)];
    });
  };

  // sample, remove invariant content, orthonormalize (drops the invariant
  // span and linearly dependent leftovers)
  std::vector<std::vector<double>> basis;
  std::vector<double> g(static_cast<size_t>(N)), micro(static_cast<size_t>(N));
  double coef[5];
  for (const auto& k : multi) {
    for (i64 vn = 0; vn < N; ++vn) {
      i64 rem = vn;
      double prod = 1.0;
      for (int a = d - 1; a >= 0; --a) {
        int ia = static_cast<int>(rem % vel.n_v);
        rem /= vel.n_v;
        prod *= lines[static_cast<size_t>(k[static_cast<size_t>(a)])][static_cast<size_t>(ia)];
      }
      g[static_cast<size_t>(vn)] = prod;
    }
    double n0 = std::sqrt(ip(g, g));
    project_P_v(vel, g.data(), coef, micro.data());
    for (const auto& b : basis) {
      double c = ip(micro, b);
      for (i64 i = 0; i < N; ++i) micro[static_cast<size_t>(i)] -= c * b[static_cast<size_t>(i)];
    }
    double n1 = std::sqrt(ip(micro, micro));
    if (!(n1 > 1e-8 * n0)) continue;
    for (auto& x : micro) x /= n1;
    basis.push_back(micro);
  }
  int M = static_cast<int>(basis.size());
  if (M < 2) throw NumericalError("spectral gap: trial space degenerated");

  // per-trial-vector first-order fields and D-norm images
  std::vector<std::vector<double>> hs(static_cast<size_t>(M)), Js(static_cast<size_t>(M)),
      gd(static_cast<size_t>(M), std::vector<double>(static_cast<size_t>(N)));
  for (int m = 0; m < M; ++m) {
    flux_field(t, basis[static_cast<size_t>(m)].data(), hs[static_cast<size_t>(m)], Js[static_cast<size_t>(m)]);
    apply_GD(t, basis[static_cast<size_t>(m)].data(), gd[static_cast<size_t>(m)].data());
  }
  Eigen::MatrixXd Qm(M, M), Dm(M, M);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) {
      Qm(i, j) = pairwise_sum(N, [&](i64 vn) {
        double s = 0;
        for (int a = 0; a < d; ++a)
          s += hs[static_cast<size_t>(i)][static_cast<size_t>(vn * d + a)] *
               Js[static_cast<size_t>(j)][static_cast<size_t>(vn * d + a)];
        return vel.node_weight[static_cast<size_t>(vn)] * s;
      });
      Dm(i, j) = ip(basis[static_cast<size_t>(i)], gd[static_cast<size_t>(j)]);
    }
  Qm = 0.5 * (Qm + Qm.transpose()).eval();
  Dm = 0.5 * (Dm + Dm.transpose()).eval();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Qm, Dm);
  if (es.info() != Eigen::Success)
    throw NumericalError("spectral gap: generalized eigensolve failed");
  GapResult r;
  r.value = es.eigenvalues()(0);
  r.iterations = M;
  r.method = "rayleigh-ritz";
  return r;
}

double l_max_estimate(const CollisionTables& t, int iters, std::uint64_t seed) {
  i64 N = t.N();
  Rng rng(seed);
  std::vector<double> x(static_cast<size_t>(N)), y(static_cast<size_t>(N));
  for (auto& v : x) v = rng.normal();
  double lam = 0;
  for (int k = 0; k < iters; ++k) {
    apply_L(t, x.data(), y.data());
    double n2 = pairwise_sum(N, [&](i64 i) {
      return t.vel.node_weight[static_cast<size_t>(i)] * y[static_cast<size_t>(i)] * y[static_cast<size_t>(i)];
    });
    double nx2 = pairwise_sum(N, [&](i64 i) {
      return t.vel.node_weight[static_cast<size_t>(i)] * x[static_cast<size_t>(i)] * x[static_cast<size_t>(i)];
    });
    lam = std::sqrt(n2 / nx2);
    double inv = 1.0 / std::sqrt(n2);
    for (i64 i = 0; i < N; ++i) x[static_cast<size_t>(i)] = y[static_cast<size_t>(i)] * inv;
  }
  return lam;
}

}  // namespace lbkin
