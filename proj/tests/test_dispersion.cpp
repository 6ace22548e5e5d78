#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "lbkin/dispersion.hpp"

using namespace lbkin;

namespace {

// Oracle for the principal value: regularize the pole as (u-s)/((u-s)^2+g^2),
// integrate on a fine trapezoid, and remove the regularization by Neville
// extrapolation g -> 0. Independent of the singularity-subtraction quadrature
// used in production.
double pv_gamma(const std::function<double(double)>& dphi, double lo, double hi, double u,
                double g) {
  const int n = 200001;
  double h = (hi - lo) / (n - 1), acc = 0;
  for (int i = 0; i < n; ++i) {
    double s = lo + h * i, d = u - s;
    double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    acc += w * dphi(s) * d / (d * d + g * g);
  }
  return acc * h;
}

double pv_oracle(const std::function<double(double)>& dphi, double lo, double hi, double u) {
  std::vector<double> g{0.1, 0.05, 0.025, 0.0125, 0.00625}, f(g.size());
  for (size_t i = 0; i < g.size(); ++i) f[i] = pv_gamma(dphi, lo, hi, u, g[i]);
  for (size_t m = 1; m < g.size(); ++m)
    for (size_t i = g.size() - 1; i >= m; --i)
      f[i] = f[i] + (f[i] - f[i - 1]) * g[i] / (g[i - m] - g[i]);
  return f.back();
}

double gauss_dphi(double s) { return -2.0 * s / std::sqrt(M_PI) * std::exp(-s * s); }

double gauss_phi(double s) { return std::exp(-s * s) / std::sqrt(M_PI); }

// C^infty bump supported on |s| < 1 and its exact derivative.
LineMarginal bump_marginal() {
  LineMarginal m;
  m.direction = VecV(2, 1.0, 0.0);
  m.s_min = -8.0;
  m.s_max = 8.0;
  const int n = 1601;
  m.phi.assign(n, 0.0);
  m.dphi.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = m.s_min + (m.s_max - m.s_min) * i / (n - 1);
    if (std::fabs(s) < 1.0) {
      double q = 1.0 - s * s;
      double b = std::exp(-1.0 / q);
      m.phi[static_cast<size_t>(i)] = b;
      m.dphi[static_cast<size_t>(i)] = b * (-2.0 * s / (q * q));
    }
  }
  return m;
}

}  // namespace

TEST_CASE("line marginal of the equilibrium is gaussian along every direction") {
  VelocityGrid vel(2, 33, 6.0);
  auto mu = maxwellian(vel);
  VecV khat(2, std::cos(0.52), std::sin(0.52));
  auto m = line_marginal(vel, mu, khat, 257);

  double sup = 0, supd = 0, mass = 0;
  for (int i = 0; i < m.n(); ++i) {
    double s = m.s_node(i);
    sup = std::max(sup, std::fabs(m.phi[static_cast<size_t>(i)] - gauss_phi(s)));
    supd = std::max(supd, std::fabs(m.dphi[static_cast<size_t>(i)] - gauss_dphi(s)));
    mass += m.phi[static_cast<size_t>(i)] * m.ds() * (i == 0 || i + 1 == m.n() ? 0.5 : 1.0);
  }
  // multilinear slice interpolation: second order in the velocity spacing
  CHECK(sup <= 2e-2);
  CHECK(supd <= 4e-2);

  // Fubini: the s-integral of phi recovers the discrete mass of F
  double dm = 0;
  for (i64 vn = 0; vn < vel.num_nodes(); ++vn)
    dm += vel.node_weight[static_cast<size_t>(vn)] * mu[static_cast<size_t>(vn)];
  CHECK(std::fabs(mass - dm) <= 1e-4);

  // halving the velocity spacing cuts the profile error at second order
  VelocityGrid fine(2, 65, 6.0);
  auto mf = line_marginal(fine, maxwellian(fine), khat, 257);
  double supf = 0;
  for (int i = 0; i < mf.n(); ++i)
    supf = std::max(supf,
                    std::fabs(mf.phi[static_cast<size_t>(i)] - gauss_phi(mf.s_node(i))));
  CHECK(std::log2(sup / supf) >= doctest::Approx(1.8));
}

TEST_CASE("line marginal translates with a shifted background") {
  VelocityGrid vel(2, 33, 6.0);
  VecV khat(2, std::cos(0.52), std::sin(0.52));
  const double u0 = 0.8;
  std::vector<double> F(static_cast<size_t>(vel.num_nodes()));
  for (i64 vn = 0; vn < vel.num_nodes(); ++vn) {
    VecV v = vel.coords(vn);
    double q = 0;
    for (int c = 0; c < 2; ++c) {
      double d = v[c] - u0 * khat[c];
      q += d * d;
    }
    F[static_cast<size_t>(vn)] = std::exp(-q) / M_PI;
  }
  auto m = line_marginal(vel, F, khat, 257);
  double sup = 0;
  for (int i = 0; i < m.n(); ++i) {
    double s = m.s_node(i);
    sup = std::max(sup, std::fabs(m.phi[static_cast<size_t>(i)] - gauss_phi(s - u0)));
  }
  CHECK(sup <= 2e-2);
}

TEST_CASE("line marginal works in three dimensions") {
  VelocityGrid vel(3, 21, 6.0);
  auto mu = maxwellian(vel);
  double r3 = 1.0 / std::sqrt(3.0);
  VecV khat(3, r3, r3, r3);
  auto m = line_marginal(vel, mu, khat, 129);
  double sup = 0, mass = 0;
  for (int i = 0; i < m.n(); ++i) {
    sup = std::max(sup, std::fabs(m.phi[static_cast<size_t>(i)] - gauss_phi(m.s_node(i))));
    mass += m.phi[static_cast<size_t>(i)] * m.ds() * (i == 0 || i + 1 == m.n() ? 0.5 : 1.0);
  }
  double dm = 0;
  for (i64 vn = 0; vn < vel.num_nodes(); ++vn)
    dm += vel.node_weight[static_cast<size_t>(vn)] * mu[static_cast<size_t>(vn)];
  CHECK(sup <= 5e-2);
  CHECK(std::fabs(mass - dm) <= 2e-3);
}

TEST_CASE("line marginal validates its inputs") {
  VelocityGrid vel(2, 33, 6.0);
  auto mu = maxwellian(vel);
  CHECK_THROWS_AS(line_marginal(vel, mu, VecV(2, 0.8, 0.8), 257), NumericalError);
  CHECK_THROWS_AS(line_marginal(vel, mu, VecV(2, 1.0, 0.0), 7), ConfigError);
}

TEST_CASE("analytic equilibrium marginal carries exact node values") {
  VecV khat(2, 0.0, 1.0);
  auto m = maxwellian_marginal(khat, 8.0, 801);
  for (int i : {0, 117, 400, 623, 800}) {
    double s = m.s_node(i);
    double p = (1.0 / std::sqrt(M_PI)) * std::exp(-s * s);
    CHECK(m.phi[static_cast<size_t>(i)] == p);
    CHECK(m.dphi[static_cast<size_t>(i)] == -2.0 * s * p);
  }
}

TEST_CASE("principal value integral matches a vanishing-regularization oracle") {
  VecV khat(2, 1.0, 0.0);
  auto m = maxwellian_marginal(khat, 8.0, 4097);

  // closed form at the symmetry point: p.v. of 2 s pi^{-1/2} e^{-s^2} / s
  CHECK(std::fabs(hilbert_pv(m, 0.0) - 2.0) <= 1e-8);
  CHECK(std::fabs(pv_oracle(gauss_dphi, -8.0, 8.0, 0.0) - 2.0) <= 5e-8);

  for (double u : {0.7, 1.3, 2.5})
    CHECK(std::fabs(hilbert_pv(m, u) - pv_oracle(gauss_dphi, -8.0, 8.0, u)) <= 5e-8);
}

TEST_CASE("principal value of a flat marginal vanishes") {
  LineMarginal m;
  m.direction = VecV(2, 1.0, 0.0);
  m.s_min = -4.0;
  m.s_max = 4.0;
  m.phi.assign(101, 0.25);
  m.dphi.assign(101, 0.0);
  CHECK(hilbert_pv(m, 0.37) == 0.0);
  CHECK(hilbert_pv(m, -2.6) == 0.0);
}

TEST_CASE("principal value decays beyond the marginal core") {
  VecV khat(2, 1.0, 0.0);
  auto m = maxwellian_marginal(khat, 11.5, 4097);
  double p3 = std::fabs(hilbert_pv(m, 3.0));
  double p4 = std::fabs(hilbert_pv(m, 4.0));
  double p6 = std::fabs(hilbert_pv(m, 6.0));
  CHECK(p6 < p4);
  CHECK(p4 < p3);
  CHECK(p6 <= 0.03);
  // far field behaves like -1/u^2
  CHECK(p6 / p4 == doctest::Approx(4.0 * 4.0 / 36.0).epsilon(0.12));
}

TEST_CASE("principal value quadrature converges at second order or better") {
  VecV khat(2, 1.0, 0.0);
  for (double u : {0.7, 1.3}) {
    double ref = pv_oracle(gauss_dphi, -8.0, 8.0, u);
    double e_coarse = std::fabs(hilbert_pv(maxwellian_marginal(khat, 8.0, 101), u) - ref);
    double e_fine = std::fabs(hilbert_pv(maxwellian_marginal(khat, 8.0, 401), u) - ref);
    CHECK(e_fine <= 5e-7);
    CHECK(std::log2(e_coarse / e_fine) / 2.0 >= 2.0);
  }
}

TEST_CASE("phase velocities outside the marginal grid are rejected") {
  VecV khat(2, 1.0, 0.0);
  auto m = maxwellian_marginal(khat, 6.0, 257);
  CHECK_THROWS_AS(hilbert_pv(m, 6.0), NumericalError);
  CHECK_THROWS_AS(hilbert_pv(m, -6.0), NumericalError);
  CHECK_THROWS_AS(hilbert_pv(m, 7.3), NumericalError);
  CHECK_NOTHROW(hilbert_pv(m, 5.99));
}

TEST_CASE("dielectric closed forms at equilibrium") {
  auto deb = InteractionPotential::debye(1.0, 1.0, 6.0);
  VecV khat(2, 1.0, 0.0);
  auto m = maxwellian_marginal(khat, 8.4852813742385713, 4097);

  for (double r : {0.05, 0.3, 1.0, 2.7, 6.0}) {
    VecV k(2, r, 0.0);
    // static limit: eps(k, 0) = 1 + 2 vhat(|k|), exactly real
    auto e0 = epsilon(deb, k, 0.0, m);
    CHECK(std::fabs(e0.real() - (1.0 + 2.0 * deb.vhat(r))) <= 1e-8);
    CHECK(e0.imag() == 0.0);
    // imaginary part: -2 sqrt(pi) vhat u exp(-u^2)
    for (double u : {0.4, 1.1, 2.9}) {
      auto e = epsilon(deb, k, u, m);
      double want = -2.0 * std::sqrt(M_PI) * deb.vhat(r) * u * std::exp(-u * u);
      CHECK(std::fabs(e.imag() - want) <= 1e-8);
    }
  }
  CHECK_THROWS_AS(epsilon(deb, VecV(2, 0.0, 0.0), 0.5, m), NumericalError);
}

TEST_CASE("dielectric with zero coupling is exactly one") {
  auto off = InteractionPotential::debye(0.0, 1.0, 6.0);
  VecV khat(2, 1.0, 0.0);
  auto m = maxwellian_marginal(khat, 8.0, 257);
  auto e = epsilon(off, VecV(2, 1.3, 0.0), 0.9, m);
  CHECK(e.real() == 1.0);
  CHECK(e.imag() == 0.0);
}

TEST_CASE("imaginary part is the residue term of the marginal derivative") {
  // Plemelj: Im eps = pi vhat phi'(u), reproducible bitwise from the marginal
  VelocityGrid vel(2, 33, 6.0);
  auto mu = maxwellian(vel);
  VecV khat(2, std::cos(0.3), std::sin(0.3));
  auto m = line_marginal(vel, mu, khat, 257);
  auto pot = InteractionPotential::debye(1.0, 1.0, 6.0);
  for (double u : {0.9, -1.7, 3.3}) {
    auto e = epsilon(pot, 1.7 * khat, u, m);
    CHECK(e.imag() == pot.vhat(norm(1.7 * khat)) * (M_PI * m.dphi_at(u)));
  }
}

TEST_CASE("compactly supported marginals give decaying dielectric deviation") {
  auto deb = InteractionPotential::debye(1.0, 1.0, 6.0);
  auto m = bump_marginal();
  double v = deb.vhat(0.7);
  double prev = 1e300;
  for (double u : {2.0, 3.0, 4.0, 6.0}) {
    double dev = std::abs(epsilon(deb, VecV(2, 0.7, 0.0), u, m) - std::complex<double>(1.0));
    CHECK(dev <= 0.5 * v / u);
    CHECK(dev < prev);
    prev = dev;
  }
  // the bump has zero mean derivative, so the far field is ~ 1/u^2
  double d3 = std::abs(epsilon(deb, VecV(2, 0.7, 0.0), 3.0, m) - std::complex<double>(1.0));
  double d6 = std::abs(epsilon(deb, VecV(2, 0.7, 0.0), 6.0, m) - std::complex<double>(1.0));
  CHECK(9.0 * d3 == doctest::Approx(36.0 * d6).epsilon(0.1));
}

TEST_CASE("dispersion table reproduces direct evaluation") {
  auto deb = InteractionPotential::debye(1.0, 1.0, 6.0);
  VelocityGrid vel(2, 33, 6.0);
  auto tab = build_dispersion_table(deb, vel, nullptr, TableLattice{});

  CHECK(tab->n_u == 32769);
  CHECK(tab->n_k == 33);
  CHECK(tab->dirs.count() == 32);
  CHECK(tab->k_min == 0.05);
  CHECK(tab->k_max == 6.0);
  CHECK(static_cast<int>(tab->marginals.size()) == 32);

  // table nodes along the first lattice direction match the direct call
  // bitwise; that direction is an exact basis vector, so |k| carries no
  // rounding into the profile cutoff
  for (int ik : {0, 13, 32})
    for (int iu : {1, 777, 16384, 30000, 32767}) {
      VecV k = tab->k_radius(ik) * tab->dirs.direction(0);
      auto direct = epsilon(deb, k, tab->u_node(iu), tab->marginals[0]);
      CHECK(tab->eps_node(ik, 0, iu) == direct);
    }

  // every stored row is the Plemelj pair of its own marginal
  for (int idir : {3, 11, 19, 27})
    for (int iu : {1, 777, 16384, 30000, 32767}) {
      const LineMarginal& m = tab->marginals[static_cast<size_t>(idir)];
      double u = tab->u_node(iu);
      std::complex<double> w(hilbert_pv(m, u), M_PI * m.dphi_at(u));
      CHECK(tab->W_node(idir, iu) == w);
      // and the node accessor is exactly 1 + vhat(radius) * row
      for (int ik : {0, 13, 32}) {
        std::complex<double> built =
            std::complex<double>(1.0, 0.0) + deb.vhat(tab->k_radius(ik)) * w;
        CHECK(tab->eps_node(ik, idir, iu) == built);
      }
    }

  // tilted directions: |radius * direction| rounds, so compare at interior
  // radii where the profile is smooth
  for (int idir : {3, 11, 19})
    for (int ik : {0, 13, 25}) {
      VecV k = tab->k_radius(ik) * tab->dirs.direction(idir);
      auto direct = epsilon(deb, k, tab->u_node(777), tab->marginals[static_cast<size_t>(idir)]);
      CHECK(std::abs(tab->eps_node(ik, idir, 777) - direct) <= 1e-12 * std::abs(direct));
    }

  // off-lattice evaluation: interpolation error well under 1e-6 relative
  auto mref = maxwellian_marginal(VecV(2, 1.0, 0.0), vel.v_max * std::sqrt(2.0), 4097);
  for (int ik : {3, 17})
    for (int idir : {2, 9})
      for (int iu : {700, 12000, 20000}) {
        double r = 0.5 * (tab->k_radius(ik) + tab->k_radius(ik + 1));
        double ang = 2.0 * M_PI * idir / 32 + M_PI / 32;
        VecV kh(2, std::cos(ang), std::sin(ang));
        double u = 0.5 * (tab->u_node(iu) + tab->u_node(iu + 1));
        auto a = tab->eps(r * kh, u);
        auto b = epsilon(deb, r * kh, u, mref);
        CHECK(std::abs(a - b) <= 1e-6 * std::abs(b));
      }
}

TEST_CASE("table with zero coupling is identically one") {
  auto off = InteractionPotential::debye(0.0, 1.0, 6.0);
  VelocityGrid vel(2, 33, 6.0);
  TableLattice lat;
  lat.n_s = 257;
  lat.n_u = 513;
  auto tab = build_dispersion_table(off, vel, nullptr, lat);
  CHECK(tab->min_abs_eps == 1.0);
  for (double r : {0.1, 2.0, 5.5})
    for (double u : {-3.0, 0.0, 1.4}) {
      auto e = tab->eps(VecV(2, r, 0.0), u);
      CHECK(e.real() == 1.0);
      CHECK(e.imag() == 0.0);
    }
  auto sc = penrose_scan(*tab, ScanRange{0.05, 6.0, 20}, ScanRange{-5.0, 5.0, 41});
  CHECK(sc.min_abs == 1.0);
}

TEST_CASE("penrose scan stays away from zero at equilibrium") {
  auto deb = InteractionPotential::debye(1.0, 1.0, 6.0);

  VelocityGrid v2(2, 33, 6.0);
  auto t2 = build_dispersion_table(deb, v2, nullptr, TableLattice{});
  auto s2 = penrose_scan(*t2, ScanRange{0.05, 6.0, 60}, ScanRange{-6.0, 6.0, 121});
  CHECK(s2.min_abs > 0.0);
  CHECK(s2.min_abs == doctest::Approx(0.5627).epsilon(0.01));
  // the minimum sits at the softest wavenumber, in the tail-slope region
  CHECK(s2.k <= 0.2);
  CHECK(std::fabs(s2.u) > 0.5);
  CHECK(std::fabs(s2.u) < 3.0);
  CHECK(t2->min_abs_eps == doctest::Approx(0.5627).epsilon(0.01));

  VelocityGrid v3(3, 21, 6.0);
  auto t3 = build_dispersion_table(deb, v3, nullptr, TableLattice{});
  auto s3 = penrose_scan(*t3, ScanRange{0.05, 6.0, 40}, ScanRange{-6.0, 6.0, 81});
  CHECK(s3.min_abs > 0.0);
  CHECK(s3.min_abs == doctest::Approx(0.5627).epsilon(0.01));

  CHECK_THROWS_AS(penrose_scan(*t2, ScanRange{0.05, 6.0, 0}, ScanRange{-6.0, 6.0, 5}),
                  ConfigError);
}

TEST_CASE("penrose scan is stable under small background perturbations") {
  auto deb = InteractionPotential::debye(1.0, 1.0, 6.0);
  VelocityGrid vel(2, 33, 6.0);
  auto mu = maxwellian(vel);

  std::vector<double> F(mu);
  for (i64 vn = 0; vn < vel.num_nodes(); ++vn) {
    VecV v = vel.coords(vn);
    F[static_cast<size_t>(vn)] *=
        1.0 + 0.05 * v[0] * std::exp(-0.5 * (v[0] * v[0] + v[1] * v[1]));
  }

  auto tm = build_dispersion_table(deb, vel, &mu, TableLattice{});
  auto tf = build_dispersion_table(deb, vel, &F, TableLattice{});
  auto sm = penrose_scan(*tm, ScanRange{0.05, 6.0, 60}, ScanRange{-6.0, 6.0, 121});
  auto sf = penrose_scan(*tf, ScanRange{0.05, 6.0, 60}, ScanRange{-6.0, 6.0, 121});

  CHECK(sf.min_abs > 0.4);
  CHECK(std::fabs(sf.min_abs - sm.min_abs) <= 0.10 * sm.min_abs);
}

TEST_CASE("snapshot-backed table matches direct evaluation of its marginals") {
  auto deb = InteractionPotential::debye(1.0, 1.0, 6.0);
  VelocityGrid vel(2, 33, 6.0);
  auto mu = maxwellian(vel);
  std::vector<double> F(mu);
  for (i64 vn = 0; vn < vel.num_nodes(); ++vn) {
    VecV v = vel.coords(vn);
    F[static_cast<size_t>(vn)] *=
        1.0 + 0.05 * v[0] * std::exp(-0.5 * (v[0] * v[0] + v[1] * v[1]));
  }
  auto tab = build_dispersion_table(deb, vel, &F, TableLattice{});
  CHECK(tab->n_u == 2049);

  for (int iu : {1, 512, 1024, 2047}) {
    VecV k = tab->k_radius(13) * tab->dirs.direction(0);
    auto direct = epsilon(deb, k, tab->u_node(iu), tab->marginals[0]);
    CHECK(tab->eps_node(13, 0, iu) == direct);
  }

  // anisotropic backgrounds pay an angular interpolation cost between lattice
  // directions; it stays small against the perturbation scale
  double worst = 0;
  for (int idir : {2, 9, 21}) {
    double ang = 2.0 * M_PI * idir / 32 + M_PI / 32;
    VecV kh(2, std::cos(ang), std::sin(ang));
    auto mm = line_marginal(vel, F, kh, 257);
    for (int iu : {300, 1000, 1700}) {
      double u = 0.5 * (tab->u_node(iu) + tab->u_node(iu + 1));
      auto a = tab->eps(1.1 * kh, u);
      auto b = epsilon(deb, 1.1 * kh, u, mm);
      worst = std::max(worst, std::abs(a - b) / std::abs(b));
    }
  }
  CHECK(worst <= 2e-2);
}

TEST_CASE("direction lattice interpolation is a partition of unity") {
  Rng rng(11);
  for (int d_v : {2, 3}) {
    DirLattice dirs;
    dirs.d_v = d_v;
    CHECK(dirs.count() >= (d_v == 2 ? 32 : 26));
    for (int trial = 0; trial < 24; ++trial) {
      VecV kh(d_v);
      double s = 0;
      do {
        for (int c = 0; c < d_v; ++c) kh[c] = rng.normal();
        s = norm(kh);
      } while (s < 0.1);
      kh = (1.0 / s) * kh;
      int idx[4];
      double wt[4];
      int cnt = dirs.interp(kh, idx, wt);
      CHECK(cnt <= 4);
      double tot = 0;
      for (int j = 0; j < cnt; ++j) {
        CHECK(idx[j] >= 0);
        CHECK(idx[j] < dirs.count());
        CHECK(wt[j] >= -1e-12);
        tot += wt[j];
      }
      CHECK(tot == doctest::Approx(1.0).epsilon(1e-12));
    }
    // at a non-degenerate lattice direction the weight collapses onto that
    // node (the d3 pole rows alias a single physical direction)
    int pick = d_v == 2 ? 1 : dirs.n_azim + 2;
    int idx[4];
    double wt[4];
    int cnt = dirs.interp(dirs.direction(pick), idx, wt);
    double wp = 0;
    for (int j = 0; j < cnt; ++j)
      if (idx[j] == pick) wp += wt[j];
    CHECK(wp == doctest::Approx(1.0).epsilon(1e-9));
  }
}
