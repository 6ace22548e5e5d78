#include "lbkin/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lbkin {

namespace {
// Lagrange cubic through nodes j0..j0+3 of a uniform grid.
struct Cubic {
  double c0, c1, c2, c3;  // local coordinate t = (u - s_{j0}) / ds
};

int cubic_base(const LineMarginal& m, double u) {
  int n = m.n();
  double t = (u - m.s_min) / m.ds();
  int j = static_cast<int>(std::floor(t)) - 1;
  return std::clamp(j, 0, n - 4);
}

double lagrange4(const double* y, double t) {
  // nodes at t = 0,1,2,3
  double l0 = -(t - 1) * (t - 2) * (t - 3) / 6.0;
  double l1 = t * (t - 2) * (t - 3) / 2.0;
  double l2 = -t * (t - 1) * (t - 3) / 2.0;
  double l3 = t * (t - 1) * (t - 2) / 6.0;
  return y[0] * l0 + y[1] * l1 + y[2] * l2 + y[3] * l3;
}

double lagrange4_deriv(const double* y, double t) {
  double d0 = -((t - 2) * (t - 3) + (t - 1) * (t - 3) + (t - 1) * (t - 2)) / 6.0;
  double d1 = ((t - 2) * (t - 3) + t * (t - 3) + t * (t - 2)) / 2.0;
  double d2 = -((t - 1) * (t - 3) + t * (t - 3) + t * (t - 1)) / 2.0;
  double d3 = ((t - 1) * (t - 2) + t * (t - 2) + t * (t - 1)) / 6.0;
  return y[0] * d0 + y[1] * d1 + y[2] * d2 + y[3] * d3;
}
}  // namespace

double LineMarginal::dphi_at(double u) const {
  int j = cubic_base(*this, u);
  double t = (u - s_node(j)) / ds();
  return lagrange4(dphi.data() + j, t);
}

double LineMarginal::ddphi_at(double u) const {
  int j = cubic_base(*this, u);
  double t = (u - s_node(j)) / ds();
  return lagrange4_deriv(dphi.data() + j, t) / ds();
}

double interp_v(const VelocityGrid& vel, const std::vector<double>& F, const VecV& p) {
  int n = vel.n_v;
  double h = vel.h();
  int cell[3];
  double fr[3];
  for (int a = 0; a < vel.d_v; ++a) {
    double t = (p[a] + vel.v_max) / h;
    if (t < 0.0 || t > n - 1) return 0.0;
    int c = static_cast<int>(std::floor(t));
    if (c >= n - 1) c = n - 2;
    cell[a] = c;
    fr[a] = t - c;
  }
  double acc = 0;
  int corners = 1 << vel.d_v;
  for (int m = 0; m < corners; ++m) {
    double w = 1.0;
    int digit[3];
    for (int a = 0; a < vel.d_v; ++a) {
      int bit = (m >> a) & 1;
      digit[a] = cell[a] + bit;
      w *= bit ? fr[a] : (1.0 - fr[a]);
    }
    if (w == 0.0) continue;
    acc += w * F[static_cast<size_t>(vel.index(digit))];
  }
  return acc;
}

LineMarginal line_marginal(const VelocityGrid& vel, const std::vector<double>& F,
                           const VecV& khat, int n_s) {
  double nk = norm(khat);
  if (std::abs(nk - 1.0) > 1e-12) throw NumericalError("line_marginal requires a unit direction");
  if (n_s < 8) throw ConfigError("line_marginal needs >= 8 s-nodes");
  LineMarginal m;
  m.direction = khat;
  double s_half = vel.v_max * std::sqrt(static_cast<double>(vel.d_v));
  m.s_min = -s_half;
  m.s_max = s_half;
  m.phi.assign(static_cast<size_t>(n_s), 0.0);
  m.dphi.assign(static_cast<size_t>(n_s), 0.0);

  auto basis = hyperplane_basis(khat);
  // Transverse quadrature covers the box diagonal; trapezoid with one node
  // per half grid spacing keeps interpolation error subordinate.
  double L = s_half;
  int n_eta = 2 * vel.n_v + 1;
  double deta = 2.0 * L / (n_eta - 1);

  for (int i = 0; i < n_s; ++i) {
    double s = m.s_node(i);
    double acc = 0;
    if (vel.d_v == 2) {
      for (int a = 0; a < n_eta; ++a) {
        double eta = -L + deta * a;
        double w = (a == 0 || a == n_eta - 1) ? 0.5 : 1.0;
        VecV p = s * khat + eta * basis[0];
        acc += w * interp_v(vel, F, p);
      }
      acc *= deta;
    } else {
      for (int a = 0; a < n_eta; ++a) {
        double ea = -L + deta * a;
        double wa = (a == 0 || a == n_eta - 1) ? 0.5 : 1.0;
        for (int b = 0; b < n_eta; ++b) {
          double eb = -L + deta * b;
          double wb = (b == 0 || b == n_eta - 1) ? 0.5 : 1.0;
          VecV p = s * khat + ea * basis[0] + eb * basis[1];
          acc += wa * wb * interp_v(vel, F, p);
        }
      }
      acc *= deta * deta;
    }
    m.phi[static_cast<size_t>(i)] = acc;
  }
  DerivBand band = DerivBand::fourth_order(n_s, m.ds());
  band.apply(m.phi.data(), m.dphi.data(), 1);
  return m;
}

LineMarginal maxwellian_marginal(const VecV& khat, double s_half, int n_s) {
  LineMarginal m;
  m.direction = khat;
  m.s_min = -s_half;
  m.s_max = s_half;
  m.phi.assign(static_cast<size_t>(n_s), 0.0);
  m.dphi.assign(static_cast<size_t>(n_s), 0.0);
  double c = 1.0 / std::sqrt(M_PI);
  for (int i = 0; i < n_s; ++i) {
    double s = m.s_node(i);
    double p = c * std::exp(-s * s);
    m.phi[static_cast<size_t>(i)] = p;
    m.dphi[static_cast<size_t>(i)] = -2.0 * s * p;
  }
  return m;
}

double hilbert_pv(const LineMarginal& m, double u) {
  int n = m.n();
  double ds = m.ds();
  if (!(u > m.s_min && u < m.s_max))
    throw NumericalError("hilbert_pv: phase velocity outside marginal grid interior");
  double dpu = m.dphi_at(u);
  double near = 1e-6 * ds;
  double acc = 0;
  for (int i = 0; i < n; ++i) {
    double w = (i == 0 || i == n - 1) ? 0.5 * ds : ds;
    double d = u - m.s_node(i);
    if (std::abs(d) < near) {
      // removable point: integrand tends to -phi''(u)
      acc += w * (-m.ddphi_at(u));
    } else {
      acc += w * (m.dphi[static_cast<size_t>(i)] - dpu) / d;
    }
  }
  acc += dpu * std::log((u - m.s_min) / (m.s_max - u));
  return acc;
}

std::complex<double> epsilon(const InteractionPotential& pot, const VecV& k, double u,
                             const LineMarginal& m) {
  double r = norm(k);
  if (!(r > 0.0)) throw NumericalError("epsilon requires |k| > 0");
  double v = pot.vhat(r);
  if (v == 0.0) return {1.0, 0.0};
  return std::complex<double>(1.0, 0.0) +
         v * std::complex<double>(hilbert_pv(m, u), M_PI * m.dphi_at(u));
}

// ---- direction lattice ------------------------------------------------------

VecV DirLattice::direction(int idx) const {
  if (d_v == 2) {
    double a = 2.0 * M_PI * idx / n_ang;
    return VecV(2, std::cos(a), std::sin(a));
  }
  int ip = idx / n_azim, ia = idx % n_azim;
  double th = M_PI * ip / n_polar;
  double ph = 2.0 * M_PI * ia / n_azim;
  return VecV(3, std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
}

int DirLattice::interp(const VecV& khat, int* idx, double* wt) const {
  if (d_v == 2) {
    double a = std::atan2(khat[1], khat[0]);
    if (a < 0) a += 2.0 * M_PI;
    double t = a / (2.0 * M_PI / n_ang);
    int j = static_cast<int>(std::floor(t));
    double fr = t - j;
    j %= n_ang;
    idx[0] = j;
    idx[1] = (j + 1) % n_ang;
    wt[0] = 1.0 - fr;
    wt[1] = fr;
    return 2;
  }
  double cz = std::clamp(khat[2], -1.0, 1.0);
  double th = std::acos(cz);
  double tp = th / (M_PI / n_polar);
  int ip = static_cast<int>(std::floor(tp));
  if (ip >= n_polar) ip = n_polar - 1;
  double fp = tp - ip;
  double ph = std::atan2(khat[1], khat[0]);
  if (ph < 0) ph += 2.0 * M_PI;
  double ta = ph / (2.0 * M_PI / n_azim);
  int ia = static_cast<int>(std::floor(ta));
  double fa = ta - ia;
  ia %= n_azim;
  int ia1 = (ia + 1) % n_azim;
  idx[0] = ip * n_azim + ia;
  wt[0] = (1 - fp) * (1 - fa);
  idx[1] = ip * n_azim + ia1;
  wt[1] = (1 - fp) * fa;
  idx[2] = (ip + 1) * n_azim + ia;
  wt[2] = fp * (1 - fa);
  idx[3] = (ip + 1) * n_azim + ia1;
  wt[3] = fp * fa;
  return 4;
}

// ---- dispersion table --------------------------------------------------------

std::complex<double> DispersionTable::W_at(const VecV& khat, double u) const {
  double du = (u_max - u_min) / (n_u - 1);
  double t = (u - u_min) / du;
  double tc = std::clamp(t, 0.0, static_cast<double>(n_u - 1));
  // cubic Lagrange on the four nodes iu-1 .. iu+2
  int iu = static_cast<int>(std::floor(tc));
  iu = std::clamp(iu, 1, n_u - 3);
  double fu = tc - iu;
  double lw[4] = {-fu * (fu - 1.0) * (fu - 2.0) / 6.0,
                  (fu + 1.0) * (fu - 1.0) * (fu - 2.0) / 2.0,
                  -(fu + 1.0) * fu * (fu - 2.0) / 2.0,
                  (fu + 1.0) * fu * (fu - 1.0) / 6.0};
  int di[4];
  double dw[4];
  int c = dirs.interp(khat, di, dw);
  std::complex<double> acc = 0;
  for (int j = 0; j < c; ++j) {
    const std::complex<double>* row = W.data() + static_cast<size_t>(di[j]) * static_cast<size_t>(n_u);
    for (int q = 0; q < 4; ++q) acc += dw[j] * lw[q] * row[iu - 1 + q];
  }
  return acc;
}

std::complex<double> DispersionTable::eps(const VecV& k, double u) const {
  double r = norm(k);
  if (!(r > 0.0)) throw NumericalError("epsilon requires |k| > 0");
  double v = pot.vhat(r);
  if (v == 0.0) return {1.0, 0.0};
  return std::complex<double>(1.0, 0.0) + v * W_at((1.0 / r) * k, u);
}

std::complex<double> DispersionTable::eps_node(int ik, int idir, int iu) const {
  double r = k_radius(ik);
  return std::complex<double>(1.0, 0.0) + pot.vhat(r) * W_node(idir, iu);
}

std::shared_ptr<const DispersionTable> build_dispersion_table(
    const InteractionPotential& pot, const VelocityGrid& vel,
    const std::vector<double>* F, TableLattice lat) {
  auto tab = std::make_shared<DispersionTable>();
  tab->pot = pot;
  lat.dirs.d_v = vel.d_v;
  tab->dirs = lat.dirs;
  bool analytic = (F == nullptr);
  int n_s = lat.n_s > 0 ? lat.n_s : (analytic ? 4097 : 257);
  int n_u = lat.n_u > 0 ? lat.n_u : (analytic ? 32769 : 2049);
  tab->n_u = n_u;
  double s_half = vel.v_max * std::sqrt(static_cast<double>(vel.d_v));
  double ds = 2.0 * s_half / (n_s - 1);
  // keep u strictly interior to the marginal grid for the p.v. log term
  tab->u_min = -(s_half - 4.0 * ds);
  tab->u_max = s_half - 4.0 * ds;
  tab->k_min = lat.k_min;
  tab->k_max = lat.k_max > 0 ? lat.k_max : pot.k_max;
  tab->n_k = lat.n_k;

  int nd = tab->dirs.count();
  tab->marginals.resize(static_cast<size_t>(nd));
  tab->W.assign(static_cast<size_t>(nd) * static_cast<size_t>(n_u), {0.0, 0.0});

  auto fill_dir = [&](int d) {
    LineMarginal m = analytic
                         ? maxwellian_marginal(tab->dirs.direction(d), s_half, n_s)
                         : line_marginal(vel, *F, tab->dirs.direction(d), n_s);
    std::complex<double>* row = tab->W.data() + static_cast<size_t>(d) * static_cast<size_t>(n_u);
    for (int iu = 0; iu < n_u; ++iu) {
      double u = tab->u_node(iu);
      row[iu] = std::complex<double>(hilbert_pv(m, u), M_PI * m.dphi_at(u));
    }
    tab->marginals[static_cast<size_t>(d)] = std::move(m);
  };

  if (analytic) {
    // isotropic background: every direction carries the same marginal and row
    fill_dir(0);
    for (int d = 1; d < nd; ++d) {
      tab->marginals[static_cast<size_t>(d)] = tab->marginals[0];
      tab->marginals[static_cast<size_t>(d)].direction = tab->dirs.direction(d);
      std::copy(tab->W.begin(), tab->W.begin() + n_u,
                tab->W.begin() + static_cast<size_t>(d) * static_cast<size_t>(n_u));
    }
  } else {
    for (int d = 0; d < nd; ++d) fill_dir(d);
  }

  double mn = std::numeric_limits<double>::infinity();
  for (int ik = 0; ik < tab->n_k; ++ik) {
    double v = pot.vhat(tab->k_radius(ik));
    for (int d = 0; d < nd; ++d) {
      const std::complex<double>* row = tab->W.data() + static_cast<size_t>(d) * static_cast<size_t>(n_u);
      for (int iu = 0; iu < n_u; ++iu) {
        double re = 1.0 + v * row[iu].real();
        double im = v * row[iu].imag();
        double a2 = re * re + im * im;
        if (a2 < mn) mn = a2;
      }
    }
  }
  tab->min_abs_eps = std::sqrt(mn);
  return tab;
}

PenroseScan penrose_scan(const DispersionTable& table, ScanRange k_range, ScanRange u_range) {
  if (k_range.n < 1 || u_range.n < 1) throw ConfigError("penrose_scan requires nonempty ranges");
  PenroseScan out;
  out.min_abs = std::numeric_limits<double>::infinity();
  int nd = table.dirs.count();
  for (int ik = 0; ik < k_range.n; ++ik) {
    double r = k_range.n == 1 ? k_range.lo
                              : k_range.lo + (k_range.hi - k_range.lo) * ik / (k_range.n - 1);
    double v = table.pot.vhat(r);
    for (int d = 0; d < nd; ++d) {
      VecV dir = table.dirs.direction(d);
      for (int iu = 0; iu < u_range.n; ++iu) {
        double u = u_range.n == 1 ? u_range.lo
                                  : u_range.lo + (u_range.hi - u_range.lo) * iu / (u_range.n - 1);
        std::complex<double> e = std::complex<double>(1.0, 0.0) + v * table.W_at(dir, u);
        double a = std::abs(e);
        if (a < out.min_abs) {
          out.min_abs = a;
          out.k = r;
          out.u = u;
          out.dir = dir;
        }
      }
    }
  }
  return out;
}

}  // namespace lbkin
