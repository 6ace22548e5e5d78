#include "lbkin/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

namespace lbkin {

double entropy(const PhaseSpaceField& F, i64* floored) {
  i64 nx = F.torus.num_nodes(), nv = F.vel.num_nodes();
  double wx = F.torus.node_weight();
  i64 bad = 0;
  double s = pairwise_sum(nx * nv, [&](i64 idx) {
    double v = F.values[static_cast<size_t>(idx)];
    if (v < 1e-300) {
      ++bad;  // benign: pairwise_sum evaluates each index once, in order
      v = 1e-300;
    }
    return F.vel.node_weight[static_cast<size_t>(idx % nv)] * v * std::log(v);
  });
  if (floored) *floored = bad;
  if (bad > (nx * nv) / 100)
    throw NumericalError("entropy: more than 1% of distribution nodes at or below zero");
  return wx * s;
}

double weighted_l2(const PhaseSpaceField& f, double l, double theta, double K) {
  if (!(theta > 0) || theta > 2) throw ConfigError("weighted_l2: theta must lie in (0, 2]");
  if (K < 0) throw ConfigError("weighted_l2: K must be nonnegative");
  if (theta == 2 && K >= 1)
    throw NumericalError("weighted_l2: theta=2 requires K<1 (weight exceeds Gaussian decay)");
  i64 nx = f.torus.num_nodes(), nv = f.vel.num_nodes();
  std::vector<double> wv(static_cast<size_t>(nv));
  for (i64 vn = 0; vn < nv; ++vn) {
    VecV v = f.vel.coords(vn);
    double br = std::sqrt(1.0 + dot(v, v));
    double ex = 2.0 * (l * std::log(br) + K * std::pow(br, theta));
    if (ex > 700.0) {
      std::ostringstream os;
      os << "weighted_l2: weight overflows at <v> = " << br;
      throw NumericalError(os.str());
    }
    wv[static_cast<size_t>(vn)] = f.vel.node_weight[static_cast<size_t>(vn)] * std::exp(ex);
  }
  double s = pairwise_sum(nx * nv, [&](i64 idx) {
    double x = f.values[static_cast<size_t>(idx)];
    return wv[static_cast<size_t>(idx % nv)] * x * x;
  });
  return f.torus.node_weight() * s;
}

namespace {

FitResult fit_line(const std::vector<double>& X, const std::vector<double>& Y,
                   const std::string& model) {
  int n = static_cast<int>(X.size());
  if (n < 10) throw NumericalError("decay fit: fewer than 10 samples in the window");
  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) {
    mx += X[static_cast<size_t>(i)];
    my += Y[static_cast<size_t>(i)];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    double dx = X[static_cast<size_t>(i)] - mx, dy = Y[static_cast<size_t>(i)] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0) throw NumericalError("decay fit: degenerate window (constant abscissa)");
  if (syy <= 0) throw NumericalError("decay fit: degenerate window (constant series)");
  double slope = sxy / sxx;
  FitResult r;
  r.model = model;
  r.rate = -slope;
  r.offset = my - slope * mx;
  double ssres = 0;
  for (int i = 0; i < n; ++i) {
    double e = Y[static_cast<size_t>(i)] - (r.offset + slope * X[static_cast<size_t>(i)]);
    ssres += e * e;
  }
  r.r2 = std::clamp(1.0 - ssres / syy, 0.0, 1.0);
  r.n_samples = n;
  return r;
}

void window_logs(const std::vector<double>& t, const std::vector<double>& y, double t0, double t1,
                 std::vector<double>& tw, std::vector<double>& lw) {
  if (t.size() != y.size()) throw ConfigError("decay fit: series length mismatch");
  for (size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t0 || t[i] > t1) continue;
    if (!(y[i] > 0)) throw NumericalError("decay fit: nonpositive series value in the window");
    tw.push_back(t[i]);
    lw.push_back(std::log(y[i]));
  }
}

}  // namespace

FitResult decay_fit_poly(const std::vector<double>& t, const std::vector<double>& y, double t0,
                         double t1) {
  std::vector<double> tw, lw, X;
  window_logs(t, y, t0, t1, tw, lw);
  for (double tt : tw) X.push_back(0.5 * std::log1p(tt * tt));  // log <t>
  return fit_line(X, lw, "poly");
}

FitResult decay_fit_stretched(const std::vector<double>& t, const std::vector<double>& y,
                              double theta, double t0, double t1) {
  if (!(theta > 0)) throw ConfigError("decay fit: theta must be positive");
  std::vector<double> tw, lw, X;
  window_logs(t, y, t0, t1, tw, lw);
  double p = theta / (theta + 1.0);
  for (double tt : tw) X.push_back(std::pow(std::max(tt, 0.0), p));
  return fit_line(X, lw, "stretched");
}

std::vector<double> poisson_solve(const TorusGrid& torus, std::vector<double> source,
                                  double* mean_removed) {
  i64 n = torus.num_nodes();
  if (static_cast<i64>(source.size()) != n) throw ConfigError("poisson_solve: source size mismatch");
  double mean = 0;
  for (double s : source) mean += s;
  mean /= static_cast<double>(n);
  if (mean_removed) *mean_removed = mean;

  const SpectralX& sp = SpectralX::get(torus);
  std::vector<std::complex<double>> buf(static_cast<size_t>(n));
  for (i64 i = 0; i < n; ++i) buf[static_cast<size_t>(i)] = source[static_cast<size_t>(i)] - mean;
  sp.forward(buf.data());
  if (torus.d_x == 1) {
    for (int j = 0; j < torus.n_x; ++j) {
      int k = torus.wavenumber(j);
      buf[static_cast<size_t>(j)] = k == 0 ? 0.0 : buf[static_cast<size_t>(j)] / double(k * k);
    }
  } else {
    for (int j1 = 0; j1 < torus.n_x; ++j1)
      for (int j2 = 0; j2 < torus.n_x; ++j2) {
        int k1 = torus.wavenumber(j1), k2 = torus.wavenumber(j2);
        double k2n = double(k1) * k1 + double(k2) * k2;
        size_t idx = static_cast<size_t>(j1) * torus.n_x + j2;
        buf[idx] = k2n == 0 ? 0.0 : buf[idx] / k2n;
      }
  }
  sp.backward(buf.data());
  std::vector<double> out(static_cast<size_t>(n));
  for (i64 i = 0; i < n; ++i) out[static_cast<size_t>(i)] = buf[static_cast<size_t>(i)].real() / static_cast<double>(n);
  return out;
}

namespace {

// velocity profiles of the three test functions, given the gradient data of
// the elliptic solutions at one x-node
void psi_profile(const VelocityGrid& vel, char p, const std::vector<std::vector<double>>& dphi,
                 i64 xn, const std::vector<double>& smu, double* out) {
  int dv = vel.d_v;
  i64 nv = vel.num_nodes();
  for (i64 vn = 0; vn < nv; ++vn) {
    VecV v = vel.coords(vn);
    double vv = dot(v, v);
    double s = smu[static_cast<size_t>(vn)];
    double acc = 0;
    if (p == 'b') {
      // dphi layout: [j * d_v + i] -> d_j phi_{b,i}
      int dxn = static_cast<int>(dphi.size());
      for (int j = 0; j < dxn; ++j)
        for (int i = 0; i < dv; ++i)
          acc += dphi[static_cast<size_t>(j)][static_cast<size_t>(xn) * dv + i] * v[i] * v[j] * s;
      double div = 0;
      for (int j = 0; j < dxn && j < dv; ++j)
        div += dphi[static_cast<size_t>(j)][static_cast<size_t>(xn) * dv + j];
      acc -= div * (2.0 * vv - (dv - 2)) * 0.25 * s;
    } else if (p == 'a') {
      for (size_t j = 0; j < dphi.size(); ++j)
        acc += dphi[j][static_cast<size_t>(xn)] * v[static_cast<int>(j)] * (vv - (dv + 2)) * s;
    } else {
      for (size_t j = 0; j < dphi.size(); ++j)
        acc += dphi[j][static_cast<size_t>(xn)] * v[static_cast<int>(j)] *
               (2.0 * vv - (dv + 2)) / std::sqrt(dv + 2.0) * s;
    }
    out[vn] = acc;
  }
}

// spectral first derivative of a torus scalar field
std::vector<double> dx_field(const TorusGrid& torus, const std::vector<double>& g, int axis) {
  const SpectralX& sp = SpectralX::get(torus);
  i64 n = torus.num_nodes();
  std::vector<std::complex<double>> buf(static_cast<size_t>(n));
  for (i64 i = 0; i < n; ++i) buf[static_cast<size_t>(i)] = g[static_cast<size_t>(i)];
  sp.forward(buf.data());
  const std::complex<double> I(0.0, 1.0);
  if (torus.d_x == 1) {
    for (int j = 0; j < torus.n_x; ++j) {
      int k = torus.wavenumber(j);
      if (2 * j == torus.n_x) k = 0;  // drop the unpaired mode, as d_dx does
      buf[static_cast<size_t>(j)] *= I * double(k);
    }
  } else {
    for (int j1 = 0; j1 < torus.n_x; ++j1)
      for (int j2 = 0; j2 < torus.n_x; ++j2) {
        int j = axis == 0 ? j1 : j2;
        int k = torus.wavenumber(j);
        if (2 * j == torus.n_x) k = 0;
        buf[static_cast<size_t>(j1) * torus.n_x + j2] *= I * double(k);
      }
  }
  sp.backward(buf.data());
  std::vector<double> out(static_cast<size_t>(n));
  for (i64 i = 0; i < n; ++i) out[static_cast<size_t>(i)] = buf[static_cast<size_t>(i)].real() / static_cast<double>(n);
  return out;
}

}  // namespace

MacroIdentityResult macro_identity_check(const PhaseSpaceField& f, char p, int alpha_axis) {
  if (p != 'a' && p != 'b' && p != 'c') throw ConfigError("macro_identity_check: p must be a, b, or c");
  if (f.torus.n_x == 1)
    throw ConfigError("macro_identity_check: needs a nontrivial torus (n_x > 1)");
  const VelocityGrid& vel = f.vel;
  const TorusGrid& torus = f.torus;
  int dv = vel.d_v, dx = torus.d_x;
  i64 nx = torus.num_nodes(), nv = vel.num_nodes();
  double wx = torus.node_weight();

  PhaseSpaceField g = alpha_axis < 0 ? f : d_dx(f, alpha_axis);

  // fluid coefficients of g per x-node; b in the unnormalized convention
  std::vector<double> coefa(static_cast<size_t>(nx)), coefc(static_cast<size_t>(nx));
  std::vector<double> coefb(static_cast<size_t>(nx * dv));
  std::vector<double> gmicro(static_cast<size_t>(nx * nv));
  for (i64 xn = 0; xn < nx; ++xn) {
    double coef[5];
    project_P_v(vel, g.xblock(xn), coef, gmicro.data() + xn * nv);
    coefa[static_cast<size_t>(xn)] = coef[0];
    for (int i = 0; i < dv; ++i)
      coefb[static_cast<size_t>(xn * dv + i)] = std::sqrt(2.0) * coef[1 + i];
    coefc[static_cast<size_t>(xn)] = coef[dv + 1];
  }
  // Drop the mean (solvability) and the unpaired Nyquist modes: the spectral
  // first derivative annihilates those, so they must not enter either side.
  auto filter_resolved = [&torus, nx](std::vector<double>& arr, int ncomp) {
    const SpectralX& sp = SpectralX::get(torus);
    std::vector<std::complex<double>> buf(static_cast<size_t>(nx));
    for (int i = 0; i < ncomp; ++i) {
      for (i64 xn = 0; xn < nx; ++xn) buf[static_cast<size_t>(xn)] = arr[static_cast<size_t>(xn * ncomp + i)];
      sp.forward(buf.data());
      for (i64 m = 0; m < nx; ++m) {
        int j2 = static_cast<int>(m % torus.n_x);
        int j1 = static_cast<int>(m / torus.n_x);
        bool drop = m == 0 || 2 * j2 == torus.n_x || (torus.d_x == 2 && 2 * j1 == torus.n_x);
        if (drop) buf[static_cast<size_t>(m)] = 0.0;
      }
      sp.backward(buf.data());
      for (i64 xn = 0; xn < nx; ++xn)
        arr[static_cast<size_t>(xn * ncomp + i)] = buf[static_cast<size_t>(xn)].real() / static_cast<double>(nx);
    }
  };
  filter_resolved(coefa, 1);
  filter_resolved(coefb, dv);
  filter_resolved(coefc, 1);

  // elliptic solves and their spectral gradients
  std::vector<std::vector<double>> dphi;  // 'a'/'c': [axis][xn]; 'b': [axis][xn*dv+i]
  double macro_sq = 0;
  if (p == 'b') {
    std::vector<std::vector<double>> phi(static_cast<size_t>(dv));
    for (int i = 0; i < dv; ++i) {
      std::vector<double> src(static_cast<size_t>(nx));
      for (i64 xn = 0; xn < nx; ++xn) src[static_cast<size_t>(xn)] = coefb[static_cast<size_t>(xn * dv + i)];
      phi[static_cast<size_t>(i)] = poisson_solve(torus, src);
    }
    dphi.assign(static_cast<size_t>(dx), std::vector<double>(static_cast<size_t>(nx * dv)));
    for (int j = 0; j < dx; ++j)
      for (int i = 0; i < dv; ++i) {
        std::vector<double> dj = dx_field(torus, phi[static_cast<size_t>(i)], j);
        for (i64 xn = 0; xn < nx; ++xn)
          dphi[static_cast<size_t>(j)][static_cast<size_t>(xn * dv + i)] = dj[static_cast<size_t>(xn)];
      }
    double nb2 = pairwise_sum(nx * dv, [&](i64 q) {
      double b = coefb[static_cast<size_t>(q)];
      return b * b;
    });
    macro_sq = 0.25 * wx * nb2;
  } else {
    const std::vector<double>& src = (p == 'a') ? coefa : coefc;
    std::vector<double> phi = poisson_solve(torus, src);
    dphi.assign(static_cast<size_t>(dx), {});
    for (int j = 0; j < dx; ++j) dphi[static_cast<size_t>(j)] = dx_field(torus, phi, j);
    double np2 = pairwise_sum(nx, [&](i64 xn) {
      double q = src[static_cast<size_t>(xn)];
      return q * q;
    });
    macro_sq = (p == 'a') ? -(dv + 2) / 4.0 * wx * np2
                          : std::sqrt(dv + 2.0) / std::sqrt(2.0 * dv) * wx * np2;
  }

  // psi on the phase grid, then w = -v . grad_x psi
  auto smu = sqrt_maxwellian(vel);
  PhaseSpaceField psi(torus, vel);
  for (i64 xn = 0; xn < nx; ++xn) psi_profile(vel, p, dphi, xn, smu, psi.xblock(xn));
  PhaseSpaceField w(torus, vel);
  for (int j = 0; j < dx; ++j) {
    PhaseSpaceField dpsij = d_dx(psi, j);
    for (i64 xn = 0; xn < nx; ++xn)
      for (i64 vn = 0; vn < nv; ++vn) {
        VecV v = vel.coords(vn);
        w.at(xn, vn) -= v[j] * dpsij.at(xn, vn);
      }
  }

  MacroIdentityResult r;
  r.xi2 = wx * pairwise_sum(nx * nv, [&](i64 idx) {
    return vel.node_weight[static_cast<size_t>(idx % nv)] * w.values[static_cast<size_t>(idx)] *
           g.values[static_cast<size_t>(idx)];
  });

  std::vector<double> wmicro(static_cast<size_t>(nv));
  double e_term = 0;
  for (i64 xn = 0; xn < nx; ++xn) {
    double coef[5];
    project_P_v(vel, w.xblock(xn), coef, wmicro.data());
    e_term += wx * pairwise_sum(nv, [&](i64 vn) {
      return vel.node_weight[static_cast<size_t>(vn)] * wmicro[static_cast<size_t>(vn)] *
             gmicro[static_cast<size_t>(xn * nv + vn)];
    });
  }
  r.e_term = e_term;
  r.macro_term = macro_sq;
  r.residual = std::abs(r.xi2 - (r.macro_term + r.e_term));
  r.rel = r.residual / std::max(std::abs(r.xi2), 1e-30);
  return r;
}

}  // namespace lbkin
