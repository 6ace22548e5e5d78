#include "lbkin/potential.hpp"

#include <algorithm>
#include <cmath>

namespace lbkin {

InteractionPotential InteractionPotential::debye(double amplitude, double kappa, double k_max) {
  InteractionPotential p;
  p.kind = PotentialKind::debye;
  p.amplitude = amplitude;
  p.screening = kappa;
  p.k_max = k_max;
  p.validate();
  return p;
}

InteractionPotential InteractionPotential::gaussian(double amplitude, double sigma, double k_max) {
  InteractionPotential p;
  p.kind = PotentialKind::gaussian;
  p.amplitude = amplitude;
  p.screening = sigma;
  p.k_max = k_max;
  p.validate();
  return p;
}

InteractionPotential InteractionPotential::tabulated(std::vector<std::pair<double, double>> pts,
                                                     double k_max) {
  InteractionPotential p;
  p.kind = PotentialKind::tabulated;
  p.amplitude = 1.0;
  p.table = std::move(pts);
  p.k_max = k_max;
  p.validate();
  return p;
}

double InteractionPotential::vhat(double r) const {
  if (r > k_max) return 0.0;
  switch (kind) {
    case PotentialKind::debye:
      return amplitude / (r * r + screening * screening);
    case PotentialKind::gaussian:
      return amplitude * std::exp(-r * r / (2.0 * screening * screening));
    case PotentialKind::tabulated: {
      if (table.empty()) return 0.0;
      if (r <= table.front().first) return table.front().second;
      if (r >= table.back().first) return table.back().second;
      auto it = std::upper_bound(table.begin(), table.end(), r,
                                 [](double x, const std::pair<double, double>& e) { return x < e.first; });
      auto lo = *(it - 1);
      auto hi = *it;
      double t = (r - lo.first) / (hi.first - lo.first);
      return lo.second + t * (hi.second - lo.second);
    }
  }
  return 0.0;
}

void InteractionPotential::validate() const {
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
    throw ConfigError("potential amplitude must be a nonnegative finite real");
  if (!(k_max > 0.0) || !std::isfinite(k_max))
    throw ConfigError("potential k_max must be a positive finite real");
  if (kind != PotentialKind::tabulated) {
    if (!(screening > 0.0) || !std::isfinite(screening))
      throw ConfigError("potential screening must be a positive finite real");
  } else {
    if (table.empty()) throw ConfigError("tabulated potential requires a nonempty table");
    double prev = -1.0;
    for (auto& [r, v] : table) {
      if (!(r >= 0.0) || !std::isfinite(r) || !(r > prev))
        throw ConfigError("tabulated potential radii must be finite, nonnegative, strictly ascending");
      if (!(v >= 0.0) || !std::isfinite(v))
        throw ConfigError("tabulated potential values must be finite and nonnegative (positive-definite V)");
      prev = r;
    }
  }
  // Numeric stand-ins for the continuum hypotheses: V̂ bounded on [0,k_max]
  // and the truncated hyperplane integral finite.
  const int ns = 501;
  double m2 = 0;
  for (int i = 0; i < ns; ++i) {
    double r = k_max * i / (ns - 1);
    double v = vhat(r);
    if (!std::isfinite(v) || v < 0.0)
      throw ConfigError("potential profile must be finite and nonnegative on [0,k_max]");
    m2 += r * r * r * r * v * v;
  }
  if (!std::isfinite(m2)) throw ConfigError("potential moment integral diverges on [0,k_max]");
}

std::vector<VecV> hyperplane_basis(const VecV& w) {
  VecV u = w;
  // Canonical sign: basis depends on the line through w, not its orientation.
  for (int i = 0; i < u.dim; ++i) {
    if (u[i] != 0.0) {
      if (u[i] < 0.0)
        for (int j = 0; j < u.dim; ++j) u[j] = -u[j];
      break;
    }
  }
  double n = norm(u);
  if (n == 0.0) throw NumericalError("hyperplane basis undefined for zero direction");
  for (int i = 0; i < u.dim; ++i) u[i] /= n;

  if (u.dim == 2) {
    return {VecV(2, -u[1], u[0])};
  }
  // d=3: pick the coordinate axis least aligned with u, orthogonalize, cross.
  int ax = 0;
  double best = std::abs(u[0]);
  for (int i = 1; i < 3; ++i)
    if (std::abs(u[i]) < best) {
      best = std::abs(u[i]);
      ax = i;
    }
  VecV e1(3);
  e1[ax] = 1.0;
  double p = dot(e1, u);
  for (int i = 0; i < 3; ++i) e1[i] -= p * u[i];
  double n1 = norm(e1);
  for (int i = 0; i < 3; ++i) e1[i] /= n1;
  VecV e2(3, u[1] * e1[2] - u[2] * e1[1], u[2] * e1[0] - u[0] * e1[2], u[0] * e1[1] - u[1] * e1[0]);
  return {e1, e2};
}

namespace {
// Composite Simpson weights on n (odd) uniform nodes.
std::vector<double> simpson_weights(int n, double h) {
  std::vector<double> w(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) w[static_cast<size_t>(i)] = (i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
  for (auto& x : w) x *= h / 3.0;
  return w;
}

MatV hyperplane_kernel_integral(const InteractionPotential& pot, int dim, const VecV& w,
                                int n_r, int n_ang) {
  auto basis = hyperplane_basis(w);
  if (n_r % 2 == 0) ++n_r;
  double r_max = pot.k_max;
  double hr = r_max / (n_r - 1);
  auto wr = simpson_weights(n_r, hr);

  MatV M(dim);
  if (dim == 3) {
    // Polar rule on the plane span{e1,e2}: uniform angles are exact for the
    // quadratic angular dependence of k⊗k once n_ang >= 3.
    double dth = 2.0 * M_PI / n_ang;
    for (int a = 0; a < n_ang; ++a) {
      double th = dth * a;
      VecV u = std::cos(th) * basis[0] + std::sin(th) * basis[1];
      double rad = 0;
      for (int i = 0; i < n_r; ++i) {
        double r = hr * i;
        double v = pot.vhat(r);
        rad += wr[static_cast<size_t>(i)] * r * r * r * v * v;
      }
      add_outer(M, dth * rad, u);
    }
  } else {
    // The hyperplane is the line along e1; both orientations contribute.
    const VecV& u = basis[0];
    double rad = 0;
    for (int i = 0; i < n_r; ++i) {
      double r = hr * i;
      double v = pot.vhat(r);
      rad += wr[static_cast<size_t>(i)] * r * r * v * v;
    }
    add_outer(M, 2.0 * rad, u);
  }
  return M;
}
}  // namespace

double landau_constant(const InteractionPotential& pot, int dim, int n_r, int n_ang,
                       std::optional<VecV> direction) {
  if (dim != 2 && dim != 3) throw ConfigError("landau_constant requires dimension 2 or 3");
  VecV w = direction.value_or(dim == 3 ? VecV(3, 0.0, 0.0, 1.0) : VecV(2, 0.0, 1.0));
  if (w.dim != dim) throw ConfigError("landau_constant direction dimension mismatch");

  MatV M = hyperplane_kernel_integral(pot, dim, w, n_r, n_ang);
  double c = 0;
  for (int i = 0; i < dim; ++i) c += M(i, i);
  c /= (dim - 1);

  // Isotropy within the hyperplane and annihilation of w itself.
  VecV wn = (1.0 / std::max(norm(w), 1e-300)) * w;
  MatV R(dim);
  for (int i = 0; i < dim; ++i) {
    R(i, i) = -c;
    for (int j = 0; j < dim; ++j) R(i, j) += M(i, j) + c * wn[i] * wn[j];
  }
  double scale = std::max(std::abs(c), 1e-300);
  if (frob(R) > 1e-8 * scale && std::abs(c) > 0.0)
    throw NumericalError("landau_constant: hyperplane integral is not isotropic at this resolution");

  // Self-consistency under radial refinement.
  MatV M2 = hyperplane_kernel_integral(pot, dim, w, 2 * (n_r | 1) - 1, n_ang);
  double c2 = 0;
  for (int i = 0; i < dim; ++i) c2 += M2(i, i);
  c2 /= (dim - 1);
  if (std::abs(c2 - c) > std::max(1e-12, 1e-7 * std::abs(c2)))
    throw NumericalError("landau_constant: radial quadrature not converged; increase n_r or reduce k_max");
  return c;
}

}  // namespace lbkin
