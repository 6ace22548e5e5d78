#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "lbkin/common.hpp"
#include "lbkin/potential.hpp"

using namespace lbkin;

namespace {

// Reference reduction of the unity-dielectric collision strength. On the
// subspace orthogonal to any direction the matrix integral of (k x k) vhat^2
// is isotropic, so a single radial moment determines it:
//   d = 3:  c = pi * I3,   d = 2:  c = 2 * I2,   Im = int_0^kmax r^m vhat(r)^2 dr.
// Romberg on the radial moment; a different rule from the production Simpson,
// so agreement is evidence rather than tautology.
double radial_moment(const InteractionPotential& p, int m, int levels = 16) {
  double a = 0.0, b = p.k_max;
  auto f = [&](double r) {
    double v = p.vhat(r), q = v * v;
    for (int i = 0; i < m; ++i) q *= r;
    return q;
  };
  std::vector<double> row{0.5 * (b - a) * (f(a) + f(b))};
  for (int k = 1; k < levels; ++k) {
    i64 nmid = i64{1} << (k - 1);
    double h = (b - a) / static_cast<double>(i64{1} << k);
    double s = 0;
    for (i64 i = 0; i < nmid; ++i) s += f(a + h * static_cast<double>(2 * i + 1));
    std::vector<double> next(static_cast<size_t>(k) + 1);
    next[0] = 0.5 * row[0] + h * s;
    double p4 = 4.0;
    for (int j = 1; j <= k; ++j) {
      next[static_cast<size_t>(j)] =
          (p4 * next[static_cast<size_t>(j - 1)] - row[static_cast<size_t>(j - 1)]) / (p4 - 1.0);
      p4 *= 4.0;
    }
    row = std::move(next);
  }
  return row.back();
}

double strength_oracle(const InteractionPotential& p, int dim) {
  return dim == 3 ? M_PI * radial_moment(p, 3) : 2.0 * radial_moment(p, 2);
}

// Closed-form strengths on [0, K], amplitude 1, screening 1:
//   debye d=2:  2 int s^2/(s^2+1)^2 = atan K - K/(1+K^2)
//   debye d=3:  pi int r^3/(r^2+1)^2 = pi (log(1+K^2) + 1/(1+K^2) - 1)/2
//   gauss d=2:  2 int s^2 e^{-s^2}  = sqrt(pi)/2 erf K - K e^{-K^2}
//   gauss d=3:  pi int r^3 e^{-r^2} = pi (1 - (1+K^2) e^{-K^2})/2
double closed_debye(int dim, double K) {
  if (dim == 2) return std::atan(K) - K / (1.0 + K * K);
  return M_PI / 2.0 * (std::log(1.0 + K * K) + 1.0 / (1.0 + K * K) - 1.0);
}
double closed_gauss(int dim, double K) {
  if (dim == 2) return std::sqrt(M_PI) / 2.0 * std::erf(K) - K * std::exp(-K * K);
  return M_PI / 2.0 * (1.0 - (1.0 + K * K) * std::exp(-K * K));
}

InteractionPotential cutoff_indicator() {
  // vhat = 1 on [0,1], 0 beyond: the table is constant and k_max clips it.
  return InteractionPotential::tabulated({{0.0, 1.0}, {1.0, 1.0}}, 1.0);
}

}  // namespace

TEST_CASE("radial profiles evaluate their presets") {
  auto deb = InteractionPotential::debye(1.0, 1.0, 6.0);
  CHECK(deb.vhat(0.0) == 1.0);
  CHECK(deb.vhat(1.0) == 0.5);
  CHECK(deb.vhat(6.0) == doctest::Approx(1.0 / 37.0).epsilon(1e-15));
  CHECK(deb.vhat(6.0000001) == 0.0);

  auto gau = InteractionPotential::gaussian(1.0, 1.0, 6.0);
  CHECK(gau.vhat(0.0) == 1.0);
  CHECK(gau.vhat(1.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));

  auto tab = InteractionPotential::tabulated({{0.0, 2.0}, {1.0, 1.0}, {2.0, 1.0}}, 2.0);
  CHECK(tab.vhat(0.5) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(tab.vhat(1.7) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(tab.vhat(2.5) == 0.0);
}

TEST_CASE("profile validation rejects bad parameters") {
  CHECK_THROWS_AS(InteractionPotential::debye(-1.0, 1.0, 6.0).validate(), ConfigError);
  CHECK_THROWS_AS(InteractionPotential::debye(1.0, 0.0, 6.0).validate(), ConfigError);
  CHECK_THROWS_AS(InteractionPotential::debye(1.0, 1.0, 0.0).validate(), ConfigError);
  CHECK_THROWS_AS(InteractionPotential::tabulated({}, 1.0).validate(), ConfigError);
  CHECK_THROWS_AS(InteractionPotential::tabulated({{1.0, 1.0}, {0.5, 1.0}}, 1.0).validate(),
                  ConfigError);
  CHECK_THROWS_AS(InteractionPotential::tabulated({{0.0, -1.0}}, 1.0).validate(), ConfigError);
  CHECK_NOTHROW(InteractionPotential::debye(0.0, 1.0, 6.0).validate());
}

TEST_CASE("collision strength of a sharp cutoff profile") {
  auto ind = cutoff_indicator();
  // Exact values: pi * int_0^1 r^3 = pi/4, and 2 * int_0^1 s^2 = 2/3.
  CHECK(std::abs(strength_oracle(ind, 3) - M_PI / 4.0) <= 1e-12);
  CHECK(std::abs(strength_oracle(ind, 2) - 2.0 / 3.0) <= 1e-12);
  CHECK(landau_constant(ind, 3) == doctest::Approx(M_PI / 4.0).epsilon(1e-10));
  CHECK(landau_constant(ind, 2) == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("collision strength matches closed forms for smooth profiles") {
  auto deb = InteractionPotential::debye(1.0, 1.0, 6.0);
  auto gau = InteractionPotential::gaussian(1.0, 1.0, 6.0);
  for (int dim : {2, 3}) {
    double cd = closed_debye(dim, 6.0);
    double cg = closed_gauss(dim, 6.0);
    CHECK(std::abs(strength_oracle(deb, dim) - cd) <= 1e-11 * std::abs(cd));
    CHECK(std::abs(strength_oracle(gau, dim) - cg) <= 1e-11 * std::abs(cg));
    CHECK(landau_constant(deb, dim) == doctest::Approx(cd).epsilon(1e-8));
    CHECK(landau_constant(gau, dim) == doctest::Approx(cg).epsilon(1e-8));
  }
  // amplitude and screening scalings: c ~ amp^2, debye kappa rescales radii
  auto deb2 = InteractionPotential::debye(3.0, 1.0, 6.0);
  CHECK(landau_constant(deb2, 2) ==
        doctest::Approx(9.0 * landau_constant(deb, 2)).epsilon(1e-12));
}

TEST_CASE("collision strength is rotation invariant") {
  auto deb = InteractionPotential::debye(1.0, 1.0, 6.0);
  double ref3 = landau_constant(deb, 3);
  Rng rng(11);
  double worst = 0;
  for (int t = 0; t < 12; ++t) {
    VecV w(3, rng.normal(), rng.normal(), rng.normal());
    if (norm(w) < 0.1) continue;
    worst = std::max(worst, std::abs(landau_constant(deb, 3, 1025, 64, w) - ref3));
  }
  CHECK(worst <= 1e-10 * ref3);

  double ref2 = landau_constant(deb, 2);
  for (int t = 0; t < 12; ++t) {
    VecV w(2, rng.normal(), rng.normal());
    if (norm(w) < 0.1) continue;
    CHECK(std::abs(landau_constant(deb, 2, 1025, 64, w) - ref2) <= 1e-10 * ref2);
  }
}

TEST_CASE("collision strength quadrature converges at second order or better") {
  auto deb = InteractionPotential::debye(1.0, 1.0, 6.0);
  double exact = std::atan(6.0) - 6.0 / 37.0;
  double e1 = std::abs(landau_constant(deb, 2, 129, 16) - exact);
  double e2 = std::abs(landau_constant(deb, 2, 257, 16) - exact);
  REQUIRE(e2 > 0);
  double order = std::log2(e1 / e2);
  CHECK(order >= 2.0);
}

TEST_CASE("zero profile yields zero strength") {
  auto off = InteractionPotential::debye(0.0, 1.0, 6.0);
  CHECK(landau_constant(off, 2) == 0.0);
  CHECK(landau_constant(off, 3) == 0.0);
}

TEST_CASE("unconverged radial quadrature is reported") {
  // A profile rough at the scale of the coarse rule: Simpson at 17 nodes and
  // at 33 nodes disagree far beyond the self-consistency gate.
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i <= 400; ++i) {
    double r = 6.0 * i / 400.0;
    pts.push_back({r, 1.0 + 0.9 * std::sin(40.0 * r) * std::sin(40.0 * r)});
  }
  auto rough = InteractionPotential::tabulated(std::move(pts), 6.0);
  CHECK_THROWS_AS(landau_constant(rough, 2, 17, 8), NumericalError);
}

TEST_CASE("hyperplane basis is orthonormal and orientation stable") {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    int dim = (t % 2) ? 2 : 3;
    VecV w(dim);
    for (int i = 0; i < dim; ++i) w[i] = rng.normal();
    if (norm(w) < 0.1) continue;
    auto basis = hyperplane_basis(w);
    REQUIRE(static_cast<int>(basis.size()) == dim - 1);
    for (size_t a = 0; a < basis.size(); ++a) {
      CHECK(std::abs(dot(basis[a], w)) <= 1e-12 * norm(w));
      CHECK(std::abs(norm(basis[a]) - 1.0) <= 1e-12);
      for (size_t b = a + 1; b < basis.size(); ++b)
        CHECK(std::abs(dot(basis[a], basis[b])) <= 1e-12);
    }
    // w and -w give bitwise identical bases (orientation canonicalized)
    auto flip = hyperplane_basis(-1.0 * w);
    for (size_t a = 0; a < basis.size(); ++a)
      for (int i = 0; i < dim; ++i) CHECK(flip[a][i] == basis[a][i]);
  }
  VecV zero(3);
  CHECK_THROWS_AS(hyperplane_basis(zero), NumericalError);
}
